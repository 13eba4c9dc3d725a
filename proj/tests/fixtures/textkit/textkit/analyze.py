"""Counting and summary helpers over token lists."""

from textkit.core import tokenize, ngrams


def word_frequencies(text):
    counts = {}
    for word in tokenize(text):
        counts[word] = counts.get(word, 0) + 1
    return counts


def longest_word(text):
    words = tokenize(text)
    if not words:
        return ""
    best = words[0]
    for word in words[1:]:
        if len(word) > len(best):
            best = word
    return best


def unique_bigrams(text):
    words = tokenize(text)
    return set(ngrams(words, 2))


def summary(text):
    counts = word_frequencies(text)
    total = sum(counts.values())
    distinct = len(counts)
    top = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    head = top[:3]
    return {
        "total": total,
        "distinct": distinct,
        "top": head,
    }


def repeated_words(text, threshold=2):
    counts = word_frequencies(text)
    chosen = [w for w, c in counts.items() if c >= threshold]
    return sorted(chosen)
