from textkit.core import normalize, tokenize
from textkit.analyze import word_frequencies, longest_word
