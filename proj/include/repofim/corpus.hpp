#pragma once

// Instruction-corpus emission: completion samples share the chat template
// with the model client (system + user turns; the assistant turn is the
// ground-truth middle, byte for byte), QA samples pass through from user
// JSONL, and the two streams mix under a seeded Bernoulli draw. Output is
// messages-array JSONL with a schema version.

#include <iostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "repofim/client.hpp"
#include "repofim/context.hpp"
#include "repofim/mask.hpp"
#include "repofim/util.hpp"

namespace repofim {

struct QaSample {
    std::string query;
    std::string answer;
    std::string language;
};

struct CorpusSample {
    enum class Kind { Completion, Qa };
    Kind kind = Kind::Completion;
    std::string sample_id;
    std::string language;
    std::vector<ChatMessage> messages;
    // Completion-only structured fields; empty for QA.
    std::string prefix;
    std::string suffix;
    std::string target;
    std::vector<ContextEntry> context;
    nlohmann::json meta = nlohmann::json::object();

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = 1;
        j["kind"] = kind == Kind::Completion ? "completion" : "qa";
        j["id"] = sample_id;
        j["language"] = language;
        auto msgs = nlohmann::json::array();
        for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        j["messages"] = std::move(msgs);
        if (kind == Kind::Completion) {
            j["prefix"] = prefix;
            j["suffix"] = suffix;
            j["target"] = target;
            auto ctx = nlohmann::json::array();
            for (const auto& e : context) ctx.push_back({{"path", e.path}, {"content", e.content}});
            j["context"] = std::move(ctx);
        }
        j["meta"] = meta;
        return j;
    }
};

struct MixturePolicy {
    double completion_weight = 0.5; // in [0, 1]; qa weight is the complement
    uint64_t rng_seed = 0;

    void validate() const {
        if (completion_weight < 0.0 || completion_weight > 1.0)
            throw ConfigError("completion_weight must lie in [0, 1]");
    }
};

inline CorpusSample emit_completion_sample(const MaskTask& task, const ContextBundle& bundle,
                                           const std::string& template_id,
                                           const Tokenizer& tokenizer,
                                           size_t max_total_tokens = 32768) {
    if (template_id != "default")
        throw ConfigError("unknown corpus template: " + template_id);

    ModelEndpoint chat_endpoint;
    chat_endpoint.mode = PromptMode::Chat;
    auto rendering = render_chat_prompt(task, bundle, chat_endpoint, tokenizer, max_total_tokens);

    CorpusSample sample;
    sample.kind = CorpusSample::Kind::Completion;
    sample.sample_id = task.task_id;
    sample.language = to_string(task.language);
    sample.messages = rendering.messages;
    sample.messages.push_back({"assistant", task.middle});
    sample.prefix = task.prefix;
    sample.suffix = task.suffix;
    sample.target = task.middle;
    sample.context = bundle.entries;
    sample.meta["repo"] = task.repo_id;
    sample.meta["file_path"] = task.file_path;
    sample.meta["level"] = to_string(task.level);
    sample.meta["seed"] = task.seed;
    sample.meta["template"] = template_id;
    return sample;
}

inline CorpusSample make_qa_sample(const QaSample& qa, size_t ordinal) {
    if (qa.query.empty() || qa.answer.empty())
        throw ConfigError("qa samples require non-empty query and answer");
    CorpusSample sample;
    sample.kind = CorpusSample::Kind::Qa;
    sample.sample_id = "qa-" + to_hex16(hash_combine(fnv1a64(qa.query), ordinal));
    sample.language = qa.language;
    sample.messages.push_back({"user", qa.query});
    sample.messages.push_back({"assistant", qa.answer});
    return sample;
}

// Input QA schema: one JSON object per line with `query`, `answer` and an
// optional `language` field.
inline std::vector<QaSample> load_qa_jsonl(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    if (!bytes) throw ConfigError("cannot read qa jsonl: " + path.string());
    std::vector<QaSample> out;
    std::string_view sv(*bytes);
    size_t start = 0;
    size_t line_no = 0;
    while (start <= sv.size()) {
        size_t nl = sv.find('\n', start);
        std::string_view line =
            sv.substr(start, nl == std::string_view::npos ? sv.size() - start : nl - start);
        ++line_no;
        if (!line.empty()) {
            auto rec = nlohmann::json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.is_object() || !rec.contains("query") ||
                !rec.contains("answer"))
                throw ConfigError("malformed qa record at " + path.string() + ":" +
                                  std::to_string(line_no));
            QaSample qa;
            qa.query = rec["query"].get<std::string>();
            qa.answer = rec["answer"].get<std::string>();
            if (rec.contains("language") && rec["language"].is_string())
                qa.language = rec["language"].get<std::string>();
            out.push_back(std::move(qa));
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

// Interleave the two streams: each output slot draws from the completion
// stream with probability completion_weight; within-stream order is kept.
// When one stream runs dry the rest comes from the other, with a warning.
inline std::vector<CorpusSample> mix_streams(const std::vector<CorpusSample>& completions,
                                             const std::vector<CorpusSample>& qa,
                                             const MixturePolicy& policy) {
    policy.validate();
    std::vector<CorpusSample> out;
    out.reserve(completions.size() + qa.size());
    Rng rng(policy.rng_seed);
    size_t ci = 0, qi = 0;
    bool warned = false;
    while (ci < completions.size() || qi < qa.size()) {
        bool take_completion;
        if (ci >= completions.size()) {
            take_completion = false;
            if (!warned && policy.completion_weight > 0.0) {
                std::cerr << "warning: completion stream exhausted; filling from qa\n";
                warned = true;
            }
        } else if (qi >= qa.size()) {
            take_completion = true;
            if (!warned && policy.completion_weight < 1.0) {
                std::cerr << "warning: qa stream exhausted; filling from completions\n";
                warned = true;
            }
        } else {
            take_completion = rng.unit() < policy.completion_weight;
        }
        out.push_back(take_completion ? completions[ci++] : qa[qi++]);
    }
    return out;
}

// Enforces sample-id uniqueness across the corpus.
inline std::string corpus_to_jsonl(const std::vector<CorpusSample>& samples) {
    std::unordered_set<std::string> seen;
    std::string out;
    for (const auto& s : samples) {
        if (!seen.insert(s.sample_id).second) continue;
        out += s.to_json().dump();
        out += "\n";
    }
    return out;
}

} // namespace repofim
