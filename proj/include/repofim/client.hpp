#pragma once

// Model client: render tasks into FIM or chat prompts and fetch completions
// from any endpoint speaking the de-facto standard completion API
// (POST /completions and /chat/completions with JSON bodies).
//
// Rendering keeps the final prompt within the total token budget: the
// context block shrinks first; prefix/suffix are only cut (prefix keeps its
// tail, suffix its head) once the context is gone. Chat mode carries a fixed
// template overhead of roughly 100 tokens, so budgets below that floor are
// unsatisfiable.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "repofim/context.hpp"
#include "repofim/mask.hpp"
#include "repofim/tokenize.hpp"

namespace repofim {

enum class PromptMode { Fim, Chat };
enum class FimOrder { Psm, Spm };

inline std::string to_string(PromptMode m) { return m == PromptMode::Fim ? "fim" : "chat"; }
inline std::string to_string(FimOrder o) { return o == FimOrder::Psm ? "psm" : "spm"; }

struct ModelEndpoint {
    std::string name = "default";
    std::string base_url;          // e.g. http://127.0.0.1:8000/v1
    std::string auth_env;          // env var holding the bearer token, optional
    std::string model_name;
    PromptMode mode = PromptMode::Fim;
    std::string fim_prefix = "<|fim_prefix|>";
    std::string fim_suffix = "<|fim_suffix|>";
    std::string fim_middle = "<|fim_middle|>";
    FimOrder order = FimOrder::Psm;
    int max_new_tokens = 512;
    double temperature = 0.0; // greedy by default
    std::vector<std::string> stop;
    int timeout_seconds = 120;

    void validate() const {
        if (mode == PromptMode::Fim &&
            (fim_prefix.empty() || fim_suffix.empty() || fim_middle.empty()))
            throw ConfigError("endpoint '" + name + "': fim mode requires all three markers");
    }
};

// Marker conventions for common open-model families; models disagree on the
// exact strings, so profiles pick a preset or spell the markers out.
inline bool apply_fim_preset(ModelEndpoint& ep, const std::string& preset) {
    if (preset == "qwen-coder" || preset == "codegemma") {
        ep.fim_prefix = "<|fim_prefix|>";
        ep.fim_suffix = "<|fim_suffix|>";
        ep.fim_middle = "<|fim_middle|>";
    } else if (preset == "starcoder") {
        ep.fim_prefix = "<fim_prefix>";
        ep.fim_suffix = "<fim_suffix>";
        ep.fim_middle = "<fim_middle>";
    } else if (preset == "deepseek-coder") {
        ep.fim_prefix = "<\xef\xbd\x9c""fim\xe2\x96\x81""begin\xef\xbd\x9c>";
        ep.fim_suffix = "<\xef\xbd\x9c""fim\xe2\x96\x81""hole\xef\xbd\x9c>";
        ep.fim_middle = "<\xef\xbd\x9c""fim\xe2\x96\x81""end\xef\xbd\x9c>";
    } else if (preset == "codellama") {
        ep.fim_prefix = "<PRE> ";
        ep.fim_suffix = " <SUF>";
        ep.fim_middle = " <MID>";
    } else {
        return false;
    }
    return true;
}

struct ChatMessage {
    std::string role;
    std::string content;
};

struct PromptRendering {
    PromptMode mode = PromptMode::Fim;
    std::string text;                  // fim mode
    std::vector<ChatMessage> messages; // chat mode
    size_t token_count = 0;
    bool truncated = false; // prefix/suffix had to be cut
};

inline constexpr const char* kChatSystemPrompt =
    "You are a code completion engine. Reply with exactly the code that replaces the masked "
    "middle section. Output only that code: no explanations, no code fences.";

namespace detail {

inline std::string render_context_block(const ContextBundle& bundle) {
    std::string out;
    for (const auto& entry : bundle.entries) {
        out += "# path: " + entry.path + "\n";
        out += entry.content;
        if (out.empty() || out.back() != '\n') out += "\n";
    }
    return out;
}

inline std::string render_fim_text(const ContextBundle& bundle, const ModelEndpoint& endpoint,
                                   std::string_view prefix, std::string_view suffix) {
    std::string out = render_context_block(bundle);
    if (endpoint.order == FimOrder::Psm) {
        out += endpoint.fim_prefix;
        out += prefix;
        out += endpoint.fim_suffix;
        out += suffix;
    } else {
        out += endpoint.fim_suffix;
        out += suffix;
        out += endpoint.fim_prefix;
        out += prefix;
    }
    out += endpoint.fim_middle;
    return out;
}

inline std::string render_chat_user_text(const ContextBundle& bundle, std::string_view prefix,
                                         std::string_view suffix) {
    std::string out = "## Context Files\n";
    for (const auto& entry : bundle.entries) {
        out += "### " + entry.path + "\n```\n";
        out += entry.content;
        if (out.empty() || out.back() != '\n') out += "\n";
        out += "```\n";
    }
    out += "## Prefix\n```\n";
    out += prefix;
    out += "\n```\n## Suffix\n```\n";
    out += suffix;
    out += "\n```\nComplete the code between the prefix and the suffix.";
    return out;
}

inline size_t rendering_tokens(const PromptRendering& r, const Tokenizer& tok) {
    if (r.mode == PromptMode::Fim) return tok.count(r.text);
    size_t total = 0;
    for (const auto& m : r.messages) total += tok.count(m.content);
    return total;
}

inline ContextBundle shrink_bundle(const ContextBundle& bundle, size_t drop_tokens,
                                   const Tokenizer& tok) {
    ContextBundle out = bundle;
    while (drop_tokens > 0 && !out.entries.empty()) {
        auto& last = out.entries.back();
        if (last.token_count > drop_tokens) {
            std::string head = keep_head_tokens(tok, last.content, last.token_count - drop_tokens);
            size_t new_tokens = tok.count(head);
            out.total_tokens -= last.token_count - new_tokens;
            drop_tokens = 0;
            last.content = std::move(head);
            last.token_count = new_tokens;
            if (new_tokens == 0) out.entries.pop_back();
        } else {
            drop_tokens -= last.token_count;
            out.total_tokens -= last.token_count;
            out.entries.pop_back();
        }
    }
    return out;
}

template <typename RenderFn>
inline PromptRendering render_with_budget(const MaskTask& task, const ContextBundle& bundle,
                                          const Tokenizer& tok, size_t max_total_tokens,
                                          RenderFn render) {
    std::string prefix = task.prefix;
    std::string suffix = task.suffix;
    ContextBundle working = bundle;

    PromptRendering r = render(working, prefix, suffix);
    r.token_count = rendering_tokens(r, tok);
    // Context shrinks first.
    while (r.token_count > max_total_tokens && !working.entries.empty()) {
        working = shrink_bundle(working, r.token_count - max_total_tokens, tok);
        r = render(working, prefix, suffix);
        r.token_count = rendering_tokens(r, tok);
    }
    // Then symmetric prefix/suffix truncation: prefix keeps its tail, suffix
    // keeps its head.
    if (r.token_count > max_total_tokens) {
        size_t over = r.token_count - max_total_tokens;
        size_t p_tokens = tok.count(prefix);
        size_t s_tokens = tok.count(suffix);
        while (over > 0 && (p_tokens > 0 || s_tokens > 0)) {
            size_t cut_p = std::min(p_tokens, (over + 1) / 2);
            size_t cut_s = std::min(s_tokens, over - cut_p);
            if (cut_p + cut_s == 0) cut_p = std::min<size_t>(p_tokens + s_tokens, over);
            if (cut_p > 0) prefix = keep_tail_tokens(tok, prefix, p_tokens - cut_p);
            if (cut_s > 0) suffix = keep_head_tokens(tok, suffix, s_tokens - cut_s);
            p_tokens = tok.count(prefix);
            s_tokens = tok.count(suffix);
            r = render(working, prefix, suffix);
            r.token_count = rendering_tokens(r, tok);
            r.truncated = true;
            over = r.token_count > max_total_tokens ? r.token_count - max_total_tokens : 0;
            if (p_tokens == 0 && s_tokens == 0) break;
        }
        r.truncated = true;
    }
    return r;
}

} // namespace detail

inline PromptRendering render_fim_prompt(const MaskTask& task, const ContextBundle& bundle,
                                         const ModelEndpoint& endpoint, const Tokenizer& tokenizer,
                                         size_t max_total_tokens = 32768) {
    if (endpoint.mode != PromptMode::Fim)
        throw ContractError("render_fim_prompt requires a fim-mode endpoint");
    endpoint.validate();
    return detail::render_with_budget(
        task, bundle, tokenizer, max_total_tokens,
        [&](const ContextBundle& b, std::string_view p, std::string_view s) {
            PromptRendering r;
            r.mode = PromptMode::Fim;
            r.text = detail::render_fim_text(b, endpoint, p, s);
            return r;
        });
}

inline PromptRendering render_chat_prompt(const MaskTask& task, const ContextBundle& bundle,
                                          const ModelEndpoint& endpoint,
                                          const Tokenizer& tokenizer,
                                          size_t max_total_tokens = 32768) {
    if (endpoint.mode != PromptMode::Chat)
        throw ContractError("render_chat_prompt requires a chat-mode endpoint");
    return detail::render_with_budget(
        task, bundle, tokenizer, max_total_tokens,
        [&](const ContextBundle& b, std::string_view p, std::string_view s) {
            PromptRendering r;
            r.mode = PromptMode::Chat;
            r.messages.push_back({"system", kChatSystemPrompt});
            r.messages.push_back({"user", detail::render_chat_user_text(b, p, s)});
            return r;
        });
}

// ---------------------------------------------------------------------------
// Transport

struct RetryPolicy {
    int max_retries = 3; // additional attempts after the first
    int initial_backoff_ms = 200;
    double backoff_multiplier = 2.0;
};

struct CompletionResult {
    std::string text;         // post-processed model output
    std::string raw_response; // verbatim response body for audit
    int attempts = 0;
    int http_status = 0;
    std::optional<std::string> error; // set on generation_error

    bool ok() const { return !error.has_value(); }
};

namespace detail {

// Cut at the first stop token, then drop any marker remnants.
inline std::string strip_markers(std::string text, const ModelEndpoint& endpoint) {
    size_t cut = text.size();
    for (const auto& stop : endpoint.stop) {
        if (stop.empty()) continue;
        auto pos = text.find(stop);
        if (pos != std::string::npos) cut = std::min(cut, pos);
    }
    text.resize(cut);
    for (const std::string* marker :
         {&endpoint.fim_prefix, &endpoint.fim_suffix, &endpoint.fim_middle}) {
        if (marker->empty()) continue;
        size_t pos;
        while ((pos = text.find(*marker)) != std::string::npos) text.erase(pos, marker->size());
    }
    return text;
}

// Strip one surrounding ``` fence (with optional language tag) if present.
inline std::string strip_code_fence(std::string text) {
    auto first_non_ws = text.find_first_not_of(" \t\r\n");
    if (first_non_ws == std::string::npos) return text;
    if (text.compare(first_non_ws, 3, "```") != 0) return text;
    auto body_start = text.find('\n', first_non_ws);
    if (body_start == std::string::npos) return text;
    ++body_start;
    auto fence_end = text.rfind("```");
    if (fence_end == std::string::npos || fence_end < body_start) return text;
    // Drop the newline that precedes the closing fence.
    size_t body_end = fence_end;
    if (body_end > body_start && text[body_end - 1] == '\n') --body_end;
    return text.substr(body_start, body_end - body_start);
}

struct ParsedUrl {
    std::string host_port; // scheme://host:port for httplib
    std::string path_prefix;
};

inline ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint base_url must include a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

} // namespace detail

inline CompletionResult request_completion(const ModelEndpoint& endpoint,
                                           const PromptRendering& rendering,
                                           const RetryPolicy& retry = {}) {
    CompletionResult result;
    endpoint.validate();

    std::string token;
    if (!endpoint.auth_env.empty()) {
        const char* v = std::getenv(endpoint.auth_env.c_str());
        if (!v) {
            result.error = "auth token env var not set: " + endpoint.auth_env;
            return result;
        }
        token = v;
    }

    nlohmann::json body;
    std::string path;
    if (rendering.mode == PromptMode::Fim) {
        path = "/completions";
        body["model"] = endpoint.model_name;
        body["prompt"] = rendering.text;
        body["max_tokens"] = endpoint.max_new_tokens;
        body["temperature"] = endpoint.temperature;
        if (!endpoint.stop.empty()) body["stop"] = endpoint.stop;
    } else {
        path = "/chat/completions";
        body["model"] = endpoint.model_name;
        auto messages = nlohmann::json::array();
        for (const auto& m : rendering.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = std::move(messages);
        body["max_tokens"] = endpoint.max_new_tokens;
        body["temperature"] = endpoint.temperature;
    }
    const std::string payload = body.dump();

    detail::ParsedUrl url;
    try {
        url = detail::parse_base_url(endpoint.base_url);
    } catch (const ConfigError& e) {
        result.error = e.what();
        return result;
    }

    httplib::Client client(url.host_port);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    int backoff_ms = retry.initial_backoff_ms;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        result.attempts = attempt + 1;
        auto res = client.Post(url.path_prefix + path, headers, payload, "application/json");
        bool retryable;
        if (!res) {
            result.http_status = 0;
            result.error = "transport error: " + httplib::to_string(res.error());
            retryable = true;
        } else {
            result.http_status = res->status;
            result.raw_response = res->body;
            if (res->status >= 200 && res->status < 300) {
                auto parsed = nlohmann::json::parse(res->body, nullptr, false);
                std::string text;
                bool found = false;
                if (!parsed.is_discarded() && parsed.contains("choices") &&
                    parsed["choices"].is_array() && !parsed["choices"].empty()) {
                    const auto& choice = parsed["choices"][0];
                    if (rendering.mode == PromptMode::Fim && choice.contains("text") &&
                        choice["text"].is_string()) {
                        text = choice["text"].get<std::string>();
                        found = true;
                    } else if (choice.contains("message") && choice["message"].is_object() &&
                               choice["message"].contains("content") &&
                               choice["message"]["content"].is_string()) {
                        text = choice["message"]["content"].get<std::string>();
                        found = true;
                    }
                }
                if (!found) {
                    result.error = "malformed completion response";
                    return result;
                }
                text = detail::strip_markers(std::move(text), endpoint);
                if (rendering.mode == PromptMode::Chat)
                    text = detail::strip_code_fence(std::move(text));
                result.text = std::move(text);
                result.error.reset();
                return result;
            }
            retryable = res->status >= 500;
            result.error = "http status " + std::to_string(res->status);
        }
        if (!retryable || attempt == retry.max_retries) return result;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms = static_cast<int>(static_cast<double>(backoff_ms) * retry.backoff_multiplier);
    }
    return result;
}

// Issue a batch of requests through a bounded pool; results come back in
// input order and one task's failure never aborts the batch.
inline std::vector<CompletionResult> request_completions(
    const ModelEndpoint& endpoint, const std::vector<PromptRendering>& renderings,
    const RetryPolicy& retry = {}, size_t concurrency = 8) {
    std::vector<CompletionResult> results(renderings.size());
    if (renderings.empty()) return results;
    concurrency = std::max<size_t>(1, std::min(concurrency, renderings.size()));
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(concurrency);
    for (size_t w = 0; w < concurrency; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= renderings.size()) return;
                try {
                    results[i] = request_completion(endpoint, renderings[i], retry);
                } catch (const std::exception& e) {
                    results[i].error = std::string("client exception: ") + e.what();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    return results;
}

} // namespace repofim
