#include <doctest.h>

#include "helpers.hpp"
#include "repofim/client.hpp"

using namespace repofim;

namespace {

MaskTask simple_task() {
    MaskTask t;
    t.task_id = "t1";
    t.repo_id = "demo";
    t.file_path = "add.py";
    t.prefix = "def add(a, b):\n    return ";
    t.middle = "a + b";
    t.suffix = "\n";
    t.language = {LanguageKind::Python, {}};
    return t;
}

ModelEndpoint fim_endpoint(FimOrder order = FimOrder::Psm) {
    ModelEndpoint ep;
    ep.mode = PromptMode::Fim;
    ep.fim_prefix = "P";
    ep.fim_suffix = "S";
    ep.fim_middle = "M";
    ep.order = order;
    return ep;
}

ContextBundle bundle_of(std::vector<std::pair<std::string, std::string>> files) {
    ApproxTokenizer tok;
    ContextBundle b;
    for (auto& [path, content] : files) {
        size_t tokens = tok.count(content);
        b.entries.push_back({path, content, tokens});
        b.total_tokens += tokens;
    }
    return b;
}

} // namespace

TEST_SUITE("render") {

TEST_CASE("fim rendering with empty bundle: psm and spm layouts") {
    ApproxTokenizer tok;
    auto task = simple_task();
    auto psm = render_fim_prompt(task, {}, fim_endpoint(FimOrder::Psm), tok);
    CHECK(psm.text == "P" + task.prefix + "S" + task.suffix + "M");
    CHECK_FALSE(psm.truncated);
    auto spm = render_fim_prompt(task, {}, fim_endpoint(FimOrder::Spm), tok);
    CHECK(spm.text == "S" + task.suffix + "P" + task.prefix + "M");
}

TEST_CASE("context entries are prefixed with path header lines, in bundle order") {
    ApproxTokenizer tok;
    auto task = simple_task();
    auto bundle = bundle_of({{"utils.py", "helper = 1\n"}, {"shapes.py", "PI = 3\n"}});
    auto r = render_fim_prompt(task, bundle, fim_endpoint(), tok);
    CHECK(r.text ==
          "# path: utils.py\nhelper = 1\n"
          "# path: shapes.py\nPI = 3\n"
          "P" + task.prefix + "S" + task.suffix + "M");
}

TEST_CASE("a context entry without trailing newline gets one before the next header") {
    ApproxTokenizer tok;
    auto task = simple_task();
    auto bundle = bundle_of({{"a.py", "x = 1"}, {"b.py", "y = 2"}});
    auto r = render_fim_prompt(task, bundle, fim_endpoint(), tok);
    CHECK(r.text.find("x = 1\n# path: b.py") != std::string::npos);
}

TEST_CASE("fim render requires fim mode and markers") {
    ApproxTokenizer tok;
    auto task = simple_task();
    ModelEndpoint chat;
    chat.mode = PromptMode::Chat;
    CHECK_THROWS_AS(render_fim_prompt(task, {}, chat, tok), ContractError);
    auto ep = fim_endpoint();
    ep.fim_middle.clear();
    CHECK_THROWS_AS(render_fim_prompt(task, {}, ep, tok), ConfigError);
}

TEST_CASE("chat rendering keeps the empty context section and matches the golden file") {
    ApproxTokenizer tok;
    auto task = simple_task();
    ModelEndpoint ep;
    ep.mode = PromptMode::Chat;
    auto empty = render_chat_prompt(task, {}, ep, tok);
    REQUIRE(empty.messages.size() == 2);
    CHECK(empty.messages[0].role == "system");
    CHECK(empty.messages[0].content == kChatSystemPrompt);
    CHECK(empty.messages[1].content.rfind("## Context Files\n## Prefix\n", 0) == 0);

    auto bundle = bundle_of({{"storage.py", "def sync(name, balance):\n    return 1\n"}});
    auto r = render_chat_prompt(task, bundle, ep, tok);
    auto golden = read_file_or_throw(std::filesystem::path(REPOFIM_GOLDEN_DIR) /
                                     "chat_prompt_bank.txt");
    CHECK(r.messages[1].content == golden);
    // exactly one fenced context sub-block with the path header
    CHECK(r.messages[1].content.find("### storage.py\n```\n") != std::string::npos);
}

TEST_CASE("rendering is deterministic") {
    ApproxTokenizer tok;
    auto task = simple_task();
    auto bundle = bundle_of({{"a.py", "x = 1\n"}});
    auto r1 = render_fim_prompt(task, bundle, fim_endpoint(), tok);
    auto r2 = render_fim_prompt(task, bundle, fim_endpoint(), tok);
    CHECK(r1.text == r2.text);
    CHECK(r1.token_count == r2.token_count);
}

TEST_CASE("over-budget context is re-truncated before prefix and suffix are touched") {
    ApproxTokenizer tok;
    auto task = simple_task();
    std::string big;
    for (int i = 0; i < 400; ++i) big += "word" + std::to_string(i) + " ";
    auto bundle = bundle_of({{"big.py", big}});
    auto r = render_fim_prompt(task, bundle, fim_endpoint(), tok, /*max_total_tokens=*/120);
    CHECK(r.token_count <= 120);
    CHECK_FALSE(r.truncated); // prefix/suffix survived intact
    CHECK(r.text.find(task.prefix) != std::string::npos);
    CHECK(r.text.find("# path: big.py") != std::string::npos);
}

TEST_CASE("when prefix and suffix alone exceed the budget they are cut symmetrically") {
    ApproxTokenizer tok;
    MaskTask task;
    task.file_path = "big.py";
    for (int i = 0; i < 300; ++i) task.prefix += "p" + std::to_string(i) + " ";
    for (int i = 0; i < 300; ++i) task.suffix += "s" + std::to_string(i) + " ";
    task.middle = "m";
    auto r = render_fim_prompt(task, {}, fim_endpoint(), tok, /*max_total_tokens=*/100);
    CHECK(r.token_count <= 100);
    CHECK(r.truncated);
    // prefix keeps its tail, suffix keeps its head
    CHECK(r.text.find("p299") != std::string::npos);
    CHECK(r.text.find("p0 ") == std::string::npos);
    CHECK(r.text.find("s0") != std::string::npos);
    CHECK(r.text.find("s299") == std::string::npos);
}

TEST_CASE("budget ceiling holds under fuzzing") {
    ApproxTokenizer tok;
    Rng rng(505);
    for (int iter = 0; iter < 60; ++iter) {
        MaskTask task;
        task.file_path = "f.py";
        size_t p = rng.below(600), s = rng.below(600);
        for (size_t i = 0; i < p; ++i) task.prefix += "a ";
        for (size_t i = 0; i < s; ++i) task.suffix += "b ";
        task.middle = "m";
        ContextBundle bundle;
        size_t files = rng.below(4);
        for (size_t f = 0; f < files; ++f) {
            std::string content;
            size_t words = rng.below(500);
            for (size_t w = 0; w < words; ++w) content += "c ";
            size_t tokens = tok.count(content);
            bundle.entries.push_back({"f" + std::to_string(f) + ".py", content, tokens});
            bundle.total_tokens += tokens;
        }
        // chat scaffolding (system prompt, section headers) needs ~100 tokens;
        // budgets below that floor are unsatisfiable by construction
        size_t budget = 150 + rng.below(500);
        auto r = render_fim_prompt(task, bundle, fim_endpoint(), tok, budget);
        CHECK(r.token_count <= budget);
        ModelEndpoint chat;
        chat.mode = PromptMode::Chat;
        auto rc = render_chat_prompt(task, bundle, chat, tok, budget);
        CHECK(rc.token_count <= budget);
    }
}

TEST_CASE("marker and stop stripping") {
    ModelEndpoint ep = fim_endpoint();
    ep.fim_prefix = "<PRE>";
    ep.fim_suffix = "<SUF>";
    ep.fim_middle = "<MID>";
    ep.stop = {"<EOT>"};
    CHECK(detail::strip_markers("a + b<EOT>junk", ep) == "a + b");
    CHECK(detail::strip_markers("<MID>a + b", ep) == "a + b");
    CHECK(detail::strip_markers("clean", ep) == "clean");
}

TEST_CASE("fim marker presets cover the common conventions") {
    ModelEndpoint ep;
    CHECK(apply_fim_preset(ep, "starcoder"));
    CHECK(ep.fim_prefix == "<fim_prefix>");
    CHECK(apply_fim_preset(ep, "qwen-coder"));
    CHECK(ep.fim_middle == "<|fim_middle|>");
    CHECK(apply_fim_preset(ep, "codellama"));
    CHECK(ep.fim_prefix == "<PRE> ");
    CHECK(apply_fim_preset(ep, "deepseek-coder"));
    CHECK(ep.fim_suffix.find("hole") != std::string::npos);
    CHECK_FALSE(apply_fim_preset(ep, "unknown-model"));
}

TEST_CASE("chat fence stripping removes one surrounding fence only") {
    CHECK(detail::strip_code_fence("```python\nreturn x\n```") == "return x");
    CHECK(detail::strip_code_fence("```\nreturn x\n```\n") == "return x");
    CHECK(detail::strip_code_fence("return x") == "return x");
    CHECK(detail::strip_code_fence("say ``` inside") == "say ``` inside");
}

} // TEST_SUITE
