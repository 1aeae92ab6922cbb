#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ctxaudit/corpus.hpp"
#include "ctxaudit/error.hpp"
#include "test_util.hpp"

using namespace ctxaudit;
using ctxaudit_test::TempDir;
namespace fs = std::filesystem;

TEST_CASE("load_exemplars parses a 20-record classification file") {
    TempDir tmp;
    const fs::path file = tmp.path / "data.jsonl";
    {
        std::ofstream out(file);
        for (int i = 0; i < 20; ++i)
            out << R"({"input": "sentence )" << i << R"(", "label": ")" << (i % 2)
                << R"("})" << "\n";
    }
    const auto set = corpus::load_exemplars(file, corpus::TaskKind::classification);
    CHECK(set.size() == 20);
    CHECK(set.label_space == std::vector<std::string>{"0", "1"});
    CHECK(set.items.front().input == "sentence 0");
}

TEST_CASE("record missing label names the line") {
    TempDir tmp;
    const fs::path file = tmp.path / "bad.jsonl";
    {
        std::ofstream out(file);
        out << R"({"input": "ok", "label": "1"})" << "\n";
        out << R"({"input": "no label"})" << "\n";
    }
    try {
        corpus::load_exemplars(file, corpus::TaskKind::classification);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record_index() == 2);
    }
}

TEST_CASE("empty file is an empty-dataset error") {
    TempDir tmp;
    const fs::path file = tmp.path / "empty.jsonl";
    std::ofstream(file).close();
    CHECK_THROWS_AS(corpus::load_exemplars(file, corpus::TaskKind::classification),
                    ParseError);
}

TEST_CASE("synthetic fixture generator is deterministic per seed") {
    const auto a = corpus::synthetic_classification_set(7, 20);
    const auto b = corpus::synthetic_classification_set(7, 20);
    CHECK(a == b);
    const auto c = corpus::synthetic_classification_set(8, 20);
    CHECK(a != c);

    const auto g1 = corpus::synthetic_generation_set(7, 10);
    const auto g2 = corpus::synthetic_generation_set(7, 10);
    CHECK(g1 == g2);
}

TEST_CASE("write then load round-trips the set") {
    TempDir tmp;
    const auto set = corpus::synthetic_classification_set(3, 12);
    const fs::path file = tmp.path / "roundtrip.jsonl";
    corpus::write_exemplars(set, file);
    const auto loaded = corpus::load_exemplars(file, corpus::TaskKind::classification);
    CHECK(loaded.items == set.items);
    CHECK(loaded.label_space == set.label_space);
}

TEST_CASE("render_prompt single exemplar with explicit field names") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::classification;
    set.label_space = {"0", "1"};
    set.items = {{"good movie", "1"}, {"dull plot", "0"}};
    corpus::ExemplarSet one = set;
    one.items.resize(1);
    // label_space needs both labels; keep it as-is.
    const auto assembly =
        corpus::render_prompt(one, "Q", "", corpus::RenderOptions{"Input", "Label"});
    CHECK(assembly.exemplar_block.find("Input: good movie\nLabel: 1") != std::string::npos);
    CHECK(assembly.user_query == "Q");
    CHECK(assembly.system_preamble.empty());
    // exactly one pair
    CHECK(assembly.exemplar_block.find("Input:", 1) == std::string::npos);
}

TEST_CASE("default classification field names follow the Sentence/Label shape") {
    const auto set = corpus::synthetic_classification_set(1, 4);
    const auto assembly = corpus::render_prompt(set, "Q", "");
    CHECK(assembly.exemplar_block.rfind("Sentence: ", 0) == 0);
    CHECK(assembly.exemplar_block.find("\nLabel: ") != std::string::npos);
    CHECK(assembly.system_text().find("### system_info\n") != std::string::npos);
}

TEST_CASE("rendering is deterministic and order-sensitive") {
    auto set = corpus::synthetic_classification_set(5, 6);
    const auto a = corpus::render_prompt(set, "Q", "P");
    const auto b = corpus::render_prompt(set, "Q", "P");
    CHECK(a.exemplar_block == b.exemplar_block);
    CHECK(a.system_preamble == "P");

    std::swap(set.items[0], set.items[1]);
    const auto c = corpus::render_prompt(set, "Q", "P");
    CHECK(a.exemplar_block != c.exemplar_block);
}

TEST_CASE("validation rejects single-label classification sets") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::classification;
    set.label_space = {"1"};
    set.items = {{"a", "1"}, {"b", "1"}};
    CHECK_THROWS_AS(set.validate(), InvalidArgumentError);
}
