#include <doctest.h>

#include <cctype>
#include <map>
#include <set>

#include "ctxaudit/canary.hpp"
#include "ctxaudit/error.hpp"
#include "ctxaudit/resources.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/text.hpp"

using namespace ctxaudit;

TEST_CASE("hex canary: 32 bytes give 64 lowercase hex digits") {
    const auto c = canary::make_hex_canary(1, 32);
    CHECK(c.text.size() == 64);
    for (char ch : c.text) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
    CHECK(c.text == text::lowercase(c.text));
    CHECK(c.kind == canary::Kind::hex);
}

TEST_CASE("hex canary is deterministic in the seed") {
    CHECK(canary::make_hex_canary(7, 16).text == canary::make_hex_canary(7, 16).text);
    CHECK(canary::make_hex_canary(7, 16).text != canary::make_hex_canary(8, 16).text);
}

TEST_CASE("hex canary single byte matches an independent nibble table") {
    // Reference conversion: regenerate the byte with the same engine and
    // map nibbles by hand.
    const auto c = canary::make_hex_canary(99, 1);
    ctxaudit::rng::Engine eng(99);
    const unsigned byte = static_cast<unsigned>(eng.below(256));
    static const char* nibbles = "0123456789abcdef";
    const std::string expected{nibbles[byte >> 4], nibbles[byte & 0xf]};
    CHECK(c.text == expected);
    CHECK(c.text.size() == 2);
}

TEST_CASE("hex canary rejects byte_count 0") {
    CHECK_THROWS_AS(canary::make_hex_canary(1, 0), InvalidArgumentError);
}

TEST_CASE("unigram canary picks the forced unique token") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::generation;
    set.items = {{"alpha beta zyx", "alpha beta"}, {"alpha beta gamma", "gamma beta alpha"}};
    // every token except "zyx" appears at least twice
    const auto c = canary::make_unigram_canary(set, 1, 1);
    CHECK(c.text == "zyx");
}

TEST_CASE("unigram canary: 16 tokens, every one a corpus unigram") {
    const auto set = corpus::synthetic_classification_set(7, 30);
    const auto c = canary::make_unigram_canary(set, 3, 16);
    const auto picked = text::tokenize(c.text);
    CHECK(picked.size() == 16);

    // recount oracle over the corpus
    std::map<std::string, int> freq;
    for (const auto& e : set.items) {
        for (const auto& t : text::tokenize(e.input)) ++freq[t];
        for (const auto& t : text::tokenize(e.label)) ++freq[t];
    }
    std::set<std::string> distinct(picked.begin(), picked.end());
    CHECK(distinct.size() == picked.size());
    for (const auto& t : picked) CHECK(freq.at(t) == 1);
}

TEST_CASE("unigram canary reports shortfall when unigrams run out") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::generation;
    set.items = {{"solo duo duo", "trio trio"}};
    std::size_t shortfall = 0;
    const auto c = canary::make_unigram_canary(set, 1, 5, "1", &shortfall);
    CHECK(c.text == "solo");
    CHECK(shortfall == 4);
}

TEST_CASE("unigram canary with no unigrams errors") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::generation;
    set.items = {{"dup dup", "dup dup"}};
    CHECK_THROWS_AS(canary::make_unigram_canary(set, 1, 1), Error);
}

TEST_CASE("false-fact canary index 0 and determinism") {
    const auto c = canary::make_false_fact_canary(0);
    CHECK(c.text == "The sun rises in the west.");
    CHECK(canary::make_false_fact_canary(42).text == canary::make_false_fact_canary(42).text);
    CHECK_THROWS_AS(canary::make_false_fact_canary(100), InvalidArgumentError);
}

TEST_CASE("all 100 false facts are pairwise distinct") {
    const auto facts = resources::false_facts();
    CHECK(facts.size() == 100);
    std::set<std::string> distinct(facts.begin(), facts.end());
    CHECK(distinct.size() == facts.size());
}

TEST_CASE("insert_canary with coin=false is an element-wise copy") {
    const auto set = corpus::synthetic_classification_set(2, 8);
    const auto c = canary::make_hex_canary(1, 8);
    const auto [out, record] = canary::insert_canary(set, c, false, 5);
    CHECK(out == set);
    CHECK_FALSE(record.inserted);
    CHECK_FALSE(record.replaced_index.has_value());
}

TEST_CASE("insert_canary with coin=true changes exactly one exemplar") {
    const auto set = corpus::synthetic_classification_set(2, 20);
    const auto c = canary::make_hex_canary(1, 8);
    const auto [out, record] = canary::insert_canary(set, c, true, 5);
    REQUIRE(record.inserted);
    REQUIRE(record.replaced_index.has_value());
    CHECK(out.size() == set.size());

    std::size_t diffs = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (out.items[i] != set.items[i]) ++diffs;
    CHECK(diffs == 1);

    const std::size_t idx = *record.replaced_index;
    CHECK(out.items[idx].input == set.items[idx].input + " " + c.text);
    CHECK(out.items[idx].label == c.label);
    // source set untouched
    CHECK(set.items[idx].input.find(c.text) == std::string::npos);
}

TEST_CASE("insertion index is uniform over the dataset") {
    corpus::ExemplarSet set;
    set.task_kind = corpus::TaskKind::generation;
    set.items = {{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "x"}};
    const auto c = canary::make_hex_canary(1, 4);
    std::map<std::size_t, int> hits;
    const int n = 2000;
    for (int s = 0; s < n; ++s) {
        const auto [out, record] = canary::insert_canary(set, c, true, 1000 + s);
        ++hits[*record.replaced_index];
    }
    for (const auto& [idx, count] : hits)
        CHECK(std::abs(count / static_cast<double>(n) - 0.25) < 0.03);
}
