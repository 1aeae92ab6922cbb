#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctxaudit/corpus.hpp"

namespace ctxaudit::canary {

enum class Kind { hex, unigram, false_fact };

const char* to_string(Kind k);
Kind kind_from_string(const std::string& s);

// A uniquely identifiable token sequence planted into the private dataset,
// plus the label the audit expects the model to associate with it.
struct Canary {
    Kind kind = Kind::hex;
    std::string text;
    std::string label = "1";
    std::uint64_t seed = 0;
};

// Outcome of one Bernoulli insertion: the coin and, when it landed heads,
// which exemplar was replaced.
struct InsertionRecord {
    bool inserted = false;
    std::optional<std::size_t> replaced_index;
};

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

// byte_count seeded random bytes, lowercase-hex encoded (2*byte_count digits).
Canary make_hex_canary(std::uint64_t seed, std::size_t byte_count,
                       std::string label = "1");

// token_count tokens that occur exactly once in the tokenized corpus, sampled
// with `seed` and joined by single spaces. When fewer unigrams exist, all are
// used and *shortfall reports how many were missing.
Canary make_unigram_canary(const corpus::ExemplarSet& corpus_set, std::uint64_t seed,
                           std::size_t token_count, std::string label = "1",
                           std::size_t* shortfall = nullptr,
                           const Tokenizer& tokenizer = nullptr);

// The indexed statement from the shipped 100-entry false-fact list, verbatim.
Canary make_false_fact_canary(std::size_t index, std::string label = "1");

// With coin=true, replaces one uniformly chosen exemplar's input by
// "<original input> <canary text>" and its label by the canary label; with
// coin=false returns an untouched deep copy. The source set is never mutated
// and the output always has the same size.
std::pair<corpus::ExemplarSet, InsertionRecord> insert_canary(
    const corpus::ExemplarSet& dataset, const Canary& c, bool coin,
    std::uint64_t seed);

}  // namespace ctxaudit::canary
