#include "ctxaudit/canary.hpp"

#include <algorithm>
#include <map>

#include "ctxaudit/error.hpp"
#include "ctxaudit/resources.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/text.hpp"

namespace ctxaudit::canary {

const char* to_string(Kind k) {
    switch (k) {
        case Kind::hex: return "hex";
        case Kind::unigram: return "unigram";
        case Kind::false_fact: return "false_fact";
    }
    return "?";
}

Kind kind_from_string(const std::string& s) {
    if (s == "hex") return Kind::hex;
    if (s == "unigram") return Kind::unigram;
    if (s == "false_fact") return Kind::false_fact;
    throw InvalidArgumentError("unknown canary kind: " + s);
}

Canary make_hex_canary(std::uint64_t seed, std::size_t byte_count, std::string label) {
    if (byte_count == 0) throw InvalidArgumentError("hex canary needs byte_count >= 1");
    static constexpr char digits[] = "0123456789abcdef";
    rng::Engine eng(seed);
    std::string hex;
    hex.reserve(2 * byte_count);
    for (std::size_t i = 0; i < byte_count; ++i) {
        const auto byte = static_cast<unsigned>(eng.below(256));
        hex.push_back(digits[byte >> 4]);
        hex.push_back(digits[byte & 0xf]);
    }
    return Canary{Kind::hex, std::move(hex), std::move(label), seed};
}

Canary make_unigram_canary(const corpus::ExemplarSet& corpus_set, std::uint64_t seed,
                           std::size_t token_count, std::string label,
                           std::size_t* shortfall, const Tokenizer& tokenizer) {
    if (corpus_set.items.empty()) throw InvalidArgumentError("unigram canary needs a corpus");
    if (token_count == 0) throw InvalidArgumentError("unigram canary needs token_count >= 1");

    const auto tok = tokenizer ? tokenizer : Tokenizer(&text::tokenize);
    std::map<std::string, std::size_t> freq;
    for (const auto& e : corpus_set.items) {
        for (auto& t : tok(e.input)) ++freq[t];
        for (auto& t : tok(e.label)) ++freq[t];
    }
    std::vector<std::string> unigrams;  // sorted: map iteration order
    for (const auto& [token, count] : freq)
        if (count == 1) unigrams.push_back(token);
    if (unigrams.empty()) throw Error("corpus has no unigram tokens");

    rng::Engine eng(seed);
    const std::size_t take = std::min(token_count, unigrams.size());
    // Partial Fisher-Yates over the sorted candidate list.
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + eng.below(unigrams.size() - i);
        std::swap(unigrams[i], unigrams[j]);
    }
    std::string joined;
    for (std::size_t i = 0; i < take; ++i) {
        if (i) joined += ' ';
        joined += unigrams[i];
    }
    if (shortfall) *shortfall = token_count - take;
    return Canary{Kind::unigram, std::move(joined), std::move(label), seed};
}

Canary make_false_fact_canary(std::size_t index, std::string label) {
    const auto facts = resources::false_facts();
    if (index >= facts.size())
        throw InvalidArgumentError("false-fact index " + std::to_string(index) +
                                   " out of range (list has " + std::to_string(facts.size()) +
                                   " entries)");
    return Canary{Kind::false_fact, facts[index], std::move(label), index};
}

std::pair<corpus::ExemplarSet, InsertionRecord> insert_canary(
    const corpus::ExemplarSet& dataset, const Canary& c, bool coin, std::uint64_t seed) {
    if (dataset.items.empty()) throw InvalidArgumentError("cannot insert into empty dataset");
    corpus::ExemplarSet out = dataset;
    if (!coin) return {std::move(out), InsertionRecord{false, std::nullopt}};

    rng::Engine eng(seed);
    const std::size_t idx = eng.below(dataset.items.size());
    out.items[idx].input += ' ';
    out.items[idx].input += c.text;
    out.items[idx].label = c.label;
    if (out.task_kind == corpus::TaskKind::classification &&
        std::find(out.label_space.begin(), out.label_space.end(), c.label) ==
            out.label_space.end()) {
        out.label_space.insert(
            std::upper_bound(out.label_space.begin(), out.label_space.end(), c.label),
            c.label);
    }
    return {std::move(out), InsertionRecord{true, idx}};
}

}  // namespace ctxaudit::canary
