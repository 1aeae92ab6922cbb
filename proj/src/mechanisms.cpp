#include "ctxaudit/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/sampling.hpp"
#include "ctxaudit/text.hpp"
#include "ctxaudit/vecops.hpp"

namespace ctxaudit::mechanisms {

namespace {
constexpr std::uint64_t kPartitionStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
}  // namespace

const char* to_string(Mode m) {
    switch (m) {
        case Mode::RNM: return "RNM";
        case Mode::ESA: return "ESA";
        case Mode::KSA: return "KSA";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "RNM" || s == "rnm") return Mode::RNM;
    if (s == "ESA" || s == "esa") return Mode::ESA;
    if (s == "KSA" || s == "ksa") return Mode::KSA;
    throw InvalidArgumentError("unknown mechanism mode: " + s);
}

bool MechanismConfig::non_private() const { return std::isinf(epsilon); }

double MechanismConfig::sensitivity() const {
    switch (mode) {
        case Mode::RNM: return std::sqrt(2.0);
        case Mode::ESA: return 2.0 * clip_bound_B / static_cast<double>(m);
        case Mode::KSA: return std::sqrt(2.0) * clip_cap_C / static_cast<double>(m);
    }
    return 0.0;
}

double MechanismConfig::sigma() const {
    if (non_private()) return 0.0;
    return calibrate_sigma(epsilon, delta, sensitivity());
}

void MechanismConfig::validate() const {
    if (m == 0) throw InvalidArgumentError("ensemble count m must be >= 1");
    if (epsilon <= 0.0) throw InvalidArgumentError("epsilon must be positive");
    if (!non_private() && (delta <= 0.0 || delta >= 1.0))
        throw InvalidArgumentError("delta must be in (0,1)");
    if (mode == Mode::ESA && clip_bound_B <= 0.0 && !non_private())
        throw InvalidArgumentError("ESA clip bound B must be positive");
    if (mode == Mode::KSA) {
        if (clip_cap_C <= 0.0 && !non_private())
            throw InvalidArgumentError("KSA clip cap C must be positive");
        if (keyword_vocab.empty())
            throw InvalidArgumentError("KSA needs a non-empty keyword vocabulary");
        if (top_k == 0 || top_k > keyword_vocab.size())
            throw InvalidArgumentError("KSA top_k must be in [1, |vocab|]");
    }
}

double calibrate_sigma(double epsilon, double delta, double sensitivity) {
    if (epsilon <= 0.0 || !std::isfinite(epsilon))
        throw InvalidArgumentError("calibrate_sigma: epsilon must be finite and positive");
    if (delta <= 0.0 || delta >= 1.0)
        throw InvalidArgumentError("calibrate_sigma: delta must be in (0,1)");
    if (sensitivity <= 0.0)
        throw InvalidArgumentError("calibrate_sigma: sensitivity must be positive");
    return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

int parse_label(const std::string& output, const std::vector<std::string>& label_space) {
    const std::string trimmed = text::trim(output);
    for (std::size_t i = 0; i < label_space.size(); ++i)
        if (trimmed == label_space[i]) return static_cast<int>(i);

    // "Label: 1" style answers.
    const std::string lower = text::lowercase(trimmed);
    for (std::size_t i = 0; i < label_space.size(); ++i) {
        const std::string prefixed = "label: " + text::lowercase(label_space[i]);
        if (lower == prefixed) return static_cast<int>(i);
    }

    // Unique containment as a last resort.
    int found = -1;
    for (std::size_t i = 0; i < label_space.size(); ++i) {
        if (text::contains(trimmed, label_space[i])) {
            if (found >= 0) return -1;
            found = static_cast<int>(i);
        }
    }
    return found;
}

std::pair<std::string, ClassHistogram> rnm_aggregate(
    const std::vector<std::string>& outputs, const std::vector<std::string>& label_space,
    double sigma, std::uint64_t seed) {
    if (label_space.size() < 2)
        throw InvalidArgumentError("RNM needs a label space with >= 2 labels");

    ClassHistogram hist;
    std::vector<std::size_t> counts(label_space.size(), 0);
    for (const auto& o : outputs) {
        const int idx = parse_label(o, label_space);
        if (idx < 0)
            ++hist.unparseable;
        else
            ++counts[static_cast<std::size_t>(idx)];
    }
    if (hist.unparseable == outputs.size())
        throw DegenerateEnsembleError("no ensemble output parsed to a label");

    rng::Engine eng = rng::Engine(seed).child(kNoiseStream);
    std::size_t best = 0;
    double best_noisy = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < label_space.size(); ++i) {
        const double noisy = static_cast<double>(counts[i]) + sigma * eng.normal();
        hist.counts[label_space[i]] = counts[i];
        hist.noisy_counts[label_space[i]] = noisy;
        if (noisy > best_noisy) {  // strict: ties keep the lowest index
            best_noisy = noisy;
            best = i;
        }
    }
    return {label_space[best], std::move(hist)};
}

namespace {

std::vector<double> clipped_embedding(backends::EmbedderBackend& embedder,
                                      const std::string& text_in, double clip_bound) {
    std::vector<double> e = embedder.embed(text_in);
    if (e.size() != embedder.dimension())
        throw InvalidStateError("embedder returned wrong dimension");
    if (std::isfinite(clip_bound)) {
        const double norm = vecops::l2_norm(e);
        if (norm > clip_bound && norm > 0.0)
            vecops::scale_inplace(e, clip_bound / norm);
    }
    return e;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = vecops::l2_norm(a);
    const double nb = vecops::l2_norm(b);
    if (na == 0.0 || nb == 0.0) return -2.0;  // below any real cosine
    return vecops::dot(a, b) / (na * nb);
}

}  // namespace

std::pair<std::string, std::vector<double>> esa_aggregate(
    const std::vector<std::string>& outputs, double clip_bound, double sigma,
    backends::EmbedderBackend& embedder, std::uint64_t seed) {
    if (outputs.empty()) throw DegenerateEnsembleError("ESA needs at least one output");

    const std::size_t dim = embedder.dimension();
    std::vector<std::vector<double>> clipped;
    clipped.reserve(outputs.size());
    std::vector<double> mean(dim, 0.0);
    for (const auto& o : outputs) {
        clipped.push_back(clipped_embedding(embedder, o, clip_bound));
        vecops::add_inplace(mean, clipped.back());
    }
    vecops::scale_inplace(mean, 1.0 / static_cast<double>(outputs.size()));

    if (sigma > 0.0) {
        rng::Engine eng = rng::Engine(seed).child(kNoiseStream);
        for (auto& x : mean) x += sigma * eng.normal();
    }

    std::size_t best = 0;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double c = cosine(clipped[i], mean);
        if (c > best_cos) {
            best_cos = c;
            best = i;
        }
    }
    return {outputs[best], std::move(mean)};
}

KsaResult ksa_aggregate(const std::vector<std::string>& outputs,
                        const std::vector<std::string>& vocab, double clip_cap,
                        double sigma, std::uint64_t seed, std::size_t top_k) {
    if (vocab.empty()) throw InvalidArgumentError("KSA vocabulary is empty");
    if (top_k == 0 || top_k > vocab.size())
        throw InvalidArgumentError("KSA top_k must be in [1, |vocab|]");
    if (outputs.empty()) throw DegenerateEnsembleError("KSA needs at least one output");

    std::vector<std::vector<std::string>> vocab_tokens;
    vocab_tokens.reserve(vocab.size());
    for (const auto& kw : vocab) vocab_tokens.push_back(text::tokenize(kw));

    std::vector<double> mean(vocab.size(), 0.0);
    for (const auto& o : outputs) {
        const auto tokens = text::tokenize(o);
        for (std::size_t v = 0; v < vocab.size(); ++v) {
            const auto& needle = vocab_tokens[v];
            if (needle.empty()) continue;
            std::size_t count = 0;
            for (std::size_t i = 0; i + needle.size() <= tokens.size(); ++i)
                if (std::equal(needle.begin(), needle.end(), tokens.begin() + i)) ++count;
            mean[v] += std::min(static_cast<double>(count), clip_cap);
        }
    }
    vecops::scale_inplace(mean, 1.0 / static_cast<double>(outputs.size()));

    rng::Engine eng = rng::Engine(seed).child(kNoiseStream);
    KsaResult result;
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    if (sigma > 0.0)
        for (auto& x : mean) x += sigma * eng.normal();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
    for (std::size_t v = 0; v < vocab.size(); ++v) result.noisy_hist[vocab[v]] = mean[v];
    for (std::size_t i = 0; i < top_k; ++i) result.keywords.push_back(vocab[order[i]]);
    return result;
}

PrivatizedOutput run_dp_icl(const corpus::ExemplarSet& dataset, const std::string& query,
                            const MechanismConfig& config,
                            backends::GeneratorBackend& generator,
                            backends::EmbedderBackend* embedder, std::uint64_t seed,
                            const RunOptions& options) {
    config.validate();
    dataset.validate();
    if (config.mode == Mode::ESA && embedder == nullptr)
        throw InvalidArgumentError("ESA requires an embedder backend");
    if (config.mode == Mode::RNM && dataset.task_kind != corpus::TaskKind::classification)
        throw InvalidArgumentError("RNM requires a classification dataset");

    rng::Engine root(seed);
    const auto partition = sampling::disjoint_poisson_sample(
        dataset.size(), config.m, root.child(kPartitionStream).seed());

    const corpus::RenderOptions render = options.render_defaults
        ? corpus::RenderOptions::defaults_for(dataset.task_kind)
        : options.render;

    std::vector<std::string> outputs;
    outputs.reserve(config.m);
    for (const auto& part : partition.parts) {
        corpus::ExemplarSet subset;
        subset.task_kind = dataset.task_kind;
        subset.label_space = dataset.label_space;
        for (std::size_t idx : part) subset.items.push_back(dataset.items[idx]);

        corpus::PromptAssembly assembly;
        if (subset.items.empty())
            assembly = corpus::PromptAssembly{options.preamble, "", query};
        else
            assembly = corpus::render_prompt(subset, query, options.preamble, render);
        outputs.push_back(generator.generate(assembly.system_text(), assembly.user_query));
    }
    if (outputs.empty()) throw DegenerateEnsembleError("no ensemble outputs collected");

    PrivatizedOutput released;
    released.mode = config.mode;
    released.dropped_exemplars = partition.dropped.size();
    const double sigma = config.sigma();
    const std::uint64_t agg_seed = root.child(kNoiseStream).seed();

    switch (config.mode) {
        case Mode::RNM: {
            auto [label, hist] = rnm_aggregate(outputs, dataset.label_space, sigma, agg_seed);
            released.text = label;
            released.histogram = std::move(hist);
            break;
        }
        case Mode::ESA: {
            const double clip = config.non_private()
                ? std::numeric_limits<double>::infinity()
                : config.clip_bound_B;
            auto [decoded, mean] = esa_aggregate(outputs, clip, sigma, *embedder, agg_seed);
            released.text = std::move(decoded);
            released.noisy_mean = std::move(mean);
            break;
        }
        case Mode::KSA: {
            const double cap = config.non_private()
                ? std::numeric_limits<double>::infinity()
                : config.clip_cap_C;
            auto ksa = ksa_aggregate(outputs, config.keyword_vocab, cap, sigma, agg_seed,
                                     config.top_k);
            released.released_keywords = std::move(ksa.keywords);
            released.noisy_keywords = std::move(ksa.noisy_hist);
            std::string joined;
            for (const auto& kw : released.released_keywords) {
                if (!joined.empty()) joined += ' ';
                joined += kw;
            }
            released.text = std::move(joined);
            break;
        }
    }
    return released;
}

}  // namespace ctxaudit::mechanisms
