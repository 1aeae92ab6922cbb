#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxaudit/backends.hpp"
#include "ctxaudit/corpus.hpp"
#include "ctxaudit/mechanisms.hpp"

namespace ctxaudit::metrics {

// Fraction of exact label matches.
double classification_accuracy(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& references);

// Unigram-overlap F1 with multiset clipping; tokens are lowercased and split
// on non-alphanumerics. 0 when either side has no tokens.
double rouge1_f(const std::string& candidate, const std::string& reference);

enum class UtilityMode { aggregated, non_aggregated_full, non_aggregated_share, zero_shot };

const char* to_string(UtilityMode m);

struct UtilityReport {
    std::string metric;  // "accuracy" or "rouge1_f"
    double value = 0.0;
    std::size_t n_queries = 0;
    double epsilon = 0.0;  // infinity for the non-private modes
    UtilityMode mode = UtilityMode::aggregated;
};

struct SweepSettings {
    std::vector<double> epsilons;  // aggregated runs, one report per entry
    bool include_zero_shot = true;
    bool include_non_aggregated_full = true;
    bool include_non_aggregated_share = true;
};

// Task utility across privacy budgets: runs the DP-ICL pipeline per epsilon
// plus the zero-shot and single-context baselines, scoring predictions
// against the eval set's gold labels (classification accuracy) or reference
// texts (mean ROUGE-1 F).
std::vector<UtilityReport> utility_sweep(const corpus::ExemplarSet& dataset,
                                         const corpus::ExemplarSet& eval_set,
                                         const SweepSettings& settings,
                                         mechanisms::MechanismConfig mech_template,
                                         backends::GeneratorBackend& generator,
                                         backends::EmbedderBackend* embedder,
                                         std::uint64_t seed);

// The task query for one eval input, e.g. "Sentence: <input>\nLabel: ".
std::string task_query(const corpus::ExemplarSet& dataset, const std::string& input);

}  // namespace ctxaudit::metrics
