#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctxaudit/attack.hpp"
#include "ctxaudit/canary.hpp"
#include "ctxaudit/corpus.hpp"
#include "ctxaudit/defense.hpp"
#include "ctxaudit/mechanisms.hpp"

namespace ctxaudit::audit {

enum class RuleKind {
    rare_class_noisy_count,
    embedding_projection,
    keyword_count,
    text_match,
};

const char* to_string(RuleKind k);
RuleKind rule_kind_from_string(const std::string& s);

// The statistic-plus-threshold the auditor applies to released outputs.
// on_aggregate selects the released aggregation artifact (noisy histogram /
// noisy mean / noisy keyword histogram) as the statistic source when the
// mechanism releases one; otherwise the statistic comes from the released
// text alone.
struct DetectionRule {
    RuleKind kind = RuleKind::rare_class_noisy_count;
    double threshold = 0.5;
    std::vector<double> reference_vector;  // embedding_projection only
    bool on_aggregate = true;
    std::string rare_label = "1";
    std::string canary_text;                // text_match needle
    std::vector<std::string> keywords;      // keyword_count targets
};

// One Bernoulli-insertion trial.
struct AuditTrial {
    std::size_t trial_index = 0;
    bool coin = false;
    std::string released_text;
    double statistic = 0.0;
    bool guess = false;
    bool correct = false;
    std::uint64_t seed = 0;
    std::optional<std::size_t> replaced_index;
    mechanisms::PrivatizedOutput released;
    bool failed = false;
    std::string error;
};

struct AuditReport {
    std::size_t n_trials = 0;  // trials that completed
    std::size_t n_failed = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    double empirical_epsilon = 0.0;
    double ci_low = 0.0;   // two-sided 95% Clopper-Pearson on accuracy
    double ci_high = 0.0;
    double threshold = 0.0;
    std::string config_digest;
    std::uint64_t seed = 0;
};

struct AuditOutcome {
    AuditReport report;
    std::vector<AuditTrial> trials;
};

// A privatizing system under audit: dataset in, released output out. Must be
// deterministic in the trial seed for replayable audits.
using Pipeline =
    std::function<mechanisms::PrivatizedOutput(const corpus::ExemplarSet&, std::uint64_t)>;

struct AuditOptions {
    double max_failure_fraction = 0.10;
    std::size_t workers = 1;
    backends::EmbedderBackend* embedder = nullptr;  // for text-side projection
};

// Clamped log-odds: accuracy is clamped to [0.5, 1 - 1/(2 n_trials)] before
// ln(a / (1-a)); never negative.
double empirical_epsilon(double accuracy, std::size_t n_trials);

// Statistic and threshold guess for one released output.
std::pair<double, bool> detect(const mechanisms::PrivatizedOutput& released,
                               const DetectionRule& rule,
                               backends::EmbedderBackend* embedder = nullptr);

// The audit loop: per trial draw the coin, insert the canary, run the
// pipeline, apply the detection rule, and aggregate accuracy into an
// empirical epsilon lower bound with an exact binomial interval.
AuditOutcome run_audit(const corpus::ExemplarSet& dataset, const canary::Canary& c,
                       const Pipeline& pipeline, const DetectionRule& rule,
                       std::size_t n_trials, std::uint64_t seed,
                       const AuditOptions& options = {});

// Convenience overload that audits a DP-ICL mechanism directly.
AuditOutcome run_audit(const corpus::ExemplarSet& dataset, const canary::Canary& c,
                       const attack::AttackQuery& query,
                       const mechanisms::MechanismConfig& mech, const DetectionRule& rule,
                       std::size_t n_trials, std::uint64_t seed,
                       backends::GeneratorBackend& generator,
                       backends::EmbedderBackend* embedder,
                       const AuditOptions& options = {});

struct CalibrationResult {
    DetectionRule rule;
    double calibration_accuracy = 0.0;
};

// Runs calibration_trials with the coin forced true and forced false on a
// seed stream disjoint from the audit stream, derives the reference vector
// for embedding_projection rules, and picks the accuracy-maximizing
// threshold (midpoint of the best separating gap).
CalibrationResult calibrate_rule(RuleKind kind, std::size_t calibration_trials,
                                 const corpus::ExemplarSet& dataset,
                                 const canary::Canary& c, const Pipeline& pipeline,
                                 std::uint64_t seed, const DetectionRule& prototype,
                                 const AuditOptions& options = {});

// Threshold maximizing accuracy over calibrated scores; exposed for tests.
std::pair<double, double> pick_threshold(const std::vector<double>& scores,
                                         const std::vector<bool>& labels);

// ---------------------------------------------------------------------------
// Pipeline builders
// ---------------------------------------------------------------------------

// DP-ICL mechanism pipeline for a fixed attack query.
Pipeline make_mechanism_pipeline(std::string query, mechanisms::MechanismConfig config,
                                 backends::GeneratorBackend& generator,
                                 backends::EmbedderBackend* embedder,
                                 mechanisms::RunOptions options = {});

// Undefended-to-L3 heuristic pipeline: the full dataset in one prompt, the
// level's prompt defense applied, and (for L3) the judge-filtered output.
Pipeline make_defended_pipeline(std::string query, defense::DefenseLevel level,
                                backends::GeneratorBackend& generator,
                                backends::GeneratorBackend* judge,
                                std::string preamble = {},
                                std::optional<corpus::RenderOptions> render = {});

}  // namespace ctxaudit::audit
