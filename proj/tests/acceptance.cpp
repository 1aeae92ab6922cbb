// Acceptance suite: runs every toolkit-level criterion at its stated
// tolerance and prints one pass/fail line per criterion.
//
//   acceptance            runs all criteria
//   acceptance --only N   runs a single criterion (used by ctest)

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ctxaudit/attack.hpp"
#include "ctxaudit/audit.hpp"
#include "ctxaudit/backends.hpp"
#include "ctxaudit/canary.hpp"
#include "ctxaudit/corpus.hpp"
#include "ctxaudit/defense.hpp"
#include "ctxaudit/mechanisms.hpp"
#include "ctxaudit/metrics.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/runlog.hpp"
#include "ctxaudit/sampling.hpp"
#include "ctxaudit/vecops.hpp"

using namespace ctxaudit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Result {
    bool pass = false;
    std::string detail;
};

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& label) {
        if (!condition) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << "FAILED: " << label;
        }
    }
    void note(const std::string& text) {
        detail << (detail.tellp() > 0 ? "; " : "") << text;
    }
    Result result() const { return {ok, detail.str()}; }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Criterion 1: conversion-table reproduction.
// ---------------------------------------------------------------------------

Result criterion_conversion_table() {
    struct Cell {
        const char* system;
        double accuracy_pct;
        double epsilon;
    };
    // (model, dataset) x (eps = 1, 2, 4, 8, inf): empirical epsilon with the
    // reported auditing accuracy in percent.
    const std::vector<Cell> table = {
        {"llama/docvqa", 59.2, 0.37},  {"llama/docvqa", 65.8, 0.65},
        {"llama/docvqa", 76.2, 1.16},  {"llama/docvqa", 88.5, 2.04},
        {"llama/docvqa", 96.8, 3.39},  {"llama/samsum", 59.4, 0.38},
        {"llama/samsum", 66.6, 0.69},  {"llama/samsum", 75.0, 1.10},
        {"llama/samsum", 88.3, 2.02},  {"llama/samsum", 95.8, 3.11},
        {"llama/sarcasm", 58.0, 0.32}, {"llama/sarcasm", 65.9, 0.66},
        {"llama/sarcasm", 71.8, 0.93}, {"llama/sarcasm", 83.0, 1.59},
        {"llama/sarcasm", 96.0, 3.18}, {"llama/subj", 57.2, 0.29},
        {"llama/subj", 62.6, 0.51},    {"llama/subj", 71.6, 0.92},
        {"llama/subj", 81.0, 1.45},    {"llama/subj", 92.5, 2.51},
        {"qwen/docvqa", 59.9, 0.40},   {"qwen/docvqa", 63.9, 0.57},
        {"qwen/docvqa", 75.1, 1.11},   {"qwen/docvqa", 84.1, 1.67},
        {"qwen/docvqa", 92.0, 2.44},   {"qwen/samsum", 59.4, 0.41},
        {"qwen/samsum", 64.7, 0.60},   {"qwen/samsum", 74.5, 1.01},
        {"qwen/samsum", 83.7, 1.63},   {"qwen/samsum", 91.7, 2.42},
        {"qwen/sarcasm", 57.0, 0.33},  {"qwen/sarcasm", 64.3, 0.61},
        {"qwen/sarcasm", 70.3, 0.88},  {"qwen/sarcasm", 80.1, 1.45},
        {"qwen/sarcasm", 95.6, 3.10},  {"qwen/subj", 56.5, 0.32},
        {"qwen/subj", 62.3, 0.53},     {"qwen/subj", 70.1, 0.85},
        {"qwen/subj", 79.5, 1.34},     {"qwen/subj", 90.7, 2.09},
    };

    const auto start = std::chrono::steady_clock::now();
    Check check;
    int failures = 0;
    double worst_dev = 0.0;
    std::string worst_cell;
    for (const auto& cell : table) {
        const double computed = audit::empirical_epsilon(cell.accuracy_pct / 100.0, 400);
        const double dev = std::abs(computed - cell.epsilon);
        if (dev > worst_dev) {
            worst_dev = dev;
            worst_cell = std::string(cell.system) + " " +
                         runlog::format_double(cell.accuracy_pct) + "% -> " +
                         runlog::format_double(computed) + " (table " +
                         runlog::format_double(cell.epsilon) + ")";
        }
        if (dev > 0.01) ++failures;
    }
    const double elapsed = seconds_since(start);
    check.note(std::to_string(40 - failures) + "/40 cells within +-0.01");
    check.note("worst " + worst_cell + ", dev " + runlog::format_double(worst_dev));
    check.require(failures == 0, std::to_string(failures) +
                                     " cells deviate by more than 0.01 from the"
                                     " log-odds of their reported accuracy");
    check.require(elapsed < 1.0, "runtime under 1s");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 2: log-odds anchors.
// ---------------------------------------------------------------------------

Result criterion_log_odds_anchors() {
    Check check;
    const double at_075 = audit::empirical_epsilon(0.75, 400);
    check.require(std::abs(at_075 - std::log(3.0)) <= 1e-9, "empirical_epsilon(0.75) = ln 3");
    check.require(audit::empirical_epsilon(0.5, 400) == 0.0, "empirical_epsilon(0.5) = 0");
    check.note("0.75 -> " + runlog::format_double(at_075));
    return check.result();
}

// ---------------------------------------------------------------------------
// Shared audit plumbing for the end-to-end criteria.
// ---------------------------------------------------------------------------

struct RnmAuditSetup {
    corpus::ExemplarSet dataset;
    canary::Canary canary_value;
    attack::AttackQuery query;
    std::unique_ptr<backends::ScriptedOracle> oracle;
    audit::Pipeline pipeline;
    mechanisms::MechanismConfig mech;
};

RnmAuditSetup make_rnm_setup(double detection_rate, double epsilon, std::size_t m,
                             double delta) {
    RnmAuditSetup s;
    s.dataset = corpus::synthetic_classification_set(7, 20);
    s.canary_value = canary::make_hex_canary(1, 32);
    s.query = attack::build_query(attack::Strategy::if_then_explicit, s.canary_value,
                                  corpus::TaskKind::classification);
    backends::ScriptedOracleConfig oc;
    oc.detection_rate = detection_rate;
    oc.canary_text = s.canary_value.text;
    oc.positive_output = s.query.rare_label;
    oc.negative_output = s.query.common_label;
    s.oracle = std::make_unique<backends::ScriptedOracle>(oc);
    s.mech.mode = mechanisms::Mode::RNM;
    s.mech.m = m;
    s.mech.epsilon = epsilon;
    s.mech.delta = delta;
    s.pipeline = audit::make_mechanism_pipeline(s.query.text, s.mech, *s.oracle, nullptr);
    return s;
}

audit::DetectionRule rnm_rule() {
    audit::DetectionRule rule;
    rule.kind = audit::RuleKind::rare_class_noisy_count;
    rule.threshold = 0.5;
    rule.rare_label = "1";
    return rule;
}

double audited_rnm_accuracy(double detection_rate, double epsilon, std::size_t m,
                            double delta, std::size_t n_trials,
                            std::size_t calibration_trials, std::uint64_t seed) {
    const auto setup = make_rnm_setup(detection_rate, epsilon, m, delta);
    const auto calibrated = audit::calibrate_rule(
        audit::RuleKind::rare_class_noisy_count, calibration_trials, setup.dataset,
        setup.canary_value, setup.pipeline, seed, rnm_rule());
    const auto outcome = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                          calibrated.rule, n_trials, seed);
    return outcome.report.accuracy;
}

struct EsaAuditSetup {
    corpus::ExemplarSet dataset;
    canary::Canary canary_value;
    std::unique_ptr<backends::HashedEmbedder> embedder;
    std::unique_ptr<backends::ScriptedOracle> oracle;
    audit::Pipeline pipeline;
};

EsaAuditSetup make_esa_setup(double detection_rate, double epsilon, std::size_t m,
                             double delta) {
    EsaAuditSetup s;
    s.dataset = corpus::synthetic_generation_set(7, 20);
    s.canary_value = canary::make_hex_canary(1, 32);
    s.canary_value.label = s.canary_value.text;
    const auto query = attack::build_query(attack::Strategy::if_then_explicit,
                                           s.canary_value, corpus::TaskKind::generation);
    s.embedder = std::make_unique<backends::HashedEmbedder>(256, 17);
    backends::ScriptedOracleConfig oc;
    oc.detection_rate = detection_rate;
    oc.canary_text = s.canary_value.text;
    oc.positive_output = s.canary_value.text;
    oc.negative_output = query.common_label;
    s.oracle = std::make_unique<backends::ScriptedOracle>(oc);

    mechanisms::MechanismConfig mech;
    mech.mode = mechanisms::Mode::ESA;
    mech.m = m;
    mech.epsilon = epsilon;
    mech.delta = delta;
    mech.clip_bound_B = 1.0;
    s.pipeline =
        audit::make_mechanism_pipeline(query.text, mech, *s.oracle, s.embedder.get());
    return s;
}

double audited_esa_accuracy(double detection_rate, double epsilon, std::size_t m,
                            double delta, std::size_t n_trials,
                            std::size_t calibration_trials, std::uint64_t seed) {
    const auto setup = make_esa_setup(detection_rate, epsilon, m, delta);
    audit::DetectionRule prototype;
    prototype.on_aggregate = true;  // audit the released noisy mean
    audit::AuditOptions options;
    options.embedder = setup.embedder.get();
    const auto calibrated = audit::calibrate_rule(
        audit::RuleKind::embedding_projection, calibration_trials, setup.dataset,
        setup.canary_value, setup.pipeline, seed, prototype, options);
    const auto outcome = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                          calibrated.rule, n_trials, seed, options);
    return outcome.report.accuracy;
}

// ---------------------------------------------------------------------------
// Criterion 3: perfect-leakage end-to-end.
// ---------------------------------------------------------------------------

Result criterion_perfect_leakage() {
    const auto start = std::chrono::steady_clock::now();
    const auto setup = make_rnm_setup(/*detection_rate=*/1.0, kInf, /*m=*/1, 0.005);
    const auto outcome = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                          rnm_rule(), 400, 11);
    const double elapsed = seconds_since(start);

    Check check;
    check.note("accuracy " + runlog::format_double(outcome.report.accuracy));
    check.note("empirical epsilon " +
               runlog::format_double(outcome.report.empirical_epsilon));
    check.note("runtime " + runlog::format_double(elapsed) + "s");
    check.require(outcome.report.accuracy >= 0.99, "accuracy >= 0.99");
    check.require(outcome.report.empirical_epsilon >= 4.0, "empirical epsilon >= 4.0");
    check.require(elapsed < 30.0, "runtime under 30s");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 4: no-leakage floor.
// ---------------------------------------------------------------------------

Result criterion_no_leakage_floor() {
    const auto dataset = corpus::synthetic_classification_set(7, 20);
    const auto c = canary::make_hex_canary(1, 32);
    backends::ConstantGenerator constant("0");
    mechanisms::MechanismConfig mech;
    mech.mode = mechanisms::Mode::RNM;
    mech.m = 4;
    mech.epsilon = kInf;
    const auto pipeline = audit::make_mechanism_pipeline("q", mech, constant, nullptr);

    const auto outcome = audit::run_audit(dataset, c, pipeline, rnm_rule(), 400, 21);
    Check check;
    check.note("accuracy " + runlog::format_double(outcome.report.accuracy));
    check.note("empirical epsilon " +
               runlog::format_double(outcome.report.empirical_epsilon));
    check.require(outcome.report.accuracy >= 0.42 && outcome.report.accuracy <= 0.58,
                  "accuracy within [0.42, 0.58]");
    check.require(outcome.report.empirical_epsilon <= 0.33, "empirical epsilon <= 0.33");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 5: monotonicity in epsilon.
// ---------------------------------------------------------------------------

bool nearly_monotone(const std::vector<double>& values, double slack, int max_violations,
                     std::string* detail) {
    int violations = 0;
    bool ok = true;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double drop = values[i - 1] - values[i];
        if (drop > 0.0) {
            ++violations;
            if (drop > slack) ok = false;
        }
    }
    if (violations > max_violations) ok = false;
    std::ostringstream s;
    for (double v : values) s << runlog::format_double(v) << " ";
    *detail = s.str() + "(" + std::to_string(violations) + " adjacent drops)";
    return ok;
}

Result criterion_monotonicity() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<double> epsilons = {1.0, 2.0, 4.0, 8.0, kInf};
    const double delta = 0.005;  // 1/(10*|D|) for |D| = 20

    std::vector<double> rnm_acc, esa_acc;
    for (double eps : epsilons)
        rnm_acc.push_back(audited_rnm_accuracy(0.95, eps, 4, delta, 400, 100, 1));
    for (double eps : epsilons)
        esa_acc.push_back(audited_esa_accuracy(0.95, eps, 4, delta, 400, 100, 1));
    const double elapsed = seconds_since(start);

    Check check;
    std::string rnm_detail, esa_detail;
    const bool rnm_ok = nearly_monotone(rnm_acc, 0.02, 1, &rnm_detail);
    const bool esa_ok = nearly_monotone(esa_acc, 0.02, 1, &esa_detail);
    check.note("RNM acc over eps {1,2,4,8,inf}: " + rnm_detail);
    check.note("ESA acc: " + esa_detail);
    check.note("runtime " + runlog::format_double(elapsed) + "s");
    check.require(rnm_ok, "RNM accuracy non-decreasing (<=1 adjacent drop of <=0.02)");
    check.require(esa_ok, "ESA accuracy non-decreasing (<=1 adjacent drop of <=0.02)");
    check.require(elapsed < 300.0, "runtime under 5 minutes");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 6: DP upper-bound sanity.
// ---------------------------------------------------------------------------

Result criterion_dp_upper_bound() {
    Check check;
    for (double eps : {1.0, 2.0}) {
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto setup = make_rnm_setup(1.0, eps, 4, 1e-5);
            const auto calibrated = audit::calibrate_rule(
                audit::RuleKind::rare_class_noisy_count, 50, setup.dataset,
                setup.canary_value, setup.pipeline, seed, rnm_rule());
            const auto outcome =
                audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                 calibrated.rule, 400, seed);
            worst = std::max(worst, outcome.report.empirical_epsilon);
        }
        check.note("eps=" + runlog::format_double(eps) + ": worst empirical " +
                   runlog::format_double(worst));
        check.require(worst <= eps + 0.5, "empirical epsilon <= theoretical + 0.5 at eps=" +
                                              runlog::format_double(eps));
    }
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 7: sensitivity-ledger displacement checks.
// ---------------------------------------------------------------------------

Result criterion_sensitivity_ledger() {
    Check check;
    const auto base = corpus::synthetic_classification_set(7, 20);
    const auto base_gen = corpus::synthetic_generation_set(7, 20);
    const std::string marker = "replacementmarkertoken";

    double worst_rnm = 0.0, worst_esa = 0.0, worst_ksa = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        // adjacent pair: one exemplar's content replaced
        const std::size_t idx = i % base.size();

        // RNM: counts displacement, sqrt(2) bound
        {
            corpus::ExemplarSet neighbor = base;
            neighbor.items[idx].input = marker + " variant " + std::to_string(i);
            neighbor.items[idx].label = "1";
            backends::ScriptedOracleConfig oc;
            oc.canary_text = marker;
            backends::ScriptedOracle gen(oc);
            mechanisms::MechanismConfig mech;
            mech.mode = mechanisms::Mode::RNM;
            mech.m = 4;
            mech.epsilon = kInf;
            const auto a = mechanisms::run_dp_icl(base, "q", mech, gen, nullptr, 1000 + i);
            const auto b =
                mechanisms::run_dp_icl(neighbor, "q", mech, gen, nullptr, 1000 + i);
            double sq = 0.0;
            for (const auto& [label, count] : a.histogram.counts) {
                const double d = static_cast<double>(count) -
                                 static_cast<double>(b.histogram.counts.at(label));
                sq += d * d;
            }
            worst_rnm = std::max(worst_rnm, std::sqrt(sq));
        }

        // ESA: clipped-mean displacement, 2B/m bound
        {
            corpus::ExemplarSet neighbor = base_gen;
            neighbor.items[idx].input = marker + " variant " + std::to_string(i);
            backends::HashedEmbedder emb(128, 5);
            backends::ScriptedOracleConfig oc;
            oc.canary_text = marker;
            oc.positive_output = "echo " + marker;
            oc.negative_output = "the usual summary text";
            backends::ScriptedOracle gen(oc);
            mechanisms::MechanismConfig mech;
            mech.mode = mechanisms::Mode::ESA;
            mech.m = 4;
            mech.epsilon = 1.0;
            mech.delta = 0.005;
            mech.clip_bound_B = 1.0;
            const auto a = mechanisms::run_dp_icl(base_gen, "q", mech, gen, &emb, 1000 + i);
            const auto b = mechanisms::run_dp_icl(neighbor, "q", mech, gen, &emb, 1000 + i);
            double sq = 0.0;
            for (std::size_t d = 0; d < a.noisy_mean.size(); ++d) {
                const double diff = a.noisy_mean[d] - b.noisy_mean[d];
                sq += diff * diff;
            }
            worst_esa = std::max(worst_esa, std::sqrt(sq));
        }

        // KSA: clipped keyword-mean displacement, sqrt(2)*C/m bound
        {
            corpus::ExemplarSet neighbor = base_gen;
            neighbor.items[idx].input = marker + " variant " + std::to_string(i);
            backends::ScriptedOracleConfig oc;
            oc.canary_text = marker;
            oc.positive_output = "yes";
            oc.negative_output = "no";
            backends::ScriptedOracle gen(oc);
            mechanisms::MechanismConfig mech;
            mech.mode = mechanisms::Mode::KSA;
            mech.m = 4;
            mech.epsilon = 1.0;
            mech.delta = 0.005;
            mech.clip_cap_C = 1.0;
            mech.keyword_vocab = {"yes", "no", "maybe"};
            mech.top_k = 2;
            const auto a = mechanisms::run_dp_icl(base_gen, "q", mech, gen, nullptr, 1000 + i);
            const auto b =
                mechanisms::run_dp_icl(neighbor, "q", mech, gen, nullptr, 1000 + i);
            double sq = 0.0;
            for (const auto& [kw, value] : a.noisy_keywords) {
                const double diff = value - b.noisy_keywords.at(kw);
                sq += diff * diff;
            }
            worst_ksa = std::max(worst_ksa, std::sqrt(sq));
        }
    }

    check.note("worst RNM displacement " + runlog::format_double(worst_rnm) + " (bound " +
               runlog::format_double(std::sqrt(2.0)) + ")");
    check.note("worst ESA displacement " + runlog::format_double(worst_esa) + " (bound " +
               runlog::format_double(2.0 / 4.0) + ")");
    check.note("worst KSA displacement " + runlog::format_double(worst_ksa) + " (bound " +
               runlog::format_double(std::sqrt(2.0) / 4.0) + ")");
    check.require(worst_rnm <= std::sqrt(2.0) + 1e-9, "RNM histogram L2 <= sqrt(2)");
    check.require(worst_esa <= 2.0 * 1.0 / 4.0 + 1e-9, "ESA mean L2 <= 2B/m");
    check.require(worst_ksa <= std::sqrt(2.0) * 1.0 / 4.0 + 1e-9,
                  "KSA mean L2 <= sqrt(2)*C/m");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 8: sampler properties.
// ---------------------------------------------------------------------------

Result criterion_sampler_properties() {
    Check check;

    rng::Engine eng(2718);
    bool disjoint_ok = true;
    for (int t = 0; t < 1000 && disjoint_ok; ++t) {
        const std::size_t n = 1 + eng.below(100);
        const std::size_t m = 1 + eng.below(12);
        try {
            sampling::disjoint_poisson_sample(n, m, eng.next_u64()).validate();
        } catch (const std::exception&) {
            disjoint_ok = false;
        }
    }
    check.require(disjoint_ok, "disjointness on 1000 random (size, m, seed) triples");

    bool m1_ok = true;
    for (std::size_t n : {1u, 2u, 5u, 20u, 97u}) {
        const auto p = sampling::disjoint_poisson_sample(n, 1, 3);
        m1_ok = m1_ok && p.parts.size() == 1 && p.parts[0].size() == n && p.dropped.empty();
    }
    check.require(m1_ok, "m=1 returns everything");

    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto p = sampling::disjoint_poisson_sample(20, 4, seed);
        for (const auto& part : p.parts) total += static_cast<double>(part.size());
    }
    const double mean_size = total / 4000.0;
    check.note("mean part size (20,4) over seeds 0..999: " +
               runlog::format_double(mean_size));
    check.require(mean_size >= 4.7 && mean_size <= 5.3,
                  "mean part size within 5 +- 0.3 (exact process expectation is 4.6926)");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 9: Gaussian calibration.
// ---------------------------------------------------------------------------

Result criterion_gaussian_calibration() {
    Check check;
    const double sigma = mechanisms::calibrate_sigma(1.0, 1e-5, 1.0);
    // independent evaluation of the closed form
    const double reference = std::sqrt(2.0 * std::log(1.25 / 1e-5));
    check.note("sigma(1, 1e-5, 1) = " + runlog::format_double(sigma));
    check.require(std::abs(sigma - reference) <= 1e-12, "matches independent evaluation");
    check.require(std::abs(sigma - 4.8442) <= 1e-3, "equals 4.8442 +- 1e-3");

    double prev = kInf;
    bool decreasing = true;
    for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        const double s = mechanisms::calibrate_sigma(eps, 1e-5, 1.0);
        decreasing = decreasing && (s < prev);
        prev = s;
    }
    check.require(decreasing, "sigma strictly decreasing across the epsilon grid");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 10: metric oracles.
// ---------------------------------------------------------------------------

Result criterion_metric_oracles() {
    Check check;
    const double rouge = metrics::rouge1_f("a b b", "a b c");
    check.note("rouge1_f(\"a b b\", \"a b c\") = " + runlog::format_double(rouge));
    check.require(std::abs(rouge - 2.0 / 3.0) <= 1e-15, "rouge1_f anchor = 2/3");

    rng::Engine eng(31415);
    bool recount_ok = true;
    for (int rep = 0; rep < 100 && recount_ok; ++rep) {
        const std::size_t n = 1 + eng.below(50);
        std::vector<std::string> pred, ref;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            pred.push_back(std::to_string(eng.below(4)));
            ref.push_back(std::to_string(eng.below(4)));
            if (pred.back() == ref.back()) ++hits;
        }
        recount_ok = std::abs(metrics::classification_accuracy(pred, ref) -
                              static_cast<double>(hits) / static_cast<double>(n)) < 1e-12;
    }
    check.require(recount_ok, "classification_accuracy matches recount oracle on 100 cases");
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 11: defense-ladder qualitative reproduction.
// ---------------------------------------------------------------------------

Result criterion_defense_ladder() {
    const auto dataset = corpus::synthetic_classification_set(7, 12);
    const auto c = canary::make_hex_canary(1, 32);
    const auto label_query = attack::build_query(attack::Strategy::if_then_explicit, c,
                                                 corpus::TaskKind::classification);
    const auto injection = attack::build_query(attack::Strategy::prompt_injection, c,
                                               corpus::TaskKind::classification);

    backends::ScriptedOracleConfig oc;
    oc.detection_rate = 1.0;
    oc.canary_text = c.text;
    backends::InjectionAwareOracle oracle(oc, /*obeys_prompt_defenses=*/true);
    std::vector<std::string> secrets;
    for (const auto& e : dataset.items) secrets.push_back(e.input);
    backends::SubstringJudge judge(secrets, 20);

    audit::DetectionRule rule;
    rule.kind = audit::RuleKind::text_match;
    rule.threshold = 0.5;
    rule.rare_label = label_query.rare_label;
    rule.canary_text = c.text;

    Check check;
    std::ostringstream grid;
    for (const defense::Level level :
         {defense::Level::L0, defense::Level::L1, defense::Level::L2, defense::Level::L3}) {
        const auto d = defense::make_defense_level(level);
        for (const bool is_injection : {false, true}) {
            const auto pipeline = audit::make_defended_pipeline(
                is_injection ? injection.text : label_query.text, d, oracle,
                d.uses_output_filter ? &judge : nullptr);
            const auto outcome = audit::run_audit(dataset, c, pipeline, rule, 200, 31);
            const double acc = outcome.report.accuracy;
            grid << (is_injection ? "inj" : "canary") << "@" << defense::to_string(level)
                 << "=" << runlog::format_double(acc) << " ";
            if (!is_injection)
                check.require(acc >= 0.95, std::string("canary attack >= 0.95 at ") +
                                               defense::to_string(level));
            if (is_injection && level == defense::Level::L3)
                check.require(acc <= 0.58, "prompt injection <= 0.58 under L3");
        }
    }
    check.note(grid.str());
    return check.result();
}

// ---------------------------------------------------------------------------
// Criterion 12: replay determinism.
// ---------------------------------------------------------------------------

std::string serialized_trials(const audit::AuditOutcome& outcome) {
    std::string all;
    for (const auto& t : outcome.trials) all += runlog::trial_to_json(t, true).dump() + "\n";
    return all;
}

Result criterion_replay_determinism() {
    Check check;

    {
        const auto setup = make_rnm_setup(0.9, 2.0, 4, 0.005);
        const auto a = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                        rnm_rule(), 120, 77);
        const auto b = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                        rnm_rule(), 120, 77);
        check.require(serialized_trials(a) == serialized_trials(b),
                      "RNM trials.jsonl byte-identical across reruns");
    }
    {
        const auto setup = make_esa_setup(0.9, 2.0, 4, 0.005);
        audit::DetectionRule rule;
        rule.kind = audit::RuleKind::embedding_projection;
        rule.on_aggregate = true;
        rule.reference_vector = setup.embedder->embed(setup.canary_value.text);
        rule.threshold = 0.1;
        audit::AuditOptions options;
        options.embedder = setup.embedder.get();
        const auto a = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                        rule, 60, 78, options);
        const auto b = audit::run_audit(setup.dataset, setup.canary_value, setup.pipeline,
                                        rule, 60, 78, options);
        check.require(serialized_trials(a) == serialized_trials(b),
                      "ESA trials.jsonl byte-identical across reruns");
    }
    return check.result();
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    const char* name;
    std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);
    }

    const std::vector<Criterion> criteria = {
        {1, "conversion-table reproduction", criterion_conversion_table},
        {2, "log-odds anchors", criterion_log_odds_anchors},
        {3, "perfect-leakage end-to-end", criterion_perfect_leakage},
        {4, "no-leakage floor", criterion_no_leakage_floor},
        {5, "monotonicity in epsilon", criterion_monotonicity},
        {6, "DP upper-bound sanity", criterion_dp_upper_bound},
        {7, "sensitivity-ledger checks", criterion_sensitivity_ledger},
        {8, "sampler properties", criterion_sampler_properties},
        {9, "Gaussian calibration", criterion_gaussian_calibration},
        {10, "metric oracles", criterion_metric_oracles},
        {11, "defense-ladder reproduction", criterion_defense_ladder},
        {12, "replay determinism", criterion_replay_determinism},
    };

    int failures = 0;
    int executed = 0;
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        ++executed;
        Result result;
        try {
            result = criterion.run();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (result.pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id
                  << ": " << criterion.name;
        if (!result.detail.empty()) std::cout << " — " << result.detail;
        std::cout << "\n" << std::flush;
        if (!result.pass) ++failures;
    }
    if (executed == 0) {
        std::cerr << "no criterion matched --only " << only << "\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
