#include "ctxaudit/audit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/stats.hpp"
#include "ctxaudit/text.hpp"
#include "ctxaudit/vecops.hpp"

namespace ctxaudit::audit {

namespace {
// Disjoint seed streams: thresholds are never calibrated on audited trials.
constexpr std::uint64_t kAuditStream = 0xA0D17;
constexpr std::uint64_t kCalibStream = 0xCA11B;

constexpr std::uint64_t kCoinSub = 0;
constexpr std::uint64_t kInsertSub = 1;
constexpr std::uint64_t kPipelineSub = 2;
}  // namespace

const char* to_string(RuleKind k) {
    switch (k) {
        case RuleKind::rare_class_noisy_count: return "rare_class_noisy_count";
        case RuleKind::embedding_projection: return "embedding_projection";
        case RuleKind::keyword_count: return "keyword_count";
        case RuleKind::text_match: return "text_match";
    }
    return "?";
}

RuleKind rule_kind_from_string(const std::string& s) {
    if (s == "rare_class_noisy_count") return RuleKind::rare_class_noisy_count;
    if (s == "embedding_projection") return RuleKind::embedding_projection;
    if (s == "keyword_count") return RuleKind::keyword_count;
    if (s == "text_match") return RuleKind::text_match;
    throw InvalidArgumentError("unknown detection rule kind: " + s);
}

double empirical_epsilon(double accuracy, std::size_t n_trials) {
    if (accuracy < 0.0 || accuracy > 1.0)
        throw InvalidArgumentError("accuracy must be in [0,1]");
    if (n_trials == 0) throw InvalidArgumentError("n_trials must be >= 1");
    const double hi = 1.0 - 1.0 / (2.0 * static_cast<double>(n_trials));
    const double a = std::min(std::max(accuracy, 0.5), hi);
    if (a <= 0.5) return 0.0;
    return std::max(0.0, std::log(a / (1.0 - a)));
}

namespace {

bool label_indicator(const std::string& released_text, const std::string& rare_label) {
    const std::string trimmed = text::trim(released_text);
    if (trimmed == rare_label) return true;
    return text::lowercase(trimmed) == "label: " + text::lowercase(rare_label);
}

}  // namespace

std::pair<double, bool> detect(const mechanisms::PrivatizedOutput& released,
                               const DetectionRule& rule,
                               backends::EmbedderBackend* embedder) {
    double stat = 0.0;
    switch (rule.kind) {
        case RuleKind::rare_class_noisy_count: {
            if (rule.on_aggregate) {
                if (released.histogram.noisy_counts.empty())
                    throw InvalidArgumentError(
                        "rare_class_noisy_count expects a released noisy histogram");
                const auto it = released.histogram.noisy_counts.find(rule.rare_label);
                if (it == released.histogram.noisy_counts.end())
                    throw InvalidArgumentError("rare label not in released histogram: " +
                                               rule.rare_label);
                stat = it->second;
            } else {
                stat = label_indicator(released.text, rule.rare_label) ? 1.0 : 0.0;
            }
            break;
        }
        case RuleKind::embedding_projection: {
            if (rule.reference_vector.empty())
                throw InvalidArgumentError("embedding_projection rule is uncalibrated");
            std::vector<double> vec;
            if (rule.on_aggregate) {
                if (released.noisy_mean.empty())
                    throw InvalidArgumentError(
                        "embedding_projection on_aggregate expects a released noisy mean");
                vec = released.noisy_mean;
            } else {
                if (embedder == nullptr)
                    throw InvalidArgumentError(
                        "embedding_projection on released text needs an embedder");
                vec = embedder->embed(released.text);
            }
            if (vec.size() != rule.reference_vector.size())
                throw InvalidStateError("projection dimension mismatch");
            stat = vecops::dot(vec, rule.reference_vector);
            break;
        }
        case RuleKind::keyword_count: {
            if (rule.on_aggregate) {
                if (released.noisy_keywords.empty())
                    throw InvalidArgumentError(
                        "keyword_count on_aggregate expects a released keyword histogram");
                for (const auto& kw : rule.keywords) {
                    const auto it = released.noisy_keywords.find(kw);
                    if (it != released.noisy_keywords.end()) stat += it->second;
                }
            } else {
                for (const auto& kw : rule.keywords)
                    if (!kw.empty() && text::contains(released.text, kw)) stat += 1.0;
            }
            break;
        }
        case RuleKind::text_match: {
            const bool hit =
                (!rule.canary_text.empty() &&
                 text::contains(released.text, rule.canary_text)) ||
                label_indicator(released.text, rule.rare_label);
            stat = hit ? 1.0 : 0.0;
            break;
        }
    }
    return {stat, stat > rule.threshold};
}

namespace {

struct TrialInputs {
    bool coin;
    std::uint64_t insert_seed;
    std::uint64_t pipeline_seed;
    std::uint64_t trial_seed;
};

TrialInputs trial_inputs(const rng::Engine& root, std::uint64_t stream, std::size_t index) {
    rng::Engine t = root.child(stream).child(index);
    TrialInputs in{};
    in.coin = t.child(kCoinSub).bernoulli(0.5);
    in.insert_seed = t.child(kInsertSub).seed();
    in.pipeline_seed = t.child(kPipelineSub).seed();
    in.trial_seed = t.seed();
    return in;
}

AuditTrial run_trial(std::size_t index, bool coin, const TrialInputs& in,
                     const corpus::ExemplarSet& dataset, const canary::Canary& c,
                     const Pipeline& pipeline, const DetectionRule& rule,
                     backends::EmbedderBackend* embedder) {
    AuditTrial trial;
    trial.trial_index = index;
    trial.coin = coin;
    trial.seed = in.trial_seed;
    try {
        auto [ds, record] = canary::insert_canary(dataset, c, coin, in.insert_seed);
        trial.replaced_index = record.replaced_index;
        trial.released = pipeline(ds, in.pipeline_seed);
        trial.released_text = trial.released.text;
        const auto [stat, guess] = detect(trial.released, rule, embedder);
        trial.statistic = stat;
        trial.guess = guess;
        trial.correct = (guess == coin);
    } catch (const std::exception& e) {
        trial.failed = true;
        trial.error = e.what();
    }
    return trial;
}

void run_indexed(std::size_t n, std::size_t workers,
                 const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(workers, n);
    pool.reserve(count);
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
}

}  // namespace

AuditOutcome run_audit(const corpus::ExemplarSet& dataset, const canary::Canary& c,
                       const Pipeline& pipeline, const DetectionRule& rule,
                       std::size_t n_trials, std::uint64_t seed,
                       const AuditOptions& options) {
    if (n_trials == 0) throw InvalidArgumentError("n_trials must be >= 1");
    dataset.validate();

    const rng::Engine root(seed);
    AuditOutcome outcome;
    outcome.trials.resize(n_trials);
    run_indexed(n_trials, options.workers, [&](std::size_t i) {
        const TrialInputs in = trial_inputs(root, kAuditStream, i);
        outcome.trials[i] =
            run_trial(i, in.coin, in, dataset, c, pipeline, rule, options.embedder);
    });

    std::size_t failed = 0;
    std::size_t correct = 0;
    for (const auto& t : outcome.trials) {
        if (t.failed)
            ++failed;
        else if (t.correct)
            ++correct;
    }
    if (static_cast<double>(failed) >
        options.max_failure_fraction * static_cast<double>(n_trials)) {
        throw Error("audit aborted: " + std::to_string(failed) + "/" +
                    std::to_string(n_trials) + " trials failed (" +
                    (outcome.trials.empty() ? std::string() : outcome.trials.front().error) +
                    ")");
    }
    const std::size_t succeeded = n_trials - failed;
    if (succeeded == 0) throw Error("audit aborted: every trial failed");

    AuditReport& report = outcome.report;
    report.n_trials = succeeded;
    report.n_failed = failed;
    report.n_correct = correct;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(succeeded);
    report.empirical_epsilon = empirical_epsilon(report.accuracy, succeeded);
    const auto [lo, hi] = stats::clopper_pearson(correct, succeeded);
    report.ci_low = lo;
    report.ci_high = hi;
    report.threshold = rule.threshold;
    report.seed = seed;
    return outcome;
}

AuditOutcome run_audit(const corpus::ExemplarSet& dataset, const canary::Canary& c,
                       const attack::AttackQuery& query,
                       const mechanisms::MechanismConfig& mech, const DetectionRule& rule,
                       std::size_t n_trials, std::uint64_t seed,
                       backends::GeneratorBackend& generator,
                       backends::EmbedderBackend* embedder, const AuditOptions& options) {
    AuditOptions effective = options;
    if (effective.embedder == nullptr) effective.embedder = embedder;
    return run_audit(dataset, c,
                     make_mechanism_pipeline(query.text, mech, generator, embedder), rule,
                     n_trials, seed, effective);
}

std::pair<double, double> pick_threshold(const std::vector<double>& scores,
                                         const std::vector<bool>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw InvalidArgumentError("pick_threshold: scores/labels mismatch");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    const double lowest = scores[order.front()];
    const double highest = scores[order.back()];
    if (lowest == highest)
        throw CalibrationError("degenerate calibration: all scores identical");

    const double n = static_cast<double>(scores.size());
    std::size_t total_true = 0;
    for (bool b : labels) total_true += b ? 1 : 0;

    // Candidate thresholds sit between adjacent distinct scores (midpoint of
    // the gap) plus sentinels below and above everything. Guess-true above
    // the threshold: accuracy after p scores = (#false among first p) +
    // (#true among the rest).
    double best_threshold = lowest - 1.0;
    double best_accuracy = -1.0;
    double best_gap = -1.0;
    std::size_t false_below = 0;
    std::size_t true_below = 0;
    auto consider = [&](double threshold, double gap) {
        const double acc =
            (static_cast<double>(false_below) +
             static_cast<double>(total_true - true_below)) / n;
        if (acc > best_accuracy + 1e-12 ||
            (std::abs(acc - best_accuracy) <= 1e-12 && gap > best_gap)) {
            best_accuracy = acc;
            best_threshold = threshold;
            best_gap = gap;
        }
    };
    consider(lowest - 1.0, 0.0);
    for (std::size_t p = 0; p < order.size(); ++p) {
        if (labels[order[p]])
            ++true_below;
        else
            ++false_below;
        const bool boundary = (p + 1 == order.size()) ||
                              (scores[order[p + 1]] > scores[order[p]]);
        if (!boundary) continue;
        if (p + 1 == order.size()) {
            consider(highest + 1.0, 0.0);
        } else {
            const double lo = scores[order[p]];
            const double hi = scores[order[p + 1]];
            consider((lo + hi) / 2.0, hi - lo);
        }
    }
    return {best_threshold, best_accuracy};
}

CalibrationResult calibrate_rule(RuleKind kind, std::size_t calibration_trials,
                                 const corpus::ExemplarSet& dataset,
                                 const canary::Canary& c, const Pipeline& pipeline,
                                 std::uint64_t seed, const DetectionRule& prototype,
                                 const AuditOptions& options) {
    if (calibration_trials < 2)
        throw InvalidArgumentError("calibration needs >= 2 trials per condition");

    const rng::Engine root(seed);
    const std::size_t total = 2 * calibration_trials;

    DetectionRule rule = prototype;
    rule.kind = kind;
    if (rule.canary_text.empty()) rule.canary_text = c.text;

    std::vector<mechanisms::PrivatizedOutput> released(total);
    std::vector<bool> labels(total);
    run_indexed(total, options.workers, [&](std::size_t j) {
        TrialInputs in = trial_inputs(root, kCalibStream, j);
        const bool coin = j < calibration_trials;  // forced, not drawn
        labels[j] = coin;
        auto inserted = canary::insert_canary(dataset, c, coin, in.insert_seed);
        released[j] = pipeline(inserted.first, in.pipeline_seed);
    });

    std::vector<double> scores(total);
    if (kind == RuleKind::embedding_projection) {
        auto sample_vector = [&](const mechanisms::PrivatizedOutput& r) {
            if (rule.on_aggregate) {
                if (r.noisy_mean.empty())
                    throw InvalidArgumentError(
                        "embedding_projection on_aggregate expects a released noisy mean");
                return r.noisy_mean;
            }
            if (options.embedder == nullptr)
                throw InvalidArgumentError(
                    "embedding_projection on released text needs an embedder");
            return options.embedder->embed(r.text);
        };
        std::vector<std::vector<double>> vectors(total);
        for (std::size_t j = 0; j < total; ++j) vectors[j] = sample_vector(released[j]);

        const std::size_t dim = vectors.front().size();
        std::vector<double> reference(dim, 0.0);
        for (std::size_t j = 0; j < total; ++j) {
            if (vectors[j].size() != dim)
                throw InvalidStateError("calibration embeddings disagree on dimension");
            std::vector<double> signed_vec = vectors[j];
            vecops::scale_inplace(signed_vec, labels[j] ? 1.0 : -1.0);
            vecops::add_inplace(reference, signed_vec);
        }
        // reference = sum(true) - sum(false); equal counts make this the
        // (scaled) mean difference between the two conditions.
        const double norm = vecops::l2_norm(reference);
        if (norm == 0.0)
            throw CalibrationError("degenerate calibration: zero reference vector");
        vecops::scale_inplace(reference, 1.0 / norm);
        rule.reference_vector = std::move(reference);
        for (std::size_t j = 0; j < total; ++j)
            scores[j] = vecops::dot(vectors[j], rule.reference_vector);
    } else {
        for (std::size_t j = 0; j < total; ++j)
            scores[j] = detect(released[j], rule, options.embedder).first;
    }

    const auto [threshold, accuracy] = pick_threshold(scores, labels);
    rule.threshold = threshold;
    return CalibrationResult{std::move(rule), accuracy};
}

Pipeline make_mechanism_pipeline(std::string query, mechanisms::MechanismConfig config,
                                 backends::GeneratorBackend& generator,
                                 backends::EmbedderBackend* embedder,
                                 mechanisms::RunOptions options) {
    config.validate();
    return [query = std::move(query), config, &generator, embedder,
            options = std::move(options)](const corpus::ExemplarSet& dataset,
                                          std::uint64_t seed) {
        return mechanisms::run_dp_icl(dataset, query, config, generator, embedder, seed,
                                      options);
    };
}

Pipeline make_defended_pipeline(std::string query, defense::DefenseLevel level,
                                backends::GeneratorBackend& generator,
                                backends::GeneratorBackend* judge, std::string preamble,
                                std::optional<corpus::RenderOptions> render) {
    if (level.uses_output_filter && judge == nullptr)
        throw InvalidArgumentError("L3 defense needs a judge backend");
    return [query = std::move(query), level, &generator, judge,
            preamble = std::move(preamble),
            render = std::move(render)](const corpus::ExemplarSet& dataset,
                                        std::uint64_t /*seed*/) {
        corpus::PromptAssembly assembly =
            render ? corpus::render_prompt(dataset, query, preamble, *render)
                   : corpus::render_prompt(dataset, query, preamble);
        if (level.level == defense::Level::L1 || level.level == defense::Level::L2)
            assembly = defense::apply_prompt_defense(assembly, level);

        mechanisms::PrivatizedOutput released;
        released.text = generator.generate(assembly.system_text(), assembly.user_query);
        if (level.uses_output_filter) {
            const auto verdict =
                defense::llm_leak_filter(assembly.system_text(), released.text, *judge);
            if (verdict.verdict == defense::Verdict::Attack)
                released.text = defense::kRefusalSentinel;
        }
        return released;
    };
}

}  // namespace ctxaudit::audit
