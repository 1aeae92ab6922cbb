// ctxaudit: batch privacy audits for private in-context learning pipelines.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ctxaudit/attack.hpp"
#include "ctxaudit/audit.hpp"
#include "ctxaudit/config.hpp"
#include "ctxaudit/error.hpp"
#include "ctxaudit/metrics.hpp"
#include "ctxaudit/runlog.hpp"
#include "ctxaudit/text.hpp"
#include "ctxaudit/version.hpp"

namespace fs = std::filesystem;
using namespace ctxaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> calibration_trials;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> m;
    std::string out_dir;
    std::string mode;
    std::string strategy;
    std::string level;
    std::string dataset;
    std::string task_kind;
    std::string rule;
    std::string generator_kind;
    std::optional<double> detection_rate;
    std::optional<int> timeout_ms;
    std::vector<std::string> epsilons;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("-c,--config", ov.config_path, "Run configuration (JSON)");
    cmd->add_option("--seed", ov.seed, "Override audit.seed");
    cmd->add_option("--trials", ov.trials, "Override audit.n_trials");
    cmd->add_option("--calibration-trials", ov.calibration_trials,
                    "Override audit.calibration_trials");
    cmd->add_option("--workers", ov.workers, "Override output.workers");
    cmd->add_option("--out", ov.out_dir, "Override output.dir");
    cmd->add_option("--mode", ov.mode, "Override mechanism.mode (RNM|ESA|KSA)");
    cmd->add_option("--m", ov.m, "Override mechanism.m (ensemble count)");
    cmd->add_option("--epsilon", ov.epsilons,
                    "Override mechanism.epsilons (repeatable; number or 'inf')");
    cmd->add_option("--strategy", ov.strategy, "Override attack.strategy");
    cmd->add_option("--level", ov.level, "Override defense.level");
    cmd->add_option("--dataset", ov.dataset, "Override task.dataset_path");
    cmd->add_option("--task-kind", ov.task_kind, "Override task.task_kind");
    cmd->add_option("--rule", ov.rule, "Override audit.rule");
    cmd->add_option("--generator", ov.generator_kind, "Override backend.generator.kind");
    cmd->add_option("--detection-rate", ov.detection_rate,
                    "Override backend.generator.detection_rate");
    cmd->add_option("--timeout-ms", ov.timeout_ms,
                    "Override backend.generator.timeout_ms (per-request timeout)");
}

config::RunConfig load_config(const Overrides& ov) {
    config::RunConfig cfg;
    if (!ov.config_path.empty()) cfg = config::RunConfig::load_file(ov.config_path);
    if (ov.seed) cfg.audit.seed = *ov.seed;
    if (ov.trials) cfg.audit.n_trials = *ov.trials;
    if (ov.calibration_trials) cfg.audit.calibration_trials = *ov.calibration_trials;
    if (ov.workers) cfg.output.workers = *ov.workers;
    if (ov.m) cfg.mechanism.m = *ov.m;
    if (!ov.out_dir.empty()) cfg.output.dir = ov.out_dir;
    if (!ov.mode.empty()) cfg.mechanism.mode = mechanisms::mode_from_string(ov.mode);
    if (!ov.strategy.empty())
        cfg.attack.strategy = attack::strategy_from_string(ov.strategy);
    if (!ov.level.empty()) cfg.defense.level = defense::level_from_string(ov.level);
    if (!ov.dataset.empty()) {
        cfg.task.dataset_path = ov.dataset;
        cfg.task.synthetic = false;
    }
    if (!ov.task_kind.empty())
        cfg.task.task_kind = corpus::task_kind_from_string(ov.task_kind);
    if (!ov.rule.empty()) cfg.audit.rule = audit::rule_kind_from_string(ov.rule);
    if (!ov.generator_kind.empty()) cfg.generator.kind = ov.generator_kind;
    if (ov.detection_rate) cfg.generator.detection_rate = *ov.detection_rate;
    if (ov.timeout_ms) cfg.generator.timeout_ms = *ov.timeout_ms;
    if (!ov.epsilons.empty()) {
        cfg.mechanism.epsilons.clear();
        for (const auto& e : ov.epsilons) {
            if (e == "inf" || e == "Inf" || e == "infinity")
                cfg.mechanism.epsilons.push_back(std::numeric_limits<double>::infinity());
            else
                cfg.mechanism.epsilons.push_back(std::stod(e));
        }
    }
    return cfg;
}

std::string epsilon_key(double epsilon) {
    if (std::isinf(epsilon)) return "inf";
    return runlog::format_double(epsilon);
}

std::vector<std::string> default_rule_keywords(const config::RunConfig& cfg,
                                               const canary::Canary& c) {
    const auto canary_tokens = text::tokenize(c.text);
    if (cfg.mechanism.mode == mechanisms::Mode::KSA) {
        std::vector<std::string> in_vocab;
        for (const auto& kw : cfg.mechanism.keyword_vocab)
            for (const auto& t : canary_tokens)
                if (kw == t) in_vocab.push_back(kw);
        if (!in_vocab.empty()) return in_vocab;
    }
    return canary_tokens;
}

struct ResolvedRun {
    corpus::ExemplarSet dataset;
    canary::Canary canary_value;
    attack::AttackQuery query;
    std::unique_ptr<backends::GeneratorBackend> generator;
    std::unique_ptr<backends::EmbedderBackend> embedder;
};

ResolvedRun resolve(const config::RunConfig& cfg) {
    ResolvedRun run;
    run.dataset = config::resolve_dataset(cfg.task);
    run.canary_value = config::resolve_canary(cfg.canary, run.dataset, cfg.task.task_kind);
    run.query = config::resolve_attack(cfg.attack, run.canary_value, cfg.task.task_kind);
    run.generator = config::make_generator(cfg, run.canary_value, run.query);
    run.embedder = config::make_embedder(cfg);
    return run;
}

// Calibrates (when the rule kind needs it) and runs one audit for one
// mechanism instance; returns the outcome plus the calibration accuracy.
struct CellResult {
    audit::AuditOutcome outcome;
    double calibration_accuracy = std::nan("");
};

CellResult run_cell(const config::RunConfig& cfg, const ResolvedRun& run,
                    const corpus::ExemplarSet& dataset, double epsilon,
                    std::size_t ensemble_count, std::uint64_t seed) {
    mechanisms::MechanismConfig mech =
        config::make_mechanism(cfg.mechanism, epsilon, dataset.size());
    mech.m = ensemble_count;
    mechanisms::RunOptions run_options;
    run_options.render = config::resolve_render_options(cfg.task);
    run_options.render_defaults = false;
    const audit::Pipeline pipeline = audit::make_mechanism_pipeline(
        run.query.text, mech, *run.generator, run.embedder.get(), run_options);

    audit::AuditOptions options;
    options.workers = cfg.output.workers;
    options.max_failure_fraction = cfg.audit.max_failure_fraction;
    options.embedder = run.embedder.get();

    audit::DetectionRule prototype;
    prototype.kind = cfg.audit.rule;
    prototype.on_aggregate = cfg.audit.on_aggregate;
    prototype.rare_label = run.query.rare_label;
    prototype.canary_text = run.canary_value.text;
    prototype.keywords = default_rule_keywords(cfg, run.canary_value);

    CellResult result;
    audit::DetectionRule rule = prototype;
    if (cfg.audit.rule == audit::RuleKind::text_match) {
        rule.threshold = 0.5;
    } else {
        auto calibrated = audit::calibrate_rule(cfg.audit.rule, cfg.audit.calibration_trials,
                                                dataset, run.canary_value, pipeline,
                                                cfg.audit.seed, prototype, options);
        rule = calibrated.rule;
        result.calibration_accuracy = calibrated.calibration_accuracy;
    }
    result.outcome = audit::run_audit(dataset, run.canary_value, pipeline, rule,
                                      cfg.audit.n_trials, seed, options);
    return result;
}

const std::vector<std::string> kSummaryHeader = {
    "config_digest", "version",   "mode",      "epsilon",  "m",
    "n_trials",      "accuracy",  "empirical_epsilon", "ci_low", "ci_high",
    "threshold",     "calibration_accuracy",   "seed"};

std::vector<std::string> summary_row(const config::RunConfig& cfg, double epsilon,
                                     std::size_t m, const CellResult& cell,
                                     const std::string& digest) {
    const auto& r = cell.outcome.report;
    return {digest,
            kVersion,
            mechanisms::to_string(cfg.mechanism.mode),
            epsilon_key(epsilon),
            std::to_string(m),
            std::to_string(r.n_trials),
            runlog::format_double(r.accuracy),
            runlog::format_double(r.empirical_epsilon),
            runlog::format_double(r.ci_low),
            runlog::format_double(r.ci_high),
            runlog::format_double(r.threshold),
            std::isnan(cell.calibration_accuracy)
                ? "n/a"
                : runlog::format_double(cell.calibration_accuracy),
            std::to_string(r.seed)};
}

nlohmann::json report_extras(const config::RunConfig& cfg, double epsilon, std::size_t m,
                             const CellResult& cell) {
    nlohmann::json extras{{"mode", mechanisms::to_string(cfg.mechanism.mode)},
                          {"epsilon", runlog::json_number_or_inf(epsilon)},
                          {"m", m},
                          {"attack_strategy", attack::to_string(cfg.attack.strategy)},
                          {"canary_kind", canary::to_string(cfg.canary.kind)},
                          {"rule", audit::to_string(cfg.audit.rule)}};
    if (!std::isnan(cell.calibration_accuracy))
        extras["calibration_accuracy"] = cell.calibration_accuracy;
    return extras;
}

int cmd_audit(const config::RunConfig& cfg) {
    const std::string digest = cfg.digest();
    const fs::path out_dir = fs::path(cfg.output.dir) / digest;
    fs::create_directories(out_dir);
    runlog::write_json(out_dir / "config.json", cfg.to_json());

    for (double epsilon : cfg.mechanism.epsilons) {
        const ResolvedRun run = resolve(cfg);
        CellResult cell =
            run_cell(cfg, run, run.dataset, epsilon, cfg.mechanism.m, cfg.audit.seed);
        cell.outcome.report.config_digest = digest;

        const fs::path eps_dir = out_dir / ("eps_" + epsilon_key(epsilon));
        fs::create_directories(eps_dir);
        runlog::write_trials_jsonl(eps_dir / "trials.jsonl", cell.outcome.trials,
                                   cfg.output.log_aggregates, digest);
        runlog::write_json(eps_dir / "report.json",
                           runlog::report_to_json(cell.outcome.report,
                                                  report_extras(cfg, epsilon,
                                                                cfg.mechanism.m, cell)));
        runlog::append_csv_row(out_dir / "summary.csv", kSummaryHeader,
                               summary_row(cfg, epsilon, cfg.mechanism.m, cell, digest));
        std::cout << "epsilon=" << epsilon_key(epsilon)
                  << " accuracy=" << cell.outcome.report.accuracy
                  << " empirical_epsilon=" << cell.outcome.report.empirical_epsilon << "\n";
    }
    std::cout << "wrote " << (out_dir / "summary.csv").string() << "\n";
    return kExitOk;
}

corpus::ExemplarSet dataset_with_count(const config::RunConfig& cfg, std::size_t count) {
    if (cfg.task.synthetic) {
        config::TaskConfig task = cfg.task;
        task.synthetic_n = count;
        return config::resolve_dataset(task);
    }
    corpus::ExemplarSet full = config::resolve_dataset(cfg.task);
    if (count > full.size())
        throw InvalidArgumentError("sweep exemplar_count exceeds dataset size");
    full.items.resize(count);
    full.validate();
    return full;
}

int cmd_sweep(const config::RunConfig& cfg) {
    const std::string digest = cfg.digest();
    const fs::path out_dir = fs::path(cfg.output.dir) / digest;
    fs::create_directories(out_dir);
    runlog::write_json(out_dir / "config.json", cfg.to_json());

    const corpus::ExemplarSet base = config::resolve_dataset(cfg.task);
    std::vector<std::size_t> ms = cfg.sweep.ensemble_sizes;
    if (ms.empty()) ms = {cfg.mechanism.m};
    std::vector<std::size_t> counts = cfg.sweep.exemplar_counts;
    if (counts.empty()) counts = {base.size()};
    const std::size_t reruns = std::max<std::size_t>(1, cfg.sweep.reruns);

    const std::size_t declared =
        cfg.mechanism.epsilons.size() * ms.size() * counts.size() * reruns;
    std::cout << "sweep cells: " << declared << "\n";

    static const std::vector<std::string> kSweepHeader = {
        "config_digest", "version", "mode", "epsilon", "m", "exemplar_count",
        "rerun", "n_trials", "accuracy", "empirical_epsilon", "ci_low", "ci_high",
        "threshold", "seed"};

    std::size_t completed = 0;
    for (std::size_t count : counts) {
        const corpus::ExemplarSet dataset = dataset_with_count(cfg, count);
        for (std::size_t m : ms) {
            for (double epsilon : cfg.mechanism.epsilons) {
                for (std::size_t rerun = 0; rerun < reruns; ++rerun) {
                    const std::string key = "eps_" + epsilon_key(epsilon) + "_m" +
                                            std::to_string(m) + "_n" +
                                            std::to_string(count) + "_r" +
                                            std::to_string(rerun);
                    const fs::path cell_dir = out_dir / "cells" / key;
                    if (fs::exists(cell_dir / "report.json")) {
                        std::cout << "skip " << key << " (already complete)\n";
                        ++completed;
                        continue;
                    }
                    config::RunConfig cell_cfg = cfg;
                    cell_cfg.mechanism.m = m;
                    const std::uint64_t seed = cfg.audit.seed + rerun;
                    const ResolvedRun run = resolve(cell_cfg);
                    CellResult cell = run_cell(cell_cfg, run, dataset, epsilon, m, seed);
                    cell.outcome.report.config_digest = digest;

                    fs::create_directories(cell_dir);
                    runlog::write_trials_jsonl(cell_dir / "trials.jsonl",
                                               cell.outcome.trials,
                                               cfg.output.log_aggregates, digest);
                    nlohmann::json extras = report_extras(cell_cfg, epsilon, m, cell);
                    extras["exemplar_count"] = count;
                    extras["rerun"] = rerun;
                    runlog::write_json(cell_dir / "report.json",
                                       runlog::report_to_json(cell.outcome.report, extras));
                    const auto& r = cell.outcome.report;
                    runlog::append_csv_row(
                        out_dir / "sweep_summary.csv", kSweepHeader,
                        {digest, kVersion, mechanisms::to_string(cfg.mechanism.mode),
                         epsilon_key(epsilon), std::to_string(m), std::to_string(count),
                         std::to_string(rerun), std::to_string(r.n_trials),
                         runlog::format_double(r.accuracy),
                         runlog::format_double(r.empirical_epsilon),
                         runlog::format_double(r.ci_low), runlog::format_double(r.ci_high),
                         runlog::format_double(r.threshold), std::to_string(r.seed)});
                    ++completed;
                    std::cout << key << " accuracy=" << r.accuracy << "\n";
                }
            }
        }

        if (cfg.sweep.utility) {
            // Task-utility measurement per (m, epsilon) at this exemplar count.
            const corpus::ExemplarSet eval_set =
                cfg.task.task_kind == corpus::TaskKind::classification
                    ? corpus::synthetic_classification_set(cfg.task.synthetic_seed + 1000,
                                                           cfg.sweep.eval_n)
                    : corpus::synthetic_generation_set(cfg.task.synthetic_seed + 1000,
                                                       cfg.sweep.eval_n);
            std::vector<backends::TaskOracle::Entry> truth;
            for (const auto& e : eval_set.items) truth.push_back({e.input, e.label});
            backends::TaskOracle oracle(truth, cfg.generator.task_accuracy,
                                        cfg.attack.common_label, cfg.generator.seed);
            auto embedder = config::make_embedder(cfg);
            static const std::vector<std::string> kUtilityHeader = {
                "metric", "mode", "epsilon", "value", "n_queries",
                "seed",   "m",    "exemplar_count", "config_digest", "version"};
            for (std::size_t m : ms) {
                mechanisms::MechanismConfig mech = config::make_mechanism(
                    cfg.mechanism, cfg.mechanism.epsilons.front(), dataset.size());
                mech.m = m;
                metrics::SweepSettings settings;
                settings.epsilons = cfg.mechanism.epsilons;
                const auto reports =
                    metrics::utility_sweep(dataset, eval_set, settings, mech, oracle,
                                           embedder.get(), cfg.audit.seed);
                for (const auto& u : reports) {
                    runlog::append_csv_row(
                        out_dir / "utility.csv", kUtilityHeader,
                        {u.metric, metrics::to_string(u.mode), epsilon_key(u.epsilon),
                         runlog::format_double(u.value), std::to_string(u.n_queries),
                         std::to_string(cfg.audit.seed), std::to_string(m),
                         std::to_string(count), digest, kVersion});
                }
            }
        }
    }
    std::cout << "completed " << completed << "/" << declared << " cells\n";
    return kExitOk;
}

int cmd_defense_eval(const config::RunConfig& cfg) {
    const std::string digest = cfg.digest();
    const fs::path out_dir = fs::path(cfg.output.dir) / digest;
    fs::create_directories(out_dir);
    runlog::write_json(out_dir / "config.json", cfg.to_json());

    const ResolvedRun run = resolve(cfg);
    const auto judge = config::make_judge(cfg, run.dataset);
    const attack::AttackQuery injection = attack::build_query(
        attack::Strategy::prompt_injection, run.canary_value, cfg.task.task_kind);

    static const std::vector<std::string> kHeader = {
        "config_digest", "version", "attack",  "level",  "n_trials",
        "accuracy",      "empirical_epsilon",  "ci_low", "ci_high", "seed"};

    nlohmann::json cells = nlohmann::json::array();
    for (const defense::Level level :
         {defense::Level::L0, defense::Level::L1, defense::Level::L2, defense::Level::L3}) {
        for (const bool is_injection : {false, true}) {
            const attack::AttackQuery& q = is_injection ? injection : run.query;
            const defense::DefenseLevel d = defense::make_defense_level(level);
            const audit::Pipeline pipeline = audit::make_defended_pipeline(
                q.text, d, *run.generator, d.uses_output_filter ? judge.get() : nullptr,
                "", config::resolve_render_options(cfg.task));

            audit::DetectionRule rule;
            rule.kind = audit::RuleKind::text_match;
            rule.threshold = 0.5;
            rule.rare_label = run.query.rare_label;
            rule.canary_text = run.canary_value.text;

            audit::AuditOptions options;
            options.workers = cfg.output.workers;
            options.max_failure_fraction = cfg.audit.max_failure_fraction;
            auto outcome = audit::run_audit(run.dataset, run.canary_value, pipeline, rule,
                                            cfg.audit.n_trials, cfg.audit.seed, options);
            outcome.report.config_digest = digest;

            const std::string attack_name =
                is_injection ? "prompt_injection" : attack::to_string(cfg.attack.strategy);
            const auto& r = outcome.report;
            runlog::append_csv_row(
                out_dir / "defense_eval.csv", kHeader,
                {digest, kVersion, attack_name, defense::to_string(level),
                 std::to_string(r.n_trials), runlog::format_double(r.accuracy),
                 runlog::format_double(r.empirical_epsilon),
                 runlog::format_double(r.ci_low), runlog::format_double(r.ci_high),
                 std::to_string(r.seed)});
            cells.push_back({{"attack", attack_name},
                             {"level", defense::to_string(level)},
                             {"accuracy", r.accuracy},
                             {"empirical_epsilon", r.empirical_epsilon}});
            std::cout << attack_name << " @ " << defense::to_string(level)
                      << " accuracy=" << r.accuracy << "\n";
        }
    }
    runlog::write_json(out_dir / "defense_eval.json",
                       {{"config_digest", digest},
                        {"version", kVersion},
                        {"seed", cfg.audit.seed},
                        {"cells", cells}});
    return kExitOk;
}

int cmd_validate(const config::RunConfig& cfg) {
    cfg.validate();
    const ResolvedRun run = resolve(cfg);  // exercises dataset/canary/templates
    std::cout << "config ok; digest=" << cfg.digest() << "; dataset size "
              << run.dataset.size() << "; canary kind "
              << canary::to_string(run.canary_value.kind) << "\n";
    if (cfg.generator.kind == "http_chat") {
        const std::string reply =
            run.generator->generate("", "Health check: reply with the word ok.");
        std::cout << "backend health check replied: " << text::trim(reply).substr(0, 40)
                  << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Black-box privacy auditing for private in-context learning"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Overrides ov;
    CLI::App* audit_cmd = app.add_subcommand("audit", "Calibrate and run a canary audit");
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Cross-product audit grid (epsilon, m, exemplars, reruns)");
    CLI::App* defense_cmd =
        app.add_subcommand("defense-eval", "Audit the heuristic defense ladder L0-L3");
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Validate a config (plus backend health check)");
    for (CLI::App* cmd : {audit_cmd, sweep_cmd, defense_cmd, validate_cmd})
        add_common_flags(cmd, ov);

    CLI11_PARSE(app, argc, argv);

    config::RunConfig cfg;
    try {
        cfg = load_config(ov);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (audit_cmd->parsed()) return cmd_audit(cfg);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg);
        if (defense_cmd->parsed()) return cmd_defense_eval(cfg);
        if (validate_cmd->parsed()) return cmd_validate(cfg);
    } catch (const InvalidArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "audit aborted: " << e.what() << "\n";
        return kExitAbort;
    }
    return kExitOk;
}
