#include "ctxaudit/config.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"

namespace ctxaudit::config {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgumentError(std::string("config field '") + key + "': " + e.what());
    }
}

double epsilon_from_json(const nlohmann::json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf" || s == "Inf" || s == "infinity" || s == "Infinity")
            return std::numeric_limits<double>::infinity();
        throw InvalidArgumentError("epsilon string must be \"inf\": " + s);
    }
    if (v.is_number()) return v.get<double>();
    throw InvalidArgumentError("epsilon entries must be numbers or \"inf\"");
}

nlohmann::json epsilon_to_json(double epsilon) {
    if (std::isinf(epsilon)) return "inf";
    return epsilon;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    if (j.contains("task")) {
        const auto& t = j.at("task");
        cfg.task.dataset_path = get_or<std::string>(t, "dataset_path", "");
        cfg.task.task_kind = corpus::task_kind_from_string(
            get_or<std::string>(t, "task_kind", "classification"));
        cfg.task.synthetic = get_or<bool>(t, "synthetic", cfg.task.dataset_path.empty());
        cfg.task.synthetic_n = get_or<std::size_t>(t, "synthetic_n", 20);
        cfg.task.synthetic_seed = get_or<std::uint64_t>(t, "synthetic_seed", 7);
        cfg.task.input_field = get_or<std::string>(t, "input_field", "");
        cfg.task.label_field = get_or<std::string>(t, "label_field", "");
    }
    if (j.contains("canary")) {
        const auto& c = j.at("canary");
        cfg.canary.kind = canary::kind_from_string(get_or<std::string>(c, "kind", "hex"));
        cfg.canary.seed = get_or<std::uint64_t>(c, "seed", 1);
        cfg.canary.byte_count = get_or<std::size_t>(c, "byte_count", 32);
        cfg.canary.token_count = get_or<std::size_t>(c, "token_count", 16);
        cfg.canary.false_fact_index = get_or<std::size_t>(c, "false_fact_index", 0);
        cfg.canary.label = get_or<std::string>(c, "label", "1");
    }
    if (j.contains("attack")) {
        const auto& a = j.at("attack");
        cfg.attack.strategy = attack::strategy_from_string(
            get_or<std::string>(a, "strategy", "if_then_explicit"));
        cfg.attack.rare_label = get_or<std::string>(a, "rare_label", "1");
        cfg.attack.common_label = get_or<std::string>(a, "common_label", "0");
        cfg.attack.generation_alternative = get_or<std::string>(
            a, "generation_alternative", cfg.attack.generation_alternative);
        cfg.attack.resource_dir = get_or<std::string>(a, "resource_dir", "");
    }
    if (j.contains("defense")) {
        const auto& d = j.at("defense");
        cfg.defense.level =
            defense::level_from_string(get_or<std::string>(d, "level", "L0"));
        cfg.defense.judge = get_or<std::string>(d, "judge", "substring");
        cfg.defense.judge_min_overlap = get_or<std::size_t>(d, "judge_min_overlap", 20);
    }
    if (j.contains("mechanism")) {
        const auto& m = j.at("mechanism");
        cfg.mechanism.mode =
            mechanisms::mode_from_string(get_or<std::string>(m, "mode", "RNM"));
        cfg.mechanism.m = get_or<std::size_t>(m, "m", 4);
        if (m.contains("epsilons")) {
            cfg.mechanism.epsilons.clear();
            for (const auto& v : m.at("epsilons"))
                cfg.mechanism.epsilons.push_back(epsilon_from_json(v));
        }
        cfg.mechanism.delta = get_or<double>(m, "delta", 0.0);
        cfg.mechanism.clip_bound_B = get_or<double>(m, "clip_bound_B", 1.0);
        cfg.mechanism.clip_cap_C = get_or<double>(m, "clip_cap_C", 1.0);
        cfg.mechanism.keyword_vocab =
            get_or<std::vector<std::string>>(m, "keyword_vocab", {});
        cfg.mechanism.top_k = get_or<std::size_t>(m, "top_k", 5);
    }
    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        cfg.audit.n_trials = get_or<std::size_t>(a, "n_trials", 400);
        cfg.audit.calibration_trials = get_or<std::size_t>(a, "calibration_trials", 50);
        cfg.audit.seed = get_or<std::uint64_t>(a, "seed", 1);
        cfg.audit.rule = audit::rule_kind_from_string(
            get_or<std::string>(a, "rule", "rare_class_noisy_count"));
        cfg.audit.on_aggregate = get_or<bool>(a, "on_aggregate", true);
        cfg.audit.max_failure_fraction = get_or<double>(a, "max_failure_fraction", 0.10);
    }
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        if (b.contains("generator")) {
            const auto& g = b.at("generator");
            cfg.generator.kind = get_or<std::string>(g, "kind", "scripted");
            cfg.generator.detection_rate = get_or<double>(g, "detection_rate", 1.0);
            cfg.generator.false_positive_rate = get_or<double>(g, "false_positive_rate", 0.0);
            cfg.generator.obeys_prompt_defenses =
                get_or<bool>(g, "obeys_prompt_defenses", true);
            cfg.generator.task_accuracy = get_or<double>(g, "task_accuracy", 1.0);
            cfg.generator.seed = get_or<std::uint64_t>(g, "seed", 0);
            cfg.generator.constant_output = get_or<std::string>(g, "constant_output", "None");
            cfg.generator.model_id = get_or<std::string>(g, "model_id", "");
            cfg.generator.base_url = get_or<std::string>(g, "base_url", "");
            cfg.generator.api_key_env =
                get_or<std::string>(g, "api_key_env", "CTXAUDIT_API_KEY");
            cfg.generator.temperature = get_or<double>(g, "temperature", 0.0);
            cfg.generator.max_tokens = get_or<int>(g, "max_tokens", 16);
            cfg.generator.max_retries = get_or<int>(g, "max_retries", 3);
            cfg.generator.timeout_ms = get_or<int>(g, "timeout_ms", 30000);
            cfg.generator.rate_limit_requests =
                get_or<std::size_t>(g, "rate_limit_requests", 10);
            cfg.generator.rate_limit_interval_ms =
                get_or<int>(g, "rate_limit_interval_ms", 1000);
        }
        if (b.contains("embedder")) {
            const auto& e = b.at("embedder");
            cfg.embedder.kind = get_or<std::string>(e, "kind", "hashed");
            cfg.embedder.dimension = get_or<std::size_t>(e, "dimension", 256);
            cfg.embedder.seed = get_or<std::uint64_t>(e, "seed", 0);
            cfg.embedder.model_id = get_or<std::string>(e, "model_id", "");
            cfg.embedder.base_url = get_or<std::string>(e, "base_url", "");
            cfg.embedder.api_key_env =
                get_or<std::string>(e, "api_key_env", "CTXAUDIT_API_KEY");
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        cfg.sweep.ensemble_sizes = get_or<std::vector<std::size_t>>(s, "ensemble_sizes", {});
        cfg.sweep.exemplar_counts =
            get_or<std::vector<std::size_t>>(s, "exemplar_counts", {});
        cfg.sweep.reruns = get_or<std::size_t>(s, "reruns", 1);
        cfg.sweep.utility = get_or<bool>(s, "utility", false);
        cfg.sweep.eval_n = get_or<std::size_t>(s, "eval_n", 20);
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        cfg.output.dir = get_or<std::string>(o, "dir", "runs");
        cfg.output.workers = get_or<std::size_t>(o, "workers", 1);
        cfg.output.log_aggregates = get_or<bool>(o, "log_aggregates", false);
    }
    return cfg;
}

RunConfig RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config file " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json eps = nlohmann::json::array();
    for (double e : mechanism.epsilons) eps.push_back(epsilon_to_json(e));
    return nlohmann::json{
        {"task",
         {{"dataset_path", task.dataset_path},
          {"task_kind", corpus::to_string(task.task_kind)},
          {"synthetic", task.synthetic},
          {"synthetic_n", task.synthetic_n},
          {"synthetic_seed", task.synthetic_seed},
          {"input_field", task.input_field},
          {"label_field", task.label_field}}},
        {"canary",
         {{"kind", canary::to_string(canary.kind)},
          {"seed", canary.seed},
          {"byte_count", canary.byte_count},
          {"token_count", canary.token_count},
          {"false_fact_index", canary.false_fact_index},
          {"label", canary.label}}},
        {"attack",
         {{"strategy", attack::to_string(attack.strategy)},
          {"rare_label", attack.rare_label},
          {"common_label", attack.common_label},
          {"generation_alternative", attack.generation_alternative},
          {"resource_dir", attack.resource_dir}}},
        {"defense",
         {{"level", defense::to_string(defense.level)},
          {"judge", defense.judge},
          {"judge_min_overlap", defense.judge_min_overlap}}},
        {"mechanism",
         {{"mode", mechanisms::to_string(mechanism.mode)},
          {"m", mechanism.m},
          {"epsilons", eps},
          {"delta", mechanism.delta},
          {"clip_bound_B", mechanism.clip_bound_B},
          {"clip_cap_C", mechanism.clip_cap_C},
          {"keyword_vocab", mechanism.keyword_vocab},
          {"top_k", mechanism.top_k}}},
        {"audit",
         {{"n_trials", audit.n_trials},
          {"calibration_trials", audit.calibration_trials},
          {"seed", audit.seed},
          {"rule", audit::to_string(audit.rule)},
          {"on_aggregate", audit.on_aggregate},
          {"max_failure_fraction", audit.max_failure_fraction}}},
        {"backend",
         {{"generator",
           {{"kind", generator.kind},
            {"detection_rate", generator.detection_rate},
            {"false_positive_rate", generator.false_positive_rate},
            {"obeys_prompt_defenses", generator.obeys_prompt_defenses},
            {"task_accuracy", generator.task_accuracy},
            {"seed", generator.seed},
            {"constant_output", generator.constant_output},
            {"model_id", generator.model_id},
            {"base_url", generator.base_url},
            {"api_key_env", generator.api_key_env},
            {"temperature", generator.temperature},
            {"max_tokens", generator.max_tokens},
            {"max_retries", generator.max_retries},
            {"timeout_ms", generator.timeout_ms},
            {"rate_limit_requests", generator.rate_limit_requests},
            {"rate_limit_interval_ms", generator.rate_limit_interval_ms}}},
          {"embedder",
           {{"kind", embedder.kind},
            {"dimension", embedder.dimension},
            {"seed", embedder.seed},
            {"model_id", embedder.model_id},
            {"base_url", embedder.base_url},
            {"api_key_env", embedder.api_key_env}}}}},
        {"sweep",
         {{"ensemble_sizes", sweep.ensemble_sizes},
          {"exemplar_counts", sweep.exemplar_counts},
          {"reruns", sweep.reruns},
          {"utility", sweep.utility},
          {"eval_n", sweep.eval_n}}},
        {"output",
         {{"dir", output.dir},
          {"workers", output.workers},
          {"log_aggregates", output.log_aggregates}}}};
}

void RunConfig::validate() const {
    if (!task.synthetic && task.dataset_path.empty())
        throw InvalidArgumentError("task.dataset_path required when task.synthetic is false");
    if (task.synthetic && task.synthetic_n == 0)
        throw InvalidArgumentError("task.synthetic_n must be >= 1");

    if (canary.kind == canary::Kind::hex && canary.byte_count == 0)
        throw InvalidArgumentError("canary.byte_count must be >= 1");
    if (canary.kind == canary::Kind::unigram && canary.token_count == 0)
        throw InvalidArgumentError("canary.token_count must be >= 1");

    if (attack.rare_label == attack.common_label)
        throw InvalidArgumentError("attack.rare_label must differ from attack.common_label");

    if (mechanism.epsilons.empty())
        throw InvalidArgumentError("mechanism.epsilons must not be empty");
    const std::size_t size_hint = task.synthetic ? task.synthetic_n : 20;
    for (double e : mechanism.epsilons)
        make_mechanism(mechanism, e, size_hint).validate();

    if (audit.n_trials == 0) throw InvalidArgumentError("audit.n_trials must be >= 1");
    if (audit.calibration_trials < 2)
        throw InvalidArgumentError("audit.calibration_trials must be >= 2");
    if (audit.max_failure_fraction < 0.0 || audit.max_failure_fraction > 1.0)
        throw InvalidArgumentError("audit.max_failure_fraction must be in [0,1]");

    if (generator.kind == "http_chat") {
        if (generator.model_id.empty() || generator.base_url.empty())
            throw InvalidArgumentError("http_chat generator needs model_id and base_url");
        backends::resolve_api_key(generator.api_key_env);  // fail before any trial
        if (generator.max_tokens < 1)
            throw InvalidArgumentError("backend.generator.max_tokens must be >= 1");
        if (generator.temperature < 0.0)
            throw InvalidArgumentError("backend.generator.temperature must be >= 0");
    } else if (generator.kind == "scripted" || generator.kind == "injection_aware" ||
               generator.kind == "task_oracle") {
        if (generator.detection_rate < 0.0 || generator.detection_rate > 1.0 ||
            generator.false_positive_rate < 0.0 || generator.false_positive_rate > 1.0)
            throw InvalidArgumentError("scripted rates must be in [0,1]");
    } else if (generator.kind != "constant") {
        throw InvalidArgumentError("unknown backend.generator.kind: " + generator.kind);
    }

    if (embedder.kind == "http_embed") {
        if (embedder.model_id.empty() || embedder.base_url.empty())
            throw InvalidArgumentError("http_embed embedder needs model_id and base_url");
        backends::resolve_api_key(embedder.api_key_env);
    } else if (embedder.kind == "hashed") {
        if (embedder.dimension < 2)
            throw InvalidArgumentError("backend.embedder.dimension must be >= 2");
    } else if (embedder.kind != "none") {
        throw InvalidArgumentError("unknown backend.embedder.kind: " + embedder.kind);
    }
    if (mechanism.mode == mechanisms::Mode::ESA && embedder.kind == "none")
        throw InvalidArgumentError("ESA requires an embedder backend");

    if (output.workers == 0) throw InvalidArgumentError("output.workers must be >= 1");
}

std::string RunConfig::digest() const {
    // The digest identifies the audit semantics; where results are written
    // (and with how many workers) does not change them, so the output block
    // is excluded.
    nlohmann::json canonical = to_json();
    canonical.erase("output");
    const std::uint64_t h = rng::fnv1a(canonical.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

corpus::RenderOptions resolve_render_options(const TaskConfig& task) {
    corpus::RenderOptions render = corpus::RenderOptions::defaults_for(task.task_kind);
    if (!task.input_field.empty()) render.input_field = task.input_field;
    if (!task.label_field.empty()) render.label_field = task.label_field;
    return render;
}

corpus::ExemplarSet resolve_dataset(const TaskConfig& task) {
    if (task.synthetic) {
        return task.task_kind == corpus::TaskKind::classification
                   ? corpus::synthetic_classification_set(task.synthetic_seed,
                                                          task.synthetic_n)
                   : corpus::synthetic_generation_set(task.synthetic_seed, task.synthetic_n);
    }
    return corpus::load_exemplars(task.dataset_path, task.task_kind);
}

canary::Canary resolve_canary(const CanaryConfig& cfg, const corpus::ExemplarSet& dataset,
                              corpus::TaskKind task_kind) {
    canary::Canary c;
    switch (cfg.kind) {
        case canary::Kind::hex:
            c = canary::make_hex_canary(cfg.seed, cfg.byte_count, cfg.label);
            break;
        case canary::Kind::unigram:
            c = canary::make_unigram_canary(dataset, cfg.seed, cfg.token_count, cfg.label);
            break;
        case canary::Kind::false_fact:
            c = canary::make_false_fact_canary(cfg.false_fact_index, cfg.label);
            break;
    }
    // Generation attacks need a known input->output mapping: the target is
    // the canary text itself.
    if (task_kind == corpus::TaskKind::generation) c.label = c.text;
    return c;
}

attack::AttackQuery resolve_attack(const AttackConfig& cfg, const canary::Canary& c,
                                   corpus::TaskKind task_kind) {
    attack::BuildOptions options;
    options.rare_label = cfg.rare_label;
    options.common_label = cfg.common_label;
    options.generation_alternative = cfg.generation_alternative;
    options.resource_dir = cfg.resource_dir;
    return attack::build_query(cfg.strategy, c, task_kind, options);
}

double resolve_delta(const MechanismBlock& mech, std::size_t dataset_size) {
    if (mech.delta > 0.0) return mech.delta;
    return 1.0 / (10.0 * static_cast<double>(std::max<std::size_t>(dataset_size, 1)));
}

mechanisms::MechanismConfig make_mechanism(const MechanismBlock& mech, double epsilon,
                                           std::size_t dataset_size) {
    mechanisms::MechanismConfig config;
    config.mode = mech.mode;
    config.m = mech.m;
    config.epsilon = epsilon;
    config.delta = resolve_delta(mech, dataset_size);
    config.clip_bound_B = mech.clip_bound_B;
    config.clip_cap_C = mech.clip_cap_C;
    config.keyword_vocab = mech.keyword_vocab;
    config.top_k = mech.top_k;
    return config;
}

namespace {

backends::HttpBackendConfig http_config(const GeneratorConfig& g) {
    backends::HttpBackendConfig http;
    http.base_url = g.base_url;
    http.model_id = g.model_id;
    http.api_key_env = g.api_key_env;
    http.temperature = g.temperature;
    http.max_tokens = g.max_tokens;
    http.timeout = std::chrono::milliseconds(g.timeout_ms);
    http.retry.max_retries = g.max_retries;
    http.rate_limiter = std::make_shared<backends::RateLimiter>(
        g.rate_limit_requests, std::chrono::milliseconds(g.rate_limit_interval_ms));
    return http;
}

}  // namespace

std::unique_ptr<backends::GeneratorBackend> make_generator(
    const RunConfig& cfg, const canary::Canary& c, const attack::AttackQuery& query) {
    const GeneratorConfig& g = cfg.generator;
    backends::ScriptedOracleConfig oracle;
    oracle.detection_rate = g.detection_rate;
    oracle.false_positive_rate = g.false_positive_rate;
    oracle.canary_text = c.text;
    oracle.positive_output = query.rare_label;
    oracle.negative_output = query.common_label;
    oracle.seed = g.seed;

    if (g.kind == "scripted")
        return std::make_unique<backends::ScriptedOracle>(oracle);
    if (g.kind == "injection_aware")
        return std::make_unique<backends::InjectionAwareOracle>(oracle,
                                                                g.obeys_prompt_defenses);
    if (g.kind == "constant")
        return std::make_unique<backends::ConstantGenerator>(g.constant_output);
    if (g.kind == "task_oracle") {
        const auto dataset = resolve_dataset(cfg.task);
        std::vector<backends::TaskOracle::Entry> truth;
        for (const auto& e : dataset.items) truth.push_back({e.input, e.label});
        return std::make_unique<backends::TaskOracle>(std::move(truth), g.task_accuracy,
                                                      query.common_label, g.seed);
    }
    if (g.kind == "http_chat")
        return std::make_unique<backends::HttpChatGenerator>(http_config(g));
    throw InvalidArgumentError("unknown backend.generator.kind: " + g.kind);
}

std::unique_ptr<backends::EmbedderBackend> make_embedder(const RunConfig& cfg) {
    const EmbedderConfig& e = cfg.embedder;
    if (e.kind == "none") return nullptr;
    if (e.kind == "hashed")
        return std::make_unique<backends::HashedEmbedder>(e.dimension, e.seed);
    if (e.kind == "http_embed") {
        backends::HttpBackendConfig http;
        http.base_url = e.base_url;
        http.model_id = e.model_id;
        http.api_key_env = e.api_key_env;
        http.rate_limiter = std::make_shared<backends::RateLimiter>(
            cfg.generator.rate_limit_requests,
            std::chrono::milliseconds(cfg.generator.rate_limit_interval_ms));
        return std::make_unique<backends::HttpEmbedder>(http, e.dimension);
    }
    throw InvalidArgumentError("unknown backend.embedder.kind: " + e.kind);
}

std::unique_ptr<backends::GeneratorBackend> make_judge(const RunConfig& cfg,
                                                       const corpus::ExemplarSet& dataset) {
    if (cfg.defense.judge == "substring") {
        std::vector<std::string> secrets;
        for (const auto& e : dataset.items) secrets.push_back(e.input);
        return std::make_unique<backends::SubstringJudge>(std::move(secrets),
                                                          cfg.defense.judge_min_overlap);
    }
    if (cfg.defense.judge == "http_chat") {
        GeneratorConfig g = cfg.generator;
        if (g.kind != "http_chat")
            throw InvalidArgumentError("http_chat judge needs an http_chat generator block");
        return std::make_unique<backends::HttpChatGenerator>(http_config(g));
    }
    throw InvalidArgumentError("unknown defense.judge: " + cfg.defense.judge);
}

}  // namespace ctxaudit::config
