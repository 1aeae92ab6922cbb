#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxaudit/attack.hpp"
#include "ctxaudit/audit.hpp"
#include "ctxaudit/backends.hpp"
#include "ctxaudit/canary.hpp"
#include "ctxaudit/corpus.hpp"
#include "ctxaudit/defense.hpp"
#include "ctxaudit/mechanisms.hpp"

namespace ctxaudit::config {

struct TaskConfig {
    std::string dataset_path;  // JSONL file; empty when synthetic is used
    corpus::TaskKind task_kind = corpus::TaskKind::classification;
    bool synthetic = true;
    std::size_t synthetic_n = 20;
    std::uint64_t synthetic_seed = 7;
    // Prompt field names; empty means the task-kind defaults
    // (Sentence/Label, Dialogue/Summary).
    std::string input_field;
    std::string label_field;
};

corpus::RenderOptions resolve_render_options(const TaskConfig& task);

struct CanaryConfig {
    canary::Kind kind = canary::Kind::hex;
    std::uint64_t seed = 1;
    std::size_t byte_count = 32;        // hex
    std::size_t token_count = 16;       // unigram
    std::size_t false_fact_index = 0;   // false_fact
    std::string label = "1";
};

struct AttackConfig {
    attack::Strategy strategy = attack::Strategy::if_then_explicit;
    std::string rare_label = "1";
    std::string common_label = "0";
    std::string generation_alternative = "The weather is pleasant today.";
    std::string resource_dir;  // optional template override directory
};

struct DefenseConfig {
    defense::Level level = defense::Level::L0;
    std::string judge = "substring";  // "substring" or "http_chat"
    std::size_t judge_min_overlap = 20;
};

struct MechanismBlock {
    mechanisms::Mode mode = mechanisms::Mode::RNM;
    std::size_t m = 4;
    std::vector<double> epsilons = {1.0};
    double delta = 0.0;  // 0 means the 1/(10*|D|) default
    double clip_bound_B = 1.0;
    double clip_cap_C = 1.0;
    std::vector<std::string> keyword_vocab;
    std::size_t top_k = 5;
};

struct AuditBlock {
    std::size_t n_trials = 400;
    std::size_t calibration_trials = 50;
    std::uint64_t seed = 1;
    audit::RuleKind rule = audit::RuleKind::rare_class_noisy_count;
    bool on_aggregate = true;
    double max_failure_fraction = 0.10;
};

struct GeneratorConfig {
    std::string kind = "scripted";  // scripted|injection_aware|constant|task_oracle|http_chat
    // scripted / injection_aware / task_oracle
    double detection_rate = 1.0;
    double false_positive_rate = 0.0;
    bool obeys_prompt_defenses = true;
    double task_accuracy = 1.0;
    std::uint64_t seed = 0;
    std::string constant_output = "None";
    // http_chat
    std::string model_id;
    std::string base_url;
    std::string api_key_env = "CTXAUDIT_API_KEY";
    double temperature = 0.0;
    int max_tokens = 16;
    int max_retries = 3;
    int timeout_ms = 30000;
    std::size_t rate_limit_requests = 10;
    int rate_limit_interval_ms = 1000;
};

struct EmbedderConfig {
    std::string kind = "hashed";  // hashed|http_embed|none
    std::size_t dimension = 256;
    std::uint64_t seed = 0;
    std::string model_id;
    std::string base_url;
    std::string api_key_env = "CTXAUDIT_API_KEY";
};

struct SweepBlock {
    std::vector<std::size_t> ensemble_sizes;   // defaults to {mechanism.m}
    std::vector<std::size_t> exemplar_counts;  // defaults to {|D|}
    std::size_t reruns = 1;
    bool utility = false;
    std::size_t eval_n = 20;  // synthetic eval queries for --utility
};

struct OutputBlock {
    std::string dir = "runs";
    std::size_t workers = 1;
    bool log_aggregates = false;
};

// The whole run configuration: validated up front, digested for provenance,
// and stamped onto every output artifact.
struct RunConfig {
    TaskConfig task;
    CanaryConfig canary;
    AttackConfig attack;
    DefenseConfig defense;
    MechanismBlock mechanism;
    AuditBlock audit;
    GeneratorConfig generator;
    EmbedderConfig embedder;
    SweepBlock sweep;
    OutputBlock output;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    // Field-level validation; throws InvalidArgumentError with the offending
    // field. Checks backend credentials before any network call.
    void validate() const;

    // FNV-1a 64 over the canonical JSON, as 16 hex chars.
    std::string digest() const;
};

// --- resolution helpers ------------------------------------------------------

corpus::ExemplarSet resolve_dataset(const TaskConfig& task);
canary::Canary resolve_canary(const CanaryConfig& cfg, const corpus::ExemplarSet& dataset,
                              corpus::TaskKind task_kind);
attack::AttackQuery resolve_attack(const AttackConfig& cfg, const canary::Canary& c,
                                   corpus::TaskKind task_kind);
double resolve_delta(const MechanismBlock& mech, std::size_t dataset_size);

mechanisms::MechanismConfig make_mechanism(const MechanismBlock& mech, double epsilon,
                                           std::size_t dataset_size);

std::unique_ptr<backends::GeneratorBackend> make_generator(
    const RunConfig& cfg, const canary::Canary& c, const attack::AttackQuery& query);
std::unique_ptr<backends::EmbedderBackend> make_embedder(const RunConfig& cfg);
std::unique_ptr<backends::GeneratorBackend> make_judge(const RunConfig& cfg,
                                                       const corpus::ExemplarSet& dataset);

}  // namespace ctxaudit::config
