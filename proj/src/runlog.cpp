#include "ctxaudit/runlog.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ctxaudit/error.hpp"
#include "ctxaudit/version.hpp"

namespace ctxaudit::runlog {

nlohmann::json json_number_or_inf(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

nlohmann::json trial_to_json(const audit::AuditTrial& trial, bool log_aggregates,
                             const std::string& config_digest) {
    nlohmann::json j{{"trial_index", trial.trial_index},
                     {"coin", trial.coin},
                     {"released_text", trial.released_text},
                     {"statistic", trial.statistic},
                     {"guess", trial.guess},
                     {"correct", trial.correct},
                     {"seed", trial.seed},
                     {"version", kVersion}};
    if (!config_digest.empty()) j["config_digest"] = config_digest;
    if (trial.replaced_index)
        j["replaced_index"] = *trial.replaced_index;
    else
        j["replaced_index"] = nullptr;
    if (trial.failed) {
        j["failed"] = true;
        j["error"] = trial.error;
    }
    if (!trial.released.histogram.noisy_counts.empty())
        j["released_aggregate"] = {{"noisy_counts", trial.released.histogram.noisy_counts},
                                   {"counts", trial.released.histogram.counts},
                                   {"unparseable", trial.released.histogram.unparseable}};
    if (log_aggregates && !trial.released.noisy_mean.empty())
        j["released_aggregate"] = {{"noisy_mean", trial.released.noisy_mean}};
    if (!trial.released.noisy_keywords.empty())
        j["released_aggregate"] = {{"noisy_keywords", trial.released.noisy_keywords},
                                   {"keywords", trial.released.released_keywords}};
    return j;
}

void write_trials_jsonl(const std::filesystem::path& path,
                        const std::vector<audit::AuditTrial>& trials, bool log_aggregates,
                        const std::string& config_digest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    for (const auto& trial : trials)
        out << trial_to_json(trial, log_aggregates, config_digest).dump() << "\n";
}

nlohmann::json report_to_json(const audit::AuditReport& report,
                              const nlohmann::json& extras) {
    nlohmann::json j{{"n_trials", report.n_trials},
                     {"n_failed", report.n_failed},
                     {"n_correct", report.n_correct},
                     {"accuracy", report.accuracy},
                     {"empirical_epsilon", report.empirical_epsilon},
                     {"ci_low", report.ci_low},
                     {"ci_high", report.ci_high},
                     {"threshold", report.threshold},
                     {"config_digest", report.config_digest},
                     {"seed", report.seed},
                     {"version", kVersion}};
    for (const auto& [key, value] : extras.items()) j[key] = value;
    return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << doc.dump(2) << "\n";
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += "\"";
    return quoted;
}

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void append_csv_row(const std::filesystem::path& path,
                    const std::vector<std::string>& header,
                    const std::vector<std::string>& row) {
    if (header.size() != row.size())
        throw InvalidArgumentError("csv row width does not match header");
    const bool need_header =
        !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open for writing: " + path.string());
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << csv_field(fields[i]);
        }
        out << "\n";
    };
    if (need_header) emit(header);
    emit(row);
}

}  // namespace ctxaudit::runlog
