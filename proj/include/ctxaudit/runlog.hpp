#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxaudit/audit.hpp"

namespace ctxaudit::runlog {

// One trial as a JSONL line, stamped with the config digest and toolkit
// version. Keys are sorted and floats use shortest round-trip formatting,
// so identical trials serialize to identical bytes.
nlohmann::json trial_to_json(const audit::AuditTrial& trial, bool log_aggregates,
                             const std::string& config_digest = {});

void write_trials_jsonl(const std::filesystem::path& path,
                        const std::vector<audit::AuditTrial>& trials, bool log_aggregates,
                        const std::string& config_digest = {});

// Report document with provenance stamps (digest, version, seed) plus any
// caller-supplied extras (mode, epsilon, calibration accuracy, ...).
nlohmann::json report_to_json(const audit::AuditReport& report,
                              const nlohmann::json& extras = nlohmann::json::object());

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// Appends one CSV row, writing the header first when the file is new/empty.
void append_csv_row(const std::filesystem::path& path,
                    const std::vector<std::string>& header,
                    const std::vector<std::string>& row);

std::string csv_field(const std::string& value);
std::string format_double(double value);
nlohmann::json json_number_or_inf(double value);

}  // namespace ctxaudit::runlog
