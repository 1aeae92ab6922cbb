#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ctxaudit::resources {

// Text resources (query templates, defense prompts, the false-fact list)
// live under resources/ in the repository and are embedded into the binary
// at build time. An override directory lets operators swap any of them at
// runtime without rebuilding; names are repo-relative, e.g.
// "templates/input_output.txt".

// Embedded content; throws InvalidArgumentError for unknown names.
std::string_view builtin(std::string_view name);

// Override-aware lookup: reads override_dir/name when it exists, otherwise
// returns the embedded copy. A single trailing newline (a file artifact,
// not template content) is stripped.
std::string load(std::string_view name, const std::filesystem::path& override_dir = {});

// false_facts.txt split into its 100 statements.
std::vector<std::string> false_facts(const std::filesystem::path& override_dir = {});

}  // namespace ctxaudit::resources
