#pragma once

#include <filesystem>
#include <string>

#include "ctxaudit/backends.hpp"
#include "ctxaudit/corpus.hpp"

namespace ctxaudit::defense {

enum class Level { L0, L1, L2, L3 };

const char* to_string(Level level);
Level level_from_string(const std::string& s);

// One rung of the heuristic defense ladder. L0 is undefended; L1/L2 prepend
// increasingly strong refusal text to the system preamble; L3 filters model
// outputs through an LLM judge instead of editing the prompt.
struct DefenseLevel {
    Level level = Level::L0;
    std::string system_prompt_suffix;
    bool uses_output_filter = false;
};

DefenseLevel make_defense_level(Level level,
                                const std::filesystem::path& resource_dir = {});

// Prepends the level's defense text to the assembly's system preamble.
// Only prompt-level defenses are valid here; L3 throws InvalidArgumentError.
corpus::PromptAssembly apply_prompt_defense(const corpus::PromptAssembly& assembly,
                                            const DefenseLevel& level);

enum class Verdict { Attack, Safe };

struct LeakVerdict {
    Verdict verdict = Verdict::Safe;
    bool unparseable = false;  // judge answered neither token; treated Safe
};

// Renders the judge prompt with the system prompt and model output, queries
// the judge, and parses the {"Attack","Safe"} token contract.
LeakVerdict llm_leak_filter(const std::string& system_prompt, const std::string& model_output,
                            backends::GeneratorBackend& judge,
                            const std::filesystem::path& resource_dir = {});

// The sentinel that replaces an output the L3 filter flags.
inline constexpr const char* kRefusalSentinel = "None";

}  // namespace ctxaudit::defense
