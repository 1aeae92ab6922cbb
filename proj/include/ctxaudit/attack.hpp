#pragma once

#include <filesystem>
#include <string>

#include "ctxaudit/canary.hpp"
#include "ctxaudit/corpus.hpp"

namespace ctxaudit::attack {

enum class Strategy {
    input_output,
    if_then_explicit,
    if_then_not_explicit,
    optimized,
    prompt_injection,
};

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// A user-query attack. template_text is the raw resource with the {canary}
// placeholder where the strategy embeds the canary verbatim; text is the
// rendered query actually sent.
struct AttackQuery {
    Strategy strategy = Strategy::if_then_explicit;
    std::string template_text;
    std::string text;
    std::string rare_label = "1";
    std::string common_label = "0";
};

struct BuildOptions {
    std::string rare_label = "1";
    std::string common_label = "0";
    // The "different output" the generation if-then variant requests when
    // the canary is absent.
    std::string generation_alternative = "The weather is pleasant today.";
    // Optional runtime override directory for template resources.
    std::filesystem::path resource_dir;
};

// Renders the strategy's template for the task, substituting the canary where
// the strategy requires it verbatim. Unsupported (strategy, task) pairs throw
// InvalidArgumentError.
AttackQuery build_query(Strategy strategy, const canary::Canary& c,
                        corpus::TaskKind task_kind, const BuildOptions& options = {});

}  // namespace ctxaudit::attack
