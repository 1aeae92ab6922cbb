#include "ctxaudit/attack.hpp"

#include "ctxaudit/error.hpp"
#include "ctxaudit/resources.hpp"
#include "ctxaudit/text.hpp"

namespace ctxaudit::attack {

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::input_output: return "input_output";
        case Strategy::if_then_explicit: return "if_then_explicit";
        case Strategy::if_then_not_explicit: return "if_then_not_explicit";
        case Strategy::optimized: return "optimized";
        case Strategy::prompt_injection: return "prompt_injection";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "input_output") return Strategy::input_output;
    if (s == "if_then_explicit") return Strategy::if_then_explicit;
    if (s == "if_then_not_explicit") return Strategy::if_then_not_explicit;
    if (s == "optimized") return Strategy::optimized;
    if (s == "prompt_injection") return Strategy::prompt_injection;
    throw InvalidArgumentError("unknown attack strategy: " + s);
}

namespace {

std::string template_name(Strategy s, corpus::TaskKind task) {
    const bool gen = task == corpus::TaskKind::generation;
    switch (s) {
        case Strategy::input_output:
            return "templates/input_output.txt";
        case Strategy::if_then_explicit:
            return gen ? "templates/if_then_explicit_generation.txt"
                       : "templates/if_then_explicit.txt";
        case Strategy::if_then_not_explicit:
            if (gen)
                throw InvalidArgumentError(
                    "if_then_not_explicit targets label output; unsupported for generation");
            return "templates/if_then_not_explicit.txt";
        case Strategy::optimized:
            if (gen)
                throw InvalidArgumentError(
                    "optimized query outputs 1/0 labels; unsupported for generation");
            return "templates/optimized.txt";
        case Strategy::prompt_injection:
            return "templates/prompt_injection.txt";
    }
    throw InvalidArgumentError("unknown strategy");
}

bool embeds_canary(Strategy s) {
    return s == Strategy::input_output || s == Strategy::if_then_explicit ||
           s == Strategy::optimized;
}

}  // namespace

AttackQuery build_query(Strategy strategy, const canary::Canary& c,
                        corpus::TaskKind task_kind, const BuildOptions& options) {
    if (embeds_canary(strategy) && c.text.empty())
        throw InvalidArgumentError("strategy requires a canary with non-empty text");
    if (options.rare_label == options.common_label)
        throw InvalidArgumentError("rare and common labels must differ");

    AttackQuery q;
    q.strategy = strategy;
    q.template_text = resources::load(template_name(strategy, task_kind), options.resource_dir);
    q.text = q.template_text;
    if (embeds_canary(strategy))
        q.text = text::substitute(q.text, "{canary}", c.text);
    q.text = text::substitute(q.text, "{alt}", options.generation_alternative);

    if (task_kind == corpus::TaskKind::generation &&
        strategy != Strategy::prompt_injection) {
        // Generation attacks distinguish "echo the canary" from the fixed
        // alternative rather than class labels.
        q.rare_label = c.text;
        q.common_label = options.generation_alternative;
    } else {
        q.rare_label = options.rare_label;
        q.common_label = options.common_label;
    }
    return q;
}

}  // namespace ctxaudit::attack
