#include "ctxaudit/defense.hpp"

#include "ctxaudit/error.hpp"
#include "ctxaudit/resources.hpp"
#include "ctxaudit/text.hpp"

namespace ctxaudit::defense {

const char* to_string(Level level) {
    switch (level) {
        case Level::L0: return "L0";
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
    }
    return "?";
}

Level level_from_string(const std::string& s) {
    if (s == "L0" || s == "l0") return Level::L0;
    if (s == "L1" || s == "l1") return Level::L1;
    if (s == "L2" || s == "l2") return Level::L2;
    if (s == "L3" || s == "l3") return Level::L3;
    throw InvalidArgumentError("unknown defense level: " + s);
}

DefenseLevel make_defense_level(Level level, const std::filesystem::path& resource_dir) {
    DefenseLevel d;
    d.level = level;
    switch (level) {
        case Level::L0:
            break;
        case Level::L1:
            d.system_prompt_suffix = resources::load("defenses/defense_l1.txt", resource_dir);
            break;
        case Level::L2:
            d.system_prompt_suffix = resources::load("defenses/defense_l2.txt", resource_dir);
            break;
        case Level::L3:
            d.uses_output_filter = true;
            break;
    }
    return d;
}

corpus::PromptAssembly apply_prompt_defense(const corpus::PromptAssembly& assembly,
                                            const DefenseLevel& level) {
    if (level.level == Level::L3)
        throw InvalidArgumentError("L3 acts on outputs, not prompts");
    if (level.system_prompt_suffix.empty()) return assembly;

    corpus::PromptAssembly out = assembly;
    out.system_preamble = level.system_prompt_suffix;
    if (!assembly.system_preamble.empty()) {
        out.system_preamble += "\n";
        out.system_preamble += assembly.system_preamble;
    }
    return out;
}

LeakVerdict llm_leak_filter(const std::string& system_prompt, const std::string& model_output,
                            backends::GeneratorBackend& judge,
                            const std::filesystem::path& resource_dir) {
    std::string prompt = resources::load("defenses/defense_l3_judge.txt", resource_dir);
    prompt = text::substitute(prompt, "{system_prompt}", system_prompt);
    prompt = text::substitute(prompt, "{model_output}", model_output);

    const std::string answer = judge.generate("", prompt);
    const std::string lower = text::lowercase(text::trim(answer));
    const bool says_attack = text::contains(lower, "attack");
    const bool says_safe = text::contains(lower, "safe");
    if (says_attack && !says_safe) return {Verdict::Attack, false};
    if (says_safe && !says_attack) return {Verdict::Safe, false};
    return {Verdict::Safe, true};  // unparseable verdict: recorded, treated Safe
}

}  // namespace ctxaudit::defense
