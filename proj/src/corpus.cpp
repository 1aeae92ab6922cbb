#include "ctxaudit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"

namespace ctxaudit::corpus {

const char* to_string(TaskKind k) {
    return k == TaskKind::classification ? "classification" : "generation";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification") return TaskKind::classification;
    if (s == "generation") return TaskKind::generation;
    throw InvalidArgumentError("unknown task_kind: " + s);
}

void ExemplarSet::validate() const {
    if (items.empty()) throw InvalidArgumentError("exemplar set is empty");
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].input.empty())
            throw InvalidArgumentError("exemplar " + std::to_string(i) + " has empty input");
        if (task_kind == TaskKind::classification && items[i].label.empty())
            throw InvalidArgumentError("exemplar " + std::to_string(i) + " has empty label");
    }
    if (task_kind == TaskKind::classification) {
        std::set<std::string> distinct(label_space.begin(), label_space.end());
        if (distinct.size() < 2)
            throw InvalidArgumentError("classification label space needs >= 2 distinct labels");
        for (std::size_t i = 0; i < items.size(); ++i)
            if (!distinct.count(items[i].label))
                throw InvalidArgumentError("exemplar " + std::to_string(i) +
                                           " label not in label space: " + items[i].label);
    }
}

RenderOptions RenderOptions::defaults_for(TaskKind k) {
    if (k == TaskKind::classification) return {"Sentence", "Label"};
    return {"Dialogue", "Summary"};
}

std::string PromptAssembly::system_text() const {
    std::string out;
    if (!system_preamble.empty()) {
        out += system_preamble;
        out += "\n\n";
    }
    out += "### system_info\n";
    out += exemplar_block;
    return out;
}

ExemplarSet load_exemplars(const std::filesystem::path& path, TaskKind task_kind) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open exemplar file: " + path.string());

    ExemplarSet set;
    set.task_kind = task_kind;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what(),
                             line_no);
        }
        if (!record.is_object() || !record.contains("input") || !record.contains("label") ||
            !record["input"].is_string() || !record["label"].is_string()) {
            throw ParseError("line " + std::to_string(line_no) +
                                 ": record must be an object with string \"input\" and \"label\"",
                             line_no);
        }
        set.items.push_back({record["input"].get<std::string>(),
                             record["label"].get<std::string>()});
    }
    if (set.items.empty()) throw ParseError("empty dataset: " + path.string());

    if (task_kind == TaskKind::classification) {
        std::set<std::string> labels;
        for (const auto& e : set.items) labels.insert(e.label);
        set.label_space.assign(labels.begin(), labels.end());
    }
    set.validate();
    return set;
}

void write_exemplars(const ExemplarSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    for (const auto& e : set.items) {
        nlohmann::json record{{"input", e.input}, {"label", e.label}};
        out << record.dump() << "\n";
    }
}

PromptAssembly render_prompt(const ExemplarSet& exemplars, const std::string& query,
                             const std::string& preamble,
                             const RenderOptions& options) {
    exemplars.validate();
    std::string block;
    for (const auto& e : exemplars.items) {
        block += options.input_field;
        block += ": ";
        block += e.input;
        block += "\n";
        block += options.label_field;
        block += ": ";
        block += e.label;
        block += "\n\n";
    }
    return PromptAssembly{preamble, block, query};
}

PromptAssembly render_prompt(const ExemplarSet& exemplars, const std::string& query,
                             const std::string& preamble) {
    return render_prompt(exemplars, query, preamble,
                         RenderOptions::defaults_for(exemplars.task_kind));
}

namespace {

// Pronounceable pseudo-word; distinct marker words give every synthetic
// record a unigram token.
std::string pseudo_word(rng::Engine& eng, std::size_t syllables) {
    static constexpr char consonants[] = "bcdfgklmnprstvz";
    static constexpr char vowels[] = "aeiou";
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w += consonants[eng.below(sizeof(consonants) - 1)];
        w += vowels[eng.below(sizeof(vowels) - 1)];
    }
    return w;
}

std::string unique_marker(rng::Engine& eng, std::set<std::string>& used) {
    for (;;) {
        std::string w = pseudo_word(eng, 3);
        if (used.insert(w).second) return w;
    }
}

}  // namespace

ExemplarSet synthetic_classification_set(std::uint64_t seed, std::size_t n) {
    if (n == 0) throw InvalidArgumentError("synthetic set size must be >= 1");
    static const std::vector<std::string> subjects = {
        "the movie", "the film", "the plot",   "the acting",  "the script",
        "the ending", "the cast", "the pacing", "the dialogue", "the soundtrack"};
    static const std::vector<std::string> opinions = {
        "breathtaking", "tedious", "delightful", "forgettable", "mesmerizing",
        "clumsy",       "superb",  "dull"};

    rng::Engine eng(seed);
    std::set<std::string> used;
    ExemplarSet set;
    set.task_kind = TaskKind::classification;
    set.label_space = {"0", "1"};
    for (std::size_t i = 0; i < n; ++i) {
        const std::string marker = unique_marker(eng, used);
        const bool subjective = (i % 2 == 1);
        std::ostringstream input;
        if (subjective) {
            input << subjects[eng.below(subjects.size())] << " of " << marker << " felt "
                  << opinions[eng.below(opinions.size())] << " to me";
        } else {
            input << marker << " runs " << (70 + eng.below(90)) << " minutes and premiered in "
                  << (1950 + eng.below(70));
        }
        set.items.push_back({input.str(), subjective ? "1" : "0"});
    }
    set.validate();
    return set;
}

ExemplarSet synthetic_generation_set(std::uint64_t seed, std::size_t n) {
    if (n == 0) throw InvalidArgumentError("synthetic set size must be >= 1");
    static const std::vector<std::string> actions = {
        "meet for lunch", "review the draft", "book the venue", "call the client",
        "plan the trip",  "fix the report"};
    static const std::vector<std::string> days = {"monday",   "tuesday", "wednesday",
                                                  "thursday", "friday"};

    rng::Engine eng(seed);
    std::set<std::string> used;
    ExemplarSet set;
    set.task_kind = TaskKind::generation;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string marker = unique_marker(eng, used);
        const std::string& action = actions[eng.below(actions.size())];
        const std::string& day = days[eng.below(days.size())];
        std::ostringstream input;
        input << "alice: did you hear about " << marker << "? bob: yes, we should " << action
              << " on " << day << ". alice: sounds good.";
        std::ostringstream summary;
        summary << "alice and bob agree to " << action << " on " << day << " regarding "
                << marker << ".";
        set.items.push_back({input.str(), summary.str()});
    }
    set.validate();
    return set;
}

}  // namespace ctxaudit::corpus
