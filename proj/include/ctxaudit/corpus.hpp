#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctxaudit::corpus {

enum class TaskKind { classification, generation };

const char* to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

// One (input, label) demonstration.
struct Exemplar {
    std::string input;
    std::string label;

    friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

// An ordered private dataset of exemplars. Immutable by convention after
// construction/validation; audit trials copy it rather than mutate it.
struct ExemplarSet {
    std::vector<Exemplar> items;
    TaskKind task_kind = TaskKind::classification;
    std::vector<std::string> label_space;  // classification only, sorted

    std::size_t size() const { return items.size(); }

    // Enforces: non-empty, non-empty inputs, and for classification a
    // >=2-entry label space covering every label.
    void validate() const;

    friend bool operator==(const ExemplarSet&, const ExemplarSet&) = default;
};

// Field names used when rendering exemplars into a prompt block.
struct RenderOptions {
    std::string input_field;
    std::string label_field;

    static RenderOptions defaults_for(TaskKind k);
};

// A fully assembled prompt: the defense ladder edits system_preamble, the
// exemplar block carries the (possibly canaried) dataset, and user_query is
// the attacker- or task-supplied message.
struct PromptAssembly {
    std::string system_preamble;
    std::string exemplar_block;
    std::string user_query;

    // System message actually sent to a generator: preamble followed by the
    // exemplar block under the "### system_info" header the query templates
    // reference.
    std::string system_text() const;
};

// JSONL: one object per line with keys "input" and "label".
ExemplarSet load_exemplars(const std::filesystem::path& path, TaskKind task_kind);
void write_exemplars(const ExemplarSet& set, const std::filesystem::path& path);

PromptAssembly render_prompt(const ExemplarSet& exemplars, const std::string& query,
                             const std::string& preamble,
                             const RenderOptions& options);
PromptAssembly render_prompt(const ExemplarSet& exemplars, const std::string& query,
                             const std::string& preamble);

// Seeded offline fixtures. Each record carries a distinct marker word so
// the sets contain unigram tokens.
ExemplarSet synthetic_classification_set(std::uint64_t seed, std::size_t n);
ExemplarSet synthetic_generation_set(std::uint64_t seed, std::size_t n);

}  // namespace ctxaudit::corpus
