#include "ctxaudit/metrics.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"
#include "ctxaudit/sampling.hpp"
#include "ctxaudit/text.hpp"

namespace ctxaudit::metrics {

double classification_accuracy(const std::vector<std::string>& predictions,
                               const std::vector<std::string>& references) {
    if (predictions.size() != references.size())
        throw InvalidArgumentError("predictions/references length mismatch");
    if (predictions.empty()) throw InvalidArgumentError("nothing to score");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == references[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double rouge1_f(const std::string& candidate, const std::string& reference) {
    const auto cand = text::tokenize(candidate);
    const auto ref = text::tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    std::map<std::string, std::size_t> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    std::size_t overlap = 0;
    for (const auto& t : cand) {
        auto it = ref_counts.find(t);
        if (it != ref_counts.end() && it->second > 0) {
            ++overlap;
            --it->second;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

const char* to_string(UtilityMode m) {
    switch (m) {
        case UtilityMode::aggregated: return "aggregated";
        case UtilityMode::non_aggregated_full: return "non_aggregated_full";
        case UtilityMode::non_aggregated_share: return "non_aggregated_share";
        case UtilityMode::zero_shot: return "zero_shot";
    }
    return "?";
}

std::string task_query(const corpus::ExemplarSet& dataset, const std::string& input) {
    const auto render = corpus::RenderOptions::defaults_for(dataset.task_kind);
    return render.input_field + ": " + input + "\n" + render.label_field + ": ";
}

namespace {

constexpr std::uint64_t kQueryStream = 17;
constexpr std::uint64_t kShareStream = 29;

double score(const corpus::ExemplarSet& eval_set, const std::vector<std::string>& predictions,
             std::string* metric_name) {
    std::vector<std::string> references;
    references.reserve(eval_set.items.size());
    for (const auto& e : eval_set.items) references.push_back(e.label);

    if (eval_set.task_kind == corpus::TaskKind::classification) {
        *metric_name = "accuracy";
        std::vector<std::string> trimmed;
        trimmed.reserve(predictions.size());
        for (const auto& p : predictions) trimmed.push_back(text::trim(p));
        return classification_accuracy(trimmed, references);
    }
    *metric_name = "rouge1_f";
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        total += rouge1_f(predictions[i], references[i]);
    return total / static_cast<double>(predictions.size());
}

std::string single_context_prediction(const corpus::ExemplarSet& context,
                                      const corpus::ExemplarSet& task_set,
                                      const std::string& query,
                                      backends::GeneratorBackend& generator) {
    corpus::PromptAssembly assembly;
    if (context.items.empty())
        assembly = corpus::PromptAssembly{"", "", query};
    else
        assembly = corpus::render_prompt(context, query, "",
                                         corpus::RenderOptions::defaults_for(task_set.task_kind));
    return generator.generate(assembly.system_text(), assembly.user_query);
}

}  // namespace

std::vector<UtilityReport> utility_sweep(const corpus::ExemplarSet& dataset,
                                         const corpus::ExemplarSet& eval_set,
                                         const SweepSettings& settings,
                                         mechanisms::MechanismConfig mech_template,
                                         backends::GeneratorBackend& generator,
                                         backends::EmbedderBackend* embedder,
                                         std::uint64_t seed) {
    dataset.validate();
    eval_set.validate();
    if (eval_set.task_kind != dataset.task_kind)
        throw InvalidArgumentError("eval set and dataset disagree on task kind");

    const rng::Engine root(seed);
    std::vector<UtilityReport> reports;
    std::string metric_name;

    auto run_queries = [&](const std::function<std::string(const std::string&, std::size_t)>&
                               predict) {
        std::vector<std::string> predictions;
        predictions.reserve(eval_set.items.size());
        for (std::size_t q = 0; q < eval_set.items.size(); ++q)
            predictions.push_back(predict(task_query(dataset, eval_set.items[q].input), q));
        return predictions;
    };

    for (double epsilon : settings.epsilons) {
        mechanisms::MechanismConfig config = mech_template;
        config.epsilon = epsilon;
        auto predictions = run_queries([&](const std::string& query, std::size_t q) {
            return mechanisms::run_dp_icl(dataset, query, config, generator, embedder,
                                          root.child(kQueryStream).child(q).seed())
                .text;
        });
        const double value = score(eval_set, predictions, &metric_name);
        reports.push_back({metric_name, value, eval_set.items.size(), epsilon,
                           UtilityMode::aggregated});
    }

    const double inf = std::numeric_limits<double>::infinity();
    if (settings.include_zero_shot) {
        corpus::ExemplarSet empty;
        empty.task_kind = dataset.task_kind;
        auto predictions = run_queries([&](const std::string& query, std::size_t) {
            return single_context_prediction(empty, dataset, query, generator);
        });
        const double value = score(eval_set, predictions, &metric_name);
        reports.push_back(
            {metric_name, value, eval_set.items.size(), inf, UtilityMode::zero_shot});
    }
    if (settings.include_non_aggregated_full) {
        auto predictions = run_queries([&](const std::string& query, std::size_t) {
            return single_context_prediction(dataset, dataset, query, generator);
        });
        const double value = score(eval_set, predictions, &metric_name);
        reports.push_back({metric_name, value, eval_set.items.size(), inf,
                           UtilityMode::non_aggregated_full});
    }
    if (settings.include_non_aggregated_share) {
        // One ensemble's share of the partition, the other reading of the
        // non-aggregated baseline.
        const auto partition = sampling::disjoint_poisson_sample(
            dataset.size(), mech_template.m, root.child(kShareStream).seed());
        corpus::ExemplarSet share;
        share.task_kind = dataset.task_kind;
        share.label_space = dataset.label_space;
        if (!partition.parts.empty())
            for (std::size_t idx : partition.parts.front())
                share.items.push_back(dataset.items[idx]);
        auto predictions = run_queries([&](const std::string& query, std::size_t) {
            return single_context_prediction(share, dataset, query, generator);
        });
        const double value = score(eval_set, predictions, &metric_name);
        reports.push_back({metric_name, value, eval_set.items.size(), inf,
                           UtilityMode::non_aggregated_share});
    }
    return reports;
}

}  // namespace ctxaudit::metrics
