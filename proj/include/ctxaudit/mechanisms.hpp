#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctxaudit/backends.hpp"
#include "ctxaudit/corpus.hpp"

namespace ctxaudit::mechanisms {

enum class Mode { RNM, ESA, KSA };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

// A DP-ICL mechanism instance. epsilon = infinity is the distinguished
// non-private mode: sigma() is 0 and clipping is disabled.
struct MechanismConfig {
    Mode mode = Mode::RNM;
    std::size_t m = 4;  // ensemble count
    double epsilon = 1.0;
    double delta = 1e-5;
    double clip_bound_B = 1.0;                 // ESA L2 clip
    double clip_cap_C = 1.0;                   // KSA per-entry cap
    std::vector<std::string> keyword_vocab;    // KSA
    std::size_t top_k = 5;                     // KSA keywords released

    bool non_private() const;
    // L2 sensitivity of the released aggregate under replace-one adjacency:
    // sqrt(2) for the RNM histogram, 2B/m for the ESA mean, sqrt(2)*C/m for
    // the KSA mean.
    double sensitivity() const;
    double sigma() const;  // 0 when non-private
    void validate() const;
};

// Gaussian-mechanism noise scale: sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
double calibrate_sigma(double epsilon, double delta, double sensitivity);

struct ClassHistogram {
    std::map<std::string, std::size_t> counts;
    std::map<std::string, double> noisy_counts;
    std::size_t unparseable = 0;  // outputs excluded from counts
};

// Everything the mechanism releases for one query: the privatized text plus
// the mode's aggregation artifact, which the audit may consume when the
// mechanism is configured to release it.
struct PrivatizedOutput {
    Mode mode = Mode::RNM;
    std::string text;
    ClassHistogram histogram;                      // RNM
    std::vector<double> noisy_mean;                // ESA
    std::vector<std::string> released_keywords;    // KSA, noisy-value order
    std::map<std::string, double> noisy_keywords;  // KSA
    std::size_t dropped_exemplars = 0;             // sampler leftovers
};

// Parses a raw model output against the label space: trimmed exact match,
// a "Label:"-prefixed match, or unique containment. Returns -1 when
// unparseable.
int parse_label(const std::string& output, const std::vector<std::string>& label_space);

// Argmax of per-class counts after adding N(0, sigma^2) to each; ties break
// to the lowest label index. Outputs that parse to no label are excluded and
// counted in the histogram's unparseable field.
std::pair<std::string, ClassHistogram> rnm_aggregate(
    const std::vector<std::string>& outputs, const std::vector<std::string>& label_space,
    double sigma, std::uint64_t seed);

// Embeds each output, L2-clips to B, averages, adds per-coordinate
// N(0, sigma^2) to the mean, then decodes to the candidate output whose
// clipped embedding is most cosine-similar to the noisy mean.
std::pair<std::string, std::vector<double>> esa_aggregate(
    const std::vector<std::string>& outputs, double clip_bound, double sigma,
    backends::EmbedderBackend& embedder, std::uint64_t seed);

struct KsaResult {
    std::vector<std::string> keywords;         // top_k by noisy value
    std::map<std::string, double> noisy_hist;  // full noisy mean histogram
};

// Per-output keyword-count vectors over the vocab, entries clipped to
// [0, C], averaged, noised, and the top_k keywords by noisy value released.
KsaResult ksa_aggregate(const std::vector<std::string>& outputs,
                        const std::vector<std::string>& vocab, double clip_cap,
                        double sigma, std::uint64_t seed, std::size_t top_k);

struct RunOptions {
    std::string preamble;
    corpus::RenderOptions render{};
    bool render_defaults = true;  // use task-kind defaults unless overridden
};

// The full DP-ICL pipeline for one query: disjoint-Poisson partition, one
// prompt and model call per ensemble, then the mode's private aggregation.
PrivatizedOutput run_dp_icl(const corpus::ExemplarSet& dataset, const std::string& query,
                            const MechanismConfig& config,
                            backends::GeneratorBackend& generator,
                            backends::EmbedderBackend* embedder, std::uint64_t seed,
                            const RunOptions& options = {});

}  // namespace ctxaudit::mechanisms
