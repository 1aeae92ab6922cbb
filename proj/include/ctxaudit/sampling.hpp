#pragma once

#include <cstdint>
#include <vector>

namespace ctxaudit::sampling {

// Disjoint partition of dataset indices into m ensembles. Indices the
// residual loop never selected are dropped (not appended to the last part)
// and logged here.
struct EnsemblePartition {
    std::vector<std::vector<std::size_t>> parts;
    std::size_t source_size = 0;
    std::vector<std::size_t> dropped;

    // Throws InvalidStateError if parts overlap or reference out-of-range
    // indices. Cheap; called on every construction.
    void validate() const;
};

// Residual-pool Poisson sampling: for k = 1..m, include each remaining index
// independently with probability p_k = min(1, (dataset_size/m)/|R|), then
// remove the selected ones. Deterministic in `seed`; one RNG substream per k.
EnsemblePartition disjoint_poisson_sample(std::size_t dataset_size, std::size_t m,
                                          std::uint64_t seed);

}  // namespace ctxaudit::sampling
