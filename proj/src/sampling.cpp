#include "ctxaudit/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "ctxaudit/error.hpp"
#include "ctxaudit/rng.hpp"

namespace ctxaudit::sampling {

void EnsemblePartition::validate() const {
    std::vector<bool> seen(source_size, false);
    std::size_t total = 0;
    for (const auto& part : parts) {
        for (std::size_t idx : part) {
            if (idx >= source_size)
                throw InvalidStateError("partition index out of range");
            if (seen[idx]) throw InvalidStateError("partition parts overlap");
            seen[idx] = true;
            ++total;
        }
    }
    if (total + dropped.size() != source_size)
        throw InvalidStateError("partition does not account for every index");
}

EnsemblePartition disjoint_poisson_sample(std::size_t dataset_size, std::size_t m,
                                          std::uint64_t seed) {
    if (dataset_size == 0) throw InvalidArgumentError("dataset_size must be >= 1");
    if (m == 0) throw InvalidArgumentError("ensemble count m must be >= 1");

    const double target = static_cast<double>(dataset_size) / static_cast<double>(m);
    std::vector<std::size_t> residual(dataset_size);
    std::iota(residual.begin(), residual.end(), 0);

    rng::Engine root(seed);
    EnsemblePartition partition;
    partition.source_size = dataset_size;
    partition.parts.resize(m);
    for (std::size_t k = 0; k < m && !residual.empty(); ++k) {
        rng::Engine eng = root.child(k);
        const double p = std::min(1.0, target / static_cast<double>(residual.size()));
        std::vector<std::size_t> keep;
        keep.reserve(residual.size());
        for (std::size_t idx : residual) {
            if (eng.bernoulli(p))
                partition.parts[k].push_back(idx);
            else
                keep.push_back(idx);
        }
        residual.swap(keep);
    }
    partition.dropped = std::move(residual);
    partition.validate();
    return partition;
}

}  // namespace ctxaudit::sampling
