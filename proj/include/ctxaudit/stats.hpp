#pragma once

#include <cstddef>
#include <utility>

namespace ctxaudit::stats {

double normal_cdf(double x);

// Exact two-sided binomial confidence interval on k successes out of n.
std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n,
                                          double alpha = 0.05);

}  // namespace ctxaudit::stats
