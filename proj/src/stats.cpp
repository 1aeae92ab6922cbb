#include "ctxaudit/stats.hpp"

#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "ctxaudit/error.hpp"

namespace ctxaudit::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double alpha) {
    if (n == 0) throw InvalidArgumentError("clopper_pearson: n must be >= 1");
    if (k > n) throw InvalidArgumentError("clopper_pearson: k > n");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw InvalidArgumentError("clopper_pearson: alpha must be in (0,1)");

    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    const double lo =
        k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
    const double hi =
        k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
    return {lo, hi};
}

}  // namespace ctxaudit::stats
