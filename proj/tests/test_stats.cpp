#include <doctest.h>

#include <cmath>

#include "ctxaudit/error.hpp"
#include "ctxaudit/stats.hpp"

using namespace ctxaudit;

TEST_CASE("normal_cdf anchors") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-6));
    CHECK(stats::normal_cdf(-1.959963985) == doctest::Approx(0.025).epsilon(1e-4));
}

TEST_CASE("clopper-pearson brackets the point estimate and handles edges") {
    const auto [lo, hi] = stats::clopper_pearson(80, 100);
    CHECK(lo < 0.8);
    CHECK(hi > 0.8);
    // Reference values for 80/100 at 95%: [0.7082, 0.8733].
    CHECK(lo == doctest::Approx(0.7082).epsilon(1e-3));
    CHECK(hi == doctest::Approx(0.8733).epsilon(1e-3));

    const auto [lo0, hi0] = stats::clopper_pearson(0, 50);
    CHECK(lo0 == 0.0);
    // 1 - (alpha/2)^(1/n) style bound: about 0.0711 for n=50.
    CHECK(hi0 == doctest::Approx(0.0711).epsilon(1e-2));

    const auto [lon, hin] = stats::clopper_pearson(50, 50);
    CHECK(hin == 1.0);
    CHECK(lon == doctest::Approx(1.0 - 0.0711).epsilon(1e-2));
}

TEST_CASE("clopper-pearson interval covers the binomial rate") {
    // Exact-interval sanity: at larger n the interval shrinks around k/n.
    const auto narrow = stats::clopper_pearson(800, 1000);
    const auto wide = stats::clopper_pearson(80, 100);
    CHECK((narrow.second - narrow.first) < (wide.second - wide.first));
}

TEST_CASE("invalid arguments are rejected") {
    CHECK_THROWS_AS(stats::clopper_pearson(5, 0), InvalidArgumentError);
    CHECK_THROWS_AS(stats::clopper_pearson(5, 4), InvalidArgumentError);
    CHECK_THROWS_AS(stats::clopper_pearson(1, 10, 0.0), InvalidArgumentError);
}
