#include <cmath>

#include <doctest.h>

#include "claimcomb/errors.hpp"
#include "claimcomb/tdist.hpp"
#include "oracles.hpp"

using namespace claimcomb;

TEST_CASE("student_t_cdf agrees with quadrature to 1e-10") {
    const double nus[] = {1.0, 2.0, 2.5, 3.0, 5.0, 10.0, 19.0, 30.0, 100.0, 500.0};
    const double ts[] = {-8.0, -4.0, -2.5, -1.0, -0.3, 0.0, 0.2, 0.7, 1.5, 2.2, 3.7, 6.0, 9.5};
    for (double nu : nus) {
        for (double t : ts) {
            CHECK(student_t_cdf(t, nu) ==
                  doctest::Approx(oracle::t_cdf_quadrature(t, nu)).epsilon(1e-10));
        }
    }
}

TEST_CASE("student_t_cdf symmetry and limits") {
    for (double nu : {1.0, 4.0, 25.0}) {
        for (double t : {0.1, 1.0, 3.0, 7.0}) {
            CHECK(student_t_cdf(t, nu) + student_t_cdf(-t, nu) ==
                  doctest::Approx(1.0).epsilon(1e-13));
        }
        CHECK(student_t_cdf(0.0, nu) == 0.5);
    }
    CHECK(student_t_cdf(std::numeric_limits<double>::infinity(), 5.0) == 1.0);
    CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), Error);
}

TEST_CASE("two-sided p-values") {
    for (double nu : {3.0, 12.0, 60.0}) {
        for (double t : {0.5, 1.3, 2.8}) {
            const double p = student_t_two_sided_p(t, nu);
            CHECK(p == doctest::Approx(2.0 * (1.0 - student_t_cdf(t, nu))).epsilon(1e-12));
            CHECK(p == doctest::Approx(student_t_two_sided_p(-t, nu)).epsilon(1e-14));
        }
    }
}

TEST_CASE("incomplete beta edges") {
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), Error);
    CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), Error);
    // I_x(1,1) = x
    CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-14));
}
