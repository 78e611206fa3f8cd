#include <doctest.h>

#include <cmath>
#include <numbers>

#include "blob/param_map.hpp"
#include "oracles.hpp"

using namespace blob;

TEST_CASE("apply")
{
    CHECK(apply(ParamMap::square, 0.1) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(apply(ParamMap::square, 0.0) == 0.0);
    CHECK(apply(ParamMap::softplus, 0.0) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(std::abs(apply(ParamMap::softplus, 30.0) - 30.0) <= 1e-9);
    CHECK(std::isfinite(apply(ParamMap::softplus, 1000.0)));
    CHECK(apply(ParamMap::softplus, -800.0) >= 0.0);
    for (double x : {-20.0, -1.0, 0.5, 3.0, 40.0})
        CHECK(apply(ParamMap::softplus, x) == doctest::Approx(oracle::softplus(x)).epsilon(1e-14));
}

TEST_CASE("inverse")
{
    for (double s : {1e-4, 0.01, 0.5, 2.0, 50.0}) {
        CHECK(apply(ParamMap::square, inverse(ParamMap::square, s)) == doctest::Approx(s));
        CHECK(apply(ParamMap::softplus, inverse(ParamMap::softplus, s)) ==
              doctest::Approx(s).epsilon(1e-12));
    }
    CHECK_THROWS(inverse(ParamMap::softplus, 0.0));
}

TEST_CASE("parse and print")
{
    CHECK(parse_param_map("square") == ParamMap::square);
    CHECK(parse_param_map("softplus") == ParamMap::softplus);
    CHECK(to_string(ParamMap::softplus) == "softplus");
    CHECK_THROWS_AS(parse_param_map("exp"), std::invalid_argument);
}

TEST_CASE("KL gradient")
{
    CHECK(kl_grad_rho(ParamMap::square, 0.1, 1.0) == doctest::Approx(-19.998).epsilon(1e-12));
    CHECK(std::abs(kl_grad_rho(ParamMap::square, std::sqrt(0.2), 0.2)) <= 1e-12);
    CHECK_THROWS_AS(kl_grad_rho(ParamMap::square, 0.0, 1.0), std::domain_error);

    const double rho = inverse(ParamMap::softplus, 0.01);
    CHECK(kl_grad_rho(ParamMap::softplus, rho, 1.0) == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("KL gradient matches central differences")
{
    const double h = 1e-6;
    for (ParamMap map : {ParamMap::square, ParamMap::softplus})
        for (double sp : {0.2, 1.0})
            for (double rho : {0.3, 0.7, 1.3}) {
                const double fd =
                    (scalar_kl(map, rho + h, sp) - scalar_kl(map, rho - h, sp)) / (2.0 * h);
                const double an = kl_grad_rho(map, rho, sp);
                CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
            }
}

TEST_CASE("gradient magnitudes near zero standard deviation")
{
    for (double rho : {0.001, 0.01, 0.05, 0.1})
        CHECK(std::abs(kl_grad_rho(ParamMap::square, rho, 1.0)) >= 1.0 / rho);
    for (double s : {1e-4, 1e-3, 0.01, 0.05})
        CHECK(std::abs(kl_grad_rho(ParamMap::softplus, inverse(ParamMap::softplus, s), 1.0)) <= 1.1);
}

TEST_CASE("convergence race")
{
    const RaceResult sq = convergence_race(ParamMap::square, 1.0, 0.01, 1e-4, 0.9, 10000);
    CHECK(sq.reached);
    CHECK(sq.steps <= 10000);
    const RaceResult sp = convergence_race(ParamMap::softplus, 1.0, 0.01, 1e-4, 0.9, 50000);
    CHECK_FALSE(sp.reached);
    CHECK(sp.steps == 50000);
    CHECK(convergence_race(ParamMap::square, 1.0, 1.0, 1e-4, 0.9, 100).steps == 0);

    const RaceResult traced = convergence_race(ParamMap::square, 1.0, 0.01, 1e-4, 0.9, 10000, true);
    CHECK(traced.sigma_trace.size() == traced.steps + 1);
    CHECK(traced.sigma_trace.front() == doctest::Approx(0.01));
    CHECK(traced.sigma_trace.back() >= 0.9);
}

TEST_CASE("square beats softplus across the grid")
{
    for (double sp : {0.1, 0.5, 1.0})
        for (double s0 : {0.01, 0.05}) {
            const double target = 0.9 * sp;
            const auto a = convergence_race(ParamMap::square, sp, s0, 1e-4, target, 2000000);
            const auto b = convergence_race(ParamMap::softplus, sp, s0, 1e-4, target, 2000000);
            CHECK(a.steps < b.steps);
        }
}
