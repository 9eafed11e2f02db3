#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mscd/csv.hpp"
#include "mscd/kernels.hpp"
#include "oracles.hpp"

using namespace mscd;
using kernels::CommunicationArray;
using kernels::RadialKernel;

TEST_CASE("kernel families evaluate per their formulas") {
    CHECK(RadialKernel::zero()(3.0) == 0.0);
    CHECK(RadialKernel::constant(2.5)(100.0) == 2.5);
    CHECK(RadialKernel::pareto(1.0, 0.5)(3.0) == doctest::Approx(0.5)); // (1+3)^{-1/2}
    CHECK(RadialKernel::cutoff(1.0, 2.0)(5.0) == 0.0);
    CHECK(RadialKernel::cutoff(1.0, 2.0)(2.0) == 1.0);
    CHECK_THROWS_AS(RadialKernel::pareto(-1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(RadialKernel::constant(2.0)(-1.0), std::invalid_argument);
}

TEST_CASE("negative kernels need the de-alignment flag") {
    CHECK_THROWS_AS(RadialKernel::constant(-0.1), std::invalid_argument);
    const RadialKernel k = RadialKernel::constant(-0.1, true);
    CHECK(k.negative_constant());
    CommunicationArray phi(2);
    CHECK_THROWS_AS(phi.set(0, 1, k), std::invalid_argument);
    phi.set(0, 0, k); // diagonal slot is fine
    CHECK(phi.has_negative_diagonal());
}

TEST_CASE("tabulated kernels: monotonicity, interpolation, round trip") {
    CHECK_THROWS_AS(RadialKernel::tabulated({0.0, 1.0}, {0.5, 0.7}), std::invalid_argument);
    CHECK_THROWS_AS(RadialKernel::tabulated({0.5, 1.0}, {1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(RadialKernel::tabulated({0.0, 1.0, 0.5}, {1.0, 0.8, 0.6}),
                    std::invalid_argument);

    const RadialKernel k = RadialKernel::tabulated({0.0, 1.0, 3.0}, {1.0, 0.5, 0.1});
    CHECK(k(0.0) == 1.0);
    CHECK(k(0.5) == doctest::Approx(0.75));
    CHECK(k(2.0) == doctest::Approx(0.3));
    CHECK(k(10.0) == 0.1); // clamped beyond the last knot

    // Round trip through the two-column table file, bit-exact.
    const std::vector<double> knots = {0.0, 0.356823575435, 2.0000000001, 7.5};
    const std::vector<double> values = {0.912837123, 0.5000000003, 0.12345678901234567, 0.0};
    const std::string path = "kernel_roundtrip_test.txt";
    {
        std::ofstream out(path);
        out << "# r value\n";
        for (std::size_t i = 0; i < knots.size(); ++i)
            out << csv::format_double(knots[i]) << " " << csv::format_double(values[i]) << "\n";
    }
    const RadialKernel loaded = kernels::load_tabulated_kernel(path);
    REQUIRE(loaded.knots().size() == knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        CHECK(loaded.knots()[i] == knots[i]);
        CHECK(loaded.values()[i] == values[i]);
    }
    std::remove(path.c_str());
}

TEST_CASE("array evaluation is structurally symmetric") {
    CommunicationArray phi(3);
    phi.set(0, 1, RadialKernel::pareto(1.0, 0.25));
    phi.set(1, 2, RadialKernel::cutoff(2.0, 1.5));
    phi.set(0, 2, RadialKernel::constant(0.3));
    for (const double r : {0.0, 0.7, 1.5, 8.0}) {
        const auto a = phi.array_at(r);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(a(i, j) == a(j, i));
    }
    const auto at_zero = phi.array_at(0.0);
    CHECK(at_zero(0, 1) == 1.0);
    CHECK(at_zero(0, 0) == 0.0);
}

TEST_CASE("all-constant array evaluates to a constant matrix") {
    CommunicationArray phi(2);
    phi.set(0, 1, RadialKernel::constant(0.75));
    phi.set(0, 0, RadialKernel::constant(0.75));
    phi.set(1, 1, RadialKernel::constant(0.75));
    for (const double r : {0.0, 2.0, 50.0}) {
        const auto a = phi.array_at(r);
        CHECK(a(0, 1) == 0.75);
        CHECK(a(0, 0) == 0.75);
        CHECK(a(1, 1) == 0.75);
    }
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = lo + (hi - lo) * k / (n - 1);
    return out;
}

} // namespace

TEST_CASE("connectivity profile") {
    SUBCASE("constant kernel, two species") {
        CommunicationArray phi(2);
        phi.set(0, 1, RadialKernel::constant(0.8));
        const auto profile =
            kernels::connectivity_profile(phi, spectral::WeightVector({1, 1}), linspace(0, 10, 11));
        for (const auto& p : profile) CHECK(p.lambda2 == doctest::Approx(1.6).epsilon(1e-12));
    }
    SUBCASE("four-species cycle with zero diagonals stays connected") {
        const double mu = 0.3; // < 1/3
        CommunicationArray phi(4);
        auto pair_kernel = [&](int i, int j) {
            return RadialKernel::pareto(1.0, mu * (std::min(i, j) + 1));
        };
        phi.set(0, 1, pair_kernel(0, 1));
        phi.set(1, 2, pair_kernel(1, 2));
        phi.set(2, 3, pair_kernel(2, 3));
        phi.set(0, 3, pair_kernel(0, 3));
        const auto profile = kernels::connectivity_profile(
            phi, spectral::WeightVector({1, 1, 1, 1}), linspace(0, 40, 30));
        for (const auto& p : profile) CHECK(p.lambda2 > 0.0);
        // non-increasing (also asserted internally)
        for (std::size_t k = 1; k < profile.size(); ++k)
            CHECK(profile[k].lambda2 <= profile[k - 1].lambda2 + 1e-10);
    }
    SUBCASE("disconnected sparsity pattern is identically zero") {
        CommunicationArray phi(4);
        phi.set(0, 1, RadialKernel::constant(1.0));
        phi.set(2, 3, RadialKernel::constant(2.0));
        const auto profile = kernels::connectivity_profile(
            phi, spectral::WeightVector({1, 1, 1, 1}), linspace(0, 5, 6));
        for (const auto& p : profile) CHECK(p.lambda2 == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("grid must be sorted") {
        CommunicationArray phi(2);
        phi.set(0, 1, RadialKernel::constant(1.0));
        CHECK_THROWS_AS(
            kernels::connectivity_profile(phi, spectral::WeightVector({1, 1}), {1.0, 0.5}),
            std::invalid_argument);
    }
}

TEST_CASE("composed-with-diameter profile") {
    CommunicationArray phi(2);
    phi.set(0, 1, RadialKernel::pareto(1.0, 0.5));
    const spectral::WeightVector w({1, 1});
    const double d0 = 2.0, dv0 = 0.5;
    const auto composed =
        kernels::connectivity_profile_at_diameter(phi, w, linspace(0, 8, 9), d0, dv0);
    for (const auto& p : composed) {
        const double r = d0 + dv0 * p.r;
        CHECK(p.lambda2 == doctest::Approx(2.0 * std::pow(1.0 + r, -0.5)).epsilon(1e-12));
    }
}

TEST_CASE("tail exponent estimation") {
    SUBCASE("exact power law is recovered") {
        std::vector<kernels::ProfilePoint> profile;
        for (const double r : linspace(0, 20, 15))
            profile.push_back({r, 2.0 * std::pow(1.0 + r, -0.5)});
        const auto fit = kernels::estimate_tail_exponent(profile);
        CHECK(fit.pareto_certified);
        CHECK(fit.theta == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(fit.c == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("constant profile certifies with theta = 0") {
        std::vector<kernels::ProfilePoint> profile;
        for (const double r : linspace(0, 20, 10)) profile.push_back({r, 1.3});
        const auto fit = kernels::estimate_tail_exponent(profile);
        CHECK(fit.pareto_certified);
        CHECK(fit.theta == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(fit.c == doctest::Approx(1.3).epsilon(1e-12));
    }
    SUBCASE("cutoff kernels cannot be certified") {
        CommunicationArray phi(2);
        phi.set(0, 1, RadialKernel::cutoff(1.0, 2.0));
        const auto profile = kernels::connectivity_profile(
            phi, spectral::WeightVector({1, 1}), linspace(0, 10, 11));
        const auto fit = kernels::estimate_tail_exponent(profile);
        CHECK_FALSE(fit.pareto_certified);
        CHECK(fit.reason.find("zero") != std::string::npos);
    }
    SUBCASE("too-fast decay is rejected") {
        std::vector<kernels::ProfilePoint> profile;
        for (const double r : linspace(0, 30, 20))
            profile.push_back({r, std::pow(1.0 + r, -2.0)});
        const auto fit = kernels::estimate_tail_exponent(profile);
        CHECK_FALSE(fit.pareto_certified);
    }
    SUBCASE("needs at least three positive points") {
        const auto fit = kernels::estimate_tail_exponent({{0.0, 1.0}, {1.0, 0.9}});
        CHECK_FALSE(fit.pareto_certified);
    }
}
