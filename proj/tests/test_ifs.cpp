#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cyclelab/errors.hpp"
#include "cyclelab/ifs.hpp"

using namespace cyclelab;

namespace {

CycleSpec dyadic(double t = 0.0) {
    CycleSpec s;
    s.t = t;
    s.epsilon = 0.5;
    return s;
}

}  // namespace

TEST_CASE("compose_return: itinerary (1,1) at t=0 has empty domain") {
    // Gamma(x) = x - 2 lands outside I for every x in I.
    IFSReturnMap g = compose_return(dyadic(), {1, 1});
    CHECK(g.domain().is_empty());
    CHECK(g.evaluate_unchecked(1.0) == -1.0);
}

TEST_CASE("compose_return: the lemma instance contains 1 in its domain") {
    IFSReturnMap g = compose_return(dyadic(0.0625), {5, 5});
    REQUIRE_FALSE(g.domain().is_empty());
    CHECK(g.domain().contains(1.0));
    CHECK(g.evaluate(1.0) == 1.0);
}

TEST_CASE("compose_return: itinerary (0,0) with plus signs is empty for delta < 1") {
    IFSReturnMap g = compose_return(dyadic(), {0, 0});
    CHECK(g.domain().is_empty());
}

TEST_CASE("evaluate: k = n = 0 unrolls to theta1 o theta2") {
    CycleSpec s = dyadic(0.03);
    s.sign_t1 = -1;
    s.sign_t2 = +1;
    IFSReturnMap g = compose_return(s, {0, 0});
    for (double x : {0.85, 1.0, 1.15}) {
        double expect = s.sign_t1 * (s.sign_t2 * (x - 1.0) - 1.0) + s.t;
        CHECK(g.evaluate_unchecked(x) == expect);
    }
    IFSReturnMap lemma = compose_return(dyadic(0.0625), {5, 5});
    CHECK_THROWS_AS(lemma.evaluate(2.0), OutOfDomain);
}

TEST_CASE("derivative: product of linear slopes, checked against differences") {
    IFSReturnMap g = compose_return(dyadic(0.0625), {5, 5});
    CHECK(g.derivative(1.0) == 1.0);  // beta^5 lambda^5 = lambda/(1-lambda)

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        CycleSpec s;
        std::uniform_real_distribution<double> ul(0.2, 0.8), ub(1.25, 4.0), ut(-0.1, 0.1);
        s.lambda = ul(rng) * (rng() % 2 ? 1 : -1);
        s.beta = ub(rng) * (rng() % 2 ? 1 : -1);
        s.sign_t1 = rng() % 2 ? 1 : -1;
        s.sign_t2 = rng() % 2 ? 1 : -1;
        s.t = ut(rng);
        s.epsilon = 0.5;
        int k = static_cast<int>(rng() % 5), n = static_cast<int>(rng() % 5);
        IFSReturnMap gm = compose_return(s, {k, n});
        if (gm.domain().is_empty() || gm.domain().width() < 1e-6) continue;
        std::uniform_real_distribution<double> ux(gm.domain().lo, gm.domain().hi);
        double x = ux(rng);
        double d = gm.derivative(x);
        // itinerary additivity of linear parts
        double expect =
            s.sign_t1 * s.sign_t2 * powi(s.beta, k) * powi(s.lambda, n);
        CHECK(rel_diff(d, expect) <= 1e-13);
        double h = 1e-6;
        if (x - h > gm.domain().lo && x + h < gm.domain().hi) {
            double fd = (gm.evaluate_unchecked(x + h) - gm.evaluate_unchecked(x - h)) / (2 * h);
            CHECK(std::abs(d - fd) <= 1e-5 * std::max(1.0, std::abs(d)));
        }
    }
}

TEST_CASE("fixed_points: lemma instance is the identity on its domain") {
    IFSReturnMap g = compose_return(dyadic(0.0625), {5, 5});
    auto fps = g.fixed_points();
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].degenerate_identity);
    CHECK(fps[0].x == 1.0);
    CHECK(fps[0].residual <= 1e-13);
    CHECK(fps[0].derivative == 1.0);
}

TEST_CASE("fixed_points: empty domain gives empty list") {
    IFSReturnMap g = compose_return(dyadic(), {1, 1});
    CHECK(g.fixed_points().empty());
}

TEST_CASE("fixed_points: twisted step-2 instance fixes 1 with |derivative| 1") {
    CycleSpec s = dyadic();
    s.sign_t1 = -1;
    IFSReturnMap g = compose_return(s, {3, 3});
    auto fps = g.fixed_points();
    bool found = false;
    for (const auto& fp : fps) {
        if (std::abs(fp.x - 1.0) <= 1e-12) {
            found = true;
            CHECK(std::abs(std::abs(fp.derivative) - 1.0) <= 1e-14);
        }
    }
    CHECK(found);
}

TEST_CASE("domain monotonicity in delta") {
    for (double t : {0.0625, 0.03}) {
        CycleSpec small = dyadic(t);
        small.delta = 0.15;
        CycleSpec big = dyadic(t);
        big.delta = 0.25;
        for (int k = 0; k <= 6; ++k)
            for (int n = 0; n <= 6; ++n) {
                Interval ds = compose_return(small, {k, n}).domain();
                Interval db = compose_return(big, {k, n}).domain();
                if (ds.is_empty()) continue;
                CHECK(db.lo <= ds.lo + 1e-12);
                CHECK(db.hi >= ds.hi - 1e-12);
            }
    }
}

TEST_CASE("perturb_psi_fundamental_domains: exact orbit needs no perturbation") {
    auto psi = CentralMap::linear(2.0, Interval{-1.2, 1.2});
    auto res = perturb_psi_fundamental_domains(psi, std::exp2(-9), 5);
    CHECK(res.n_j == 4);
    CHECK(res.sup_distance == 0.0);
    CHECK(res.achieved == std::exp2(-5));
    CHECK_FALSE(res.psi_tilde.is_piecewise());
}

TEST_CASE("perturb_psi_fundamental_domains: rerouted orbit hits the target") {
    auto psi = CentralMap::linear(2.0, Interval{-1.2, 1.2});
    double omega = 1.3 * std::exp2(-9);
    auto res = perturb_psi_fundamental_domains(psi, omega, 5);
    CHECK(res.n_j == 4);
    CHECK(res.sup_distance > 0.0);
    // independent check: direct iteration of the returned map
    double x = omega;
    for (int i = 0; i < res.n_j; ++i) x = res.psi_tilde.eval_unchecked(x);
    CHECK(x == res.achieved);
    CHECK(res.achieved == std::exp2(-5));  // final linear step is dyadic-exact

    // locality: bit-for-bit equality with the linear map outside the support
    const auto* pw = res.psi_tilde.piecewise_data();
    REQUIRE(pw != nullptr);
    double wlo = pw->windows.front().xs.front();
    double whi = pw->windows.back().xs.back();
    CHECK(whi <= std::exp2(-6) * (1.0 + 1e-9));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (int i = 0; i < 1000; ++i) {
        double v = u(rng);
        if (v >= wlo && v <= whi) continue;
        CHECK(res.psi_tilde.eval_unchecked(v) == 2.0 * v);
    }
}

TEST_CASE("perturb_psi_fundamental_domains: too few domains is rejected") {
    auto psi = CentralMap::linear(2.0, Interval{-1.2, 1.2});
    CHECK_THROWS_AS(perturb_psi_fundamental_domains(psi, 0.9 * std::exp2(-6), 5),
                    TooFewDomains);
}

TEST_CASE("perturbation shrinks as more fundamental domains become available") {
    auto psi = CentralMap::linear(2.0, Interval{-1.2, 1.2});
    double prev = 1e300;
    for (int shift = 9; shift <= 15; shift += 2) {
        auto res = perturb_psi_fundamental_domains(psi, 1.3 * std::exp2(-shift), 5);
        CHECK(res.sup_distance < prev);
        prev = res.sup_distance;
    }
}
