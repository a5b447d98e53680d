#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cyclelab/dictionary.hpp"
#include "cyclelab/errors.hpp"

using namespace cyclelab;

namespace {

CycleSpec dyadic(double t = 0.0) {
    CycleSpec s;
    s.t = t;
    s.epsilon = 0.5;
    return s;
}

CentralMapSet maps_of(const CycleSpec& s) { return CentralMapSet::from_spec(s); }

}  // namespace

TEST_CASE("detect_periodic: period formula is exact integer arithmetic") {
    CycleSpec s = dyadic(0.0625);
    s.tau_pq = 10;
    s.tau_qp = 10;
    auto recs = detect_periodic(maps_of(s), {5, 5});
    REQUIRE_FALSE(recs.empty());
    CHECK(recs[0].period == 5 * 1 + 5 * 1 + 10 + 10);
    CHECK(recs[0].r == 1.0);
    CHECK(recs[0].neutral);
    CHECK(recs[0].flag_ss_meets_Wu_Q);
    CHECK(recs[0].flag_uu_meets_Ws_P);
}

TEST_CASE("detect_periodic: empty-domain itinerary gives no records") {
    CHECK(detect_periodic(maps_of(dyadic()), {1, 1}).empty());
}

TEST_CASE("eigenvalue classification trichotomy") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ul(0.2, 0.8), ub(1.25, 4.0), ut(-0.1, 0.1);
    for (int trial = 0; trial < 40; ++trial) {
        CycleSpec s;
        s.lambda = ul(rng) * (rng() % 2 ? 1 : -1);
        s.beta = ub(rng) * (rng() % 2 ? 1 : -1);
        s.sign_t1 = rng() % 2 ? 1 : -1;
        s.sign_t2 = rng() % 2 ? 1 : -1;
        s.t = ut(rng);
        s.epsilon = 0.5;
        auto maps = maps_of(s);
        for (int k = 0; k <= 6; ++k)
            for (int n = 0; n <= 6; ++n)
                for (const auto& r : detect_periodic(maps, {k, n})) {
                    if (r.at_breakpoint) continue;
                    bool expanding = std::abs(r.central_eigenvalue) > 1.0;
                    if (r.neutral)
                        CHECK(std::abs(std::abs(r.central_eigenvalue) - 1.0) <= kNeutralBand);
                    else
                        CHECK(r.s_index == (expanding ? s.s_dim : s.s_dim + 1));
                }
    }
}

TEST_CASE("strong homoclinic: resonant slopes fix the same point") {
    // beta^2 lambda = beta^4 lambda^2 = 1 with a reversing unfolding map fixes
    // r = 1 for both itineraries at t = 0.
    CycleSpec s;
    s.lambda = 0.25;
    s.beta = 2.0;
    s.sign_t1 = -1;
    s.epsilon = 0.5;
    auto maps = maps_of(s);
    auto recs = detect_periodic(maps, {2, 1});
    REQUIRE_FALSE(recs.empty());
    const auto* at_one = &recs[0];
    for (const auto& r : recs)
        if (std::abs(r.r - 1.0) < std::abs(at_one->r - 1.0)) at_one = &r;
    CHECK(std::abs(at_one->r - 1.0) <= 1e-12);
    auto hit = detect_strong_homoclinic(maps, *at_one, 4, 2);
    REQUIRE(hit.has_value());
    CHECK(hit->residual <= 1e-10);
    CHECK_FALSE(hit->second == at_one->itinerary);
    // the resonance partner (4,2) also fixes the point directly
    IFSReturnMap g42 = compose_return(maps, {4, 2});
    CHECK(std::abs(g42.evaluate_unchecked(at_one->r) - at_one->r) <= 1e-12);
}

TEST_CASE("strong homoclinic: absence within bounds is a valid answer") {
    CycleSpec s = dyadic(0.03);
    s.sign_t1 = -1;
    auto maps = maps_of(s);
    auto recs = detect_periodic(maps, {2, 2});
    for (const auto& r : recs) {
        auto hit = detect_strong_homoclinic(maps, r, 3, 3);
        if (hit) CHECK(hit->residual <= 1e-10);  // if present it must be genuine
    }
}

TEST_CASE("detect_cycle_from_disk: closed form t = lambda^i") {
    CycleSpec s = dyadic(powi(0.5, 7));
    auto hit = detect_cycle_from_disk(maps_of(s), 1.0, 24);
    REQUIRE(hit.has_value());
    CHECK(hit->i == 7);
    CHECK(hit->residual == 0.0);

    CHECK_FALSE(detect_cycle_from_disk(maps_of(dyadic(0.0)), 1.0, 24).has_value());
}

TEST_CASE("detect_cycle_from_disk: psi^h prefix variant via an F point") {
    CycleSpec s = dyadic(powi(0.5, 6));  // t = 2^-6
    auto maps = maps_of(s);
    auto fs = detect_homoclinic_F(maps, 24);
    REQUIRE_FALSE(fs.empty());
    CHECK(fs[0].i == 6);
    CHECK(fs[0].h_hat == 1.0);
    auto hit = detect_cycle_from_disk(maps, fs[0].h_hat, 24);
    REQUIRE(hit.has_value());
    CHECK(hit->i == 6);
}

TEST_CASE("detect_heteroclinic_D: identity inner return reduces to the cycle equation") {
    CycleSpec s = dyadic(powi(0.5, 7));
    auto hit = detect_heteroclinic_D(maps_of(s), 1.0, 24, 3, 3);
    REQUIRE(hit.has_value());
    CHECK(hit->inner.k == 0);
    CHECK(hit->inner.n == 0);
    CHECK(hit->i == 7);
    CHECK(hit->residual <= 1e-12);
}

TEST_CASE("detect_heteroclinic_E: special cases come first") {
    CycleSpec s = dyadic(powi(0.5, 5));
    auto maps = maps_of(s);
    auto c1 = detect_heteroclinic_E(maps, 1.0, 1.0, 8, 8);
    REQUIRE(c1.has_value());
    CHECK(c1->case_id == 1);
    CHECK(c1->i == 0);
    CHECK(c1->j == 0);

    auto c2 = detect_heteroclinic_E(maps, 0.9, 1.0, 8, 8);
    REQUIRE(c2.has_value());
    CHECK(c2->case_id == 2);
    CHECK(c2->i == 5);  // psi^5(2^-5) = 1
}

TEST_CASE("detect_homoclinic_F: hits, chart exits, and the empty case") {
    CHECK(detect_homoclinic_F(maps_of(dyadic(std::exp2(-9))), 24).size() == 1);
    auto hits = detect_homoclinic_F(maps_of(dyadic(std::exp2(-9))), 24);
    CHECK(hits[0].i == 9);
    CHECK(hits[0].h_hat == 1.0);

    // 3*2^-9 walks past I at 1.5 and leaves the chart before returning
    CHECK(detect_homoclinic_F(maps_of(dyadic(3.0 * std::exp2(-9))), 24).empty());
    CHECK(detect_homoclinic_F(maps_of(dyadic(0.0)), 24).empty());
}

TEST_CASE("report entries re-validate against their defining equations") {
    CycleSpec s = dyadic(0.0625);
    s.sign_t1 = -1;
    auto maps = maps_of(s);
    DictionaryReport rep = build_report(maps, 6, 6, 24);
    for (const auto& r : rep.periodic) {
        IFSReturnMap g = compose_return(maps, r.itinerary);
        CHECK(std::abs(g.evaluate_unchecked(r.r) - r.r) <= 1e-10);
    }
    for (const auto& f : rep.homoclinic_F) {
        double v = s.t;
        for (int i = 0; i < f.i; ++i) v = maps.psi.eval_unchecked(v);
        CHECK(v == f.h_hat);
    }
    for (const auto& c : rep.cycles) CHECK(c.residual <= 1e-12);
    for (const auto& d : rep.heteroclinic_D) CHECK(d.residual <= 1e-12);
    for (const auto& e : rep.heteroclinic_E) CHECK(e.residual <= 1e-10);
}

TEST_CASE("cross_check: agreement and the corrupted-record negative control") {
    CycleSpec s = dyadic(std::exp2(-9));
    auto maps = maps_of(s);
    auto model = build_model(s);
    DictionaryReport rep = build_report(maps, 6, 6, 24);
    REQUIRE_FALSE(rep.homoclinic_F.empty());
    auto table = cross_check(model, rep);
    for (const auto& [key, disc] : table) CHECK(disc <= 1e-9);

    // corrupt: shift a periodic center by 1e-3
    CycleSpec s2 = dyadic(0.0625);
    s2.sign_t1 = -1;
    auto maps2 = maps_of(s2);
    DictionaryReport rep2 = build_report(maps2, 4, 4, 12);
    REQUIRE_FALSE(rep2.periodic.empty());
    rep2.periodic[0].r += 1e-3;
    CHECK_THROWS_AS(cross_check(build_model(s2), rep2), OracleMismatch);
}

TEST_CASE("brute-force completeness on small bounds") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ul(0.2, 0.8), ub(1.25, 4.0), ut(-0.1, 0.1);
    for (int trial = 0; trial < 5; ++trial) {
        CycleSpec s;
        s.lambda = ul(rng);
        s.beta = ub(rng);
        s.sign_t1 = rng() % 2 ? 1 : -1;
        s.sign_t2 = rng() % 2 ? 1 : -1;
        s.t = ut(rng);
        s.epsilon = 0.5;
        auto maps = maps_of(s);
        for (int k = 0; k <= 6; ++k)
            for (int n = 0; n <= 6; ++n) {
                IFSReturnMap g = compose_return(maps, {k, n});
                if (g.domain().is_empty()) continue;
                auto fps = g.fixed_points();
                // grid scan of Gamma - id over 10^6 points
                const int N = 1000000;
                const Interval dom = g.domain();
                double prev_x = dom.lo, prev_g = g.evaluate_unchecked(dom.lo) - dom.lo;
                std::vector<double> grid_roots;
                if (std::abs(prev_g) == 0.0) grid_roots.push_back(prev_x);
                for (int i = 1; i <= N; ++i) {
                    double x = dom.lo + dom.width() * (static_cast<double>(i) / N);
                    double gx = g.evaluate_unchecked(x) - x;
                    if (gx == 0.0 || (gx < 0) != (prev_g < 0)) grid_roots.push_back(x);
                    prev_x = x;
                    prev_g = gx;
                }
                if (!fps.empty() && fps[0].degenerate_identity) continue;
                double tol = dom.width() / N + 1e-9;
                for (double gr : grid_roots) {
                    bool matched = false;
                    for (const auto& fp : fps)
                        if (std::abs(fp.x - gr) <= tol) matched = true;
                    CHECK(matched);
                }
                for (const auto& fp : fps) {
                    bool matched = false;
                    for (double gr : grid_roots)
                        if (std::abs(fp.x - gr) <= tol) matched = true;
                    CHECK(matched);
                }
            }
    }
}
