#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cyclelab/errors.hpp"
#include "cyclelab/model.hpp"

using namespace cyclelab;

namespace {

CycleSpec dyadic(double t = 0.0) {
    CycleSpec s;
    s.t = t;
    s.epsilon = 0.5;
    return s;
}

ChartPoint point(Chart c, double xs, double xc, double xu) {
    ChartPoint p;
    p.chart = c;
    p.xs = Eigen::VectorXd::Constant(1, xs);
    p.xc = xc;
    p.xu = Eigen::VectorXd::Constant(1, xu);
    return p;
}

}  // namespace

TEST_CASE("build_model: defaults and invariant rejection") {
    auto m = build_model(dyadic());
    CHECK(m.A_s(0, 0) == 0.5);
    CHECK(m.A_u(0, 0) == 2.0);
    CHECK(m.a_u(0) == 0.5);
    // local maps at P: (x/2, lambda x_c, 2 x_u)
    auto q = apply_block(m, point(Chart::P, 0.8, 0.5, 0.3), BlockKind::PBlock);
    CHECK(q.xs(0) == 0.4);
    CHECK(q.xc == 0.25);
    CHECK(q.xu(0) == 0.6);

    CycleSpec bad = dyadic();
    bad.lambda = 1.0;
    CHECK_THROWS_AS(build_model(bad), InvalidSpec);

    ModelOverrides ov;
    ov.A_s = Eigen::MatrixXd::Constant(1, 1, 1.1);
    CHECK_THROWS_AS(build_model(dyadic(), ov), InvalidMatrix);
}

TEST_CASE("step: transit blocks map the distinguished points correctly") {
    auto m = build_model(dyadic(0.0625));
    // Y_P = (0, 0, a_u) -> Y_{Q,t} = (a_s, t, 0)
    auto r1 = step(m, point(Chart::P, 0.0, 0.0, 0.5));
    CHECK(r1.applied == BlockKind::Transit1);
    CHECK(r1.point.chart == Chart::Q);
    CHECK(r1.point.xs(0) == 0.5);
    CHECK(r1.point.xc == 0.0625);
    CHECK(r1.point.xu(0) == 0.0);
    // X_Q = (0, 1, 0) -> X_P = (0, -1, 0)
    auto r2 = step(m, point(Chart::Q, 0.0, 1.0, 0.0));
    CHECK(r2.applied == BlockKind::Transit2);
    CHECK(r2.point.chart == Chart::P);
    CHECK(r2.point.xc == -1.0);
    // central linear map away from the windows
    auto r3 = step(m, point(Chart::P, 0.0, 0.5, 0.0));
    CHECK(r3.applied == BlockKind::PBlock);
    CHECK(r3.point.xc == 0.25);
}

TEST_CASE("step: leaving every chart box raises LeftNeighborhood") {
    auto m = build_model(dyadic());
    CHECK_THROWS_AS(step(m, point(Chart::Q, 0.0, 0.9, 0.9)), LeftNeighborhood);
}

TEST_CASE("blocks are invertible on their image") {
    auto m = build_model(dyadic(0.03));
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (BlockKind b : {BlockKind::PBlock, BlockKind::QBlock, BlockKind::Transit1,
                        BlockKind::Transit2}) {
        for (int i = 0; i < 50; ++i) {
            Chart c = (b == BlockKind::PBlock || b == BlockKind::Transit1) ? Chart::P : Chart::Q;
            auto p = point(c, u(rng), u(rng), u(rng));
            auto q = apply_block(m, p, b);
            auto back = apply_block_inverse(m, q, b);
            CHECK(std::abs(back.xc - p.xc) <= 1e-12);
            CHECK((back.xs - p.xs).lpNorm<Eigen::Infinity>() <= 1e-12);
            CHECK((back.xu - p.xu).lpNorm<Eigen::Infinity>() <= 1e-12);
        }
    }
}

TEST_CASE("strong factor contraction under one P-block") {
    auto m = build_model(dyadic());
    auto p1 = point(Chart::P, 0.9, 0.1, 0.2);
    auto p2 = point(Chart::P, -0.7, 0.1, 0.2);
    auto q1 = apply_block(m, p1, BlockKind::PBlock);
    auto q2 = apply_block(m, p2, BlockKind::PBlock);
    double before = (p1.xs - p2.xs).lpNorm<Eigen::Infinity>();
    double after = (q1.xs - q2.xs).lpNorm<Eigen::Infinity>();
    CHECK(after <= 0.5 * before + 1e-15);
}

TEST_CASE("quotient consistency: central coordinate equals the central-map composition") {
    CycleSpec s = dyadic(0.0625);
    auto m = build_model(s);
    CentralMapSet maps = m.central_maps();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int trial = 0; trial < 100; ++trial) {
        ChartPoint p = point(Chart::Q, u(rng), 1.0 + u(rng), u(rng));
        double central = p.xc;
        ChartPoint q = p;
        for (int stepi = 0; stepi < 6; ++stepi) {
            BlockKind b;
            if (q.chart == Chart::Q)
                b = (std::abs(q.xc - 1.0) <= s.delta && stepi % 2 == 0) ? BlockKind::Transit2
                                                                        : BlockKind::QBlock;
            else
                b = (std::abs(q.xc) <= s.delta) ? BlockKind::Transit1 : BlockKind::PBlock;
            q = apply_block(m, q, b);
            switch (b) {
                case BlockKind::PBlock: central = maps.phi.eval_unchecked(central); break;
                case BlockKind::QBlock: central = maps.psi.eval_unchecked(central); break;
                case BlockKind::Transit1: central = maps.theta1.eval_unchecked(central); break;
                case BlockKind::Transit2: central = maps.theta2.eval_unchecked(central); break;
            }
            CHECK(std::abs(q.xc - central) <= 1e-12);
        }
    }
}

TEST_CASE("oracle_periodic: lemma instance has full coordinates and unit eigenvalue") {
    auto m = build_model(dyadic(0.0625));
    auto res = oracle_periodic(m, {5, 5}, 1.0);
    CHECK(std::abs(res.rc - 1.0) <= 1e-12);
    CHECK(std::abs(res.central_eigenvalue - 1.0) <= 1e-12);
    CHECK(res.period == 5 + 5 + 1 + 1);
    CHECK(res.spectrum.size() == 3);
    // strong factors: contraction fixed point inside the cube
    CHECK(std::abs(res.rs(0)) < 1.0);
    CHECK(std::abs(res.ru(0)) < 1.0);
}

TEST_CASE("oracle_periodic: empty return map raises NoFixedPoint") {
    auto m = build_model(dyadic());
    CHECK_THROWS_AS(oracle_periodic(m, {0, 0}, 1.0), NoFixedPoint);
}

TEST_CASE("oracle matches a directly detected IFS fixed point") {
    CycleSpec s = dyadic(0.0625);
    s.sign_t1 = -1;  // theta1(x) = -x + t gives a genuine attracting root
    auto m = build_model(s);
    CentralMapSet maps = m.central_maps();
    IFSReturnMap g = compose_return(maps, {3, 2});
    auto fps = g.fixed_points();
    for (const auto& fp : fps) {
        auto res = oracle_periodic(m, {3, 2}, fp.x);
        CHECK(std::abs(res.rc - fp.x) <= 1e-9);
        CHECK(std::abs(res.central_eigenvalue - fp.derivative) <= 1e-9);
    }
}
