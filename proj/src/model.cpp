#include "cyclelab/model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cyclelab/errors.hpp"

namespace cyclelab {

namespace {

double operator_norm(const Eigen::MatrixXd& m) {
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double inverse_operator_norm(const Eigen::MatrixXd& m) {
    if (m.rows() == 1 && m.cols() == 1) return 1.0 / std::abs(m(0, 0));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return 1.0 / svd.singularValues()(svd.singularValues().size() - 1);
}

Eigen::MatrixXd pick(const std::optional<Eigen::MatrixXd>& ov, int dim, double diag,
                     const char* name, bool contraction) {
    Eigen::MatrixXd m = ov ? *ov : Eigen::MatrixXd(diag * Eigen::MatrixXd::Identity(dim, dim));
    if (m.rows() != dim || m.cols() != dim)
        throw InvalidMatrix(std::string(name) + " has wrong dimensions");
    if (contraction) {
        if (!(operator_norm(m) < 1.0))
            throw InvalidMatrix(std::string(name) + " is not a contraction");
    } else {
        if (!(inverse_operator_norm(m) < 1.0))
            throw InvalidMatrix(std::string(name) + " is not an expansion");
    }
    return m;
}

}  // namespace

bool ModelDiffeomorphism::in_chart_box(const ChartPoint& p) const {
    if (p.xs.size() != spec.s_dim || p.xu.size() != spec.u_dim) return false;
    for (int i = 0; i < p.xs.size(); ++i)
        if (std::abs(p.xs(i)) > 1.0) return false;
    for (int i = 0; i < p.xu.size(); ++i)
        if (std::abs(p.xu(i)) > 1.0) return false;
    const Interval c = (p.chart == Chart::P) ? central_box_p() : central_box_q();
    return c.contains(p.xc);
}

bool ModelDiffeomorphism::in_transit_window(const ChartPoint& p) const {
    if (p.chart == Chart::P) {
        // window around Y_P = (0, 0, a_u)
        if (std::abs(p.xc) > transit_radius_c) return false;
        for (int i = 0; i < p.xu.size(); ++i)
            if (std::abs(p.xu(i) - a_u(i)) > transit_radius_u) return false;
        return true;
    }
    // window around X_Q = (0, 1, 0)
    if (std::abs(p.xc - 1.0) > transit_radius_c) return false;
    for (int i = 0; i < p.xu.size(); ++i)
        if (std::abs(p.xu(i)) > transit_radius_u) return false;
    return true;
}

CentralMapSet ModelDiffeomorphism::central_maps() const {
    CentralMapSet ms{psi_central,
                     CentralMap::theta1(spec.sign_t1, spec.t, spec.central_range_p()),
                     phi_central, CentralMap::theta2(spec.sign_t2, spec.central_range_q())};
    ms.delta = spec.delta;
    ms.t = spec.t;
    ms.period_p = spec.period_p;
    ms.period_q = spec.period_q;
    ms.tau_pq = spec.tau_pq;
    ms.tau_qp = spec.tau_qp;
    ms.s_dim = spec.s_dim;
    ms.u_dim = spec.u_dim;
    return ms;
}

ModelDiffeomorphism build_model(const CycleSpec& spec, const ModelOverrides& ov) {
    return build_model(spec, CentralMap::linear(spec.beta, spec.central_range_q()),
                       CentralMap::linear(spec.lambda, spec.central_range_p()), ov);
}

ModelDiffeomorphism build_model(const CycleSpec& spec, const CentralMap& psi,
                                const CentralMap& phi, const ModelOverrides& ov) {
    spec.validate();
    ModelDiffeomorphism m;
    m.spec = spec;
    const int s = spec.s_dim, u = spec.u_dim;
    m.A_s = pick(ov.A_s, s, 0.5, "A_s", true);
    m.B_s = pick(ov.B_s, s, 0.5, "B_s", true);
    m.T1_s = pick(ov.T1_s, s, 0.5, "T1_s", true);
    m.T2_s = pick(ov.T2_s, s, 0.5, "T2_s", true);
    m.A_u = pick(ov.A_u, u, 2.0, "A_u", false);
    m.B_u = pick(ov.B_u, u, 2.0, "B_u", false);
    m.T1_u = pick(ov.T1_u, u, 2.0, "T1_u", false);
    m.T2_u = pick(ov.T2_u, u, 2.0, "T2_u", false);
    m.a_s = ov.a_s ? *ov.a_s : Eigen::VectorXd(Eigen::VectorXd::Constant(s, 0.5));
    m.a_u = ov.a_u ? *ov.a_u : Eigen::VectorXd(Eigen::VectorXd::Constant(u, 0.5));
    if (m.a_s.size() != s || m.a_u.size() != u)
        throw InvalidMatrix("offset vector has wrong dimension");
    m.psi_central = psi;
    m.phi_central = phi;
    m.transit_radius_c = spec.delta;
    m.transit_radius_u = spec.delta;
    return m;
}

ChartPoint apply_block(const ModelDiffeomorphism& m, const ChartPoint& p, BlockKind block) {
    ChartPoint q = p;
    switch (block) {
        case BlockKind::PBlock:
            if (p.chart != Chart::P) throw DomainEscape("P-block applied outside U_P");
            q.xs = m.A_s * p.xs;
            q.xc = m.phi_central.eval_unchecked(p.xc);
            q.xu = m.A_u * p.xu;
            return q;
        case BlockKind::QBlock:
            if (p.chart != Chart::Q) throw DomainEscape("Q-block applied outside U_Q");
            q.xs = m.B_s * p.xs;
            q.xc = m.psi_central.eval_unchecked(p.xc);
            q.xu = m.B_u * p.xu;
            return q;
        case BlockKind::Transit1:
            if (p.chart != Chart::P) throw DomainEscape("T1 applied outside U_P");
            q.chart = Chart::Q;
            q.xs = m.T1_s * p.xs + m.a_s;
            q.xc = (m.spec.sign_t1 > 0 ? p.xc : -p.xc) + m.spec.t;
            q.xu = m.T1_u * p.xu - m.T1_u * m.a_u;
            return q;
        case BlockKind::Transit2:
            if (p.chart != Chart::Q) throw DomainEscape("T2 applied outside U_Q");
            q.chart = Chart::P;
            q.xs = m.T2_s * p.xs;
            q.xc = (m.spec.sign_t2 > 0 ? (p.xc - 1.0) : -(p.xc - 1.0)) - 1.0;
            q.xu = m.T2_u * p.xu;
            return q;
    }
    throw DomainEscape("unknown block");
}

ChartPoint apply_block_inverse(const ModelDiffeomorphism& m, const ChartPoint& p,
                               BlockKind block) {
    ChartPoint q = p;
    switch (block) {
        case BlockKind::PBlock:
            q.xs = m.A_s.partialPivLu().solve(p.xs);
            q.xc = m.phi_central.preimage(p.xc);
            q.xu = m.A_u.partialPivLu().solve(p.xu);
            return q;
        case BlockKind::QBlock:
            q.xs = m.B_s.partialPivLu().solve(p.xs);
            q.xc = m.psi_central.preimage(p.xc);
            q.xu = m.B_u.partialPivLu().solve(p.xu);
            return q;
        case BlockKind::Transit1:
            q.chart = Chart::P;
            q.xs = m.T1_s.partialPivLu().solve(p.xs - m.a_s);
            q.xc = m.spec.sign_t1 > 0 ? (p.xc - m.spec.t) : -(p.xc - m.spec.t);
            q.xu = m.T1_u.partialPivLu().solve(p.xu) + m.a_u;
            return q;
        case BlockKind::Transit2:
            q.chart = Chart::Q;
            q.xs = m.T2_s.partialPivLu().solve(p.xs);
            q.xc = m.spec.sign_t2 > 0 ? (p.xc + 1.0) + 1.0 : 1.0 - (p.xc + 1.0);
            q.xu = m.T2_u.partialPivLu().solve(p.xu);
            return q;
    }
    throw DomainEscape("unknown block");
}

StepResult step(const ModelDiffeomorphism& m, const ChartPoint& p) {
    if (!m.in_chart_box(p)) throw LeftNeighborhood("point outside its chart box");
    BlockKind block;
    if (p.chart == Chart::P)
        block = m.in_transit_window(p) ? BlockKind::Transit1 : BlockKind::PBlock;
    else
        block = m.in_transit_window(p) ? BlockKind::Transit2 : BlockKind::QBlock;
    ChartPoint q = apply_block(m, p, block);
    if (!m.in_chart_box(q))
        throw LeftNeighborhood("image escaped the chart boxes (left the neighborhood V)");
    return {q, block};
}

OraclePeriodicResult oracle_periodic(const ModelDiffeomorphism& m, const Itinerary& it,
                                     double central_guess) {
    const CentralMapSet ms = m.central_maps();
    IFSReturnMap ret = compose_return(ms, it);
    if (ret.domain().is_empty())
        throw NoFixedPoint("return map has empty domain for itinerary (" +
                           std::to_string(it.k) + "," + std::to_string(it.n) + ")");

    // Central factor: bracket and polish near the guess.
    auto g = [&](double x) { return ret.evaluate_unchecked(x) - x; };
    const Interval dom = ret.domain();
    if (!dom.contains(central_guess)) throw DomainEscape("central guess outside return domain");
    double rc;
    if (std::abs(g(central_guess)) <= 1e-13) {
        rc = central_guess;
    } else {
        double span = std::max(1e-12, dom.width() / 1024.0);
        double lo = central_guess, hi = central_guess;
        bool bracketed = false;
        for (int i = 0; i < 24 && !bracketed; ++i) {
            lo = std::max(dom.lo, central_guess - span);
            hi = std::min(dom.hi, central_guess + span);
            bracketed = (g(lo) < 0) != (g(hi) < 0);
            span *= 2.0;
            if (lo == dom.lo && hi == dom.hi) break;
        }
        if (!bracketed && (g(dom.lo) < 0) != (g(dom.hi) < 0)) {
            lo = dom.lo;
            hi = dom.hi;
            bracketed = true;
        }
        if (!bracketed) throw NoFixedPoint("central root not bracketed within the domain");
        auto dg = [&](double x) -> double {
            try { return ret.derivative(x) - 1.0; }
            catch (const Error&) { return std::numeric_limits<double>::quiet_NaN(); }
        };
        RootResult rr = bisect_newton(g, dg, lo, hi, g(lo), g(hi), 1e-14);
        if (!rr.ok) throw NoFixedPoint("bisection failed");
        rc = rr.x;
    }

    // Strong stable factor: contraction iteration of x -> Ms x + cs.
    const int k = it.k, n = it.n;
    Eigen::MatrixXd Ms = m.T2_s;
    for (int i = 0; i < n; ++i) Ms = m.A_s * Ms;
    Ms = m.T1_s * Ms;
    Eigen::VectorXd cs = m.a_s;
    for (int i = 0; i < k; ++i) {
        Ms = m.B_s * Ms;
        cs = m.B_s * cs;
    }
    Eigen::VectorXd rs = Eigen::VectorXd::Zero(m.spec.s_dim);
    for (int i = 0; i < 20000; ++i) {
        Eigen::VectorXd next = Ms * rs + cs;
        if ((next - rs).lpNorm<Eigen::Infinity>() <= 1e-16 * (1.0 + next.lpNorm<Eigen::Infinity>())) {
            rs = next;
            break;
        }
        rs = next;
    }

    // Strong unstable factor: iterate the inverse (a contraction).
    Eigen::MatrixXd Mu = m.T2_u;
    for (int i = 0; i < n; ++i) Mu = m.A_u * Mu;
    Mu = m.T1_u * Mu;
    Eigen::VectorXd cu = -(m.T1_u * m.a_u);
    for (int i = 0; i < k; ++i) {
        Mu = m.B_u * Mu;
        cu = m.B_u * cu;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Mu);
    Eigen::VectorXd ru = Eigen::VectorXd::Zero(m.spec.u_dim);
    for (int i = 0; i < 20000; ++i) {
        Eigen::VectorXd next = lu.solve(ru - cu);
        if ((next - ru).lpNorm<Eigen::Infinity>() <= 1e-16 * (1.0 + next.lpNorm<Eigen::Infinity>())) {
            ru = next;
            break;
        }
        ru = next;
    }

    OraclePeriodicResult res;
    res.rs = rs;
    res.rc = rc;
    res.ru = ru;
    res.period = static_cast<long>(k) * m.spec.period_q + static_cast<long>(n) * m.spec.period_p +
                 m.spec.tau_pq + m.spec.tau_qp;
    res.central_eigenvalue = ret.derivative(rc);
    Eigen::EigenSolver<Eigen::MatrixXd> es_s(Ms), es_u(Mu);
    for (int i = 0; i < es_s.eigenvalues().size(); ++i)
        res.spectrum.push_back(es_s.eigenvalues()(i));
    res.spectrum.push_back(res.central_eigenvalue);
    for (int i = 0; i < es_u.eigenvalues().size(); ++i)
        res.spectrum.push_back(es_u.eigenvalues()(i));
    return res;
}

ChartPoint iterate_q_blocks_from_unfolding(const ModelDiffeomorphism& m, int i) {
    ChartPoint p;
    p.chart = Chart::Q;
    p.xs = m.a_s;
    p.xc = m.spec.t;
    p.xu = Eigen::VectorXd::Zero(m.spec.u_dim);
    for (int j = 0; j < i; ++j) p = apply_block(m, p, BlockKind::QBlock);
    return p;
}

}  // namespace cyclelab
