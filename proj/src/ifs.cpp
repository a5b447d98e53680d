#include "cyclelab/ifs.hpp"

#include <algorithm>
#include <cmath>

#include "cyclelab/errors.hpp"

namespace cyclelab {

IFSReturnMap::IFSReturnMap(CentralMapSet maps, Itinerary it) : maps_(std::move(maps)), it_(it) {
    if (it_.k < 0 || it_.n < 0) throw InvalidSpec("itinerary powers must be nonnegative");
    compute_domain();
}

IFSReturnMap compose_return(const CycleSpec& spec, Itinerary it) {
    return IFSReturnMap(CentralMapSet::from_spec(spec), it);
}

IFSReturnMap compose_return(const CentralMapSet& maps, Itinerary it) {
    return IFSReturnMap(maps, it);
}

// The domain is the maximal closed subinterval of I whose full orbit stays in
// the chart central ranges: theta2(x) and its n phi-iterates in C_P, the
// theta1 image and its k psi-iterates in C_Q, final value in I. All factors
// are strictly monotone, so a backward pullback of interval constraints is
// exact; endpoints are certified by forward evaluation (inner nudging).
void IFSReturnMap::compute_domain() {
    const Interval I = maps_.interval_I();
    const Interval CP = maps_.central_range_p();
    const Interval CQ = maps_.central_range_q();

    Interval allowed = I;  // constraint on the final value z_k
    for (int i = 0; i < it_.k; ++i) {
        allowed = maps_.psi.inner_preimage_interval(allowed).intersect(CQ);
        if (allowed.is_empty()) { dom_ = Interval::empty(); return; }
    }
    // z_0 = theta1(y_n) must lie in C_Q and in the psi-pullback set
    allowed = allowed.intersect(CQ);
    Interval y = maps_.theta1.inner_preimage_interval(allowed).intersect(CP);
    if (y.is_empty()) { dom_ = Interval::empty(); return; }
    for (int i = 0; i < it_.n; ++i) {
        y = maps_.phi.inner_preimage_interval(y).intersect(CP);
        if (y.is_empty()) { dom_ = Interval::empty(); return; }
    }
    dom_ = maps_.theta2.inner_preimage_interval(y).intersect(I);
    if (dom_.is_empty()) dom_ = Interval::empty();
}

double IFSReturnMap::evaluate_unchecked(double x) const {
    double v = maps_.theta2.eval_unchecked(x);
    for (int i = 0; i < it_.n; ++i) v = maps_.phi.eval_unchecked(v);
    v = maps_.theta1.eval_unchecked(v);
    for (int i = 0; i < it_.k; ++i) v = maps_.psi.eval_unchecked(v);
    return v;
}

double IFSReturnMap::evaluate(double x) const {
    if (!dom_.contains(x))
        throw OutOfDomain("x=" + shortest_repr(x) + " outside return-map domain");
    return evaluate_unchecked(x);
}

double IFSReturnMap::derivative(double x) const {
    if (!dom_.contains(x))
        throw OutOfDomain("x=" + shortest_repr(x) + " outside return-map domain");
    double v = x;
    double d = maps_.theta2.derivative(v);
    v = maps_.theta2.eval_unchecked(v);
    for (int i = 0; i < it_.n; ++i) {
        d *= maps_.phi.derivative(v);
        v = maps_.phi.eval_unchecked(v);
    }
    d *= maps_.theta1.derivative(v);
    v = maps_.theta1.eval_unchecked(v);
    for (int i = 0; i < it_.k; ++i) {
        d *= maps_.psi.derivative(v);
        v = maps_.psi.eval_unchecked(v);
    }
    return d;
}

double IFSReturnMap::orbit_breakpoint_clearance(double x) const {
    double best = std::numeric_limits<double>::infinity();
    double v = x;
    best = std::min(best, maps_.theta2.nearest_breakpoint_distance(v));
    v = maps_.theta2.eval_unchecked(v);
    for (int i = 0; i < it_.n; ++i) {
        best = std::min(best, maps_.phi.nearest_breakpoint_distance(v));
        v = maps_.phi.eval_unchecked(v);
    }
    best = std::min(best, maps_.theta1.nearest_breakpoint_distance(v));
    v = maps_.theta1.eval_unchecked(v);
    for (int i = 0; i < it_.k; ++i) {
        best = std::min(best, maps_.psi.nearest_breakpoint_distance(v));
        v = maps_.psi.eval_unchecked(v);
    }
    return best;
}

std::vector<IFSReturnMap::FixedPoint> IFSReturnMap::fixed_points() const {
    std::vector<FixedPoint> out;
    if (dom_.is_empty()) return out;

    auto g = [&](double x) { return evaluate_unchecked(x) - x; };
    auto dg = [&](double x) -> double {
        try {
            return derivative(x) - 1.0;
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    constexpr int kCells = 1 << 12;
    const double a = dom_.lo, b = dom_.hi;
    if (a == b) {
        double r = g(a);
        if (std::abs(r) <= 1e-13) {
            FixedPoint fp;
            fp.x = a;
            fp.residual = std::abs(r);
            try { fp.derivative = derivative(a); } catch (const Error&) {
                fp.derivative = std::numeric_limits<double>::quiet_NaN();
                fp.at_breakpoint = true;
            }
            out.push_back(fp);
        }
        return out;
    }

    std::vector<double> xs(kCells + 1), gs(kCells + 1);
    int tiny = 0;
    for (int i = 0; i <= kCells; ++i) {
        xs[i] = a + (b - a) * (static_cast<double>(i) / kCells);
        gs[i] = g(xs[i]);
        if (std::abs(gs[i]) <= 1e-13) ++tiny;
    }

    auto finish = [&](double x, double residual) {
        FixedPoint fp;
        fp.x = x;
        fp.residual = residual;
        fp.at_breakpoint = orbit_breakpoint_clearance(x) <= 1e-10;
        try {
            fp.derivative = derivative(x);
        } catch (const Error&) {
            fp.derivative = std::numeric_limits<double>::quiet_NaN();
            fp.at_breakpoint = true;
        }
        out.push_back(fp);
    };

    // Identity-on-domain degeneracy (slope-one resonances such as
    // beta^k*lambda^n = 1 with matching offsets fix the whole interval).
    // Report the canonical representative instead of a continuum.
    if (tiny >= (kCells * 99) / 100) {
        double rep = dom_.contains(1.0) ? 1.0 : dom_.mid();
        finish(rep, std::abs(g(rep)));
        out.back().degenerate_identity = true;
        return out;
    }

    for (int i = 0; i < kCells; ++i) {
        if (gs[i] == 0.0) {
            finish(xs[i], 0.0);
            continue;
        }
        if ((gs[i] < 0) != (gs[i + 1] < 0)) {
            RootResult rr = bisect_newton(g, dg, xs[i], xs[i + 1], gs[i], gs[i + 1], 1e-13);
            if (rr.ok) finish(rr.x, rr.residual);
        }
    }
    if (gs[kCells] == 0.0) finish(xs[kCells], 0.0);

    std::sort(out.begin(), out.end(), [](const FixedPoint& l, const FixedPoint& r) {
        return l.x < r.x;
    });
    std::vector<FixedPoint> dedup;
    for (const auto& fp : out) {
        if (!dedup.empty() &&
            std::abs(fp.x - dedup.back().x) <= 1e-12 * std::max(1.0, std::abs(fp.x))) {
            if (fp.residual < dedup.back().residual) dedup.back() = fp;
        } else {
            dedup.push_back(fp);
        }
    }
    return dedup;
}

PsiPerturbation perturb_psi_fundamental_domains(const CentralMap& psi, double omega, int m,
                                                std::optional<double> via) {
    const auto* lin = std::get_if<LinearMap>(&psi.kind());
    if (!lin) throw InvalidSpec("perturb_psi_fundamental_domains needs a linear psi");
    const double b = lin->slope;
    if (!(b > 1.0))
        throw TooFewDomains("fundamental-domain rerouting requires slope > 1, got " +
                            shortest_repr(b));
    if (!(omega > 0.0)) throw TooFewDomains("omega must be positive");

    const double T = powi(b, -m);        // target beta^{-m}
    const double Tp = powi(b, -(m + 1)); // last linear preimage of the target
    if (!(omega < T * powi(b, -3)))
        throw TooFewDomains("[omega, beta^-m] holds fewer than 3 fundamental domains");
    if (via && !(*via > omega && *via < Tp))
        throw InvalidSpec("via point must lie strictly between omega and beta^{-m-1}");

    PsiPerturbation res;

    // omega already on the exact linear orbit of the target: nothing to do.
    {
        double x = omega;
        for (int q = 1; q < 4096; ++q) {
            x *= b;
            if (x == Tp && !via) {
                res.psi_tilde = psi;
                res.n_j = q + 1;
                res.sup_distance = 0.0;
                res.achieved = b * Tp;
                return res;
            }
            if (x > Tp) break;
        }
    }

    // Chain omega -> (via) -> geometric points -> Tp, then one linear step.
    std::vector<double> chain;
    chain.push_back(omega);
    double from = omega;
    if (via) {
        chain.push_back(*via);
        from = *via;
    }
    int n2 = std::max(1, static_cast<int>(std::lround(std::log(Tp / from) / std::log(b))));
    double rho = std::pow(Tp / from, 1.0 / n2);
    for (int i = 1; i < n2; ++i) chain.push_back(from * std::pow(rho, i));
    chain.push_back(Tp);
    for (size_t i = 1; i < chain.size(); ++i)
        if (!(chain[i] > chain[i - 1]))
            throw TooFewDomains("reroute chain failed to stay strictly increasing");

    PiecewiseLinearMap pw;
    pw.base_slope = b;
    PiecewiseWindow w;
    const double lo_edge = omega / b;
    w.xs.push_back(lo_edge);
    w.ys.push_back(b * lo_edge);
    w.pinned.push_back(0);
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
        w.xs.push_back(chain[i]);
        w.ys.push_back(chain[i + 1]);
        w.pinned.push_back(1);
    }
    w.xs.push_back(Tp);
    w.ys.push_back(b * Tp);
    w.pinned.push_back(0);
    pw.windows.push_back(std::move(w));

    res.psi_tilde = CentralMap::piecewise(std::move(pw), psi.domain());
    res.n_j = static_cast<int>(chain.size());  // chain steps + final linear step
    res.sup_distance = res.psi_tilde.sup_distance_to_linear();
    double x = omega;
    for (int i = 0; i < res.n_j; ++i) x = res.psi_tilde.eval_unchecked(x);
    res.achieved = x;
    return res;
}

}  // namespace cyclelab
