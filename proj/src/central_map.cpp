#include "cyclelab/central_map.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>

#include "cyclelab/errors.hpp"

namespace cyclelab {

std::string shortest_repr(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

CentralMap::CentralMap(CentralMapKind kind, Interval domain)
    : kind_(std::move(kind)), domain_(domain) {
    if (const auto* pw = std::get_if<PiecewiseLinearMap>(&kind_)) validate_piecewise(*pw);
}

CentralMap CentralMap::linear(double slope, Interval dom) { return {LinearMap{slope}, dom}; }
CentralMap CentralMap::affine(double slope, double offset, Interval dom) {
    return {AffineMap{slope, offset}, dom};
}
CentralMap CentralMap::theta1(int sign, double t, Interval dom) {
    return {Theta1Map{sign, t}, dom};
}
CentralMap CentralMap::theta2(int sign, Interval dom) { return {Theta2Map{sign}, dom}; }
CentralMap CentralMap::piecewise(PiecewiseLinearMap pw, Interval dom) {
    return {std::move(pw), dom};
}
CentralMap CentralMap::quadratic(double center, double e, Interval dom) {
    return {QuadraticMap{center, e}, dom};
}

void validate_piecewise(const PiecewiseLinearMap& pw) {
    if (pw.base_slope == 0.0) throw InvalidSpec("piecewise base slope must be nonzero");
    const bool inc = pw.base_slope > 0.0;
    double prev_hi = -std::numeric_limits<double>::infinity();
    for (const auto& w : pw.windows) {
        if (w.xs.size() < 2 || w.xs.size() != w.ys.size() || w.xs.size() != w.pinned.size())
            throw InvalidSpec("piecewise window needs matched xs/ys/pinned of size >= 2");
        for (size_t i = 1; i < w.xs.size(); ++i) {
            if (!(w.xs[i] > w.xs[i - 1]))
                throw InvalidSpec("piecewise window knots must be strictly increasing");
            bool mono = inc ? (w.ys[i] > w.ys[i - 1]) : (w.ys[i] < w.ys[i - 1]);
            if (!mono) throw InvalidSpec("piecewise window values must be strictly monotone");
        }
        if (w.xs.front() <= 0.0 && w.xs.back() >= 0.0)
            throw InvalidSpec("piecewise window must not straddle zero");
        if (w.ys.front() != pw.base_slope * w.xs.front() ||
            w.ys.back() != pw.base_slope * w.xs.back())
            throw InvalidSpec("piecewise window edges must match the linear base exactly");
        if (!(w.xs.front() > prev_hi)) throw InvalidSpec("piecewise windows must be disjoint");
        prev_hi = w.xs.back();
    }
}

namespace {

const PiecewiseWindow* find_window(const PiecewiseLinearMap& pw, double x) {
    for (const auto& w : pw.windows)
        if (x >= w.xs.front() && x <= w.xs.back()) return &w;
    return nullptr;
}

// Index i with xs[i] <= x <= xs[i+1].
size_t segment_index(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    size_t i = static_cast<size_t>(it - xs.begin());
    if (i == 0) return 0;
    if (i >= xs.size()) return xs.size() - 2;
    return i - 1;
}

double pw_eval(const PiecewiseLinearMap& pw, double x) {
    const PiecewiseWindow* w = find_window(pw, x);
    if (!w) return pw.base_slope * x;
    // Exact at knots so pinned orbit values reproduce bit-for-bit.
    auto it = std::lower_bound(w->xs.begin(), w->xs.end(), x);
    if (it != w->xs.end() && *it == x) return w->ys[static_cast<size_t>(it - w->xs.begin())];
    size_t i = segment_index(w->xs, x);
    double slope = (w->ys[i + 1] - w->ys[i]) / (w->xs[i + 1] - w->xs[i]);
    return w->ys[i] + (x - w->xs[i]) * slope;
}

double pw_derivative(const PiecewiseLinearMap& pw, double x) {
    const PiecewiseWindow* w = find_window(pw, x);
    if (!w) return pw.base_slope;
    auto it = std::lower_bound(w->xs.begin(), w->xs.end(), x);
    if (it != w->xs.end() && *it == x) {
        size_t i = static_cast<size_t>(it - w->xs.begin());
        double left = (i == 0) ? pw.base_slope
                               : (w->ys[i] - w->ys[i - 1]) / (w->xs[i] - w->xs[i - 1]);
        double right = (i + 1 == w->xs.size())
                           ? pw.base_slope
                           : (w->ys[i + 1] - w->ys[i]) / (w->xs[i + 1] - w->xs[i]);
        if (rel_diff(left, right) > 64 * std::numeric_limits<double>::epsilon())
            throw AtBreakpoint("one-sided slopes differ at x=" + shortest_repr(x));
        return right;
    }
    size_t i = segment_index(w->xs, x);
    return (w->ys[i + 1] - w->ys[i]) / (w->xs[i + 1] - w->xs[i]);
}

double pw_preimage(const PiecewiseLinearMap& pw, double y) {
    const bool inc = pw.base_slope > 0.0;
    for (const auto& w : pw.windows) {
        double vlo = inc ? w.ys.front() : w.ys.back();
        double vhi = inc ? w.ys.back() : w.ys.front();
        if (y >= vlo && y <= vhi) {
            // binary search on values (monotone within the window)
            const auto& ys = w.ys;
            size_t lo = 0, hi = ys.size() - 1;
            while (hi - lo > 1) {
                size_t m = (lo + hi) / 2;
                bool left = inc ? (ys[m] <= y) : (ys[m] >= y);
                if (left) lo = m; else hi = m;
            }
            if (ys[lo] == y) return w.xs[lo];
            if (ys[hi] == y) return w.xs[hi];
            double slope = (ys[hi] - ys[lo]) / (w.xs[hi] - w.xs[lo]);
            return w.xs[lo] + (y - ys[lo]) / slope;
        }
    }
    return y / pw.base_slope;
}

}  // namespace

double CentralMap::eval_unchecked(double x) const {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearMap>) return m.slope * x;
            else if constexpr (std::is_same_v<T, AffineMap>) return m.slope * x + m.offset;
            else if constexpr (std::is_same_v<T, Theta1Map>)
                return (m.sign > 0 ? x : -x) + m.t;
            else if constexpr (std::is_same_v<T, Theta2Map>)
                return (m.sign > 0 ? (x - 1.0) : -(x - 1.0)) - 1.0;
            else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) return pw_eval(m, x);
            else {
                double d = x - m.center;
                return x + d * d - m.e;
            }
        },
        kind_);
}

double CentralMap::eval(double x) const {
    if (!domain_.contains(x))
        throw OutOfDomain("x=" + shortest_repr(x) + " outside map domain [" +
                          shortest_repr(domain_.lo) + "," + shortest_repr(domain_.hi) + "]");
    return eval_unchecked(x);
}

double CentralMap::derivative(double x) const {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearMap>) return m.slope;
            else if constexpr (std::is_same_v<T, AffineMap>) return m.slope;
            else if constexpr (std::is_same_v<T, Theta1Map>) return m.sign > 0 ? 1.0 : -1.0;
            else if constexpr (std::is_same_v<T, Theta2Map>) return m.sign > 0 ? 1.0 : -1.0;
            else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) return pw_derivative(m, x);
            else return 1.0 + 2.0 * (x - m.center);
        },
        kind_);
}

bool CentralMap::at_breakpoint(double x) const {
    const auto* pw = piecewise_data();
    if (!pw) return false;
    const PiecewiseWindow* w = find_window(*pw, x);
    if (!w) return false;
    auto it = std::lower_bound(w->xs.begin(), w->xs.end(), x);
    if (it == w->xs.end() || *it != x) return false;
    size_t i = static_cast<size_t>(it - w->xs.begin());
    double left =
        (i == 0) ? pw->base_slope : (w->ys[i] - w->ys[i - 1]) / (w->xs[i] - w->xs[i - 1]);
    double right = (i + 1 == w->xs.size())
                       ? pw->base_slope
                       : (w->ys[i + 1] - w->ys[i]) / (w->xs[i + 1] - w->xs[i]);
    return rel_diff(left, right) > 64 * std::numeric_limits<double>::epsilon();
}

double CentralMap::nearest_breakpoint_distance(double x) const {
    const auto* pw = piecewise_data();
    if (!pw) return std::numeric_limits<double>::infinity();
    // Knots with bit-equal one-sided slopes are differentiable points, not
    // breakpoints (the flattening kinks are built that way on purpose).
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : pw->windows) {
        for (size_t i = 0; i < w.xs.size(); ++i) {
            double left = (i == 0) ? pw->base_slope
                                   : (w.ys[i] - w.ys[i - 1]) / (w.xs[i] - w.xs[i - 1]);
            double right = (i + 1 == w.xs.size())
                               ? pw->base_slope
                               : (w.ys[i + 1] - w.ys[i]) / (w.xs[i + 1] - w.xs[i]);
            if (rel_diff(left, right) > 64 * std::numeric_limits<double>::epsilon())
                best = std::min(best, std::abs(x - w.xs[i]));
        }
    }
    return best;
}

double CentralMap::preimage(double y) const {
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearMap>) return y / m.slope;
            else if constexpr (std::is_same_v<T, AffineMap>) return (y - m.offset) / m.slope;
            else if constexpr (std::is_same_v<T, Theta1Map>)
                return m.sign > 0 ? (y - m.t) : -(y - m.t);
            else if constexpr (std::is_same_v<T, Theta2Map>)
                return m.sign > 0 ? (y + 1.0) + 1.0 : 1.0 - (y + 1.0);
            else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) return pw_preimage(m, y);
            else {
                // monotone increasing branch of x + (x-r)^2 - e
                double r = m.center;
                double disc = 0.25 + (y - r + m.e);
                if (disc < 0.0) throw OutOfDomain("quadratic preimage does not exist");
                return r - 0.5 + std::sqrt(disc);
            }
        },
        kind_);
}

bool CentralMap::increasing() const {
    return std::visit(
        [&](const auto& m) -> bool {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LinearMap>) return m.slope > 0.0;
            else if constexpr (std::is_same_v<T, AffineMap>) return m.slope > 0.0;
            else if constexpr (std::is_same_v<T, Theta1Map>) return m.sign > 0;
            else if constexpr (std::is_same_v<T, Theta2Map>) return m.sign > 0;
            else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) return m.base_slope > 0.0;
            else return true;  // quadratic: monotone on its admitted base
        },
        kind_);
}

Interval CentralMap::image(const Interval& xs) const {
    if (xs.is_empty()) return Interval::empty();
    double a = eval_unchecked(xs.lo), b = eval_unchecked(xs.hi);
    if (const auto* q = std::get_if<QuadraticMap>(&kind_)) {
        double crit = q->center - 0.5;  // vertex of x + (x-r)^2 - e
        if (xs.contains(crit)) {
            double v = eval_unchecked(crit);
            return {std::min({a, b, v}), std::max(a, b)};
        }
    }
    return {std::min(a, b), std::max(a, b)};
}

Interval CentralMap::inner_preimage_interval(const Interval& target) const {
    if (target.is_empty()) return Interval::empty();
    double pa = preimage(target.lo), pb = preimage(target.hi);
    double lo = std::min(pa, pb), hi = std::max(pa, pb);
    if (domain_.contains(lo) == false && lo < domain_.lo) lo = domain_.lo;
    if (domain_.contains(hi) == false && hi > domain_.hi) hi = domain_.hi;
    // Certify the endpoints by direct evaluation; nudge inward on failure.
    for (int i = 0; i < 8 && lo <= hi; ++i) {
        if (target.contains(eval_unchecked(lo))) break;
        lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
    }
    for (int i = 0; i < 8 && lo <= hi; ++i) {
        if (target.contains(eval_unchecked(hi))) break;
        hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
    }
    if (!(lo <= hi)) return Interval::empty();
    if (!target.contains(eval_unchecked(lo)) || !target.contains(eval_unchecked(hi)))
        return Interval::empty();
    return {lo, hi};
}

CentralMap CentralMap::rescaled_base(double sigma) const {
    const auto* pw = piecewise_data();
    if (!pw) {
        if (const auto* lin = std::get_if<LinearMap>(&kind_))
            return CentralMap::linear(lin->slope * sigma, domain_);
        throw InvalidSpec("rescaled_base only applies to linear/piecewise maps");
    }
    PiecewiseLinearMap out = *pw;
    out.base_slope = pw->base_slope * sigma;
    for (auto& w : out.windows) {
        for (size_t i = 0; i < w.xs.size(); ++i)
            if (!w.pinned[i]) w.ys[i] = out.base_slope * w.xs[i];
    }
    return CentralMap::piecewise(std::move(out), domain_);
}

double CentralMap::sup_distance_to_linear() const {
    const auto* pw = piecewise_data();
    if (!pw) return 0.0;
    // The difference to the base line is piecewise linear, so the sup over a
    // window is attained at a knot.
    double sup = 0.0;
    for (const auto& w : pw->windows)
        for (size_t i = 0; i < w.xs.size(); ++i)
            sup = std::max(sup, std::abs(w.ys[i] - pw->base_slope * w.xs[i]));
    return sup;
}

}  // namespace cyclelab
