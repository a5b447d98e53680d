#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace cyclelab {

// Closed interval [lo, hi]; lo > hi encodes the empty set.
struct Interval {
    double lo = 1.0;
    double hi = 0.0;

    static Interval empty() { return {1.0, 0.0}; }
    bool is_empty() const { return !(lo <= hi); }
    double width() const { return is_empty() ? 0.0 : hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return !is_empty() && lo <= x && x <= hi; }
    bool contains(const Interval& o) const {
        return o.is_empty() || (!is_empty() && lo <= o.lo && o.hi <= hi);
    }

    Interval intersect(const Interval& o) const {
        if (is_empty() || o.is_empty()) return empty();
        Interval r{std::max(lo, o.lo), std::min(hi, o.hi)};
        return r.is_empty() ? empty() : r;
    }
};

// Sequential integer power. Matches the rounding of step-by-step map
// iteration, which is what the certificate equations are checked against.
inline double powi(double b, int e) {
    if (e < 0) return 1.0 / powi(b, -e);
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

inline double rel_diff(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

// Newton-polish x so that powi(x, e) == target as closely as the arithmetic
// allows. Used when a tuned multiplier must satisfy an integer-power relation
// to ~1 ulp rather than to pow()'s accumulated error.
inline double polish_root_power(double x, int e, double target) {
    for (int it = 0; it < 4; ++it) {
        double p = powi(x, e);
        if (p == target) break;
        // x <- x * (target/p)^(1/e), linearized
        double corr = (target / p - 1.0) / static_cast<double>(e);
        x *= (1.0 + corr);
    }
    return x;
}

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    bool ok = false;
};

// Bisection on a bracketing interval followed by one Newton polish.
// f must be continuous; fa = f(a), fb = f(b) with fa*fb <= 0.
inline RootResult bisect_newton(const std::function<double(double)>& f,
                                const std::function<double(double)>& df, double a, double b,
                                double fa, double fb, double residual_tol) {
    RootResult res;
    if (fa == 0.0) { res = {a, 0.0, true}; return res; }
    if (fb == 0.0) { res = {b, 0.0, true}; return res; }
    if ((fa < 0) == (fb < 0)) return res;
    double lo = a, hi = b, flo = fa;
    double xm = lo, fm = flo;
    for (int it = 0; it < 200; ++it) {
        xm = 0.5 * (lo + hi);
        if (xm <= lo || xm >= hi) break;  // interval exhausted at double precision
        fm = f(xm);
        if (std::abs(fm) <= residual_tol || fm == 0.0) break;
        if ((fm < 0) == (flo < 0)) {
            lo = xm;
            flo = fm;
        } else {
            hi = xm;
        }
    }
    // One Newton step if the derivative is usable and the step stays bracketed.
    if (df) {
        double d = df(xm);
        if (std::isfinite(d) && d != 0.0) {
            double xn = xm - fm / d;
            if (xn > a && xn < b) {
                double fn = f(xn);
                if (std::abs(fn) < std::abs(fm)) { xm = xn; fm = fn; }
            }
        }
    }
    res = {xm, std::abs(fm), true};
    return res;
}

// Shortest round-trip decimal representation of a double.
std::string shortest_repr(double v);

}  // namespace cyclelab
