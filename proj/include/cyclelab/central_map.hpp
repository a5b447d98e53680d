#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "cyclelab/numeric.hpp"

namespace cyclelab {

// One-dimensional central maps of the affine model.
//
// Linear      x -> slope*x                   (phi_lambda, psi_beta)
// Affine      x -> slope*x + offset          (blender branches)
// Theta1      x -> sign*x + t                (central unfolding map)
// Theta2      x -> sign*(x-1) - 1            (central transition map)
// Piecewise   linear base slope plus disjoint "windows" of knots; outside
//             every window the map is bit-for-bit slope*x  (psi~, phi~)
// Quadratic   x -> x + (x-r)^2 - e           (saddle-node unfolding)

struct LinearMap {
    double slope = 0.5;
};

struct AffineMap {
    double slope = 1.0;
    double offset = 0.0;
};

struct Theta1Map {
    int sign = +1;
    double t = 0.0;
};

struct Theta2Map {
    int sign = +1;
};

struct QuadraticMap {
    double center = 1.0;  // r
    double e = 0.0;       // unfolding size
};

// A window of knots overriding the linear base. Knot x-coordinates are
// strictly increasing; the first and last knot values equal base_slope*x
// bitwise so the map is continuous. `pinned[i]` marks values that must
// survive a rebuild with a rescaled base slope.
struct PiecewiseWindow {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<char> pinned;
};

struct PiecewiseLinearMap {
    double base_slope = 2.0;
    std::vector<PiecewiseWindow> windows;  // sorted, pairwise disjoint
};

using CentralMapKind =
    std::variant<LinearMap, AffineMap, Theta1Map, Theta2Map, PiecewiseLinearMap, QuadraticMap>;

class CentralMap {
public:
    CentralMap() = default;
    CentralMap(CentralMapKind kind, Interval domain);

    static CentralMap linear(double slope, Interval dom);
    static CentralMap affine(double slope, double offset, Interval dom);
    static CentralMap theta1(int sign, double t, Interval dom);
    static CentralMap theta2(int sign, Interval dom);
    static CentralMap piecewise(PiecewiseLinearMap pw, Interval dom);
    static CentralMap quadratic(double center, double e, Interval dom);

    const Interval& domain() const { return domain_; }
    const CentralMapKind& kind() const { return kind_; }

    bool is_piecewise() const { return std::holds_alternative<PiecewiseLinearMap>(kind_); }
    const PiecewiseLinearMap* piecewise_data() const {
        return std::get_if<PiecewiseLinearMap>(&kind_);
    }

    // Evaluation is defined exactly on the domain; callers that have already
    // checked membership may use eval_unchecked.
    double eval(double x) const;
    double eval_unchecked(double x) const;

    // Derivative; throws AtBreakpoint at a knot whose one-sided slopes differ.
    double derivative(double x) const;
    bool at_breakpoint(double x) const;
    double nearest_breakpoint_distance(double x) const;

    // Preimage of a value under the (strictly monotone) map. Quadratic maps
    // must be monotone over the queried range.
    double preimage(double y) const;

    // Largest interval D with eval(D) contained in `target`, certified by
    // direct evaluation at the endpoints (endpoints nudged inward until the
    // forward check passes).
    Interval inner_preimage_interval(const Interval& target) const;

    // Exact interval image for monotone kinds.
    Interval image(const Interval& xs) const;

    bool increasing() const;

    // Rebuild with the base slope scaled by sigma: pinned knot values are
    // kept, boundary/relief knots are recomputed from the new slope.
    CentralMap rescaled_base(double sigma) const;

    // sup |this - linear(base_slope)| over all windows (0 for non-piecewise).
    double sup_distance_to_linear() const;

private:
    CentralMapKind kind_{LinearMap{}};
    Interval domain_{-1e308, 1e308};
};

// Validates window structure: strict monotonicity, continuity at window
// edges, disjointness, and that no window straddles zero.
void validate_piecewise(const PiecewiseLinearMap& pw);

}  // namespace cyclelab
