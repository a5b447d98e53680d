#pragma once

#include <optional>
#include <vector>

#include "cyclelab/cycle_spec.hpp"

namespace cyclelab {

// Pair of powers (k, n): k applications of psi, n applications of phi.
struct Itinerary {
    int k = 0;
    int n = 0;
    bool operator==(const Itinerary& o) const { return k == o.k && n == o.n; }
};

// The composed central return Gamma_t^{k,n} = psi^k o theta1 o phi^n o theta2
// together with its certified-inner domain inside I.
class IFSReturnMap {
public:
    IFSReturnMap(CentralMapSet maps, Itinerary it);

    const Itinerary& itinerary() const { return it_; }
    const CentralMapSet& maps() const { return maps_; }
    const Interval& domain() const { return dom_; }

    // Exact composition value; x must lie in the domain.
    double evaluate(double x) const;
    double evaluate_unchecked(double x) const;

    // Chain-rule derivative; throws AtBreakpoint if the orbit hits a knot
    // with differing one-sided slopes.
    double derivative(double x) const;

    // Distance from the orbit of x to the nearest knot of a piecewise factor.
    double orbit_breakpoint_clearance(double x) const;

    struct FixedPoint {
        double x = 0.0;
        double derivative = 0.0;
        double residual = 0.0;
        bool at_breakpoint = false;  // within 1e-10 of a knot: reported as ambiguous
        bool degenerate_identity = false;  // the return map is the identity on its domain
    };

    // All solutions of Gamma(x) = x in the domain: 2^12-cell bracketing,
    // bisection to residual <= 1e-13, one Newton polish.
    std::vector<FixedPoint> fixed_points() const;

private:
    void compute_domain();

    CentralMapSet maps_;
    Itinerary it_;
    Interval dom_;
};

IFSReturnMap compose_return(const CycleSpec& spec, Itinerary it);
IFSReturnMap compose_return(const CentralMapSet& maps, Itinerary it);

// Result of rerouting fundamental domains of a linear expansion psi so that
// the forward orbit of omega hits beta^{-m} exactly.
struct PsiPerturbation {
    CentralMap psi_tilde;
    int n_j = 0;              // psi_tilde^{n_j}(omega) = beta^{-m}
    double sup_distance = 0.0;
    double achieved = 0.0;    // value actually reached after n_j steps
};

// Builds a continuous strictly increasing piecewise-linear psi~ that agrees
// with psi on [beta^{-m-1}, 1] and near 0, and routes omega to beta^{-m}.
// `via` optionally forces one further point onto the reroute chain one step
// after omega (used for the strong-homoclinic witness).
PsiPerturbation perturb_psi_fundamental_domains(const CentralMap& psi, double omega, int m,
                                                std::optional<double> via = std::nullopt);

}  // namespace cyclelab
