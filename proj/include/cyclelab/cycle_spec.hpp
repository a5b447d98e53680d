#pragma once

#include <string>

#include "cyclelab/central_map.hpp"
#include "cyclelab/numeric.hpp"

namespace cyclelab {

// All scalar parameters of a simple/semi-simple cycle.
struct CycleSpec {
    double lambda = 0.5;  // central multiplier at P, 0 < |lambda| < 1
    double beta = 2.0;    // central multiplier at Q, |beta| > 1
    int sign_t1 = +1;     // orientation of the central unfolding map
    int sign_t2 = +1;     // orientation of the central transition map
    int period_p = 1;
    int period_q = 1;
    int tau_pq = 1;  // unfolding time
    int tau_qp = 1;  // transition time
    int s_dim = 1;
    int u_dim = 1;
    double delta = 0.2;  // I = [1-delta, 1+delta]
    double t = 0.0;      // unfolding parameter, |t| <= epsilon
    double epsilon = 0.5;

    void validate() const;

    Interval interval_I() const { return {1.0 - delta, 1.0 + delta}; }
    // Chart central ranges; symmetric so theta2 images of I land inside U_P.
    Interval central_range_p() const { return {-1.0 - delta, 1.0 + delta}; }
    Interval central_range_q() const { return {-1.0 - delta, 1.0 + delta}; }

    std::string to_json_string(int indent = 2) const;
    static CycleSpec from_json_string(const std::string& text);
    static CycleSpec from_json_file(const std::string& path);
};

// The four central maps of a (semi-)simple cycle plus the bookkeeping the
// dictionary needs (periods, transition times, dimensions).
struct CentralMapSet {
    CentralMap psi;     // expansion at Q
    CentralMap theta1;  // unfolding
    CentralMap phi;     // contraction at P
    CentralMap theta2;  // transition
    double delta = 0.2;
    double t = 0.0;
    int period_p = 1, period_q = 1, tau_pq = 1, tau_qp = 1;
    int s_dim = 1, u_dim = 1;

    Interval interval_I() const { return {1.0 - delta, 1.0 + delta}; }
    Interval central_range_p() const { return {-1.0 - delta, 1.0 + delta}; }
    Interval central_range_q() const { return {-1.0 - delta, 1.0 + delta}; }

    static CentralMapSet from_spec(const CycleSpec& spec);
};

}  // namespace cyclelab
