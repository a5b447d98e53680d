#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cyclelab/cycle_spec.hpp"
#include "cyclelab/ifs.hpp"

namespace cyclelab {

enum class Chart { P, Q };
enum class BlockKind { PBlock, QBlock, Transit1, Transit2 };

struct ChartPoint {
    Chart chart = Chart::P;
    Eigen::VectorXd xs;  // strong stable coordinates
    double xc = 0.0;     // central coordinate
    Eigen::VectorXd xu;  // strong unstable coordinates
};

// Optional overrides for the strong-direction matrices and heteroclinic
// offsets. Defaults: diagonal 1/2 contractions, diagonal 2 expansions,
// offset vectors with all entries 1/2.
struct ModelOverrides {
    std::optional<Eigen::MatrixXd> A_s, B_s, T1_s, T2_s;
    std::optional<Eigen::MatrixXd> A_u, B_u, T1_u, T2_u;
    std::optional<Eigen::VectorXd> a_s, a_u;
};

// The affine model family f_t on charts U_P, U_Q. Ground-truth oracle for
// everything the one-dimensional quotient predicts.
struct ModelDiffeomorphism {
    CycleSpec spec;
    Eigen::MatrixXd A_s, B_s, T1_s, T2_s;  // s x s, operator norm < 1
    Eigen::MatrixXd A_u, B_u, T1_u, T2_u;  // u x u, inverse operator norm < 1
    Eigen::VectorXd a_s, a_u;
    CentralMap psi_central, phi_central;
    // Transit windows: central radius delta around 0 (resp. 1), strong-u
    // radius around a_u (resp. 0). Exposed, not derived from the paper.
    double transit_radius_c;
    double transit_radius_u;

    Interval central_box_p() const { return spec.central_range_p(); }
    Interval central_box_q() const { return spec.central_range_q(); }

    bool in_chart_box(const ChartPoint& p) const;
    bool in_transit_window(const ChartPoint& p) const;

    CentralMapSet central_maps() const;
};

ModelDiffeomorphism build_model(const CycleSpec& spec, const ModelOverrides& ov = {});

// Semi-simple variant: replaces the linear central maps by the given ones.
ModelDiffeomorphism build_model(const CycleSpec& spec, const CentralMap& psi,
                                const CentralMap& phi, const ModelOverrides& ov = {});

// One period-block of f_t. Transit blocks take precedence on their declared
// windows; the applied block is reported alongside the image point.
struct StepResult {
    ChartPoint point;
    BlockKind applied;
};
StepResult step(const ModelDiffeomorphism& model, const ChartPoint& p);

// Explicit block application (no window dispatch) and its inverse.
ChartPoint apply_block(const ModelDiffeomorphism& model, const ChartPoint& p, BlockKind block);
ChartPoint apply_block_inverse(const ModelDiffeomorphism& model, const ChartPoint& p,
                               BlockKind block);

struct OraclePeriodicResult {
    Eigen::VectorXd rs;
    double rc = 0.0;
    Eigen::VectorXd ru;
    long period = 0;
    double central_eigenvalue = 0.0;
    std::vector<std::complex<double>> spectrum;  // full return-derivative spectrum
};

// Solves the genuine fixed point of the (s+1+u)-dimensional return map along
// the itinerary: contraction iteration in the strong factors, root polish in
// the central factor near `central_guess`.
OraclePeriodicResult oracle_periodic(const ModelDiffeomorphism& model, const Itinerary& it,
                                     double central_guess);

// Iterates i Q-blocks from Y_{Q,t} = (a_s, t, 0); used to cross-check
// homoclinic-point entries against the full model.
ChartPoint iterate_q_blocks_from_unfolding(const ModelDiffeomorphism& model, int i);

}  // namespace cyclelab
