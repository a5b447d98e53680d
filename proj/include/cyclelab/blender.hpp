#pragma once

#include <map>
#include <string>

#include "cyclelab/central_map.hpp"
#include "cyclelab/stabilizer.hpp"

namespace cyclelab {

// Central-coordinate blender-horseshoe model: two expanding branches over a
// base interval whose images overlap (the central covering condition).
struct BlenderModel {
    CentralMap branch_a, branch_b;
    Interval base;           // C_c
    double mu_min = 1.0;     // common expansion lower bound
    double a_fixed = 0.0;    // fixed point of branch_a (distinguished point A)
    double b_fixed = 0.0;    // fixed point of branch_b (distinguished point B)
    bool distinguished_inside = false;

    static BlenderModel make(const CentralMap& a, const CentralMap& b, Interval base);
};

struct SuperpositionCertificate {
    Interval region;
    int depth = 0;
    double margin = 0.0;  // least slack before an endpoint loses every branch
    std::string to_json_string(int indent = 2) const;
};

// Greedy covering: region of x whose branch preimages stay in C_c for
// `depth` iterations, intersected with the band between the distinguished
// fixed points. Throws EmptyRegion when the covering degenerates.
SuperpositionCertificate verify_superposition(const BlenderModel& model, int depth);

struct RobustnessVerdict {
    bool robust = false;
    double min_margin = 0.0;
    int samples_failed = 0;
};

// Corner sampling (3^4 sign patterns of size rho on both branches' slope and
// offset) plus 100 seeded interior samples.
RobustnessVerdict verify_robust(const BlenderModel& model, double rho, int depth);

struct SaddleNodeSplit {
    double e = 0.0;
    double s_minus = 0.0, s_plus = 0.0;
    double deriv_minus = 0.0, deriv_plus = 0.0;
    Interval connecting;  // (s_minus, s_plus)
};

// Unfolds x -> x + (x - r)^2 - e into the two hyperbolic fixed points.
SaddleNodeSplit split_saddle_node(double r, double e, Interval base);

struct RobustCycleReport {
    double margin_distinguished = 0.0;  // step I
    double margin_superposition = 0.0;  // step II
    double margin_robustness = 0.0;     // step III
    double witness_in_blender_coords = 0.0;
    double chart_center = 0.0, chart_scale = 0.0;
    std::map<std::string, double> residual_slopes;  // certificate drift per rho
    std::string to_json_string(int indent = 2) const;
};

// Ties a flattened/connected stabilization certificate to the blender model:
// (I) hyperbolicity margin at the distinguished point identified with S+,
// (II) the strong-homoclinic witness maps into the superposition region,
// (III) all margins survive perturbations of size rho.
RobustCycleReport assemble_robust_cycle_certificate(const SaddleNodeSplit& split,
                                                    const BlenderModel& model,
                                                    const StabilizationCertificate& cert,
                                                    double rho, int depth);

}  // namespace cyclelab
