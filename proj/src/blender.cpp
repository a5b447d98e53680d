#include "cyclelab/blender.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "cyclelab/errors.hpp"

namespace cyclelab {

using nlohmann::json;

BlenderModel BlenderModel::make(const CentralMap& a, const CentralMap& b, Interval base) {
    if (base.is_empty()) throw InvalidSpec("blender base interval is empty");
    BlenderModel m;
    m.branch_a = a;
    m.branch_b = b;
    m.base = base;
    double da = std::abs(a.derivative(base.mid()));
    double db = std::abs(b.derivative(base.mid()));
    m.mu_min = std::min(da, db);
    if (!(m.mu_min > 1.0))
        throw InvalidSpec("blender branches must expand: min |derivative| = " +
                          shortest_repr(m.mu_min));
    auto fixed_point = [&](const CentralMap& f) {
        // affine/linear branch: slope*x + offset = x
        double slope = f.derivative(base.mid());
        double off = f.eval_unchecked(0.0);
        if (slope == 1.0) throw InvalidSpec("branch slope 1 has no isolated fixed point");
        return off / (1.0 - slope);
    };
    m.a_fixed = fixed_point(a);
    m.b_fixed = fixed_point(b);
    m.distinguished_inside = base.contains(m.a_fixed) && base.contains(m.b_fixed);
    return m;
}

namespace {

// One covering sweep: points of C_c with a branch preimage inside S.
// The union of the two branch images must stay an interval (overlap).
Interval covering_step(const BlenderModel& m, const Interval& S) {
    Interval ia = m.branch_a.image(S).intersect(m.base);
    Interval ib = m.branch_b.image(S).intersect(m.base);
    if (ia.is_empty() && ib.is_empty()) return Interval::empty();
    if (ia.is_empty()) return ib;
    if (ib.is_empty()) return ia;
    bool overlap = !(ia.hi < ib.lo || ib.hi < ia.lo);
    if (!overlap) {
        // keep the wider component; the covering has torn in the middle
        return ia.width() >= ib.width() ? ia : ib;
    }
    return {std::min(ia.lo, ib.lo), std::max(ia.hi, ib.hi)};
}

double endpoint_slack(const BlenderModel& m, const Interval& region, double x) {
    // how far x sits inside the most generous branch image of the region
    double best = -std::numeric_limits<double>::infinity();
    for (const CentralMap* br : {&m.branch_a, &m.branch_b}) {
        Interval img = br->image(region);
        if (img.contains(x)) best = std::max(best, std::min(x - img.lo, img.hi - x));
    }
    return best;
}

}  // namespace

SuperpositionCertificate verify_superposition(const BlenderModel& model, int depth) {
    if (depth < 1) throw InvalidSpec("depth must be positive");
    Interval region = model.base;
    for (int d = 0; d < depth; ++d) {
        region = covering_step(model, region);
        if (region.is_empty() || region.width() <= 1e-12)
            throw EmptyRegion("covering degenerated after " + std::to_string(d + 1) +
                              " iterations");
    }
    // band between the stable positions of the distinguished points
    Interval band{std::min(model.a_fixed, model.b_fixed),
                  std::max(model.a_fixed, model.b_fixed)};
    region = region.intersect(band);
    if (region.is_empty() || region.width() <= 1e-12)
        throw EmptyRegion("region outside the distinguished band");

    SuperpositionCertificate cert;
    cert.region = region;
    cert.depth = depth;
    double slack_lo = endpoint_slack(model, region, region.lo);
    double slack_hi = endpoint_slack(model, region, region.hi);
    cert.margin = std::min(slack_lo, slack_hi);
    if (!(cert.margin > 0.0)) throw EmptyRegion("covering margin not positive");
    return cert;
}

RobustnessVerdict verify_robust(const BlenderModel& model, double rho, int depth) {
    if (rho < 0.0) throw InvalidSpec("rho must be nonnegative");
    auto perturbed = [&](double dsa, double doa, double dsb, double dob) {
        auto bump = [&](const CentralMap& f, double ds, double doff) {
            double slope = f.derivative(model.base.mid()) + ds;
            double off = f.eval_unchecked(0.0) + doff;
            return CentralMap::affine(slope, off, f.domain());
        };
        return BlenderModel::make(bump(model.branch_a, dsa, doa),
                                  bump(model.branch_b, dsb, dob), model.base);
    };

    RobustnessVerdict verdict;
    verdict.robust = true;
    verdict.min_margin = std::numeric_limits<double>::infinity();
    auto run = [&](double a, double b, double c, double d) {
        try {
            auto cert = verify_superposition(perturbed(a, b, c, d), depth);
            verdict.min_margin = std::min(verdict.min_margin, cert.margin);
        } catch (const Error&) {
            verdict.robust = false;
            ++verdict.samples_failed;
        }
    };

    const double steps[3] = {-rho, 0.0, rho};
    for (double a : steps)
        for (double b : steps)
            for (double c : steps)
                for (double d : steps) run(a, b, c, d);
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> u(-rho, rho);
    for (int i = 0; i < 100; ++i) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        run(a, b, c, d);
    }
    if (!verdict.robust) verdict.min_margin = 0.0;
    return verdict;
}

SaddleNodeSplit split_saddle_node(double r, double e, Interval base) {
    if (!(e > 0.0)) throw InvalidSpec("unfolding size e must be positive");
    double root = std::sqrt(e);
    SaddleNodeSplit s;
    s.e = e;
    s.s_minus = r - root;
    s.s_plus = r + root;
    if (!base.contains(s.s_minus) || !base.contains(s.s_plus))
        throw RootsOutsideBase("saddle-node roots leave the base interval");
    s.deriv_minus = 1.0 - 2.0 * root;
    s.deriv_plus = 1.0 + 2.0 * root;
    s.connecting = {s.s_minus, s.s_plus};
    return s;
}

RobustCycleReport assemble_robust_cycle_certificate(const SaddleNodeSplit& split,
                                                    const BlenderModel& model,
                                                    const StabilizationCertificate& cert,
                                                    double rho, int depth) {
    RobustCycleReport rep;

    // (I) a distinguished fixed point on the expanding side of the split,
    // with a uniform hyperbolicity margin.
    rep.margin_distinguished = model.mu_min - 1.0;
    if (!(rep.margin_distinguished > 0.0))
        throw MarginViolated("I", "no expansion margin at the distinguished point");
    if (!(split.deriv_plus > 1.0))
        throw MarginViolated("I", "S+ is not centrally expanding");

    // (II) the strong-homoclinic witness, taken to blender coordinates by
    // the chart centered at the saddle-node with scale sqrt(e).
    if (!cert.strong_homoclinic_itinerary)
        throw MarginViolated("II", "certificate has no strong homoclinic witness");
    rep.chart_center = cert.saddle_node.r;
    rep.chart_scale = std::sqrt(split.e);
    double witness = (cert.saddle_node.r - rep.chart_center) / rep.chart_scale;
    rep.witness_in_blender_coords = witness;
    SuperpositionCertificate sup = verify_superposition(model, depth);
    if (!sup.region.contains(witness))
        throw MarginViolated("II", "witness outside the superposition region");
    rep.margin_superposition = std::min(witness - sup.region.lo, sup.region.hi - witness);
    if (!(rep.margin_superposition > 0.0))
        throw MarginViolated("II", "witness sits on the region boundary");

    // (III) openness: the blender survives rho-perturbations and the
    // certificate residual slopes stay O(rho) under beta perturbations.
    RobustnessVerdict rv = verify_robust(model, rho, depth);
    if (!rv.robust) throw MarginViolated("III", "covering lost under rho-perturbation");
    rep.margin_robustness = rv.min_margin;
    for (double probe : {rho, 0.1 * rho}) {
        StabilizationCertificate wig = cert;
        wig.psi_tilde = cert.psi_tilde.rescaled_base(1.0 + probe);
        auto res = reverify_certificate(wig);
        double worst = 0.0;
        for (const auto& [key, val] : res) {
            double base_val = cert.residuals.count(key) ? cert.residuals.at(key) : 0.0;
            worst = std::max(worst, std::abs(val - base_val));
        }
        rep.residual_slopes["rho=" + shortest_repr(probe)] = worst / probe;
    }
    return rep;
}

std::string SuperpositionCertificate::to_json_string(int indent) const {
    json j;
    j["region"] = {region.lo, region.hi};
    j["depth"] = depth;
    j["margin"] = margin;
    return j.dump(indent);
}

std::string RobustCycleReport::to_json_string(int indent) const {
    json j;
    j["margin_distinguished"] = margin_distinguished;
    j["margin_superposition"] = margin_superposition;
    j["margin_robustness"] = margin_robustness;
    j["witness_in_blender_coords"] = witness_in_blender_coords;
    j["chart_center"] = chart_center;
    j["chart_scale"] = chart_scale;
    j["residual_slopes"] = residual_slopes;
    return j.dump(indent);
}

}  // namespace cyclelab
