#include "cyclelab/dictionary.hpp"

#include <cmath>

#include <json.hpp>

#include "cyclelab/errors.hpp"

namespace cyclelab {

using nlohmann::json;

namespace {

// theta1 o phi^i o theta2 (d) with every intermediate kept inside the chart
// central ranges; nullopt when the orbit leaves the charts.
std::optional<double> cycle_equation_value(const CentralMapSet& maps, double d, int i) {
    const Interval CP = maps.central_range_p();
    const Interval CQ = maps.central_range_q();
    if (!maps.interval_I().contains(d) && !CQ.contains(d)) return std::nullopt;
    double v = maps.theta2.eval_unchecked(d);
    if (!CP.contains(v)) return std::nullopt;
    for (int q = 0; q < i; ++q) {
        v = maps.phi.eval_unchecked(v);
        if (!CP.contains(v)) return std::nullopt;
    }
    v = maps.theta1.eval_unchecked(v);
    if (!CQ.contains(v)) return std::nullopt;
    return v;
}

}  // namespace

std::vector<PeriodicPointRecord> detect_periodic(const CentralMapSet& maps, Itinerary it) {
    std::vector<PeriodicPointRecord> out;
    IFSReturnMap ret = compose_return(maps, it);
    for (const auto& fp : ret.fixed_points()) {
        PeriodicPointRecord rec;
        rec.r = fp.x;
        rec.itinerary = it;
        rec.period = static_cast<long>(it.k) * maps.period_q +
                     static_cast<long>(it.n) * maps.period_p + maps.tau_pq + maps.tau_qp;
        rec.central_eigenvalue = fp.derivative;
        rec.residual = fp.residual;
        rec.at_breakpoint = fp.at_breakpoint;
        rec.degenerate_identity = fp.degenerate_identity;
        rec.neutral = std::abs(std::abs(fp.derivative) - 1.0) <= kNeutralBand;
        rec.s_index = rec.neutral ? maps.s_dim
                                  : (std::abs(fp.derivative) > 1.0 ? maps.s_dim : maps.s_dim + 1);
        // Both intersections of (A) hold whenever r lies in I: the product
        // structure provides the cubes, no geometry to re-derive here.
        rec.flag_ss_meets_Wu_Q = maps.interval_I().contains(fp.x);
        rec.flag_uu_meets_Ws_P = rec.flag_ss_meets_Wu_Q;
        out.push_back(rec);
    }
    return out;
}

std::optional<StrongHomoclinicHit> detect_strong_homoclinic(const CentralMapSet& maps,
                                                            const PeriodicPointRecord& rec,
                                                            int k_max, int n_max) {
    for (int kb = 0; kb <= k_max; ++kb) {
        for (int nb = 0; nb <= n_max; ++nb) {
            if (kb == rec.itinerary.k && nb == rec.itinerary.n) continue;
            IFSReturnMap ret = compose_return(maps, {kb, nb});
            if (!ret.domain().contains(rec.r)) continue;
            double resid = std::abs(ret.evaluate_unchecked(rec.r) - rec.r);
            if (resid <= kDetectTol) {
                StrongHomoclinicHit hit;
                hit.record = rec;
                hit.second = {kb, nb};
                hit.residual = resid;
                return hit;
            }
        }
    }
    return std::nullopt;
}

std::optional<CycleHit> detect_cycle_from_disk(const CentralMapSet& maps, double d, int i_max) {
    for (int i = 0; i <= i_max; ++i) {
        auto v = cycle_equation_value(maps, d, i);
        if (v && std::abs(*v) <= 1e-12) {
            CycleHit hit;
            hit.d = d;
            hit.i = i;
            hit.residual = std::abs(*v);
            return hit;
        }
    }
    return std::nullopt;
}

std::optional<HeteroclinicDHit> detect_heteroclinic_D(const CentralMapSet& maps, double r,
                                                      int i_max, int k_max, int n_max) {
    for (int kt = 0; kt <= k_max; ++kt) {
        for (int nt = 0; nt <= n_max; ++nt) {
            double y;
            if (kt == 0 && nt == 0) {
                y = r;  // no inner return applied
            } else {
                IFSReturnMap ret = compose_return(maps, {kt, nt});
                if (!ret.domain().contains(r)) continue;
                y = ret.evaluate_unchecked(r);
            }
            for (int i = 0; i <= i_max; ++i) {
                auto v = cycle_equation_value(maps, y, i);
                if (v && std::abs(*v) <= 1e-12) {
                    HeteroclinicDHit hit;
                    hit.r = r;
                    hit.i = i;
                    hit.inner = {kt, nt};
                    hit.residual = std::abs(*v);
                    return hit;
                }
            }
        }
    }
    return std::nullopt;
}

std::optional<HeteroclinicEHit> detect_heteroclinic_E(const CentralMapSet& maps, double d,
                                                      double r, int i_max, int j_max) {
    HeteroclinicEHit hit;
    hit.d = d;
    hit.r = r;
    if (std::abs(d - r) <= kDetectTol) {
        hit.i = 0;
        hit.j = 0;
        hit.case_id = 1;
        hit.residual = std::abs(d - r);
        return hit;
    }
    {
        const Interval CQ = maps.central_range_q();
        double v = maps.t;
        for (int i = 0; i <= i_max; ++i) {
            if (std::abs(v - r) <= kDetectTol) {
                hit.i = i;
                hit.j = 0;
                hit.case_id = 2;
                hit.residual = std::abs(v - r);
                return hit;
            }
            v = maps.psi.eval_unchecked(v);
            if (!CQ.contains(v)) break;
        }
    }
    for (int i = 0; i <= i_max; ++i) {
        for (int j = 0; j <= j_max; ++j) {
            IFSReturnMap ret = compose_return(maps, {i, j});
            if (!ret.domain().contains(d)) continue;
            double resid = std::abs(ret.evaluate_unchecked(d) - r);
            if (resid <= kDetectTol) {
                hit.i = i;
                hit.j = j;
                hit.case_id = 0;
                hit.residual = resid;
                return hit;
            }
        }
    }
    return std::nullopt;
}

std::vector<HomoclinicFHit> detect_homoclinic_F(const CentralMapSet& maps, int i_max) {
    std::vector<HomoclinicFHit> out;
    const Interval I = maps.interval_I();
    const Interval CQ = maps.central_range_q();
    double v = maps.t;  // psi^0(theta1(0)) = t
    for (int i = 0; i <= i_max; ++i) {
        if (!CQ.contains(v)) break;
        if (I.contains(v)) out.push_back({i, v});
        v = maps.psi.eval_unchecked(v);
    }
    return out;
}

DictionaryReport build_report(const CentralMapSet& maps, int k_max, int n_max, int i_max) {
    DictionaryReport rep;
    for (int k = 0; k <= k_max; ++k)
        for (int n = 0; n <= n_max; ++n) {
            auto recs = detect_periodic(maps, {k, n});
            rep.periodic.insert(rep.periodic.end(), recs.begin(), recs.end());
        }
    for (const auto& rec : rep.periodic) {
        auto hit = detect_strong_homoclinic(maps, rec, k_max, n_max);
        if (hit) rep.strong_homoclinic.push_back(*hit);
    }
    rep.homoclinic_F = detect_homoclinic_F(maps, i_max);
    // Disks: the transverse point X_Q at central 1, plus every F-point.
    std::vector<std::pair<double, std::optional<int>>> disks;
    disks.emplace_back(1.0, std::nullopt);
    for (const auto& f : rep.homoclinic_F) disks.emplace_back(f.h_hat, f.i);
    for (const auto& [d, h] : disks) {
        auto c = detect_cycle_from_disk(maps, d, i_max);
        if (c) {
            c->h = h;
            rep.cycles.push_back(*c);
        }
    }
    for (const auto& rec : rep.periodic) {
        auto dhit = detect_heteroclinic_D(maps, rec.r, i_max, k_max, n_max);
        if (dhit) rep.heteroclinic_D.push_back(*dhit);
        for (const auto& [d, h] : disks) {
            auto ehit = detect_heteroclinic_E(maps, d, rec.r, k_max, n_max);
            if (ehit) rep.heteroclinic_E.push_back(*ehit);
        }
    }
    return rep;
}

std::map<std::string, double> cross_check(const ModelDiffeomorphism& model,
                                          const DictionaryReport& report) {
    std::map<std::string, double> table;
    int idx = 0;
    for (const auto& rec : report.periodic) {
        if (rec.at_breakpoint) continue;
        auto oracle = oracle_periodic(model, rec.itinerary, rec.r);
        double disc = std::abs(oracle.rc - rec.r);
        if (!rec.degenerate_identity)
            disc = std::max(disc, std::abs(oracle.central_eigenvalue - rec.central_eigenvalue));
        long period = static_cast<long>(rec.itinerary.k) * model.spec.period_q +
                      static_cast<long>(rec.itinerary.n) * model.spec.period_p +
                      model.spec.tau_pq + model.spec.tau_qp;
        if (period != rec.period || period != oracle.period)
            throw OracleMismatch("period mismatch for periodic entry " + std::to_string(idx));
        std::string key = "periodic[" + std::to_string(idx++) + "]";
        table[key] = disc;
        if (disc > kOracleTol)
            throw OracleMismatch(key + " discrepancy " + shortest_repr(disc));
    }
    idx = 0;
    for (const auto& f : report.homoclinic_F) {
        ChartPoint p = iterate_q_blocks_from_unfolding(model, f.i);
        double disc = std::abs(p.xc - f.h_hat);
        for (int i = 0; i < p.xu.size(); ++i)
            if (std::abs(p.xu(i)) > 1.0)
                throw OracleMismatch("homoclinic_F u-coordinate left the cube");
        std::string key = "homoclinic_F[" + std::to_string(idx++) + "]";
        table[key] = disc;
        if (disc > kOracleTol)
            throw OracleMismatch(key + " discrepancy " + shortest_repr(disc));
    }
    return table;
}

namespace {

json record_to_json(const PeriodicPointRecord& r) {
    json j;
    j["r"] = r.r;
    j["itinerary"] = {r.itinerary.k, r.itinerary.n};
    j["period"] = r.period;
    j["central_eigenvalue"] = r.central_eigenvalue;
    j["s_index"] = r.s_index;
    j["neutral"] = r.neutral;
    j["residual"] = r.residual;
    j["ss_meets_Wu_Q"] = r.flag_ss_meets_Wu_Q;
    j["uu_meets_Ws_P"] = r.flag_uu_meets_Ws_P;
    if (r.at_breakpoint) j["ambiguous_breakpoint"] = true;
    if (r.degenerate_identity) j["degenerate_identity"] = true;
    if (r.full_rs) j["r_s"] = *r.full_rs;
    if (r.full_ru) j["r_u"] = *r.full_ru;
    return j;
}

}  // namespace

std::string DictionaryReport::to_json_string(int indent) const {
    json j;
    j["periodic"] = json::array();
    for (const auto& r : periodic) j["periodic"].push_back(record_to_json(r));
    j["strong_homoclinic"] = json::array();
    for (const auto& s : strong_homoclinic)
        j["strong_homoclinic"].push_back({{"record", record_to_json(s.record)},
                                          {"second_itinerary", {s.second.k, s.second.n}},
                                          {"residual", s.residual}});
    j["cycles"] = json::array();
    for (const auto& c : cycles) {
        json e{{"d", c.d}, {"i", c.i}, {"residual", c.residual}};
        if (c.h) e["h"] = *c.h;
        j["cycles"].push_back(e);
    }
    j["heteroclinic_D"] = json::array();
    for (const auto& d : heteroclinic_D)
        j["heteroclinic_D"].push_back({{"r", d.r},
                                       {"i", d.i},
                                       {"k_tilde", d.inner.k},
                                       {"n_tilde", d.inner.n},
                                       {"residual", d.residual}});
    j["heteroclinic_E"] = json::array();
    for (const auto& e : heteroclinic_E)
        j["heteroclinic_E"].push_back({{"d", e.d},
                                       {"r", e.r},
                                       {"i", e.i},
                                       {"j", e.j},
                                       {"case", e.case_id},
                                       {"residual", e.residual}});
    j["homoclinic_F"] = json::array();
    for (const auto& f : homoclinic_F)
        j["homoclinic_F"].push_back({{"i", f.i}, {"h_hat", f.h_hat}});
    return j.dump(indent);
}

}  // namespace cyclelab
