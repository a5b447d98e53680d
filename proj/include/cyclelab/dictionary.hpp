#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyclelab/ifs.hpp"
#include "cyclelab/model.hpp"

namespace cyclelab {

// Residual tolerance for equation detection; the oracle mismatch threshold
// is two orders looser so engine and oracle cannot flap against each other.
inline constexpr double kDetectTol = 1e-10;
inline constexpr double kOracleTol = 1e-8;
inline constexpr double kNeutralBand = 1e-10;

struct PeriodicPointRecord {
    double r = 0.0;
    Itinerary itinerary;
    long period = 0;
    double central_eigenvalue = 0.0;
    int s_index = 0;
    bool neutral = false;
    bool at_breakpoint = false;
    bool degenerate_identity = false;
    double residual = 0.0;
    // Intersection facts that hold structurally whenever r lies in I.
    bool flag_ss_meets_Wu_Q = false;
    bool flag_uu_meets_Ws_P = false;
    // Filled by the oracle cross-check.
    std::optional<std::vector<double>> full_rs, full_ru;
};

struct StrongHomoclinicHit {
    PeriodicPointRecord record;
    Itinerary second;
    double residual = 0.0;
};

struct CycleHit {
    double d = 0.0;
    int i = 0;
    std::optional<int> h;  // psi-power prefix when d = psi^h(t)
    double residual = 0.0;
};

struct HeteroclinicDHit {
    double r = 0.0;
    int i = 0;
    Itinerary inner;  // (k~, n~); (0,0) means no inner return
    double residual = 0.0;
};

struct HeteroclinicEHit {
    double d = 0.0;
    double r = 0.0;
    int i = 0;
    int j = 0;
    int case_id = 0;  // 1: r == d, 2: psi^i(t) == r, 0: generic
    double residual = 0.0;
};

struct HomoclinicFHit {
    int i = 0;
    double h_hat = 0.0;
};

struct DictionaryReport {
    std::vector<PeriodicPointRecord> periodic;
    std::vector<StrongHomoclinicHit> strong_homoclinic;
    std::vector<CycleHit> cycles;
    std::vector<HeteroclinicDHit> heteroclinic_D;
    std::vector<HeteroclinicEHit> heteroclinic_E;
    std::vector<HomoclinicFHit> homoclinic_F;

    std::string to_json_string(int indent = 2) const;
};

// (A) periodic points: one record per fixed point of Gamma^{k,n}.
std::vector<PeriodicPointRecord> detect_periodic(const CentralMapSet& maps, Itinerary it);

// (B) strong homoclinic: first (kbar, nbar) != (k, n) in lexicographic order
// with |Gamma^{kbar,nbar}(r) - r| <= 1e-10 and r in that domain.
std::optional<StrongHomoclinicHit> detect_strong_homoclinic(const CentralMapSet& maps,
                                                            const PeriodicPointRecord& rec,
                                                            int k_max, int n_max);

// (C) heterodimensional cycle from a disk at central coordinate d: smallest i
// with theta1(phi^i(theta2(d))) = 0 to 1e-12, intermediates inside charts.
std::optional<CycleHit> detect_cycle_from_disk(const CentralMapSet& maps, double d, int i_max);

// (D) first (i, k~, n~) lexicographic with theta1 o phi^i o theta2 o
// Gamma^{k~,n~}(r) = 0 to 1e-12; (k~,n~) = (0,0) applies no inner return.
std::optional<HeteroclinicDHit> detect_heteroclinic_D(const CentralMapSet& maps, double r,
                                                      int i_max, int k_max, int n_max);

// (E) first (i,j) with Gamma^{i,j}(d) = r; the special cases r == d and
// psi^i(t) == r are checked first.
std::optional<HeteroclinicEHit> detect_heteroclinic_E(const CentralMapSet& maps, double d,
                                                      double r, int i_max, int j_max);

// (F) all i <= i_max with psi^i(t) in I; the orbit is abandoned once it
// leaves the U_Q central range.
std::vector<HomoclinicFHit> detect_homoclinic_F(const CentralMapSet& maps, int i_max);

// Builds a full report over the itinerary rectangle.
DictionaryReport build_report(const CentralMapSet& maps, int k_max, int n_max, int i_max);

// Cross-checks report entries against the full-model oracle. Returns the
// per-entry maximum discrepancy; throws OracleMismatch above 1e-8.
std::map<std::string, double> cross_check(const ModelDiffeomorphism& model,
                                          const DictionaryReport& report);

}  // namespace cyclelab
