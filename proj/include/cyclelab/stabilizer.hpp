#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyclelab/dictionary.hpp"

namespace cyclelab {

struct StabilizerConfig {
    int k_lo = 2, k_hi = 12;   // resonance search range for k
    int m_lo = 1, m_hi = 64;   // resonance search range for m
    double eps_pert = 1e-2;    // relative budget for multiplier perturbations
    double snap_budget = 1e-6; // multiplicative snap budget in connect
    int ell = 0;               // detwist tail power; 0 means default 3k
    double v = 0.5;            // second adapted point offset
    int data_count = 16;       // adapted homoclinic sequence length
    int i_max = 64;
    int k_max = 64, n_max = 64;
    int workers = 1;
};

struct TwistClass {
    int sign_q = +1;   // sign of beta
    int sign_p = +1;   // sign of lambda
    int sign_t1 = +1;  // orientation of the unfolding map
    bool twisted = false;
};

TwistClass classify(const CycleSpec& spec);

struct NormalizeWitness {
    bool applied = false;
    int n = 0, m = 0;
    double factor = 1.0;  // |lambda^n beta^m|, absorbed by the model perturbation
};

// Lifts a non-twisted cycle with reversing unfolding map to sign_t1 = +1 by
// composing with iterates whose multiplier product is negative and K-bounded.
std::pair<CycleSpec, NormalizeWitness> normalize_signs(const CycleSpec& spec, double K = 4.0);

enum class Relation { LambdaK_eq_BetaNegM, BothPositive, NonPositive, Step2 };

struct TuneResult {
    CycleSpec spec;
    int k = 0, m = 0;
    double dbeta_rel = 0.0;
};

// Adjusts beta so the chosen relation holds to <= 1e-14 relative, minimizing
// |dbeta/beta| over the (k, m) ranges; ties broken by smaller k then m.
TuneResult tune_resonance(const CycleSpec& spec, Relation relation, int k_lo, int k_hi, int m_lo,
                          int m_hi, double eps_pert = 1e-2, int workers = 1);

struct AdaptedHomoclinicData {
    double t_k = 0.0;
    double H_central = 1.0;
    int k = 0, m = 0;        // resonance powers the sequence was built from
    double v_effective = 0.0;
    std::vector<int> indices;
    std::vector<double> deltas;  // delta_i = beta^m lambda^{2i} (1 - v_eff)
    std::vector<double> zetas;   // zeta_i = 1 - delta_i, increasing to 1

    bool has_index(int i) const;
    double delta_at(int i) const;
    double zeta_at(int i) const;
};

// Formula-only construction of the adapted sequence (no e.tk precondition).
AdaptedHomoclinicData make_homoclinic_data(const CycleSpec& spec, int k, int m, double v,
                                           int count);

// Verified construction: requires lambda^k = beta^{-m} to 1e-14, sets
// t = t_k = lambda^k, checks the H point via the F machinery and the cycle
// equation, then builds and filters the zeta sequence.
AdaptedHomoclinicData build_adapted_homoclinics(const CycleSpec& spec, int k, int m, double v,
                                                int count);

struct StabilizationCertificate {
    CycleSpec tuned_spec;  // final parameters (beta = base slope of psi~)
    CentralMap psi_tilde, phi_tilde;

    // chosen values of the construction
    double t = 0.0;
    Itinerary fixed_itinerary;              // (v_i, w_i)
    double mu_j = 0.0;
    double beta_mu = 0.0;
    double beta_stage2 = 0.0;               // multiplier before the beta(mu) solve
    double sigma = 1.0;                     // connect snap factor
    int n_j = 0;
    int ell = 0;
    int j = 0, j0 = 0;
    Itinerary zeta_return;                  // (nbar, lbar)
    std::optional<Itinerary> strong_homoclinic_itinerary;
    std::optional<HeteroclinicDHit> d_witness;
    int res_k1 = 0, res_m1 = 0;             // lambda^k = beta^-m stage
    int res_k2 = 0, res_m2 = 0;             // BothPositive / NonPositive stage

    AdaptedHomoclinicData data;             // context for reassembly
    PeriodicPointRecord saddle_node;
    std::map<std::string, double> residuals;
    std::map<std::string, double> perturbation_sizes;
    std::map<std::string, bool> flags;
    bool flattened = false;
    bool connected = false;

    std::optional<std::string> detwist_summary_json;

    CentralMapSet map_set() const;
    std::string to_json_string(int indent = 2) const;
    static StabilizationCertificate from_json_string(const std::string& text);
};

// Recomputes every certificate residual from the serialized maps alone.
std::map<std::string, double> reverify_certificate(const StabilizationCertificate& cert);

// Lemma-of-the-IFS certificate: fixed point at 1 with itinerary (m, k+1),
// derivative inside the open bounds, zeta_j kill equation, zeta_{j +/- 1}
// return-to-1 equation through the rerouted fundamental domains.
StabilizationCertificate construct_lemma_ifs(const CycleSpec& spec_tuned,
                                             const AdaptedHomoclinicData& data, int j,
                                             const StabilizerConfig& cfg = {});

// Makes the central eigenvalue exactly +/-1 by equal-slope kinks along the
// psi-orbit of the fixed point; all pinned equations survive bit-for-bit.
StabilizationCertificate flatten_to_saddle_node(const StabilizationCertificate& cert,
                                                const StabilizerConfig& cfg = {});

// Adds the strong homoclinic itinerary (dictionary B) and the D-equation
// witness, snapping beta multiplicatively when an exact route needs it.
StabilizationCertificate connect_strong_homoclinic(const StabilizationCertificate& cert,
                                                   const StabilizerConfig& cfg = {});

struct AccumulationPoint {
    double x = 0.0;
    int side = +1;
};

struct DetwistResult {
    CycleSpec new_spec;  // non-twisted cycle between R and Q
    PeriodicPointRecord r_record;
    DictionaryReport report;

    CentralMap psi_tilde, phi_tilde;
    double t = 0.0;
    int k = 0, m = 0, ell = 0;
    double gamma0_value = 0.0;      // Gamma_0^{m,k}(1)
    double gamma0_derivative = 0.0;
    double cycle_residual = 0.0;    // |-phi~^l(-1) + t|
    double sup_psi = 0.0;
    bool derivadas1_holds = false;
    double step1_dbeta = 0.0, step2_dbeta = 0.0;
    int step1_index = 0, step1_power = 0;
    std::string orientation_audit;

    std::string to_json_string(int indent = 2) const;
};

// Twisted -> non-twisted conversion through a bi-accumulated saddle.
DetwistResult detwist(const CycleSpec& spec, const std::vector<AccumulationPoint>& data,
                      const StabilizerConfig& cfg = {});

// Full pipeline: classify, (detwist), normalize, tune twice, adapted data,
// lemma certificate, flatten, connect.
StabilizationCertificate stabilize(const CycleSpec& spec,
                                   const std::vector<AccumulationPoint>& accumulation = {},
                                   const StabilizerConfig& cfg = {});

}  // namespace cyclelab
