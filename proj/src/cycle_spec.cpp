#include "cyclelab/cycle_spec.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cyclelab/errors.hpp"

namespace cyclelab {

using nlohmann::json;

void CycleSpec::validate() const {
    if (!(std::abs(lambda) > 0.0 && std::abs(lambda) < 1.0))
        throw InvalidSpec("lambda must satisfy 0 < |lambda| < 1, got " + shortest_repr(lambda));
    if (!(std::abs(beta) > 1.0))
        throw InvalidSpec("beta must satisfy |beta| > 1, got " + shortest_repr(beta));
    if (sign_t1 != 1 && sign_t1 != -1) throw InvalidSpec("sign_t1 must be +1 or -1");
    if (sign_t2 != 1 && sign_t2 != -1) throw InvalidSpec("sign_t2 must be +1 or -1");
    if (period_p < 1 || period_q < 1) throw InvalidSpec("periods must be positive");
    if (tau_pq < 1 || tau_qp < 1) throw InvalidSpec("transition times must be positive");
    if (s_dim < 1 || u_dim < 1) throw InvalidSpec("strong dimensions must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidSpec("delta must lie in (0,1)");
    if (!(epsilon > 0.0)) throw InvalidSpec("epsilon must be positive");
    if (!(std::abs(t) <= epsilon))
        throw InvalidSpec("t outside [-epsilon, epsilon]: t=" + shortest_repr(t));
}

namespace {

const std::set<std::string> kSpecKeys = {"lambda", "beta",   "sign_t1", "sign_t2", "period_p",
                                         "period_q", "tau_pq", "tau_qp",  "s_dim",   "u_dim",
                                         "delta",    "t",      "epsilon"};

CycleSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw InvalidSpec("spec JSON must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kSpecKeys.count(it.key())) throw InvalidSpec("unknown spec key: " + it.key());
    for (const auto& k : kSpecKeys)
        if (!j.contains(k)) throw InvalidSpec("missing spec key: " + k);
    CycleSpec s;
    s.lambda = j.at("lambda").get<double>();
    s.beta = j.at("beta").get<double>();
    s.sign_t1 = j.at("sign_t1").get<int>();
    s.sign_t2 = j.at("sign_t2").get<int>();
    s.period_p = j.at("period_p").get<int>();
    s.period_q = j.at("period_q").get<int>();
    s.tau_pq = j.at("tau_pq").get<int>();
    s.tau_qp = j.at("tau_qp").get<int>();
    s.s_dim = j.at("s_dim").get<int>();
    s.u_dim = j.at("u_dim").get<int>();
    s.delta = j.at("delta").get<double>();
    s.t = j.at("t").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.validate();
    return s;
}

}  // namespace

std::string CycleSpec::to_json_string(int indent) const {
    json j;
    j["lambda"] = lambda;
    j["beta"] = beta;
    j["sign_t1"] = sign_t1;
    j["sign_t2"] = sign_t2;
    j["period_p"] = period_p;
    j["period_q"] = period_q;
    j["tau_pq"] = tau_pq;
    j["tau_qp"] = tau_qp;
    j["s_dim"] = s_dim;
    j["u_dim"] = u_dim;
    j["delta"] = delta;
    j["t"] = t;
    j["epsilon"] = epsilon;
    return j.dump(indent);
}

CycleSpec CycleSpec::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("JSON parse failure: ") + e.what());
    }
    return spec_from_json(j);
}

CycleSpec CycleSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open spec file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

CentralMapSet CentralMapSet::from_spec(const CycleSpec& spec) {
    spec.validate();
    CentralMapSet ms{
        CentralMap::linear(spec.beta, spec.central_range_q()),
        CentralMap::theta1(spec.sign_t1, spec.t, spec.central_range_p()),
        CentralMap::linear(spec.lambda, spec.central_range_p()),
        CentralMap::theta2(spec.sign_t2, spec.central_range_q()),
    };
    ms.delta = spec.delta;
    ms.t = spec.t;
    ms.period_p = spec.period_p;
    ms.period_q = spec.period_q;
    ms.tau_pq = spec.tau_pq;
    ms.tau_qp = spec.tau_qp;
    ms.s_dim = spec.s_dim;
    ms.u_dim = spec.u_dim;
    return ms;
}

}  // namespace cyclelab
