#include "cyclelab/json_io.hpp"

#include "cyclelab/errors.hpp"

namespace cyclelab {

using nlohmann::json;

json central_map_to_json(const CentralMap& m) {
    json j;
    j["domain"] = {m.domain().lo, m.domain().hi};
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, LinearMap>) {
                j["kind"] = "linear";
                j["slope"] = k.slope;
            } else if constexpr (std::is_same_v<T, AffineMap>) {
                j["kind"] = "affine";
                j["slope"] = k.slope;
                j["offset"] = k.offset;
            } else if constexpr (std::is_same_v<T, Theta1Map>) {
                j["kind"] = "theta1";
                j["sign"] = k.sign;
                j["t"] = k.t;
            } else if constexpr (std::is_same_v<T, Theta2Map>) {
                j["kind"] = "theta2";
                j["sign"] = k.sign;
            } else if constexpr (std::is_same_v<T, PiecewiseLinearMap>) {
                j["kind"] = "piecewise";
                j["base_slope"] = k.base_slope;
                j["windows"] = json::array();
                for (const auto& w : k.windows) {
                    json wj;
                    wj["xs"] = w.xs;
                    wj["ys"] = w.ys;
                    wj["pinned"] = json::array();
                    for (char p : w.pinned) wj["pinned"].push_back(p != 0);
                    j["windows"].push_back(wj);
                }
            } else {
                j["kind"] = "quadratic";
                j["center"] = k.center;
                j["e"] = k.e;
            }
        },
        m.kind());
    return j;
}

CentralMap central_map_from_json(const json& j) {
    Interval dom{j.at("domain").at(0).get<double>(), j.at("domain").at(1).get<double>()};
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") return CentralMap::linear(j.at("slope").get<double>(), dom);
    if (kind == "affine")
        return CentralMap::affine(j.at("slope").get<double>(), j.at("offset").get<double>(), dom);
    if (kind == "theta1")
        return CentralMap::theta1(j.at("sign").get<int>(), j.at("t").get<double>(), dom);
    if (kind == "theta2") return CentralMap::theta2(j.at("sign").get<int>(), dom);
    if (kind == "quadratic")
        return CentralMap::quadratic(j.at("center").get<double>(), j.at("e").get<double>(), dom);
    if (kind == "piecewise") {
        PiecewiseLinearMap pw;
        pw.base_slope = j.at("base_slope").get<double>();
        for (const auto& wj : j.at("windows")) {
            PiecewiseWindow w;
            w.xs = wj.at("xs").get<std::vector<double>>();
            w.ys = wj.at("ys").get<std::vector<double>>();
            for (const auto& p : wj.at("pinned")) w.pinned.push_back(p.get<bool>() ? 1 : 0);
            pw.windows.push_back(std::move(w));
        }
        return CentralMap::piecewise(std::move(pw), dom);
    }
    throw InvalidSpec("unknown central map kind: " + kind);
}

json spec_to_json(const CycleSpec& s) { return json::parse(s.to_json_string(-1)); }

CycleSpec spec_from_json_value(const json& j) { return CycleSpec::from_json_string(j.dump()); }

}  // namespace cyclelab
