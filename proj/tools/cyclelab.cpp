// Batch front-end: classify / stabilize / dictionary / scan / blender-verify /
// oracle-check over JSON cycle specs, with deterministic JSON/CSV reports.

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyclelab/blender.hpp"
#include "cyclelab/dictionary.hpp"
#include "cyclelab/errors.hpp"
#include "cyclelab/stabilizer.hpp"

using namespace cyclelab;
using nlohmann::json;

namespace {

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidSpec("cannot open output file: " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
}

struct ScanGrid {
    std::string param;
    double lo = 0.0, hi = 0.0;
    int steps = 1;
};

ScanGrid parse_scan(const std::string& text) {
    ScanGrid g;
    std::stringstream ss(text);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 4) throw InvalidSpec("--scan expects PARAM:LO:HI:STEPS");
    g.param = parts[0];
    if (g.param != "lambda" && g.param != "beta" && g.param != "t" && g.param != "delta")
        throw InvalidSpec("scan parameter must be lambda, beta, t or delta");
    try {
        g.lo = std::stod(parts[1]);
        g.hi = std::stod(parts[2]);
        g.steps = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw InvalidSpec("malformed --scan numbers");
    }
    if (g.steps < 1) throw InvalidSpec("scan steps must be >= 1");
    return g;
}

CycleSpec spec_with_param(CycleSpec s, const std::string& name, double value) {
    if (name == "lambda") s.lambda = value;
    else if (name == "beta") s.beta = value;
    else if (name == "t") s.t = value;
    else s.delta = value;
    s.validate();
    return s;
}

struct ScanRow {
    double param_value = 0.0;
    int n_periodic = 0;
    int n_neutral = 0;
    bool has_cycle = false;
    bool has_strong_homoclinic = false;
    double min_residual = std::numeric_limits<double>::quiet_NaN();
    bool invalid = false;
};

ScanRow scan_point(const CycleSpec& base, const ScanGrid& grid, double value, int k_max,
                   int n_max, int i_max) {
    ScanRow row;
    row.param_value = value;
    CycleSpec s;
    try {
        s = spec_with_param(base, grid.param, value);
    } catch (const Error&) {
        row.invalid = true;
        return row;
    }
    CentralMapSet maps = CentralMapSet::from_spec(s);
    std::vector<PeriodicPointRecord> records;
    for (int k = 0; k <= k_max; ++k)
        for (int n = 0; n <= n_max; ++n) {
            auto recs = detect_periodic(maps, {k, n});
            records.insert(records.end(), recs.begin(), recs.end());
        }
    row.n_periodic = static_cast<int>(records.size());
    for (const auto& r : records) {
        if (r.neutral) ++row.n_neutral;
        if (std::isnan(row.min_residual) || r.residual < row.min_residual)
            row.min_residual = r.residual;
    }
    row.has_cycle = detect_cycle_from_disk(maps, 1.0, i_max).has_value();
    if (!row.has_cycle) {
        for (const auto& f : detect_homoclinic_F(maps, i_max)) {
            if (detect_cycle_from_disk(maps, f.h_hat, i_max)) {
                row.has_cycle = true;
                break;
            }
        }
    }
    for (const auto& r : records) {
        if (detect_strong_homoclinic(maps, r, std::min(k_max, 8), std::min(n_max, 8))) {
            row.has_strong_homoclinic = true;
            break;
        }
    }
    return row;
}

std::string run_scan(const CycleSpec& base, const ScanGrid& grid, int k_max, int n_max,
                     int i_max, int workers) {
    std::vector<double> values(static_cast<size_t>(grid.steps));
    for (int i = 0; i < grid.steps; ++i)
        values[static_cast<size_t>(i)] =
            grid.steps == 1 ? grid.lo
                            : grid.lo + (grid.hi - grid.lo) * (static_cast<double>(i) /
                                                               (grid.steps - 1));
    std::vector<ScanRow> rows(values.size());
    auto work = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i)
            rows[i] = scan_point(base, grid, values[i], k_max, n_max, i_max);
    };
    if (workers <= 1) {
        work(0, values.size());
    } else {
        std::vector<std::thread> pool;
        size_t chunk = (values.size() + static_cast<size_t>(workers) - 1) /
                       static_cast<size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            size_t lo = static_cast<size_t>(w) * chunk;
            size_t hi = std::min(values.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    std::string out = "param_value,n_periodic,n_neutral,has_cycle,has_strong_homoclinic,"
                      "min_residual\n";
    for (const auto& r : rows) {
        out += shortest_repr(r.param_value);
        if (r.invalid) {
            out += ",0,0,false,false,nan\n";
            continue;
        }
        out += "," + std::to_string(r.n_periodic) + "," + std::to_string(r.n_neutral);
        out += r.has_cycle ? ",true" : ",false";
        out += r.has_strong_homoclinic ? ",true" : ",false";
        out += "," + (std::isnan(r.min_residual) ? std::string("nan")
                                                 : shortest_repr(r.min_residual));
        out += "\n";
    }
    return out;
}

std::vector<AccumulationPoint> parse_accumulation(const std::string& text) {
    std::vector<AccumulationPoint> pts;
    if (text.empty()) return pts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            pts.push_back({std::stod(part), +1});
        } catch (const std::exception&) {
            throw InvalidSpec("malformed --accumulation entry: " + part);
        }
    }
    return pts;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open input file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("JSON parse failure: ") + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterodimensional cycle laboratory"};
    app.require_subcommand(1);

    std::string input, output, scan_text, accumulation_text;
    int i_max = 24, k_max = 8, n_max = 8, depth = 60, ell = 0, workers = 1;
    double rho = 0.01, eps_pert = 1e-2, snap_budget = 1e-6;

    app.add_option("--input", input, "input JSON path");
    app.add_option("--output", output, "output path (stdout when absent)");
    app.add_option("--i-max", i_max, "iteration bound for cycle/homoclinic searches");
    app.add_option("--k-max", k_max, "psi-power bound");
    app.add_option("--n-max", n_max, "phi-power bound");
    app.add_option("--depth", depth, "blender covering depth");
    app.add_option("--rho", rho, "blender robustness radius");
    app.add_option("--eps-pert", eps_pert, "relative multiplier perturbation budget");
    app.add_option("--snap-budget", snap_budget, "multiplicative snap budget");
    app.add_option("--ell", ell, "detwist tail power (0 = default 3k)");
    app.add_option("--scan", scan_text, "PARAM:LO:HI:STEPS sweep");
    app.add_option("--workers", workers, "worker thread count");
    app.add_option("--accumulation", accumulation_text,
                   "comma list of positive-side bi-accumulation central coordinates");

    auto* cmd_classify = app.add_subcommand("classify", "print the twist class");
    auto* cmd_stabilize = app.add_subcommand("stabilize", "run the stabilization pipeline");
    auto* cmd_dictionary = app.add_subcommand("dictionary", "dictionary report over itineraries");
    auto* cmd_scan = app.add_subcommand("scan", "parameter sweep to CSV");
    auto* cmd_blender = app.add_subcommand("blender-verify", "superposition + robustness check");
    auto* cmd_oracle = app.add_subcommand("oracle-check", "cross-check report against the model");

    CLI11_PARSE(app, argc, argv);

    try {
        StabilizerConfig cfg;
        cfg.eps_pert = eps_pert;
        cfg.snap_budget = snap_budget;
        cfg.ell = ell;
        cfg.i_max = std::max(i_max, 64);
        cfg.workers = workers;

        if (cmd_classify->parsed()) {
            CycleSpec spec = CycleSpec::from_json_file(input);
            TwistClass tc = classify(spec);
            json j;
            j["sign_Q"] = tc.sign_q;
            j["sign_P"] = tc.sign_p;
            j["sign_T1"] = tc.sign_t1;
            j["verdict"] = tc.twisted ? "Twisted" : "NonTwisted";
            write_output(output, j.dump(2));
        } else if (cmd_stabilize->parsed()) {
            CycleSpec spec = CycleSpec::from_json_file(input);
            auto cert = stabilize(spec, parse_accumulation(accumulation_text), cfg);
            write_output(output, cert.to_json_string(2));
        } else if (cmd_dictionary->parsed()) {
            CycleSpec spec = CycleSpec::from_json_file(input);
            CentralMapSet maps = CentralMapSet::from_spec(spec);
            DictionaryReport rep = build_report(maps, k_max, n_max, i_max);
            write_output(output, rep.to_json_string(2));
        } else if (cmd_scan->parsed()) {
            CycleSpec spec = CycleSpec::from_json_file(input);
            ScanGrid grid = parse_scan(scan_text);
            write_output(output, run_scan(spec, grid, k_max, n_max, i_max, workers));
        } else if (cmd_blender->parsed()) {
            json j = read_json_file(input);
            Interval base{j.at("base").at(0).get<double>(), j.at("base").at(1).get<double>()};
            auto a = CentralMap::affine(j.at("slope_a").get<double>(),
                                        j.at("offset_a").get<double>(), base);
            auto b = CentralMap::affine(j.at("slope_b").get<double>(),
                                        j.at("offset_b").get<double>(), base);
            BlenderModel model = BlenderModel::make(a, b, base);
            SuperpositionCertificate sup = verify_superposition(model, depth);
            RobustnessVerdict rv = verify_robust(model, rho, depth);
            json outj = json::parse(sup.to_json_string(-1));
            outj["robust"] = rv.robust;
            outj["robust_min_margin"] = rv.min_margin;
            outj["rho"] = rho;
            write_output(output, outj.dump(2));
        } else if (cmd_oracle->parsed()) {
            CycleSpec spec = CycleSpec::from_json_file(input);
            CentralMapSet maps = CentralMapSet::from_spec(spec);
            DictionaryReport rep = build_report(maps, k_max, n_max, i_max);
            ModelDiffeomorphism model = build_model(spec);
            auto table = cross_check(model, rep);
            json j;
            for (const auto& [key, val] : table) j[key] = val;
            write_output(output, j.dump(2));
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return static_cast<int>(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
