#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cyclelab/cycle_spec.hpp"
#include "cyclelab/errors.hpp"

using namespace cyclelab;
using nlohmann::json;

namespace {

std::string bin_path() {
    const char* p = std::getenv("CYCLELAB_BIN");
    REQUIRE(p != nullptr);
    return p;
}

std::string data_path() {
    const char* p = std::getenv("CYCLELAB_DATA");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& cmd) {
    int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cycle spec JSON round trip and unknown-key rejection") {
    CycleSpec s;
    s.lambda = -0.375;
    s.beta = 2.75;
    s.sign_t1 = -1;
    s.t = 0.125;
    s.epsilon = 0.25;
    auto back = CycleSpec::from_json_string(s.to_json_string());
    CHECK(back.lambda == s.lambda);
    CHECK(back.beta == s.beta);
    CHECK(back.sign_t1 == s.sign_t1);
    CHECK(back.t == s.t);

    json j = json::parse(s.to_json_string());
    j["mystery"] = 1;
    CHECK_THROWS_AS(CycleSpec::from_json_string(j.dump()), InvalidSpec);
    j.erase("mystery");
    j.erase("delta");
    CHECK_THROWS_AS(CycleSpec::from_json_string(j.dump()), InvalidSpec);
}

TEST_CASE("cli: classify prints the verdicts and exit codes behave") {
    std::string bin = bin_path(), data = data_path();
    CHECK(run(bin + " classify --input " + data + "/dyadic_nontwisted.json") == 0);

    std::string out = "/tmp/cyclelab_classify.json";
    CHECK(run(bin + " classify --input " + data + "/twisted_biaccumulated.json --output " +
              out) == 0);
    json j = json::parse(slurp(out));
    CHECK(j.at("verdict") == "Twisted");
    CHECK(j.at("sign_T1") == -1);

    // malformed input -> exit 1
    std::ofstream bad("/tmp/cyclelab_bad.json");
    bad << "{\"lambda\": 0.5}";
    bad.close();
    CHECK(run(bin + " classify --input /tmp/cyclelab_bad.json") == 1);
    CHECK(run(bin + " classify --input /tmp/does_not_exist.json") == 1);
}

TEST_CASE("cli: stabilize exits 0 on the dyadic spec, 3 on fragile twisted") {
    std::string bin = bin_path(), data = data_path();
    CHECK(run(bin + " stabilize --input " + data + "/dyadic_nontwisted.json --output "
              "/tmp/cyclelab_cert.json") == 0);
    json cert = json::parse(slurp("/tmp/cyclelab_cert.json"));
    for (const char* key : {"r1_ss_Wu_Q", "r2_uu_Ws_P", "r3_strong_homoclinic", "r4_ss_Wu_P",
                            "r5_uu_Ws_Q"})
        CHECK(cert.at("residuals").at(key).get<double>() <= 1e-10);

    CHECK(run(bin + " stabilize --input " + data + "/twisted_biaccumulated.json") == 3);
    CHECK(run(bin + " stabilize --input " + data +
              "/twisted_biaccumulated.json --accumulation 0.5,0.25,0.125,0.0625,0.03125,"
              "0.015625,0.0078125,0.00390625,0.001953125,0.0009765625,0.00048828125,"
              "0.000244140625") == 0);
}

TEST_CASE("cli: scan emits the exact header and the cycle row at t = lambda^4") {
    std::string bin = bin_path(), data = data_path();
    std::string out = "/tmp/cyclelab_scan.csv";
    // 161 points over [0, 0.1]: spacing 0.000625 puts 0.0625 on the grid
    CHECK(run(bin + " scan --input " + data + "/dyadic_nontwisted.json --scan t:0:0.1:161 "
              "--k-max 6 --n-max 6 --i-max 24 --output " + out) == 0);
    std::string csv = slurp(out);
    CHECK(csv.rfind("param_value,n_periodic,n_neutral,has_cycle,has_strong_homoclinic,"
                    "min_residual\n", 0) == 0);
    bool found = false;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("0.0625,", 0) == 0) {
            found = true;
            CHECK(line.find(",true,") != std::string::npos);  // has_cycle
        }
    }
    CHECK(found);
}

TEST_CASE("cli: scan output is byte-identical across worker counts") {
    std::string bin = bin_path(), data = data_path();
    CHECK(run(bin + " scan --input " + data + "/dyadic_nontwisted.json --scan t:0:0.08:37 "
              "--k-max 5 --n-max 5 --workers 1 --output /tmp/cyclelab_w1.csv") == 0);
    CHECK(run(bin + " scan --input " + data + "/dyadic_nontwisted.json --scan t:0:0.08:37 "
              "--k-max 5 --n-max 5 --workers 8 --output /tmp/cyclelab_w8.csv") == 0);
    CHECK(slurp("/tmp/cyclelab_w1.csv") == slurp("/tmp/cyclelab_w8.csv"));
}

TEST_CASE("cli: dictionary, blender-verify and oracle-check run clean") {
    std::string bin = bin_path(), data = data_path();
    CHECK(run(bin + " dictionary --input " + data + "/dyadic_nontwisted.json --k-max 5 "
              "--n-max 5 --output /tmp/cyclelab_dict.json") == 0);
    json rep = json::parse(slurp("/tmp/cyclelab_dict.json"));
    CHECK(rep.contains("periodic"));
    CHECK(rep.contains("homoclinic_F"));

    CHECK(run(bin + " blender-verify --input " + data + "/blender_example.json --depth 60 "
              "--rho 0.01 --output /tmp/cyclelab_blender.json") == 0);
    json bl = json::parse(slurp("/tmp/cyclelab_blender.json"));
    CHECK(bl.at("robust") == true);
    CHECK(bl.at("margin").get<double>() > 0.0);

    CHECK(run(bin + " oracle-check --input " + data + "/dyadic_nontwisted.json --k-max 5 "
              "--n-max 5") == 0);
}
