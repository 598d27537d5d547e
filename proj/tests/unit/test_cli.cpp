#include "bcs/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace bcs::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "bcs");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bcs_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("config round trip") {
    const RunConfig cfg = parse_config(
        "# comment\npotential = exponential:amp=-3,range=0.8\nmu=2\nlambda = 0.25\n"
        "lambda_ladder = 0.6, 0.3\nn_outer=120\n");
    CHECK(cfg.potential == "exponential:amp=-3,range=0.8");
    CHECK(cfg.mu == 2.0);
    CHECK(*cfg.lambda == 0.25);
    CHECK(cfg.lambda_ladder == std::vector<double>{0.6, 0.3});
    CHECK(cfg.n_outer == 120);
    const std::string text = emit_config(cfg);
    CHECK(emit_config(parse_config(text)) == text);
}

TEST_CASE("config errors name the key") {
    try {
        parse_config("mu = 1\nbogus = 3\n");
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
    try {
        parse_config("n_inner = many\n");
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("n_inner") != std::string::npos);
    }
}

TEST_CASE("validation") {
    RunConfig cfg;
    cfg.mu = -1;
    cfg.lambda = 0.3;
    CHECK_THROWS_WITH_AS(validate(cfg, true), "mu must be positive", UsageError);
    cfg.mu = 1;
    cfg.lambda.reset();
    CHECK_THROWS_AS(validate(cfg, true), UsageError);
    CHECK_NOTHROW(validate(cfg, false));
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_csv_number(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_csv_number(2.0 / 3.0)) == 2.0 / 3.0);
}

TEST_CASE("usage errors exit with 1") {
    const Outcome neg = invoke({"tc", "--mu", "-1", "--lambda", "0.3"});
    CHECK(neg.code == kExitUsage);
    CHECK(neg.err.find("mu must be positive") != std::string::npos);
    CHECK(invoke({"verify", "sometimes"}).code == kExitUsage);
    CHECK(invoke({"frobnicate"}).code == kExitUsage);
    CHECK(invoke({"tc", "--potential", "cubic:amp=1"}).code == kExitUsage);
    const fs::path dir = scratch("badcfg");
    std::ofstream(dir / "c.cfg") << "mu = 1\nwidth = 3\n";
    const Outcome bad = invoke({"emu", "--config", (dir / "c.cfg").string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("width") != std::string::npos);
}

TEST_CASE("emu record") {
    const fs::path dir = scratch("emu");
    const Outcome o = invoke({"emu", "--potential", "gaussian:amp=-5,range=1", "--mu", "1",
                              "--ellmax", "8", "--output", (dir / "r.json").string(), "--csv",
                              (dir / "c.csv").string()});
    REQUIRE(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["command"] == "emu");
    CHECK(j["outputs"]["channels"].size() == 9);
    CHECK(j["outputs"]["e_mu"]["flag"] == "converged");
    CHECK(j["outputs"]["e_mu"]["value"].get<double>() < 0.0);
    CHECK(j.contains("metadata"));
    CHECK(nlohmann::json::parse(slurp(dir / "r.json")) == j);
    CHECK(slurp(dir / "c.csv").rfind("l,e\n", 0) == 0);
}

TEST_CASE("config file with flag override") {
    const fs::path dir = scratch("override");
    std::ofstream(dir / "c.cfg") << "potential = gaussian:amp=-5,range=1\nmu = 4\n";
    const Outcome o = invoke({"mmu", "--config", (dir / "c.cfg").string(), "--mu", "1",
                              "--temperature", "1e-6"});
    REQUIRE(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["config"]["mu"] == 1.0);
    CHECK(std::abs(j["outputs"]["sqrt_mu_m_minus_log"].get<double>() + 0.48807) < 1e-3);
}

TEST_CASE("tc record") {
    const Outcome o = invoke({"tc", "--potential", "gaussian:amp=-5,range=1", "--mu", "1",
                              "--lambda", "0.3"});
    REQUIRE(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["outputs"]["tc"]["value"].get<double>() > 0.0);
    CHECK(j["outputs"]["bracket"].size() == 2);
    CHECK(j["outputs"]["channel"] == 0);
}

TEST_CASE("scan budget is checked first") {
    const fs::path dir = scratch("budget");
    const Outcome o = invoke({"scan", "--lambdas", "0.6,0.5,0.4", "--mus", "1,2", "--budget", "5",
                              "--csv", (dir / "s.csv").string()});
    CHECK(o.code == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "s.csv.parts"));
}

TEST_CASE("scan: single point, ladder, resume") {
    const fs::path dir = scratch("scan");
    const Outcome one = invoke({"scan", "--lambda", "0.5", "--csv", (dir / "one.csv").string()});
    REQUIRE(one.code == kExitOk);
    const std::string text = slurp(dir / "one.csv");
    CHECK(text.rfind("lambda,mu,tc,xi,e_mu,b_mu,drift_tc,drift_xi,ratio,flags\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK_FALSE(nlohmann::json::parse(one.out)["outputs"].contains("extrapolation"));

    const fs::path csv = dir / "ladder.csv";
    const std::vector<std::string> args = {"scan", "--lambdas", "0.6,0.55,0.5,0.45,0.4",
                                           "--jobs", "3", "--csv", csv.string()};
    const Outcome full = invoke(args);
    REQUIRE(full.code == kExitOk);
    const std::string first = slurp(csv);
    CHECK(std::count(first.begin(), first.end(), '\n') == 6);
    const auto j = nlohmann::json::parse(full.out);
    REQUIRE(j["outputs"].contains("extrapolation"));
    CHECK(j["outputs"]["extrapolation"][0]["drift_tc"]["points"] == 5);

    // interrupted run: two points and the table missing
    fs::remove(csv);
    fs::remove(fs::path(csv.string() + ".parts") / "point_000001.csv");
    fs::remove(fs::path(csv.string() + ".parts") / "point_000003.csv");
    const Outcome again = invoke(args);
    REQUIRE(again.code == kExitOk);
    CHECK(nlohmann::json::parse(again.out)["metadata"]["resumed_points"] == 3);
    CHECK(slurp(csv) == first);
}
