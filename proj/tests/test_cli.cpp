#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"

using namespace cspath;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("cspath_cli_test_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file, std::ios::binary) << text;
        return (dir / file).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::vector<const char*> argv{"cspath"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    return code;
}

Json without_timestamp(Json j) {
    j.erase("generated_at");
    return j;
}

const char* kEquivalence = R"j({
  "system": {"n_constrained": 1, "n_reduced": 1, "operator": "0.5*(P1^2 + Q1^2)"},
  "initial": [[0, 0.3], [1, 0]],
  "final": [[0, -0.2], [0.9800665778412416, 0.19866933079506122]],
  "T": 0.2
})j";

}  // namespace

TEST_CASE("overlap with equal labels is one") {
    Scratch s("overlap");
    const auto cfg = s.write("c.json", R"j({"system": {"operator": "Q0^2"}, "initial": [[1, 2]], "final": [[1, 2]]})j");
    const auto out = (s.dir / "out").string();
    REQUIRE(run_cli({"overlap", "--config", cfg, "--out", out, "--quiet"}) == cli::exit_ok);
    const Json r = Json::parse(slurp(s.dir / "out" / "result.json"));
    CHECK(r["computation"] == "overlap");
    CHECK(r["result"]["amplitude"]["re"].get<double>() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(r["result"]["amplitude"]["im"].get<double>()) < 1e-15);
    CHECK(r.contains("versions"));
    CHECK(r.contains("generated_at"));
}

TEST_CASE("constraint equivalence through the driver") {
    Scratch s("equivalence");
    const auto cfg = s.write("c.json", kEquivalence);
    const auto out = (s.dir / "out").string();
    std::string summary;
    REQUIRE(run_cli({"constraint-equivalence", "--config", cfg, "--out", out}, &summary) == cli::exit_ok);
    CHECK(summary.find("projected") != std::string::npos);
    const Json r = Json::parse(slurp(s.dir / "out" / "result.json"));
    CHECK(r["result"]["core_agree"] == true);
    CHECK(r["result"]["core_max_deviation"].get<double>() < 1e-4);
    const std::string dev = slurp(s.dir / "out" / "deviations.csv");
    CHECK(dev.rfind("route_a,route_b,deviation\n", 0) == 0);
    CHECK(dev.find('\r') == std::string::npos);
    CHECK(fs::exists(s.dir / "out" / "nu_ladder.csv"));
}

TEST_CASE("reruns are identical apart from the timestamp") {
    Scratch s("rerun");
    const auto cfg = s.write("c.json", R"j({"system": {"operator": "0.5*(P0^2 + Q0^2)"},
        "initial": [[1, 0]], "final": [[0.98, 0.19]], "T": 0.2, "nu": 5, "N": 4, "n_samples": 5000, "seed": 3,
        "bridge_samples": 2})j");
    const auto o1 = (s.dir / "o1").string();
    const auto o2 = (s.dir / "o2").string();
    REQUIRE(run_cli({"wiener", "--config", cfg, "--out", o1, "--quiet"}) == cli::exit_ok);
    REQUIRE(run_cli({"wiener", "--config", cfg, "--out", o2, "--quiet"}) == cli::exit_ok);
    CHECK(without_timestamp(Json::parse(slurp(fs::path(o1) / "result.json"))) ==
          without_timestamp(Json::parse(slurp(fs::path(o2) / "result.json"))));
    CHECK(slurp(fs::path(o1) / "bridges.csv") == slurp(fs::path(o2) / "bridges.csv"));
    const auto o3 = (s.dir / "o3").string();
    REQUIRE(run_cli({"wiener", "--config", cfg, "--out", o3, "--quiet", "--seed", "4"}) == cli::exit_ok);
    const Json r3 = Json::parse(slurp(fs::path(o3) / "result.json"));
    CHECK(r3["seed"] == 4);
    CHECK(r3["result"]["ratio"] != Json::parse(slurp(fs::path(o1) / "result.json"))["result"]["ratio"]);
}

TEST_CASE("convergence CSV has strictly decreasing errors") {
    Scratch s("convergence");
    const auto cfg = s.write("c.json", R"j({"system": {"operator": "0.5*(P0^2 + Q0^2)"},
        "initial": [[1, 0]], "final": [[0.98, 0.19]], "T": 0.2, "N_list": [2, 4, 8, 16]})j");
    const auto out = (s.dir / "out").string();
    REQUIRE(run_cli({"convergence", "--config", cfg, "--out", out, "--quiet"}) == cli::exit_ok);
    std::istringstream csv(slurp(fs::path(out) / "convergence.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "N,epsilon,amplitude_re,amplitude_im,error");
    double prev = 1e300;
    int rows = 0;
    while (std::getline(csv, line)) {
        const double err = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(err < prev);
        prev = err;
        ++rows;
    }
    CHECK(rows == 4);
    const Json r = Json::parse(slurp(fs::path(out) / "result.json"));
    CHECK(r["result"]["slope"].get<double>() > 0.8);
}

TEST_CASE("symbols and lattice computations") {
    Scratch s("symbols");
    const auto cfg = s.write("c.json", R"j({"system": {"operator": "0.5*(P0^2 + Q0^2)"},
        "points": [[[0, 0]], [[0.5, -1]]], "initial": [[1, 0]], "final": [[0.98, 0.19]], "N": 8})j");
    const auto out = (s.dir / "out").string();
    REQUIRE(run_cli({"symbols", "--config", cfg, "--out", out, "--quiet"}) == cli::exit_ok);
    const Json r = Json::parse(slurp(fs::path(out) / "result.json"));
    REQUIRE(r["result"]["points"].size() == 2);
    CHECK(r["result"]["points"][0]["gap"]["re"].get<double>() == doctest::Approx(1.0));
    CHECK(fs::exists(fs::path(out) / "symbols.csv"));
    const auto out2 = (s.dir / "out2").string();
    REQUIRE(run_cli({"lattice", "--config", cfg, "--out", out2, "--quiet"}) == cli::exit_ok);
    const Json l = Json::parse(slurp(fs::path(out2) / "result.json"));
    CHECK(l["result"]["propagator"]["N"] == 8);
    CHECK(l["result"]["error_vs_reference"].get<double>() < 1e-2);
}

TEST_CASE("exit codes and error documents") {
    Scratch s("errors");
    const auto out = (s.dir / "out").string();

    const auto grammar = s.write("g.json", R"j({"system": {"operator": "Q0^^2"}})j");
    CHECK(run_cli({"lattice", "--config", grammar, "--out", out}) == cli::exit_parse);
    Json e = Json::parse(slurp(fs::path(out) / "error.json"));
    CHECK(e["error"]["kind"] == "parse");
    CHECK(e["error"]["column"].get<int>() > 0);

    const auto unknown = s.write("u.json", R"j({"system": {"operator": "Q0^2"}, "bogus": 1})j");
    CHECK(run_cli({"lattice", "--config", unknown, "--out", out}) == cli::exit_parse);

    const auto broken = s.write("b.json", R"j({"system": )j");
    CHECK(run_cli({"lattice", "--config", broken, "--out", out}) == cli::exit_parse);

    const auto bad_n = s.write("n.json", R"j({"system": {"operator": "Q0^2"}, "N": 0})j");
    CHECK(run_cli({"lattice", "--config", bad_n, "--out", out}) == cli::exit_precondition);
    e = Json::parse(slurp(fs::path(out) / "error.json"));
    CHECK(e["error"]["kind"] == "precondition");
    CHECK(e["error"]["parameter"] == "N");

    const auto refused = s.write("r.json", R"j({"system": {"operator": "Q0^6"}, "N": 100})j");
    CHECK(run_cli({"lattice", "--config", refused, "--out", out}) == cli::exit_refusal);
    e = Json::parse(slurp(fs::path(out) / "error.json"));
    CHECK(e["error"]["kind"] == "refusal");

    CHECK(run_cli({"lattice", "--config", (s.dir / "missing.json").string(), "--out", out}) ==
          cli::exit_precondition);
    CHECK(run_cli({"nonsense"}) == cli::exit_parse);
    CHECK(run_cli({"lattice"}) == cli::exit_parse);
}

TEST_CASE("operator term lists match the grammar") {
    const Json doc = Json::parse(R"j({"system": {"operator": [
        {"coefficient": 2.0, "powers": [[1, 1]]},
        {"coefficient": [0.5, 0.0], "hbar_order": 1, "powers": [[0, 0]]}]}})j");
    const auto cfg = cli::parse_config(doc, "lattice");
    const ModeSpace space = cli::build_space(cfg);
    PolynomialOperator diff = cli::build_operator(cfg.op, space) - PolynomialOperator::oscillator(space, 0);
    diff.prune(1e-14);
    CHECK(diff.is_zero());
}

TEST_CASE("config round trip") {
    const Json doc = Json::parse(kEquivalence);
    const auto cfg = cli::parse_config(doc, "constraint-equivalence");
    CHECK(cfg.n_constrained == 1);
    CHECK(cfg.T == 0.2);
    const Json again = cli::config_json(cfg);
    Json trimmed = again;
    trimmed.erase("computation");
    const auto cfg2 = cli::parse_config(trimmed, "constraint-equivalence");
    CHECK(cli::config_json(cfg2) == again);
}

TEST_CASE("output directory falls back to the environment") {
    Scratch s("env");
    const auto cfg = s.write("c.json", R"j({"system": {"operator": "Q0"}, "initial": [[0, 0]], "final": [[0, 1]]})j");
    const auto target = (s.dir / "from_env").string();
    setenv("CSPATH_OUT_DIR", target.c_str(), 1);
    CHECK(run_cli({"overlap", "--config", cfg, "--quiet"}) == cli::exit_ok);
    unsetenv("CSPATH_OUT_DIR");
    CHECK(fs::exists(fs::path(target) / "result.json"));
}
