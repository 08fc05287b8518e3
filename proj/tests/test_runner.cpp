#include "thermosep/errors.hpp"
#include "thermosep/runner.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace thermosep;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string f;
  while (std::getline(s, f, ',')) {
    out.push_back(f);
  }
  if (!line.empty() && line.back() == ',') {
    out.push_back("");
  }
  return out;
}

long total_rows(const nlohmann::json& summary) {
  long n = summary["error_rows"].get<long>();
  for (const auto& [k, v] : summary["verdict_counts"].items()) {
    n += v.get<long>();
  }
  return n;
}

const char* kMinimalGibbs = R"({"task": "gibbs_scan",
  "model": {"preset": "ising", "n_sites": 4},
  "beta_grid": [0.0, 1.0]})";

} // namespace

TEST_CASE("parse_config fills defaults") {
  const auto cfg = parse_config(kMinimalGibbs);
  CHECK(cfg.task == Task::gibbs_scan);
  CHECK(cfg.output_prefix == "gibbs_scan");
  CHECK_FALSE(cfg.workers.has_value());
  const auto& g = std::get<GibbsScanConfig>(cfg.params);
  CHECK(g.model.spec.n_sites == 4);
  CHECK(g.model.spec.boundary == Boundary::periodic);
  CHECK(g.pairs.max_size == 1);
  CHECK(g.ppt_tol == kPptTolerance);
  CHECK(g.betas == std::vector<double>{0.0, 1.0});
}

TEST_CASE("parse_config is strict") {
  CHECK(config_error(R"({"task": "gibbs_scan", "model": {"preset": "ising", "n_sites": 4}, "betaa": [1]})")
            .find("betaa") != std::string::npos);
  CHECK(config_error(R"({"task": "gibbs_scan", "model": {"preset": "ising", "n_sites": 4}, "beta_grid": []})")
            .find("beta_grid") != std::string::npos);
  CHECK(config_error(R"({"task": "gibbs_scan", "model": {"preset": "ising", "n_sites": 4, "params": {"K": 1}},
                         "beta_grid": [1]})")
            .find("model.params.K") != std::string::npos);
  CHECK(config_error(R"({"task": "gibbs_scan", "model": {"preset": "ising", "n_sites": 4}, "beta_grid": [1],
                         "tolerances": {"ppt": -1}})")
            .find("tolerances.ppt") != std::string::npos);
  CHECK(config_error(R"({"task": "fluctuation_sweep", "c": 1, "alpha_grid": [0.5], "beta_grid": ["infinity"]})")
            .find("beta_grid[0]") != std::string::npos);
  CHECK(config_error(R"({"task": "spectral_gap"})").find("spectral_gap") != std::string::npos);
  CHECK(config_error(R"({"model": {}})").find("task") != std::string::npos);

  const auto syntax = config_error("{\n  \"task\": \"gibbs_scan\",\n  \"beta_grid\": [1, 2,]\n}");
  CHECK(syntax.find("line 3") != std::string::npos);
  CHECK(syntax.find("column") != std::string::npos);
}

TEST_CASE("grid objects") {
  const auto cfg = parse_config(R"({"task": "fluctuation_sweep", "c": [0.2, 1], "lambda": 2,
    "alpha_grid": {"start": 0.1, "stop": 0.9, "count": 9},
    "beta_grid": {"start": 0.2, "stop": 20, "count": 3, "spacing": "log", "include_infinity": true}})");
  const auto& f = std::get<FluctuationConfig>(cfg.params);
  CHECK(f.alphas.size() == 9);
  CHECK(f.alphas[4] == doctest::Approx(0.5));
  REQUIRE(f.betas.size() == 4);
  CHECK(f.betas[1] == doctest::Approx(2.0));
  CHECK(std::isinf(f.betas[3]));
  CHECK(f.lambdas == std::vector<double>{2.0});
}

TEST_CASE("format_double and csv") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(INFINITY) == "inf");
  CHECK(to_csv({{"a", "b"}, {{"1", "x,y"}}}) == "a,b\n1,\"x,y\"\n");
}

TEST_CASE("emit_plotdata") {
  Table records{{"beta", "region1", "region2", "min_pt_eig", "error"},
                {{"0", "0", "1", "0.25", ""}, {"1", "0", "1", "0.1", ""}, {"0", "0", "2", "0.25", ""},
                 {"1", "0", "2", "", "failed"}}};
  const auto plot = emit_plotdata(records, {"beta", "min_pt_eig", {"region1", "region2"}});
  CHECK(plot.header == std::vector<std::string>{"x", "y", "series"});
  REQUIRE(plot.rows.size() == 3);
  CHECK(plot.rows[0][2] == "region1=0 region2=1");
  CHECK(plot.rows[2][2] == "region1=0 region2=2");
  CHECK(emit_plotdata({records.header, {}}, {"beta", "min_pt_eig", {}}).rows.empty());
  CHECK_THROWS_AS(emit_plotdata(records, {"alpha", "min_pt_eig", {}}), ConfigError);
}

TEST_CASE("order_classify matches the golden file") {
  const auto cfg = parse_config(read_file(std::filesystem::path(THERMOSEP_SOURCE_DIR) / "configs/order_heisenberg.json"));
  const auto result = execute(cfg, 1);
  std::stringstream golden(read_file(std::filesystem::path(THERMOSEP_SOURCE_DIR) /
                                     "tests/golden/order_classify_heisenberg6.csv"));
  std::stringstream produced(to_csv(result.records));
  std::string g, p;
  int lines = 0;
  while (std::getline(golden, g)) {
    REQUIRE(std::getline(produced, p));
    const auto gf = split(g), pf = split(p);
    REQUIRE(gf.size() == pf.size());
    for (std::size_t i = 0; i < gf.size(); ++i) {
      char* end = nullptr;
      const double gv = std::strtod(gf[i].c_str(), &end);
      if (!gf[i].empty() && *end == '\0' && lines > 0) {
        CHECK(std::stod(pf[i]) == doctest::Approx(gv).epsilon(1e-10).scale(1e-3));
      } else {
        CHECK(gf[i] == pf[i]);
      }
    }
    ++lines;
  }
  CHECK(lines == 49);
  CHECK(result.summary["first_entangled_N"] == 1);
  CHECK(result.summary["witness_pair"] == nlohmann::json({{0}, {1}}));
  CHECK(total_rows(result.summary) == static_cast<long>(result.records.rows.size()));
}

TEST_CASE("quasifree scan with zero hopping is all PPT") {
  const auto cfg = parse_config(R"({"task": "quasifree_scan", "chain": {"n": 6, "t": 0},
    "regions": [{"s1": [0, 1], "s2": [2]}, {"s1": [5], "s2": [0]}],
    "beta_grid": {"start": 0, "stop": 20, "count": 11}})");
  const auto r = execute(cfg, 2);
  CHECK(r.records.rows.size() == 22);
  CHECK(r.summary["verdict_counts"]["PPT_pass"] == 22);
  CHECK(r.summary["error_rows"] == 0);
}

TEST_CASE("fluctuation sweep: alpha one half always holds") {
  const auto cfg = parse_config(R"({"task": "fluctuation_sweep", "c": [0.2, 1], "lambda": [1],
    "alpha_grid": [0.3, 0.5, 0.7], "beta_grid": {"start": 0.2, "stop": 20, "count": 5, "spacing": "log"}})");
  const auto r = execute(cfg, 1);
  CHECK(r.summary["alpha_half_all_hold"] == true);
  for (const auto& row : r.records.rows) {
    if (row[2] == "0.5") {
      CHECK(row[21] == "true");
    }
  }
  CHECK(total_rows(r.summary) == static_cast<long>(r.records.rows.size()));
  CHECK(r.plot.rows.size() == r.records.rows.size());
  CHECK(r.plot.rows[0][2].find("beta=") != std::string::npos);
}

TEST_CASE("per-row errors keep the parameter key") {
  const auto cfg = parse_config(R"({"task": "hightemp_report", "models": [
    {"preset": "ising", "n_sites": 4}, {"preset": "meanfield_h2", "n_sites": 4}]})");
  const auto r = execute(cfg, 1);
  REQUIRE(r.records.rows.size() == 2);
  CHECK(r.records.rows[1][0] == "meanfield_h2");
  CHECK(r.records.rows[1][1] == "4");
  CHECK_FALSE(r.records.rows[1].back().empty());
  CHECK(r.summary["error_rows"] == 1);
}

TEST_CASE("output does not depend on the worker count") {
  const auto cfg = parse_config(R"({"task": "gibbs_scan", "model": {"preset": "heisenberg", "n_sites": 5},
    "beta_grid": {"start": 0, "stop": 3, "count": 7}, "regions": {"max_size": 2}})");
  const auto one = to_csv(execute(cfg, 1).records);
  CHECK(one == to_csv(execute(cfg, 3).records));
  CHECK(one == to_csv(execute(cfg, 8).records));
}

TEST_CASE("resolve_workers") {
  auto cfg = parse_config(kMinimalGibbs);
  ::unsetenv("THERMOSEP_WORKERS");
  CHECK(resolve_workers(std::nullopt, cfg) == 1);
  cfg.workers = 3;
  CHECK(resolve_workers(std::nullopt, cfg) == 3);
  ::setenv("THERMOSEP_WORKERS", "5", 1);
  CHECK(resolve_workers(std::nullopt, cfg) == 5);
  CHECK(resolve_workers(2, cfg) == 2);
  ::setenv("THERMOSEP_WORKERS", "many", 1);
  CHECK_THROWS_AS(resolve_workers(std::nullopt, cfg), ConfigError);
  ::unsetenv("THERMOSEP_WORKERS");
}

TEST_CASE("density matrix json round trip") {
  const auto rho = gibbs_state(build_hamiltonian(make_preset("heisenberg", 2, Boundary::open, {})), 0.7);
  const auto j = density_to_json(rho);
  CHECK(j["data"].size() == 16);
  const auto back = density_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.subsystem_dims == rho.subsystem_dims);
  CHECK((back.matrix - rho.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("command line exit codes") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "thermosep_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string exe = THERMOSEP_CLI;
  {
    std::ofstream(dir / "ok.json") << kMinimalGibbs;
    std::ofstream(dir / "bad.json") << R"({"task": "gibbs_scan", "betaa": 1})";
  }
  auto run_cli = [&](const std::string& args) {
    const int status = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run_cli("gibbs_scan --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "gibbs_scan.csv"));
  CHECK(fs::exists(dir / "out" / "gibbs_scan_summary.json"));
  CHECK(fs::exists(dir / "out" / "gibbs_scan_plot.csv"));
  CHECK(run_cli("gibbs_scan --config " + (dir / "bad.json").string()) == 1);
  CHECK(run_cli("order_classify --config " + (dir / "ok.json").string()) == 1);
  CHECK(run_cli("gibbs_scan --config " + (dir / "missing.json").string()) == 1);
  fs::remove_all(dir);
}
