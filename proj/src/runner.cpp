#include "thermosep/runner.hpp"

#include "thermosep/errors.hpp"
#include "thermosep/hightemp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace thermosep {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- config

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config field '" + path + "': " + msg);
}

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    fail(path.empty() ? "<root>" : path, "expected an object");
  }
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  check_object(j, path);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config field '" + join_path(path, key) + "'");
    }
  }
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) {
    fail(path, "expected a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    fail(path, "must be finite");
  }
  return x;
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) {
    fail(path, "expected an integer");
  }
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) {
    fail(path, "expected true or false");
  }
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) {
    fail(path, "expected a string");
  }
  return v.get<std::string>();
}

double get_double(const json& j, const std::string& path, const std::string& key, double fallback) {
  return j.contains(key) ? as_double(j.at(key), join_path(path, key)) : fallback;
}

int get_int(const json& j, const std::string& path, const std::string& key, int fallback) {
  return j.contains(key) ? as_int(j.at(key), join_path(path, key)) : fallback;
}

bool get_bool(const json& j, const std::string& path, const std::string& key, bool fallback) {
  return j.contains(key) ? as_bool(j.at(key), join_path(path, key)) : fallback;
}

const json& require(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) {
    fail(join_path(path, key), "is required");
  }
  return j.at(key);
}

double positive(double x, const std::string& path) {
  if (!(x > 0.0)) {
    fail(path, "must be positive");
  }
  return x;
}

std::vector<double> parse_grid(const json& v, const std::string& path, bool allow_inf) {
  std::vector<double> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (allow_inf && v[i].is_string() && v[i].get<std::string>() == "inf") {
        out.push_back(std::numeric_limits<double>::infinity());
      } else {
        out.push_back(as_double(v[i], p));
      }
    }
  } else if (v.is_object()) {
    std::set<std::string> keys = {"start", "stop", "count", "spacing"};
    if (allow_inf) {
      keys.insert("include_infinity");
    }
    check_keys(v, path, keys);
    const double start = as_double(require(v, path, "start"), join_path(path, "start"));
    const double stop = as_double(require(v, path, "stop"), join_path(path, "stop"));
    const int count = as_int(require(v, path, "count"), join_path(path, "count"));
    const std::string spacing = v.contains("spacing") ? as_string(v.at("spacing"), join_path(path, "spacing"))
                                                      : "linear";
    if (count < 1) {
      fail(join_path(path, "count"), "must be >= 1");
    }
    if (spacing != "linear" && spacing != "log") {
      fail(join_path(path, "spacing"), "must be \"linear\" or \"log\"");
    }
    if (spacing == "log" && !(start > 0.0 && stop > 0.0)) {
      fail(path, "log spacing needs positive start and stop");
    }
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out.push_back(spacing == "linear" ? (1.0 - t) * start + t * stop
                                        : std::exp(std::log(start) + (std::log(stop) - std::log(start)) * t));
    }
    if (allow_inf && get_bool(v, path, "include_infinity", false)) {
      out.push_back(std::numeric_limits<double>::infinity());
    }
  } else {
    fail(path, "expected an array or a {start, stop, count} object");
  }
  if (out.empty()) {
    fail(path, "grid must be nonempty");
  }
  return out;
}

std::vector<double> parse_values(const json& v, const std::string& path) {
  if (v.is_number()) {
    return {as_double(v, path)};
  }
  return parse_grid(v, path, false);
}

std::vector<int> parse_sites(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) {
    fail(path, "expected a nonempty array of integers");
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_int(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Boundary parse_boundary(const json& j, const std::string& path) {
  if (!j.contains("boundary")) {
    return Boundary::periodic;
  }
  const auto b = as_string(j.at("boundary"), join_path(path, "boundary"));
  if (b == "periodic") return Boundary::periodic;
  if (b == "open") return Boundary::open;
  fail(join_path(path, "boundary"), "must be \"periodic\" or \"open\"");
}

ModelConfig parse_model(const json& j, const std::string& path) {
  check_keys(j, path, {"preset", "n_sites", "boundary", "params", "site_dim", "terms", "mean_field", "label"});
  ModelConfig m;
  const int n = as_int(require(j, path, "n_sites"), join_path(path, "n_sites"));
  const Boundary boundary = parse_boundary(j, path);
  try {
    if (j.contains("preset")) {
      if (j.contains("terms") || j.contains("mean_field") || j.contains("site_dim")) {
        fail(path, "a preset model cannot also list terms, mean_field or site_dim");
      }
      const auto name = as_string(j.at("preset"), join_path(path, "preset"));
      std::map<std::string, double> params;
      if (j.contains("params")) {
        const auto& p = j.at("params");
        check_object(p, join_path(path, "params"));
        std::set<std::string> allowed;
        try {
          const auto& names = preset_parameters(name);
          allowed.insert(names.begin(), names.end());
        } catch (const PreconditionError& e) {
          fail(join_path(path, "preset"), e.what());
        }
        check_keys(p, join_path(path, "params"), allowed);
        for (const auto& [key, value] : p.items()) {
          params[key] = as_double(value, join_path(join_path(path, "params"), key));
        }
      }
      m.spec = make_preset(name, n, boundary, params);
      m.label = name;
    } else {
      if (j.contains("params")) {
        fail(join_path(path, "params"), "only valid together with a preset");
      }
      ModelSpec spec;
      spec.n_sites = n;
      spec.boundary = boundary;
      spec.site_dim = get_int(j, path, "site_dim", 2);
      if (j.contains("terms")) {
        const auto& terms = j.at("terms");
        if (!terms.is_array()) {
          fail(join_path(path, "terms"), "expected an array");
        }
        for (std::size_t i = 0; i < terms.size(); ++i) {
          const std::string tp = join_path(path, "terms") + "[" + std::to_string(i) + "]";
          check_keys(terms[i], tp, {"coefficient", "factors"});
          LocalTerm term;
          term.coefficient = get_double(terms[i], tp, "coefficient", 1.0);
          const auto& factors = require(terms[i], tp, "factors");
          if (!factors.is_array()) {
            fail(join_path(tp, "factors"), "expected an array");
          }
          for (std::size_t k = 0; k < factors.size(); ++k) {
            const std::string fp = join_path(tp, "factors") + "[" + std::to_string(k) + "]";
            check_keys(factors[k], fp, {"offset", "matrix"});
            Factor f;
            f.offset = as_int(require(factors[k], fp, "offset"), join_path(fp, "offset"));
            f.matrix = SiteMatrix::named(
                site_matrix_id_from_name(as_string(require(factors[k], fp, "matrix"), join_path(fp, "matrix"))));
            term.factors.push_back(f);
          }
          spec.terms.push_back(term);
        }
      }
      if (j.contains("mean_field")) {
        const auto& mf = j.at("mean_field");
        if (!mf.is_array()) {
          fail(join_path(path, "mean_field"), "expected an array");
        }
        for (std::size_t i = 0; i < mf.size(); ++i) {
          const std::string mp = join_path(path, "mean_field") + "[" + std::to_string(i) + "]";
          check_keys(mf[i], mp, {"matrix", "coupling"});
          MeanFieldTerm t;
          t.matrix = SiteMatrix::named(
              site_matrix_id_from_name(as_string(require(mf[i], mp, "matrix"), join_path(mp, "matrix"))));
          t.coupling = get_double(mf[i], mp, "coupling", 1.0);
          spec.mean_field_terms.push_back(t);
        }
      }
      spec.validate();
      m.spec = spec;
      m.label = "custom";
    }
    m.spec.hilbert_dim();
  } catch (const PreconditionError& e) {
    fail(path, e.what());
  }
  if (j.contains("label")) {
    m.label = as_string(j.at("label"), join_path(path, "label"));
  }
  return m;
}

PairsConfig parse_pairs(const json& j, const std::string& path, int n_sites) {
  check_keys(j, path, {"max_size", "all_subsets", "pairs"});
  PairsConfig p;
  p.max_size = get_int(j, path, "max_size", 1);
  p.all_subsets = get_bool(j, path, "all_subsets", false);
  if (p.max_size < 1) {
    fail(join_path(path, "max_size"), "must be >= 1");
  }
  if (j.contains("pairs")) {
    const auto& arr = j.at("pairs");
    if (!arr.is_array() || arr.empty()) {
      fail(join_path(path, "pairs"), "expected a nonempty array of [region1, region2]");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string pp = join_path(path, "pairs") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_array() || arr[i].size() != 2) {
        fail(pp, "expected [region1, region2]");
      }
      RegionPair pair{parse_sites(arr[i][0], pp + "[0]"), parse_sites(arr[i][1], pp + "[1]")};
      try {
        pair.validate(n_sites);
      } catch (const PreconditionError& e) {
        fail(pp, e.what());
      }
      p.explicit_pairs.push_back(pair);
    }
  }
  return p;
}

ModeFunction parse_mode(const json& j, const std::string& path) {
  check_keys(j, path, {"family", "center", "width"});
  ModeFunction m;
  try {
    m.family = mode_family_from_name(as_string(require(j, path, "family"), join_path(path, "family")));
  } catch (const PreconditionError& e) {
    fail(join_path(path, "family"), e.what());
  }
  m.center = get_double(j, path, "center", 0.0);
  m.width = positive(get_double(j, path, "width", 1.0), join_path(path, "width"));
  return m;
}

GibbsScanConfig parse_gibbs(const json& j) {
  GibbsScanConfig c;
  c.model = parse_model(require(j, "", "model"), "model");
  c.betas = parse_grid(require(j, "", "beta_grid"), "beta_grid", false);
  for (double b : c.betas) {
    if (b < 0.0) {
      fail("beta_grid", "values must be >= 0");
    }
  }
  c.pairs = j.contains("regions") ? parse_pairs(j.at("regions"), "regions", c.model.spec.n_sites) : PairsConfig{};
  c.find_threshold = get_bool(j, "", "find_threshold", false);
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, "tolerances", {"ppt", "beta"});
    c.ppt_tol = positive(get_double(t, "tolerances", "ppt", c.ppt_tol), "tolerances.ppt");
    c.tol_beta = positive(get_double(t, "tolerances", "beta", c.tol_beta), "tolerances.beta");
  }
  return c;
}

OrderClassifyConfig parse_order(const json& j) {
  OrderClassifyConfig c;
  c.model = parse_model(require(j, "", "model"), "model");
  c.beta = as_double(require(j, "", "beta"), "beta");
  if (c.beta < 0.0) {
    fail("beta", "must be >= 0");
  }
  c.n_max = get_int(j, "", "n_max", 1);
  if (c.n_max < 1) {
    fail("n_max", "must be >= 1");
  }
  c.all_subsets = get_bool(j, "", "all_subsets", false);
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, "tolerances", {"ppt"});
    c.ppt_tol = positive(get_double(t, "tolerances", "ppt", c.ppt_tol), "tolerances.ppt");
  }
  return c;
}

HightempConfig parse_hightemp(const json& j) {
  HightempConfig c;
  const auto& models = require(j, "", "models");
  if (!models.is_array() || models.empty()) {
    fail("models", "expected a nonempty array of models");
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    c.models.push_back(parse_model(models[i], "models[" + std::to_string(i) + "]"));
  }
  c.scan.max_region_size = get_int(j, "", "max_region_size", 2);
  if (c.scan.max_region_size < 1) {
    fail("max_region_size", "must be >= 1");
  }
  c.scan.beta_hi = positive(get_double(j, "", "beta_hi", c.scan.beta_hi), "beta_hi");
  c.scan.threshold.grid_intervals = get_int(j, "", "grid_intervals", c.scan.threshold.grid_intervals);
  if (c.scan.threshold.grid_intervals < 1) {
    fail("grid_intervals", "must be >= 1");
  }
  c.scan.threshold.tol_beta = positive(get_double(j, "", "tol_beta", c.scan.threshold.tol_beta), "tol_beta");
  if (j.contains("h_norm_override")) {
    c.scan.h_norm_override = positive(as_double(j.at("h_norm_override"), "h_norm_override"), "h_norm_override");
  }
  return c;
}

QuasifreeScanConfig parse_quasifree(const json& j) {
  QuasifreeScanConfig c;
  const auto& chain = require(j, "", "chain");
  check_keys(chain, "chain", {"n", "t", "onsite", "periodic"});
  c.n = as_int(require(chain, "chain", "n"), "chain.n");
  if (c.n < 2) {
    fail("chain.n", "must be >= 2");
  }
  c.t = get_double(chain, "chain", "t", 1.0);
  c.onsite = get_double(chain, "chain", "onsite", 0.0);
  c.periodic = get_bool(chain, "chain", "periodic", false);
  if (j.contains("statistics")) {
    const auto s = as_string(j.at("statistics"), "statistics");
    if (s == "fermi") {
      c.statistics = Statistics::fermi;
    } else if (s == "bose") {
      c.statistics = Statistics::bose;
    } else {
      fail("statistics", "must be \"fermi\" or \"bose\"");
    }
  }
  c.mu = get_double(j, "", "mu", c.mu);
  if (j.contains("mu") && c.statistics == Statistics::fermi) {
    fail("mu", "only used with bose statistics");
  }
  const auto& regions = require(j, "", "regions");
  if (!regions.is_array() || regions.empty()) {
    fail("regions", "expected a nonempty array of {s1, s2}");
  }
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string rp = "regions[" + std::to_string(i) + "]";
    check_keys(regions[i], rp, {"s1", "s2"});
    RegionProjection r{parse_sites(require(regions[i], rp, "s1"), join_path(rp, "s1")),
                       parse_sites(require(regions[i], rp, "s2"), join_path(rp, "s2"))};
    try {
      r.validate(c.n);
    } catch (const PreconditionError& e) {
      fail(rp, e.what());
    }
    c.regions.push_back(r);
  }
  c.betas = parse_grid(require(j, "", "beta_grid"), "beta_grid", false);
  if (!std::is_sorted(c.betas.begin(), c.betas.end()) || c.betas.front() < 0.0) {
    fail("beta_grid", "must be ascending and nonnegative");
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, "tolerances", {"ppt", "beta"});
    c.ppt_tol = positive(get_double(t, "tolerances", "ppt", c.ppt_tol), "tolerances.ppt");
    c.tol_beta = positive(get_double(t, "tolerances", "beta", c.tol_beta), "tolerances.beta");
  }
  return c;
}

ContinuumConfig parse_continuum(const json& j) {
  ContinuumConfig c;
  const auto& pairs = require(j, "", "mode_pairs");
  if (!pairs.is_array() || pairs.empty()) {
    fail("mode_pairs", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string pp = "mode_pairs[" + std::to_string(i) + "]";
    check_keys(pairs[i], pp, {"label", "f", "g"});
    ModePairConfig m;
    m.f = parse_mode(require(pairs[i], pp, "f"), join_path(pp, "f"));
    m.g = parse_mode(require(pairs[i], pp, "g"), join_path(pp, "g"));
    m.label = pairs[i].contains("label") ? as_string(pairs[i].at("label"), join_path(pp, "label"))
                                         : to_string(m.f.family) + "/" + to_string(m.g.family);
    c.pairs.push_back(m);
  }
  c.betas = parse_grid(require(j, "", "betas"), "betas", false);
  for (double b : c.betas) {
    if (!(b > 0.0)) {
      fail("betas", "values must be positive");
    }
  }
  if (j.contains("convention")) {
    const auto s = as_string(j.at("convention"), "convention");
    if (s == "quarter_power") {
      c.convention = ScalingConvention::quarter_power;
    } else if (s == "paper_literal") {
      c.convention = ScalingConvention::paper_literal;
    } else {
      fail("convention", "must be \"quarter_power\" or \"paper_literal\"");
    }
  }
  c.negative_control = get_bool(j, "", "negative_control", true);
  c.tol = positive(get_double(j, "", "tol", c.tol), "tol");
  if (j.contains("quadrature")) {
    const auto& q = j.at("quadrature");
    check_keys(q, "quadrature", {"tail", "initial_panels", "max_panels", "tol"});
    c.quadrature.tail = positive(get_double(q, "quadrature", "tail", c.quadrature.tail), "quadrature.tail");
    c.quadrature.initial_panels = get_int(q, "quadrature", "initial_panels", c.quadrature.initial_panels);
    c.quadrature.max_panels = get_int(q, "quadrature", "max_panels", c.quadrature.max_panels);
    c.quadrature.tol = positive(get_double(q, "quadrature", "tol", c.quadrature.tol), "quadrature.tol");
    if (c.quadrature.initial_panels < 1 || c.quadrature.max_panels < c.quadrature.initial_panels) {
      fail("quadrature", "needs 1 <= initial_panels <= max_panels");
    }
    if (!(c.quadrature.tail < 1.0)) {
      fail("quadrature.tail", "must be below 1");
    }
  }
  return c;
}

FluctuationConfig parse_fluctuation(const json& j) {
  FluctuationConfig c;
  c.c_values = parse_values(require(j, "", "c"), "c");
  c.lambdas = j.contains("lambda") ? parse_values(j.at("lambda"), "lambda") : std::vector<double>{2.0};
  c.alphas = parse_grid(require(j, "", "alpha_grid"), "alpha_grid", false);
  for (double a : c.alphas) {
    if (!(a > 0.0 && a < 1.0)) {
      fail("alpha_grid", "values must lie strictly between 0 and 1");
    }
  }
  c.betas = parse_grid(require(j, "", "beta_grid"), "beta_grid", true);
  for (double b : c.betas) {
    if (!(b > 0.0)) {
      fail("beta_grid", "values must be positive (use \"inf\" for the ground state)");
    }
  }
  c.sz_tol = positive(get_double(j, "", "sz_tol", c.sz_tol), "sz_tol");
  return c;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// ---------------------------------------------------------------- output

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_sites(const std::vector<int>& sites) {
  std::string s;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    s += (i ? " " : "") + std::to_string(sites[i]);
  }
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char ch : s) {
    out += ch;
    if (ch == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

json json_number(double x) {
  if (std::isfinite(x)) {
    return x;
  }
  return format_double(x);
}

struct Counter {
  std::map<std::string, long> verdicts;
  long errors = 0;

  void add(const std::string& verdict, const std::string& error) {
    if (!error.empty()) {
      ++errors;
    } else {
      ++verdicts[verdict];
    }
  }
  json to_json(std::size_t rows) const {
    json j;
    j["rows"] = rows;
    j["verdict_counts"] = json::object();
    for (const auto& [k, v] : verdicts) {
      j["verdict_counts"][k] = v;
    }
    j["error_rows"] = errors;
    return j;
  }
};

using Rows = std::vector<std::vector<std::string>>;

template <typename F>
Rows guarded(std::size_t width, const std::vector<std::string>& key, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::vector<std::string> row(width);
    std::copy(key.begin(), key.end(), row.begin());
    row.back() = e.what();
    return {row};
  }
}

RunResult flatten(std::vector<std::string> header, const std::vector<Rows>& chunks, json summary,
                  std::size_t verdict_col) {
  RunResult r;
  r.records.header = std::move(header);
  Counter counter;
  for (const auto& chunk : chunks) {
    for (const auto& row : chunk) {
      counter.add(row[verdict_col], row.back());
      r.records.rows.push_back(row);
    }
  }
  auto counts = counter.to_json(r.records.rows.size());
  for (auto& [k, v] : counts.items()) {
    summary[k] = v;
  }
  r.summary = std::move(summary);
  return r;
}

// ---------------------------------------------------------------- tasks

std::vector<RegionPair> pairs_for(const PairsConfig& p, const ModelSpec& spec) {
  if (!p.explicit_pairs.empty()) {
    return p.explicit_pairs;
  }
  return enumerate_region_pairs({spec.n_sites, p.max_size, spec.boundary == Boundary::periodic, p.all_subsets});
}

RunResult run_gibbs(const GibbsScanConfig& c, int workers) {
  const bool periodic = c.model.spec.boundary == Boundary::periodic;
  const ThermalFamily family(build_hamiltonian(c.model.spec));
  const auto pairs = pairs_for(c.pairs, c.model.spec);
  std::vector<std::string> header = {"beta",       "region1",    "region2", "order",
                                     "distance",   "min_pt_eig", "negativity", "ccnr",
                                     "tracial_ball", "verdict",  "error"};
  const auto chunks = parallel_map<Rows>(c.betas.size(), workers, [&](std::size_t i) {
    const double beta = c.betas[i];
    std::optional<DensityMatrix> rho;
    std::string rho_error;
    try {
      rho = family.at(beta);
    } catch (const Error& e) {
      rho_error = e.what();
    }
    Rows rows;
    for (const auto& pair : pairs) {
      const std::vector<std::string> key = {format_double(beta), fmt_sites(pair.region1), fmt_sites(pair.region2),
                                            std::to_string(pair_order(pair)),
                                            std::to_string(pair_distance(pair, c.model.spec.n_sites, periodic))};
      auto chunk = guarded(header.size(), key, [&] {
        if (!rho) {
          throw NumericalError(rho_error);
        }
        const auto reduced = restrict_to_pair(*rho, pair);
        const auto rec = evaluate_pair(*rho, pair, periodic, c.ppt_tol);
        auto row = key;
        row.insert(row.end(), {format_double(rec.min_eig), format_double(rec.negativity),
                               format_double(ccnr_realignment(reduced)), fmt_bool(tracial_ball_check(reduced)),
                               to_string(rec.verdict.tag), ""});
        return Rows{row};
      });
      rows.push_back(chunk.front());
    }
    return rows;
  });
  json summary;
  summary["model"] = c.model.label;
  summary["n_sites"] = c.model.spec.n_sites;
  summary["pairs"] = pairs.size();
  if (c.find_threshold) {
    try {
      ThresholdOptions opt;
      opt.tol_beta = c.tol_beta;
      opt.ppt_tol = c.ppt_tol;
      const auto lo = *std::min_element(c.betas.begin(), c.betas.end());
      const auto hi = *std::max_element(c.betas.begin(), c.betas.end());
      const auto t = beta_threshold(family, pairs, lo, hi, opt);
      summary["beta_threshold"] = t ? json(*t) : json(nullptr);
    } catch (const PreconditionError& e) {
      summary["beta_threshold"] = nullptr;
      summary["beta_threshold_note"] = e.what();
    }
  }
  return flatten(header, chunks, summary, 9);
}

RunResult run_order(const OrderClassifyConfig& c, int workers) {
  const bool periodic = c.model.spec.boundary == Boundary::periodic;
  const auto rho = gibbs_state(build_hamiltonian(c.model.spec), c.beta);
  const auto pairs =
      enumerate_region_pairs({c.model.spec.n_sites, c.n_max, periodic, c.all_subsets});
  std::vector<std::string> header = {"beta",       "region1",    "region2", "order", "distance",
                                     "min_pt_eig", "negativity", "verdict", "error"};
  const auto chunks = parallel_map<Rows>(pairs.size(), workers, [&](std::size_t i) {
    const auto& pair = pairs[i];
    const std::vector<std::string> key = {format_double(c.beta), fmt_sites(pair.region1), fmt_sites(pair.region2),
                                          std::to_string(pair_order(pair)),
                                          std::to_string(pair_distance(pair, c.model.spec.n_sites, periodic))};
    return guarded(header.size(), key, [&] {
      const auto rec = evaluate_pair(rho, pair, periodic, c.ppt_tol);
      return Rows{{format_double(c.beta), fmt_sites(rec.pair.region1), fmt_sites(rec.pair.region2),
                   std::to_string(rec.order), std::to_string(rec.distance), format_double(rec.min_eig),
                   format_double(rec.negativity), to_string(rec.verdict.tag), ""}};
    });
  });
  json summary;
  summary["model"] = c.model.label;
  summary["beta"] = c.beta;
  summary["max_checked_N"] = c.n_max;
  summary["first_entangled_N"] = nullptr;
  summary["witness_pair"] = nullptr;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& row = chunks[i].front();
    if (row.back().empty() && row[7] == to_string(VerdictTag::NPT_entangled)) {
      summary["first_entangled_N"] = std::stoi(row[3]);
      summary["witness_pair"] = {pairs[i].region1, pairs[i].region2};
      break;
    }
  }
  return flatten(header, chunks, summary, 7);
}

RunResult run_hightemp(const HightempConfig& c, int workers) {
  std::vector<std::string> header = {"model",
                                     "n_sites",
                                     "d",
                                     "h_norm",
                                     "k_norm",
                                     "beta_star_analytic",
                                     "beta_star_numeric",
                                     "pairs_checked",
                                     "verdict",
                                     "error"};
  std::vector<std::optional<BoundReport>> reports(c.models.size());
  const auto chunks = parallel_map<Rows>(c.models.size(), workers, [&](std::size_t i) {
    const auto& m = c.models[i];
    return guarded(header.size(), {m.label, std::to_string(m.spec.n_sites)}, [&] {
      const auto& r = reports[i].emplace(bound_vs_numeric(m.spec, c.scan));
      return Rows{{m.label, std::to_string(m.spec.n_sites), std::to_string(r.d), format_double(r.h_norm),
                   format_double(r.k_norm), format_double(r.beta_star_analytic),
                   r.beta_star_numeric ? format_double(*r.beta_star_numeric) : "none",
                   std::to_string(r.pairs_checked), r.consistent ? "consistent" : "inconsistent", ""}};
    });
  });
  json summary;
  summary["all_consistent"] = true;
  summary["reports"] = json::array();
  for (std::size_t i = 0; i < c.models.size(); ++i) {
    const auto& row = chunks[i].front();
    json rep;
    rep["model"] = c.models[i].label;
    rep["n_sites"] = c.models[i].spec.n_sites;
    if (!row.back().empty()) {
      rep["error"] = row.back();
      summary["all_consistent"] = false;
    } else {
      const auto& r = *reports[i];
      rep["h_norm"] = r.h_norm;
      rep["k_norm"] = r.k_norm;
      rep["beta_star_analytic"] = json_number(r.beta_star_analytic);
      rep["beta_star_numeric"] = r.beta_star_numeric ? json(*r.beta_star_numeric) : json(nullptr);
      rep["consistent"] = r.consistent;
      rep["l_curve"] = json::array();
      for (const auto& [b, l] : r.l_curve) {
        rep["l_curve"].push_back({b, l});
      }
      rep["note"] = r.note;
      if (!r.consistent) {
        summary["all_consistent"] = false;
      }
    }
    summary["reports"].push_back(rep);
  }
  return flatten(header, chunks, summary, 8);
}

RunResult run_quasifree(const QuasifreeScanConfig& c, int workers) {
  const auto h = hopping_chain(c.n, c.t, c.onsite, c.periodic);
  const bool fermi = c.statistics == Statistics::fermi;
  std::vector<std::string> header = {"statistics", "s1", "s2", "beta", "min_block_eig", "verdict", "error"};
  const std::size_t nb = c.betas.size();
  const auto chunks = parallel_map<Rows>(c.regions.size() * nb, workers, [&](std::size_t i) {
    const auto& reg = c.regions[i / nb];
    const double beta = c.betas[i % nb];
    return guarded(header.size(), {fermi ? "fermi" : "bose", fmt_sites(reg.s1), fmt_sites(reg.s2), format_double(beta)},
                   [&] {
      const auto v = fermi ? fermion_pt_test(fermi_symbol(h, beta), reg, c.ppt_tol)
                           : boson_pt_test(bose_symbol(h, beta, c.mu), reg, c.ppt_tol);
      return Rows{{fermi ? "fermi" : "bose", fmt_sites(reg.s1), fmt_sites(reg.s2), format_double(beta),
                   format_double(v.criterion_value), to_string(v.tag), ""}};
    });
  });
  json summary;
  summary["statistics"] = fermi ? "fermi" : "bose";
  summary["thresholds"] = json::array();
  for (std::size_t r = 0; r < c.regions.size(); ++r) {
    json t;
    t["s1"] = c.regions[r].s1;
    t["s2"] = c.regions[r].s2;
    t["beta_threshold"] = nullptr;
    if (fermi) {
      try {
        const auto scan = quasifree_beta_scan(h, c.regions[r], c.betas, c.ppt_tol, c.tol_beta);
        if (scan.threshold) {
          t["beta_threshold"] = *scan.threshold;
        }
      } catch (const Error& e) {
        t["error"] = e.what();
      }
    }
    summary["thresholds"].push_back(t);
  }
  return flatten(header, chunks, summary, 5);
}

RunResult run_continuum(const ContinuumConfig& c, int workers) {
  std::vector<std::string> header = {"label", "f_family", "g_family",     "control", "beta",
                                     "max_abs_diff", "agree", "same_verdict", "verdict", "error"};
  const std::size_t variants = c.negative_control ? 2 : 1;
  const auto chunks = parallel_map<Rows>(c.pairs.size() * variants, workers, [&](std::size_t i) {
    const auto& p = c.pairs[i / variants];
    const bool control = i % variants == 1;
    const std::vector<std::string> key = {p.label, to_string(p.f.family), to_string(p.g.family),
                                          control ? "unscaled_partner" : "scaled"};
    Rows rows;
    try {
      ScalingOptions opt;
      opt.tol = c.tol;
      opt.convention = c.convention;
      opt.scale_partner = !control;
      opt.quadrature = c.quadrature;
      const auto rep = scaling_invariance_check(p.f, p.g, c.betas, opt);
      for (const auto& r : rep.rows) {
        auto row = key;
        row.insert(row.end(), {format_double(r.beta), format_double(r.max_abs_diff), fmt_bool(r.agree),
                               fmt_bool(r.same_verdict), r.agree ? "agree" : "disagree", ""});
        rows.push_back(row);
      }
    } catch (const Error& e) {
      for (double beta : c.betas) {
        auto row = key;
        row.resize(header.size());
        row[4] = format_double(beta);
        row.back() = e.what();
        rows.push_back(row);
      }
    }
    return rows;
  });
  json summary;
  summary["convention"] = c.convention == ScalingConvention::quarter_power ? "quarter_power" : "paper_literal";
  summary["pairs"] = json::array();
  for (std::size_t k = 0; k < c.pairs.size(); ++k) {
    json p;
    p["label"] = c.pairs[k].label;
    auto all_agree = [](const Rows& rows) {
      return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.back().empty() && r[6] == "true"; });
    };
    p["invariant"] = all_agree(chunks[k * variants]);
    if (c.negative_control) {
      const auto& ctl = chunks[k * variants + 1];
      p["control_detected"] = std::any_of(ctl.begin(), ctl.end(), [](const auto& r) {
        return r.back().empty() && r[6] == "false";
      });
    }
    summary["pairs"].push_back(p);
  }
  return flatten(header, chunks, summary, 8);
}

RunResult run_fluctuation(const FluctuationConfig& c, int workers, bool raw) {
  std::vector<std::string> header = {
      "c",          "lambda",      "alpha",          "beta",          "s_z",
      "a_eff",      "multiple_roots", "nu1",         "nu2",           "orientation1",
      "orientation2", "a1",        "b1",             "a2",            "b2",
      "a1b1_plus_a2b2", "state_defect", "uncertainty_ok", "ineq23_lhs", "ineq23_rhs",
      "ineq23_margin", "ineq23_holds", "ineq23_literal_lhs", "ineq23_literal_holds", "ppt_min_eig",
      "verdict",    "error"};
  struct Point {
    double c, lambda, alpha, beta;
  };
  std::vector<Point> points;
  for (double cv : c.c_values) {
    for (double l : c.lambdas) {
      for (double a : c.alphas) {
        for (double b : c.betas) {
          points.push_back({cv, l, a, b});
        }
      }
    }
  }
  SweepOptions opt;
  opt.form = raw ? GeneratorForm::paper_literal : GeneratorForm::symmetric;
  opt.sz_tol = c.sz_tol;
  std::vector<FluctuationRow> results(points.size());
  const auto chunks = parallel_map<Rows>(points.size(), workers, [&](std::size_t i) {
    const auto& p = points[i];
    const auto r = fluctuation_point({p.c, p.beta, p.lambda, p.alpha}, opt);
    results[i] = r;
    std::vector<std::string> row = {format_double(p.c), format_double(p.lambda), format_double(p.alpha),
                                    format_double(p.beta)};
    if (r.error.empty()) {
      const std::vector<std::string> rest = {
          format_double(r.s_z),          format_double(r.a_eff),        fmt_bool(r.multiple_roots),
          format_double(r.nu1),          format_double(r.nu2),          std::to_string(r.orientation1),
          std::to_string(r.orientation2), format_double(r.a1),          format_double(r.b1),
          format_double(r.a2),           format_double(r.b2),           format_double(r.orthogonality),
          format_double(r.state_defect), fmt_bool(r.uncertainty_ok),    format_double(r.ineq_corrected.lhs),
          format_double(r.ineq_corrected.rhs), format_double(r.ineq_corrected.lhs - r.ineq_corrected.rhs),
          fmt_bool(r.ineq_corrected.holds), format_double(r.ineq_literal.lhs), fmt_bool(r.ineq_literal.holds),
          format_double(r.ppt_min_eig),  to_string(r.verdict.tag),      ""};
      row.insert(row.end(), rest.begin(), rest.end());
    } else {
      row.resize(header.size());
      row.back() = r.error;
    }
    return Rows{row};
  });

  long violations = 0, literal_violations = 0, npt = 0, npt_ground = 0, violation_not_npt = 0;
  bool alpha_half_holds = true;
  double alpha_half_orth = 0.0;
  for (const auto& r : results) {
    if (!r.error.empty()) {
      continue;
    }
    const bool is_npt = r.verdict.tag == VerdictTag::NPT_entangled;
    violations += !r.ineq_corrected.holds;
    literal_violations += !r.ineq_literal.holds;
    npt += is_npt;
    npt_ground += is_npt && std::isinf(r.beta);
    violation_not_npt += !r.ineq_corrected.holds && !is_npt;
    if (std::abs(r.alpha - 0.5) < 1e-12) {
      alpha_half_holds = alpha_half_holds && r.ineq_corrected.holds;
      alpha_half_orth = std::max(alpha_half_orth, std::abs(r.orthogonality));
    }
  }
  json summary;
  summary["generator"] = raw ? "paper_literal" : "symmetric";
  summary["ineq23_violations"] = violations;
  summary["ineq23_literal_violations"] = literal_violations;
  summary["npt_rows"] = npt;
  summary["npt_rows_ground_state"] = npt_ground;
  summary["violations_without_npt"] = violation_not_npt;
  summary["alpha_half_all_hold"] = alpha_half_holds;
  summary["alpha_half_max_orthogonality"] = alpha_half_orth;
  return flatten(header, chunks, summary, 25);
}

} // namespace

// ---------------------------------------------------------------- public

std::string to_string(Task task) {
  switch (task) {
  case Task::gibbs_scan: return "gibbs_scan";
  case Task::order_classify: return "order_classify";
  case Task::hightemp_report: return "hightemp_report";
  case Task::quasifree_scan: return "quasifree_scan";
  case Task::continuum_scaling: return "continuum_scaling";
  case Task::fluctuation_sweep: return "fluctuation_sweep";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  for (auto t : {Task::gibbs_scan, Task::order_classify, Task::hightemp_report, Task::quasifree_scan,
                 Task::continuum_scaling, Task::fluctuation_sweep}) {
    if (to_string(t) == name) {
      return t;
    }
  }
  throw ConfigError("unknown task '" + name + "'");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("JSON parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  check_object(j, "");
  RunConfig cfg;
  cfg.task = task_from_name(as_string(require(j, "", "task"), "task"));

  std::set<std::string> common = {"task", "workers", "output_prefix", "plot"};
  std::map<Task, std::set<std::string>> specific = {
      {Task::gibbs_scan, {"model", "beta_grid", "regions", "find_threshold", "tolerances"}},
      {Task::order_classify, {"model", "beta", "n_max", "all_subsets", "tolerances"}},
      {Task::hightemp_report,
       {"models", "max_region_size", "beta_hi", "grid_intervals", "tol_beta", "h_norm_override"}},
      {Task::quasifree_scan, {"chain", "statistics", "mu", "regions", "beta_grid", "tolerances"}},
      {Task::continuum_scaling, {"mode_pairs", "betas", "convention", "negative_control", "tol", "quadrature"}},
      {Task::fluctuation_sweep, {"c", "lambda", "alpha_grid", "beta_grid", "sz_tol"}},
  };
  auto allowed = common;
  allowed.insert(specific[cfg.task].begin(), specific[cfg.task].end());
  check_keys(j, "", allowed);

  if (j.contains("workers")) {
    cfg.workers = as_int(j.at("workers"), "workers");
    if (*cfg.workers < 1) {
      fail("workers", "must be >= 1");
    }
  }
  cfg.output_prefix = j.contains("output_prefix") ? as_string(j.at("output_prefix"), "output_prefix")
                                                  : to_string(cfg.task);
  if (cfg.output_prefix.empty() || cfg.output_prefix.find('/') != std::string::npos) {
    fail("output_prefix", "must be a nonempty file name without '/'");
  }
  if (j.contains("plot")) {
    const auto& p = j.at("plot");
    check_keys(p, "plot", {"x", "y", "series"});
    PlotAxes axes = default_axes(cfg.task);
    if (p.contains("x")) axes.x = as_string(p.at("x"), "plot.x");
    if (p.contains("y")) axes.y = as_string(p.at("y"), "plot.y");
    if (p.contains("series")) {
      axes.series.clear();
      const auto& s = p.at("series");
      if (!s.is_array()) {
        fail("plot.series", "expected an array of column names");
      }
      for (std::size_t i = 0; i < s.size(); ++i) {
        axes.series.push_back(as_string(s[i], "plot.series[" + std::to_string(i) + "]"));
      }
    }
    cfg.plot = axes;
  }

  switch (cfg.task) {
  case Task::gibbs_scan: cfg.params = parse_gibbs(j); break;
  case Task::order_classify: cfg.params = parse_order(j); break;
  case Task::hightemp_report: cfg.params = parse_hightemp(j); break;
  case Task::quasifree_scan: cfg.params = parse_quasifree(j); break;
  case Task::continuum_scaling: cfg.params = parse_continuum(j); break;
  case Task::fluctuation_sweep: cfg.params = parse_fluctuation(j); break;
  }
  return cfg;
}

std::string format_double(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      out += (i ? "," : "") + csv_field(fields[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) {
    line(r);
  }
  return out;
}

PlotAxes default_axes(Task task) {
  switch (task) {
  case Task::gibbs_scan: return {"beta", "min_pt_eig", {"region1", "region2"}};
  case Task::order_classify: return {"distance", "min_pt_eig", {"region1", "region2"}};
  case Task::hightemp_report: return {"n_sites", "beta_star_analytic", {"model"}};
  case Task::quasifree_scan: return {"beta", "min_block_eig", {"s1", "s2"}};
  case Task::continuum_scaling: return {"beta", "max_abs_diff", {"label", "control"}};
  case Task::fluctuation_sweep: return {"alpha", "ineq23_margin", {"c", "lambda", "beta"}};
  }
  return {};
}

Table emit_plotdata(const Table& records, const PlotAxes& axes) {
  Table out;
  out.header = {"x", "y", "series"};
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(records.header.begin(), records.header.end(), name);
    if (it == records.header.end()) {
      throw ConfigError("plot column '" + name + "' is not part of this task's schema");
    }
    return static_cast<std::size_t>(it - records.header.begin());
  };
  const auto xi = column(axes.x);
  const auto yi = column(axes.y);
  std::vector<std::pair<std::string, std::size_t>> si;
  for (const auto& s : axes.series) {
    si.emplace_back(s, column(s));
  }
  const bool has_error = !records.header.empty() && records.header.back() == "error";
  for (const auto& r : records.rows) {
    if (has_error && !r.back().empty()) {
      continue;
    }
    char* end = nullptr;
    std::strtod(r[yi].c_str(), &end);
    if (r[yi].empty() || *end != '\0') {
      continue;
    }
    std::string series;
    for (const auto& [name, idx] : si) {
      series += (series.empty() ? "" : " ") + name + "=" + r[idx];
    }
    out.rows.push_back({r[xi], r[yi], series});
  }
  return out;
}

RunResult execute(const RunConfig& config, int workers, bool raw_paper_forms) {
  RunResult r = std::visit(
      [&](const auto& p) -> RunResult {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GibbsScanConfig>) return run_gibbs(p, workers);
        else if constexpr (std::is_same_v<T, OrderClassifyConfig>) return run_order(p, workers);
        else if constexpr (std::is_same_v<T, HightempConfig>) return run_hightemp(p, workers);
        else if constexpr (std::is_same_v<T, QuasifreeScanConfig>) return run_quasifree(p, workers);
        else if constexpr (std::is_same_v<T, ContinuumConfig>) return run_continuum(p, workers);
        else return run_fluctuation(p, workers, raw_paper_forms);
      },
      config.params);
  r.summary["task"] = to_string(config.task);
  r.plot = emit_plotdata(r.records, config.plot ? *config.plot : default_axes(config.task));
  return r;
}

int resolve_workers(std::optional<int> cli, const RunConfig& config) {
  if (cli) {
    if (*cli < 1) {
      throw ConfigError("--workers must be >= 1");
    }
    return *cli;
  }
  if (const char* env = std::getenv("THERMOSEP_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) {
      throw ConfigError(std::string("THERMOSEP_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(v);
  }
  return config.workers.value_or(1);
}

json density_to_json(const DensityMatrix& rho) {
  json j;
  j["dims"] = rho.subsystem_dims;
  j["data"] = json::array();
  for (Eigen::Index r = 0; r < rho.matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < rho.matrix.cols(); ++c) {
      j["data"].push_back({rho.matrix(r, c).real(), rho.matrix(r, c).imag()});
    }
  }
  return j;
}

DensityMatrix density_from_json(const json& j) {
  check_keys(j, "", {"dims", "data"});
  DensityMatrix rho;
  const auto& dims = require(j, "", "dims");
  if (!dims.is_array() || dims.empty()) {
    fail("dims", "expected a nonempty array");
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    rho.subsystem_dims.push_back(as_int(dims[i], "dims[" + std::to_string(i) + "]"));
  }
  const int dim = product(rho.subsystem_dims);
  const auto& data = require(j, "", "data");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(dim) * dim) {
    fail("data", "expected " + std::to_string(dim * dim) + " [re, im] entries");
  }
  rho.matrix.resize(dim, dim);
  for (int k = 0; k < dim * dim; ++k) {
    const auto& e = data[k];
    const std::string path = "data[" + std::to_string(k) + "]";
    if (!e.is_array() || e.size() != 2) {
      fail(path, "expected [re, im]");
    }
    rho.matrix(k / dim, k % dim) = Complex(as_double(e[0], path), as_double(e[1], path));
  }
  return rho;
}

int run(const RunConfig& config, const RunOptions& options) {
  const int workers = resolve_workers(options.workers, config);
  RunResult result;
  try {
    result = execute(config, workers, options.raw_paper_forms);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    std::cerr << "thermosep: numerical failure: " << e.what() << "\n";
    return 2;
  }
  namespace fs = std::filesystem;
  const fs::path dir(options.out_dir);
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) {
      throw ConfigError("cannot write " + (dir / name).string());
    }
    out << content;
  };
  write(config.output_prefix + ".csv", to_csv(result.records));
  write(config.output_prefix + "_summary.json", result.summary.dump(2) + "\n");
  write(config.output_prefix + "_plot.csv", to_csv(result.plot));
  return 0;
}

} // namespace thermosep
