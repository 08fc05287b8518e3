#include "thermosep/separability.hpp"

#include "thermosep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>

namespace thermosep {

namespace {

void require_bipartite(const DensityMatrix& rho) {
  if (rho.subsystem_dims.size() != 2) {
    throw PreconditionError("state is not bipartite (" + std::to_string(rho.subsystem_dims.size()) +
                            " subsystem dims)");
  }
  if (product(rho.subsystem_dims) != rho.dim() || rho.matrix.rows() != rho.matrix.cols()) {
    throw PreconditionError("density matrix dimension does not match subsystem dims");
  }
}

CMatrix sign_of(const CMatrix& m) {
  const auto eig = hermitian_eig(0.5 * (m + m.adjoint()));
  return apply_spectral(eig, [](double x) { return x >= 0.0 ? 1.0 : -1.0; });
}

CMatrix random_dichotomic(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      m(i, j) = Complex(normal(rng), normal(rng));
    }
  }
  return sign_of(m + m.adjoint());
}

// tr(rho (X (x) Y)) = tr(M Y) with M = tr_A[rho (X (x) 1)]
CMatrix reduce_over_a(const CMatrix& rho, const CMatrix& x, int da, int db) {
  CMatrix m = CMatrix::Zero(db, db);
  for (int a = 0; a < da; ++a) {
    for (int ap = 0; ap < da; ++ap) {
      const Complex xv = x(ap, a);
      if (xv == Complex(0.0)) {
        continue;
      }
      m += xv * rho.block(a * db, ap * db, db, db);
    }
  }
  return m;
}

// tr(rho (X (x) Y)) = tr(N X) with N = tr_B[rho (1 (x) Y)]
CMatrix reduce_over_b(const CMatrix& rho, const CMatrix& y, int da, int db) {
  CMatrix n(da, da);
  for (int a = 0; a < da; ++a) {
    for (int ap = 0; ap < da; ++ap) {
      n(a, ap) = (rho.block(a * db, ap * db, db, db) * y).trace();
    }
  }
  return n;
}

std::vector<int> sorted_copy(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) {
    return 0.0;
  }
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

void combinations(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int s = start; s < n; ++s) {
    cur.push_back(s);
    combinations(n, k, s + 1, cur, out);
    cur.pop_back();
  }
}

} // namespace

std::string to_string(VerdictTag tag) {
  switch (tag) {
  case VerdictTag::NPT_entangled: return "NPT_entangled";
  case VerdictTag::PPT_pass: return "PPT_pass";
  case VerdictTag::separable_certified: return "separable_certified";
  }
  return "?";
}

CMatrix partial_transpose(const DensityMatrix& rho) {
  require_bipartite(rho);
  const int da = rho.subsystem_dims[0];
  const int db = rho.subsystem_dims[1];
  CMatrix out(rho.dim(), rho.dim());
  for (int a = 0; a < da; ++a) {
    for (int ap = 0; ap < da; ++ap) {
      out.block(a * db, ap * db, db, db) = rho.matrix.block(a * db, ap * db, db, db).transpose();
    }
  }
  return out;
}

PptResult ppt_min_eig(const DensityMatrix& rho, double tol) {
  const double m = min_eigenvalue(partial_transpose(rho));
  const auto tag = m < -tol ? VerdictTag::NPT_entangled : VerdictTag::PPT_pass;
  return {m, {tag, m, tol}};
}

double negativity(const DensityMatrix& rho) {
  const RVector ev = hermitian_eigenvalues(partial_transpose(rho));
  double neg = 0.0;
  for (double x : ev) {
    if (x < 0.0) {
      neg -= x;
    }
  }
  return neg;
}

double ccnr_realignment(const DensityMatrix& rho) {
  require_bipartite(rho);
  const int da = rho.subsystem_dims[0];
  const int db = rho.subsystem_dims[1];
  CMatrix r(da * da, db * db);
  for (int a = 0; a < da; ++a) {
    for (int ap = 0; ap < da; ++ap) {
      for (int b = 0; b < db; ++b) {
        for (int bp = 0; bp < db; ++bp) {
          r(a * da + ap, b * db + bp) = rho.matrix(a * db + b, ap * db + bp);
        }
      }
    }
  }
  Eigen::BDCSVD<CMatrix> svd(r);
  return svd.singularValues().sum();
}

double separable_ball_radius(int total_dim) {
  if (total_dim < 2) {
    throw PreconditionError("separable ball needs total dimension >= 2");
  }
  return 1.0 / std::sqrt(static_cast<double>(total_dim) * (total_dim - 1));
}

bool tracial_ball_check(const DensityMatrix& rho) {
  require_bipartite(rho);
  const int d = rho.dim();
  const CMatrix diff = rho.matrix - CMatrix::Identity(d, d) / static_cast<double>(d);
  return diff.norm() <= separable_ball_radius(d);
}

ChshResult chsh_max(const DensityMatrix& rho, const ChshOptions& options) {
  require_bipartite(rho);
  const int da = rho.subsystem_dims[0];
  const int db = rho.subsystem_dims[1];
  const CMatrix& m = rho.matrix;
  std::mt19937_64 rng(options.seed);

  ChshResult best{-std::numeric_limits<double>::infinity(), false};
  for (int restart = 0; restart < options.restarts; ++restart) {
    CMatrix a0 = random_dichotomic(da, rng);
    CMatrix a1 = random_dichotomic(da, rng);
    CMatrix b0, b1;
    double value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int step = 0; step < options.steps; ++step) {
      b0 = sign_of(reduce_over_a(m, a0 + a1, da, db));
      b1 = sign_of(reduce_over_a(m, a0 - a1, da, db));
      a0 = sign_of(reduce_over_b(m, b0 + b1, da, db));
      a1 = sign_of(reduce_over_b(m, b0 - b1, da, db));
      const double next = (reduce_over_b(m, b0 + b1, da, db) * a0).trace().real() +
                          (reduce_over_b(m, b0 - b1, da, db) * a1).trace().real();
      if (std::abs(next - value) <= 1e-13) {
        value = next;
        converged = true;
        break;
      }
      value = next;
    }
    if (value > best.value) {
      best = {value, converged};
    } else if (value == best.value) {
      best.converged = best.converged || converged;
    }
  }
  return best;
}

int pair_order(const RegionPair& pair) {
  return static_cast<int>(std::max(pair.region1.size(), pair.region2.size()));
}

int pair_distance(const RegionPair& pair, int n_sites, bool periodic) {
  int best = n_sites;
  for (int a : pair.region1) {
    for (int b : pair.region2) {
      int d = std::abs(a - b);
      if (periodic) {
        d = std::min(d, n_sites - d);
      }
      best = std::min(best, d);
    }
  }
  return best;
}

std::vector<RegionPair> enumerate_region_pairs(const PairEnumeration& spec) {
  const int n = spec.n_sites;
  if (n < 2 || spec.max_size < 1) {
    throw PreconditionError("pair enumeration needs n_sites >= 2 and max_size >= 1");
  }
  const int max_size = std::min(spec.max_size, n - 1);

  std::vector<std::vector<int>> regions;
  if (spec.all_subsets) {
    double count = 0.0;
    for (int a = 1; a <= max_size; ++a) {
      for (int b = 1; b <= max_size; ++b) {
        count += binomial(n, a) * binomial(n - a, b);
      }
    }
    count /= 2.0;
    if (count > static_cast<double>(spec.budget)) {
      throw PreconditionError("region pair budget exceeded: " + std::to_string(static_cast<long long>(count)) +
                              " pairs > budget " + std::to_string(spec.budget));
    }
    for (int k = 1; k <= max_size; ++k) {
      std::vector<int> cur;
      combinations(n, k, 0, cur, regions);
    }
  } else {
    for (int len = 1; len <= max_size; ++len) {
      const int starts = spec.periodic ? n : n - len + 1;
      for (int s = 0; s < starts; ++s) {
        std::vector<int> r;
        for (int j = 0; j < len; ++j) {
          r.push_back((s + j) % n);
        }
        regions.push_back(r);
      }
    }
  }

  using Key = std::tuple<int, std::vector<int>, std::vector<int>>;
  std::map<Key, RegionPair> unique;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto si = sorted_copy(regions[i]);
    for (std::size_t j = i + 1; j < regions.size(); ++j) {
      const auto sj = sorted_copy(regions[j]);
      std::vector<int> common;
      std::set_intersection(si.begin(), si.end(), sj.begin(), sj.end(), std::back_inserter(common));
      if (!common.empty()) {
        continue;
      }
      RegionPair p = si < sj ? RegionPair{regions[i], regions[j]} : RegionPair{regions[j], regions[i]};
      Key key{pair_order(p), std::min(si, sj), std::max(si, sj)};
      unique.emplace(std::move(key), std::move(p));
      if (static_cast<long>(unique.size()) > spec.budget) {
        throw PreconditionError("region pair budget exceeded: more than " + std::to_string(spec.budget) +
                                " pairs");
      }
    }
  }
  std::vector<RegionPair> out;
  out.reserve(unique.size());
  for (auto& [key, pair] : unique) {
    out.push_back(std::move(pair));
  }
  return out;
}

PairRecord evaluate_pair(const DensityMatrix& rho, const RegionPair& pair, bool periodic, double tol) {
  const auto reduced = restrict_to_pair(rho, pair);
  const auto ppt = ppt_min_eig(reduced, tol);
  PairRecord rec;
  rec.pair = pair;
  rec.order = pair_order(pair);
  rec.distance = pair_distance(pair, static_cast<int>(rho.subsystem_dims.size()), periodic);
  rec.min_eig = ppt.min_eig;
  rec.negativity = negativity(reduced);
  rec.verdict = ppt.verdict;
  if (rec.verdict.tag == VerdictTag::PPT_pass && tracial_ball_check(reduced)) {
    rec.verdict.tag = VerdictTag::separable_certified;
  }
  return rec;
}

OrderReport entanglement_order(const DensityMatrix& rho, int n_max, bool periodic, bool all_subsets,
                               double tol) {
  if (n_max < 1) {
    throw PreconditionError("N_max must be >= 1");
  }
  const int n = static_cast<int>(rho.subsystem_dims.size());
  PairEnumeration spec{n, n_max, periodic, all_subsets};
  OrderReport report;
  report.max_checked_N = n_max;
  for (const auto& pair : enumerate_region_pairs(spec)) {
    auto rec = evaluate_pair(rho, pair, periodic, tol);
    if (rec.verdict.tag == VerdictTag::NPT_entangled && !report.first_entangled_N) {
      report.first_entangled_N = rec.order;
      report.witness_pair = rec.pair;
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

std::optional<double> beta_threshold(const ThermalFamily& family, const std::vector<RegionPair>& pairs,
                                     double beta_lo, double beta_hi, const ThresholdOptions& options) {
  if (!(beta_hi > beta_lo) || beta_lo < 0.0 || !std::isfinite(beta_hi)) {
    throw PreconditionError("invalid beta bracket");
  }
  if (pairs.empty() || options.grid_intervals < 1 || options.tol_beta <= 0.0) {
    throw PreconditionError("beta_threshold needs pairs, grid_intervals >= 1 and tol_beta > 0");
  }
  auto min_eig = [&](double beta) {
    const auto rho = family.at(beta);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
      m = std::min(m, ppt_min_eig(restrict_to_pair(rho, p), options.ppt_tol).min_eig);
    }
    return m;
  };
  auto npt = [&](double beta) { return min_eig(beta) < -options.ppt_tol; };

  if (npt(beta_lo)) {
    throw PreconditionError("state at beta_lo is already NPT; bracket lies above the threshold");
  }
  double lo = beta_lo;
  double hi = beta_lo;
  bool found = false;
  for (int i = 1; i <= options.grid_intervals; ++i) {
    const double b = beta_lo + (beta_hi - beta_lo) * i / options.grid_intervals;
    if (npt(b)) {
      hi = b;
      found = true;
      break;
    }
    lo = b;
  }
  if (!found) {
    return std::nullopt;
  }
  while (hi - lo > options.tol_beta) {
    const double mid = 0.5 * (lo + hi);
    (npt(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> beta_threshold(const ModelSpec& model, const RegionPair& pair, double beta_lo,
                                     double beta_hi, double tol_beta) {
  pair.validate(model.n_sites);
  ThermalFamily family(build_hamiltonian(model));
  ThresholdOptions options;
  options.tol_beta = tol_beta;
  return beta_threshold(family, {pair}, beta_lo, beta_hi, options);
}

} // namespace thermosep
