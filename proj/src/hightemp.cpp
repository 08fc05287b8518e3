#include "thermosep/hightemp.hpp"

#include "thermosep/errors.hpp"

#include <cmath>

namespace thermosep {

double k_norm(int d) {
  if (d < 2) {
    throw PreconditionError("k_norm needs d >= 2");
  }
  return 1.0 / (d + 1);
}

double l_bound(double beta, double h_norm, int d) {
  if (d < 2) {
    throw PreconditionError("l_bound needs d >= 2");
  }
  if (beta < 0.0 || h_norm < 0.0) {
    throw PreconditionError("l_bound needs beta >= 0 and h_norm >= 0");
  }
  const double x = 2.0 * beta * h_norm;
  if (x >= 1.0) {
    throw PreconditionError("l_bound diverges for 2 beta h >= 1");
  }
  const double dp = d + 1.0;
  return dp * dp * x / (1.0 - x);
}

double series_beta_max(int d, double h_norm) {
  if (d < 2) {
    throw PreconditionError("series_beta_max needs d >= 2");
  }
  if (!(h_norm > 0.0)) {
    throw PreconditionError("series_beta_max needs h_norm > 0");
  }
  // (d+1)^2 x / (1 - x) = d / (d+1)  with x = 2 beta h
  const double dp = d + 1.0;
  const double x = d / (dp * dp * dp + d);
  return x / (2.0 * h_norm);
}

double interaction_norm_surrogate(const ModelSpec& model) {
  if (!model.mean_field_terms.empty()) {
    throw PreconditionError("interaction norm surrogate is undefined for mean-field terms");
  }
  double total = 0.0;
  for (const auto& term : model.terms) {
    double norm = std::abs(term.coefficient);
    for (const auto& f : term.factors) {
      norm *= hermitian_eigenvalues(single_site_matrix(f.matrix, model.site_dim)).cwiseAbs().maxCoeff();
    }
    total += norm;
  }
  return total;
}

BoundReport bound_vs_numeric(const ModelSpec& model, const BoundScan& scan) {
  BoundReport r;
  r.d = model.site_dim;
  r.h_norm = scan.h_norm_override ? *scan.h_norm_override : interaction_norm_surrogate(model);
  r.k_norm = k_norm(r.d);
  if (r.h_norm > 0.0) {
    r.beta_star_analytic = series_beta_max(r.d, r.h_norm);
    const double domain = 0.5 / r.h_norm;
    for (int i = 0; i < scan.l_curve_points; ++i) {
      const double beta = domain * i / scan.l_curve_points;
      r.l_curve.emplace_back(beta, l_bound(beta, r.h_norm, r.d));
    }
  } else {
    r.beta_star_analytic = std::numeric_limits<double>::infinity();
  }

  PairEnumeration spec{model.n_sites, scan.max_region_size, model.boundary == Boundary::periodic};
  const auto pairs = enumerate_region_pairs(spec);
  r.pairs_checked = static_cast<int>(pairs.size());
  ThermalFamily family(build_hamiltonian(model));
  r.beta_star_numeric = beta_threshold(family, pairs, scan.beta_lo, scan.beta_hi, scan.threshold);
  r.consistent = !r.beta_star_numeric || *r.beta_star_numeric >= r.beta_star_analytic;
  r.note = "h_norm is a per-cell sum of term operator norms; the separable-ball radius stands in for epsilon_N; "
           "whether the L bound and the convergence statement share one interaction norm is left open";
  return r;
}

} // namespace thermosep
