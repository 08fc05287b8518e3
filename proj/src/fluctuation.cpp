#include "thermosep/fluctuation.hpp"

#include "thermosep/errors.hpp"
#include "thermosep/gibbs_thermal.hpp"
#include "thermosep/spin_operators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace thermosep {

namespace {

double residual(double s, double c, double beta, double lambda) { return s + std::tanh(beta * (c + lambda * s)); }

std::string spectrum_text(const RMatrix& g) {
  Eigen::EigenSolver<RMatrix> es(g, false);
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    os << (i ? ", " : "") << es.eigenvalues()(i).real() << (es.eigenvalues()(i).imag() < 0 ? "" : "+")
       << es.eigenvalues()(i).imag() << "i";
  }
  os << "]";
  return os.str();
}

CMatrix with_form(const RMatrix& cov, const RMatrix& form) {
  return cov.cast<Complex>() + (0.5 * kI) * form.cast<Complex>();
}

} // namespace

SelfConsistentResult selfconsistent_sz(double c, double beta, double lambda, double tol, int max_iter) {
  if (!(tol > 0.0)) {
    throw PreconditionError("selfconsistent_sz needs tol > 0");
  }
  if (std::isnan(beta) || beta < 0.0 || !std::isfinite(c) || !std::isfinite(lambda)) {
    throw PreconditionError("selfconsistent_sz needs finite c, lambda and beta >= 0");
  }
  SelfConsistentResult r;
  if (beta == 0.0) {
    return r;
  }
  if (std::isinf(beta)) {
    if (lambda > 0.0) {
      r.s_z = -std::clamp(c / lambda, -1.0, 1.0);
    } else {
      r.s_z = c > 0.0 ? -1.0 : (c < 0.0 ? 1.0 : 0.0);
      r.multiple_roots = lambda < 0.0 && std::abs(c) < -lambda;
    }
    r.a_eff = c + lambda * r.s_z;
    return r;
  }

  double lo = -1.0;
  double hi = 1.0;
  if (lambda < 0.0) {
    // f(s) = s + tanh(beta (c + lambda s)) may have several roots; take the
    // bracket nearest to s = 0.
    const int grid = 4000;
    int changes = 0;
    double best = std::numeric_limits<double>::infinity();
    double prev_s = -1.0;
    double prev_f = residual(prev_s, c, beta, lambda);
    for (int i = 1; i <= grid; ++i) {
      const double s = -1.0 + 2.0 * i / grid;
      const double f = residual(s, c, beta, lambda);
      if ((prev_f <= 0.0 && f >= 0.0) || (prev_f >= 0.0 && f <= 0.0)) {
        ++changes;
        const double dist = std::min(std::abs(prev_s), std::abs(s));
        if (dist < best) {
          best = dist;
          lo = prev_s;
          hi = s;
        }
      }
      prev_s = s;
      prev_f = f;
    }
    r.multiple_roots = changes > 1;
  }

  double flo = residual(lo, c, beta, lambda);
  for (double end : {lo, hi}) {
    if (std::abs(residual(end, c, beta, lambda)) <= tol) {
      r.s_z = end;
      r.a_eff = c + lambda * end;
      return r;
    }
  }
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(mid, c, beta, lambda);
    r.iterations = it + 1;
    if (std::abs(fm) <= tol || hi - lo <= 4e-16) {
      r.s_z = mid;
      r.a_eff = c + lambda * mid;
      if (std::abs(fm) > tol) {
        throw NumericalError("selfconsistent_sz: bracket collapsed with residual " + describe(fm));
      }
      return r;
    }
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("selfconsistent_sz did not converge in " + std::to_string(max_iter) + " bisection steps");
}

FactorizationReport factorized_state_check(double c, double beta, double coupling, const std::vector<int>& sizes) {
  FactorizationReport rep;
  using enum SiteMatrixId;
  for (int n : sizes) {
    if (n < 2) {
      throw PreconditionError("factorized_state_check needs N >= 2");
    }
    const auto model = make_preset("meanfield_h2", n, Boundary::periodic, {{"c", c}, {"coupling", coupling}});
    const auto rho = gibbs_state(build_hamiltonian(model), beta);
    const auto dims = model.dims();
    double worst = 0.0;
    double sz = 0.0;
    for (auto id : {sigma_x, sigma_y, sigma_z}) {
      const CMatrix s = single_site_matrix(id, 2);
      const int site0[1] = {0};
      const int site1[1] = {1};
      const int both[2] = {0, 1};
      const Complex m0 = (rho.matrix * embed_local(s, site0, dims)).trace();
      const Complex m1 = (rho.matrix * embed_local(s, site1, dims)).trace();
      const Complex m01 = (rho.matrix * embed_local(kron(s, s), both, dims)).trace();
      worst = std::max(worst, std::abs(m01 - m0 * m1));
      if (id == sigma_z) {
        sz = m0.real();
      }
    }
    rep.sizes.push_back(n);
    rep.connected.push_back(worst);
    rep.s_z.push_back(sz);
  }
  if (!rep.connected.empty()) {
    const double peak = *std::max_element(rep.connected.begin(), rep.connected.end());
    rep.decreasing = rep.connected.back() < rep.connected.front() || peak <= 1e-14;
  }
  return rep;
}

FluctuationAlgebra build_fluctuation_algebra(double s_z, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw PreconditionError("alpha must lie in (0, 1)");
  }
  if (!std::isfinite(s_z) || std::abs(s_z) <= 1e-14) {
    throw PreconditionError("s_z = 0 gives a degenerate fluctuation algebra");
  }
  FluctuationAlgebra a;
  a.s_z = s_z;
  a.alpha = alpha;
  a.symplectic_form = RMatrix::Zero(4, 4);
  a.symplectic_form(kRx, kRy) = (1.0 - alpha) * s_z;
  a.symplectic_form(kRy, kRx) = -(1.0 - alpha) * s_z;
  a.symplectic_form(kLx, kLy) = alpha * s_z;
  a.symplectic_form(kLy, kLx) = -alpha * s_z;
  a.near_degenerate = std::min(alpha, 1.0 - alpha) * std::abs(s_z) < 1e-6;
  return a;
}

RMatrix linearized_generator(double c, double s_z, double alpha, GeneratorForm form) {
  const double p = c + 2.0 * alpha * s_z;
  const double q = c + 2.0 * (1.0 - alpha) * s_z;
  const double u = 2.0 * (1.0 - alpha) * s_z;
  const double v = 2.0 * alpha * s_z;
  RMatrix g = RMatrix::Zero(4, 4);
  if (form == GeneratorForm::symmetric) {
    g.row(kRx) << 0, -p, 0, -u;
    g.row(kRy) << p, 0, u, 0;
    g.row(kLx) << 0, -v, 0, -q;
    g.row(kLy) << v, 0, q, 0;
  } else {
    g.row(kRx) << 0, -p, 0, -u;
    g.row(kRy) << p, 0, 0, -u;
    g.row(kLx) << 0, -v, 0, -q;
    g.row(kLy) << 0, -v, q, 0;
  }
  return g;
}

NormalModes normal_modes(const RMatrix& g, const FluctuationAlgebra& algebra) {
  if (g.rows() != 4 || g.cols() != 4) {
    throw PreconditionError("generator must be 4x4");
  }
  const RMatrix& sigma = algebra.symplectic_form;
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  if ((g * sigma + sigma * g.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NumericalError("generator does not preserve the symplectic form; spectrum " + spectrum_text(g));
  }
  const bool separable = std::abs(g(kRx, kRx)) + std::abs(g(kRx, kLx)) + std::abs(g(kLx, kRx)) +
                             std::abs(g(kLx, kLx)) + std::abs(g(kRy, kRy)) + std::abs(g(kRy, kLy)) +
                             std::abs(g(kLy, kRy)) + std::abs(g(kLy, kLy)) <=
                         1e-12 * scale;
  Eigen::Matrix2d n;
  n << g(kRy, kRx), g(kRy, kLx), g(kLy, kRx), g(kLy, kLx);
  Eigen::Matrix2d nxy;
  nxy << g(kRx, kRy), g(kRx, kLy), g(kLx, kRy), g(kLx, kLy);
  if (!separable || (nxy + n).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NumericalError("generator does not split into x and y quadratures; spectrum " + spectrum_text(g));
  }

  Eigen::EigenSolver<Eigen::Matrix2d> es(n.transpose());
  const auto& ev = es.eigenvalues();
  if (std::abs(ev(0).imag()) > 1e-10 * scale || std::abs(ev(1).imag()) > 1e-10 * scale) {
    throw NumericalError("non-oscillatory dynamics; spectrum " + spectrum_text(g));
  }
  Eigen::Matrix2d w = Eigen::Matrix2d::Zero();
  w(0, 0) = sigma(kRx, kRy);
  w(1, 1) = sigma(kLx, kLy);

  std::array<double, 2> omega{ev(0).real(), ev(1).real()};
  std::array<Eigen::Vector2d, 2> ell{es.eigenvectors().col(0).real(), es.eigenvectors().col(1).real()};
  if (omega[1] < omega[0]) {
    std::swap(omega[0], omega[1]);
    std::swap(ell[0], ell[1]);
  }
  if (std::abs(omega[1] - omega[0]) <= 1e-12 * scale) {
    const Eigen::Vector2d wl = w * ell[0];
    ell[1] = Eigen::Vector2d(-wl(1), wl(0));
  }
  for (auto& l : ell) {
    l.normalize();
    if (l(0) < 0.0 || (l(0) == 0.0 && l(1) < 0.0)) {
      l = -l;
    }
  }
  if (std::abs(ell[0].dot(w * ell[1])) > 1e-10 * std::max(1.0, w.cwiseAbs().maxCoeff())) {
    throw NumericalError("normal modes are not symplectically orthogonal");
  }

  NormalModes modes;
  modes.L = RMatrix::Zero(4, 4);
  for (int k = 0; k < 2; ++k) {
    const double m = ell[k].dot(w * ell[k]);
    if (std::abs(m) <= 1e-14) {
      throw NumericalError("normal mode has vanishing commutator weight");
    }
    const double root = std::sqrt(std::abs(m));
    const double sgn = m > 0.0 ? 1.0 : -1.0;
    const double a = ell[k](0) / root;
    const double b = ell[k](1) / root;
    const double nu_true = -omega[k] * sgn / 2.0;
    modes.L(2 * k, kRx) = a;
    modes.L(2 * k, kLx) = b;
    modes.L(2 * k + 1, kRy) = sgn * a;
    modes.L(2 * k + 1, kLy) = sgn * b;
    const int orientation = nu_true < 0.0 ? -1 : 1;
    if (k == 0) {
      modes.nu1 = std::abs(nu_true);
      modes.orientation1 = orientation;
      modes.a1 = a;
      modes.b1 = b;
    } else {
      modes.nu2 = std::abs(nu_true);
      modes.orientation2 = orientation;
      modes.a2 = a;
      modes.b2 = b;
    }
  }
  return modes;
}

RMatrix reconstruct_generator(const NormalModes& modes) {
  RMatrix d = RMatrix::Zero(4, 4);
  const double n1 = modes.orientation1 * modes.nu1;
  const double n2 = modes.orientation2 * modes.nu2;
  d(0, 1) = 2.0 * n1;
  d(1, 0) = -2.0 * n1;
  d(2, 3) = 2.0 * n2;
  d(3, 2) = -2.0 * n2;
  return modes.L.inverse() * d * modes.L;
}

GaussianState gaussian_kms_state(const NormalModes& modes, double beta) {
  if (std::isnan(beta) || !(beta > 0.0)) {
    throw PreconditionError("gaussian_kms_state needs beta > 0 (or +inf)");
  }
  if (!(modes.nu1 > 1e-12) || !(modes.nu2 > 1e-12)) {
    throw PreconditionError("nonpositive normal-mode frequency (nu1 = " + describe(modes.nu1) +
                            ", nu2 = " + describe(modes.nu2) + ")");
  }
  auto occupation = [beta](double nu) { return std::isinf(beta) ? 0.5 : 0.5 / std::tanh(beta * nu); };
  RVector diag(4);
  diag << occupation(modes.nu1), occupation(modes.nu1), occupation(modes.nu2), occupation(modes.nu2);
  const RMatrix linv = modes.L.inverse();
  GaussianState st;
  st.covariance = linv * diag.asDiagonal() * linv.transpose();
  st.covariance = 0.5 * (st.covariance + st.covariance.transpose()).eval();
  return st;
}

double uncertainty_defect(const GaussianState& state, const FluctuationAlgebra& algebra) {
  return min_eigenvalue(with_form(state.covariance, algebra.symplectic_form));
}

UncertaintyResult uncertainty_check(const GaussianState& state, const FluctuationAlgebra& algebra) {
  const auto& c = state.covariance;
  UncertaintyResult r;
  r.right_margin = c(kRx, kRx) + c(kRy, kRy) - std::abs(algebra.symplectic_form(kRx, kRy));
  r.left_margin = c(kLx, kLx) + c(kLy, kLy) - std::abs(algebra.symplectic_form(kLx, kLy));
  r.holds = r.right_margin >= -1e-10 && r.left_margin >= -1e-10;
  return r;
}

Ineq23Result inequality_23(const GaussianState& state, double s_z, Ineq23Variant variant) {
  RVector u = RVector::Zero(4);
  u(kLx) = 1.0;
  u(kRx) = 1.0;
  RVector v = RVector::Zero(4);
  v(kLy) = 1.0;
  v(variant == Ineq23Variant::corrected ? kRy : kLx) = -1.0;
  Ineq23Result r;
  r.lhs = u.dot(state.covariance * u) + v.dot(state.covariance * v);
  r.rhs = std::abs(s_z);
  r.holds = r.lhs >= r.rhs - 1e-10;
  return r;
}

Verdict gaussian_ppt(const GaussianState& state, const FluctuationAlgebra& algebra, double tol) {
  RMatrix flipped = state.covariance;
  flipped.row(kLy) *= -1.0;
  flipped.col(kLy) *= -1.0;
  const double m = min_eigenvalue(with_form(flipped, algebra.symplectic_form));
  return {m < -tol ? VerdictTag::NPT_entangled : VerdictTag::PPT_pass, m, tol};
}

FluctuationRow fluctuation_point(const MeanFieldParams& p, const SweepOptions& options) {
  FluctuationRow row;
  row.c = p.c;
  row.lambda = p.lambda;
  row.alpha = p.alpha;
  row.beta = p.beta;
  try {
    const auto sc = selfconsistent_sz(p.c, p.beta, p.lambda, options.sz_tol);
    row.s_z = sc.s_z;
    row.a_eff = sc.a_eff;
    row.multiple_roots = sc.multiple_roots;
    const auto algebra = build_fluctuation_algebra(sc.s_z, p.alpha);
    const auto modes = normal_modes(linearized_generator(p.c, sc.s_z, p.alpha, options.form), algebra);
    row.nu1 = modes.nu1;
    row.nu2 = modes.nu2;
    row.orientation1 = modes.orientation1;
    row.orientation2 = modes.orientation2;
    row.a1 = modes.a1;
    row.b1 = modes.b1;
    row.a2 = modes.a2;
    row.b2 = modes.b2;
    row.orthogonality = modes.a1 * modes.b1 + modes.a2 * modes.b2;
    const auto state = gaussian_kms_state(modes, p.beta);
    row.state_defect = uncertainty_defect(state, algebra);
    row.uncertainty_ok = uncertainty_check(state, algebra).holds;
    row.ineq_corrected = inequality_23(state, sc.s_z, Ineq23Variant::corrected);
    row.ineq_literal = inequality_23(state, sc.s_z, Ineq23Variant::paper_literal);
    row.verdict = gaussian_ppt(state, algebra);
    row.ppt_min_eig = row.verdict.criterion_value;
  } catch (const Error& e) {
    row.error = e.what();
  }
  return row;
}

std::vector<FluctuationRow> alpha_beta_sweep(double c, double lambda, const std::vector<double>& alphas,
                                             const std::vector<double>& betas, const SweepOptions& options) {
  if (alphas.empty() || betas.empty()) {
    throw PreconditionError("alpha and beta grids must be nonempty");
  }
  std::vector<FluctuationRow> rows;
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) {
      throw PreconditionError("alpha grid values must lie in (0, 1)");
    }
    for (double b : betas) {
      rows.push_back(fluctuation_point({c, b, lambda, a}, options));
    }
  }
  return rows;
}

} // namespace thermosep
