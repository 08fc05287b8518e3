#include "thermosep/quasifree.hpp"

#include "thermosep/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace thermosep {

namespace {

double sign_for(Statistics s) { return s == Statistics::fermi ? -1.0 : 1.0; }

CMatrix select(const CMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  CMatrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(r, c) = m(rows[r], cols[c]);
    }
  }
  return out;
}

CMatrix doubled_j(int n) {
  CMatrix j = CMatrix::Identity(2 * n, 2 * n);
  j.bottomRightCorner(n, n) *= -1.0;
  return j;
}

PtBlocks corner_blocks(const QuasifreeSymbol& sym, const RegionProjection& regions) {
  regions.validate(sym.modes());
  const double s = sign_for(sym.statistics);
  const CMatrix a11 = select(sym.A, regions.s1, regions.s1);
  const CMatrix a12 = select(sym.A, regions.s1, regions.s2);
  const CMatrix a21 = select(sym.A, regions.s2, regions.s1);
  const CMatrix a22 = select(sym.A, regions.s2, regions.s2);
  const auto n1 = a11.rows();
  const auto n2 = a22.rows();

  PtBlocks b;
  b.m_fg.resize(n1 + n2, n1 + n2);
  b.m_fg << a11, a12, a12.adjoint(), CMatrix::Identity(n2, n2) + s * a22;
  b.m_gf.resize(n1 + n2, n1 + n2);
  b.m_gf << a22, a21, a21.adjoint(), CMatrix::Identity(n1, n1) + s * a11;
  return b;
}

bool has_pairing(const QuasifreeSymbol& sym) { return sym.B.size() > 0 && sym.B.cwiseAbs().maxCoeff() > 1e-14; }

Verdict verdict_from(double m, double tol) {
  return {m < -tol ? VerdictTag::NPT_entangled : VerdictTag::PPT_pass, m, tol};
}

} // namespace

CMatrix QuasifreeSymbol::generalized_density() const {
  const int n = modes();
  const CMatrix b = B.size() == 0 ? CMatrix::Zero(n, n) : B;
  CMatrix g(2 * n, 2 * n);
  g << A, b, b.adjoint(), CMatrix::Identity(n, n) + sign_for(statistics) * A.conjugate();
  return g;
}

QuasifreeSymbol QuasifreeSymbol::from_generalized_density(const CMatrix& gamma, Statistics statistics) {
  if (gamma.rows() != gamma.cols() || gamma.rows() % 2 != 0) {
    throw PreconditionError("generalized density must be square of even size");
  }
  const auto n = gamma.rows() / 2;
  return {gamma.topLeftCorner(n, n), gamma.topRightCorner(n, n), statistics};
}

void QuasifreeSymbol::validate(double tol) const {
  if (A.rows() != A.cols() || (B.size() != 0 && (B.rows() != A.rows() || B.cols() != A.cols()))) {
    throw PreconditionError("symbol blocks have inconsistent shapes");
  }
  if (!is_hermitian(A)) {
    throw PreconditionError("symbol A is not Hermitian");
  }
  if (B.size() != 0) {
    const double parity = statistics == Statistics::fermi ? -1.0 : 1.0;
    if ((B.transpose() - parity * B).cwiseAbs().maxCoeff() > tol) {
      throw PreconditionError(statistics == Statistics::fermi ? "fermi pairing block is not antisymmetric"
                                                              : "bose pairing block is not symmetric");
    }
  }
  const CMatrix g = generalized_density();
  if (min_eigenvalue(g) < -tol) {
    throw PreconditionError("generalized density is not positive semidefinite");
  }
  if (statistics == Statistics::fermi) {
    const CMatrix c = CMatrix::Identity(g.rows(), g.cols()) - g;
    if (min_eigenvalue(c) < -tol) {
      throw PreconditionError("fermi generalized density exceeds 1");
    }
  }
}

void RegionProjection::validate(int n) const {
  if (s1.empty() || s2.empty()) {
    throw PreconditionError("mode regions must be nonempty");
  }
  std::set<int> seen;
  for (const auto* r : {&s1, &s2}) {
    for (int i : *r) {
      if (i < 0 || i >= n) {
        throw PreconditionError("mode index " + std::to_string(i) + " out of range");
      }
      if (!seen.insert(i).second) {
        throw PreconditionError("mode regions overlap at index " + std::to_string(i));
      }
    }
  }
}

OneParticleHamiltonian hopping_chain(int n, double t, double onsite, bool periodic) {
  if (n < 2) {
    throw PreconditionError("hopping chain needs n >= 2");
  }
  CMatrix v = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    v(i, i) = onsite;
  }
  for (int i = 0; i + 1 < n; ++i) {
    v(i, i + 1) += -t;
    v(i + 1, i) += -t;
  }
  if (periodic) {
    v(0, n - 1) += -t;
    v(n - 1, 0) += -t;
  }
  return {v};
}

QuasifreeSymbol fermi_symbol(const OneParticleHamiltonian& h, double beta) {
  if (!is_hermitian(h.V)) {
    throw PreconditionError("one-particle Hamiltonian is not Hermitian");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw PreconditionError("beta must be finite and nonnegative");
  }
  const auto eig = hermitian_eig(h.V);
  const CMatrix a = apply_spectral(eig, [beta](double v) {
    const double x = beta * v;
    if (x > 0.0) {
      const double e = std::exp(-x);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
  });
  const auto n = h.V.rows();
  return {0.5 * (a + a.adjoint()), CMatrix::Zero(n, n), Statistics::fermi};
}

QuasifreeSymbol bose_symbol(const OneParticleHamiltonian& h, double beta, double mu) {
  if (!is_hermitian(h.V)) {
    throw PreconditionError("one-particle Hamiltonian is not Hermitian");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta) || std::isnan(mu)) {
    throw PreconditionError("beta must be finite and nonnegative");
  }
  const auto eig = hermitian_eig(h.V);
  const double lowest = beta * eig.values.minCoeff() + mu;
  if (!(lowest > 0.0)) {
    throw PreconditionError("bose occupation diverges: beta V + mu has eigenvalue " + describe(lowest));
  }
  const CMatrix a = apply_spectral(eig, [beta, mu](double v) {
    if (std::isinf(mu)) {
      return 0.0;
    }
    return 1.0 / std::expm1(beta * v + mu);
  });
  const auto n = h.V.rows();
  return {0.5 * (a + a.adjoint()), CMatrix::Zero(n, n), Statistics::bose};
}

PtBlocks fermion_pt_blocks(const QuasifreeSymbol& sym, const RegionProjection& regions) {
  if (sym.statistics != Statistics::fermi) {
    throw PreconditionError("fermion_pt_blocks needs a fermi symbol");
  }
  return corner_blocks(sym, regions);
}

PtBlocks boson_pt_blocks(const QuasifreeSymbol& sym, const RegionProjection& regions) {
  if (sym.statistics != Statistics::bose) {
    throw PreconditionError("boson_pt_blocks needs a bose symbol");
  }
  return corner_blocks(sym, regions);
}

CMatrix pt_generalized_density(const QuasifreeSymbol& sym, const RegionProjection& regions) {
  const int n = sym.modes();
  regions.validate(n);
  const CMatrix g = sym.generalized_density();

  std::vector<int> modes = regions.s1;
  modes.insert(modes.end(), regions.s2.begin(), regions.s2.end());
  const int k = static_cast<int>(modes.size());
  const int k1 = static_cast<int>(regions.s1.size());

  // slot x in [0, 2k): mode modes[x % k], annihilation for x < k
  auto full_index = [&](int x, bool flip) {
    const bool creation = (x >= k) != flip;
    return modes[x % k] + (creation ? n : 0);
  };
  auto in_region2 = [&](int x) { return x % k >= k1; };

  CMatrix out(2 * k, 2 * k);
  for (int x = 0; x < 2 * k; ++x) {
    for (int y = 0; y < 2 * k; ++y) {
      const bool cross = in_region2(x) != in_region2(y);
      const Complex v = g(full_index(x, cross && in_region2(x)), full_index(y, cross && in_region2(y)));
      out(x, y) = in_region2(x) && in_region2(y) ? std::conj(v) : v;
    }
  }
  return out;
}

double fermion_many_body_pt_min_eig(const QuasifreeSymbol& sym, const RegionProjection& regions) {
  if (sym.statistics != Statistics::fermi) {
    throw PreconditionError("many-body partial transpose needs a fermi symbol");
  }
  const int n = sym.modes();
  regions.validate(n);
  std::vector<int> modes = regions.s1;
  modes.insert(modes.end(), regions.s2.begin(), regions.s2.end());
  const int k = static_cast<int>(modes.size());
  if (k > kMaxManyBodyModes) {
    throw PreconditionError("many-body partial transpose limited to " + std::to_string(kMaxManyBodyModes) +
                            " modes, got " + std::to_string(k));
  }
  std::vector<int> slots;
  for (int m : modes) {
    slots.push_back(m);
  }
  for (int m : modes) {
    slots.push_back(m + n);
  }
  const CMatrix gamma = select(sym.generalized_density(), slots, slots);

  // Gamma = (1 + e^h)^{-1} for the state e^{-alpha^+ h alpha / 2}
  static constexpr double clip = 1e-13;
  const CMatrix h = apply_spectral(hermitian_eig(0.5 * (gamma + gamma.adjoint())), [](double g) {
    const double c = std::clamp(g, clip, 1.0 - clip);
    return std::log((1.0 - c) / c);
  });

  // slot x < k annihilates mode x, x >= k creates mode x - k; bit (k - 1 - j) is mode j
  const int dim = 1 << k;
  auto apply = [&](int x, bool dagger, int state, double& sign) {
    const int j = x % k;
    const bool create = (x >= k) != dagger;
    const int bit = 1 << (k - 1 - j);
    if (static_cast<bool>(state & bit) == create) {
      return -1;
    }
    sign *= (std::popcount(static_cast<unsigned>(state >> (k - j))) % 2) ? -1.0 : 1.0;
    return state ^ bit;
  };
  CMatrix mb = CMatrix::Zero(dim, dim);
  for (int s = 0; s < dim; ++s) {
    for (int y = 0; y < 2 * k; ++y) {
      double sign_y = 1.0;
      const int t = apply(y, false, s, sign_y);
      if (t < 0) {
        continue;
      }
      for (int x = 0; x < 2 * k; ++x) {
        if (h(x, y) == 0.0) {
          continue;
        }
        double sign = sign_y;
        const int u = apply(x, true, t, sign);
        if (u >= 0) {
          mb(u, s) += 0.5 * sign * h(x, y);
        }
      }
    }
  }
  const auto eig = hermitian_eig(0.5 * (mb + mb.adjoint()));
  const double lowest = eig.values.minCoeff();
  CMatrix rho = apply_spectral(eig, [lowest](double e) { return std::exp(lowest - e); });
  rho /= rho.trace().real();

  const int k1 = static_cast<int>(regions.s1.size());
  return ppt_min_eig(DensityMatrix{rho, {1 << k1, 1 << (k - k1)}}).min_eig;
}

Verdict fermion_pt_test(const QuasifreeSymbol& sym, const RegionProjection& regions, double tol) {
  if (sym.statistics != Statistics::fermi) {
    throw PreconditionError("fermion_pt_test needs a fermi symbol");
  }
  if (!has_pairing(sym)) {
    const auto b = fermion_pt_blocks(sym, regions);
    return verdict_from(std::min(min_eigenvalue(b.m_fg), min_eigenvalue(b.m_gf)), tol);
  }
  return verdict_from(fermion_many_body_pt_min_eig(sym, regions), tol);
}

Verdict boson_pt_test(const QuasifreeSymbol& sym, const RegionProjection& regions, double tol) {
  if (sym.statistics != Statistics::bose) {
    throw PreconditionError("boson_pt_test needs a bose symbol");
  }
  if (!has_pairing(sym)) {
    const auto b = boson_pt_blocks(sym, regions);
    return verdict_from(std::min(min_eigenvalue(b.m_fg), min_eigenvalue(b.m_gf)), tol);
  }
  return verdict_from(min_eigenvalue(pt_generalized_density(sym, regions)), tol);
}

BogoliubovTransform BogoliubovTransform::identity(int n, Statistics statistics) {
  return {CMatrix::Identity(2 * n, 2 * n), statistics};
}

BogoliubovTransform BogoliubovTransform::fermi_pair_rotation(int n, int i, int j, double theta) {
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw PreconditionError("pair rotation needs two distinct modes in range");
  }
  auto t = identity(n, Statistics::fermi);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  t.T(i, i) = c;
  t.T(i, n + j) = -s;
  t.T(j, j) = c;
  t.T(j, n + i) = s;
  t.T(n + i, n + i) = c;
  t.T(n + i, j) = -s;
  t.T(n + j, n + j) = c;
  t.T(n + j, i) = s;
  return t;
}

BogoliubovTransform BogoliubovTransform::bose_two_mode_squeeze(int n, int i, int j, double r) {
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw PreconditionError("two-mode squeeze needs two distinct modes in range");
  }
  auto t = identity(n, Statistics::bose);
  const double c = std::cosh(r);
  const double s = std::sinh(r);
  t.T(i, i) = c;
  t.T(i, n + j) = s;
  t.T(j, j) = c;
  t.T(j, n + i) = s;
  t.T(n + i, n + i) = c;
  t.T(n + i, j) = s;
  t.T(n + j, n + j) = c;
  t.T(n + j, i) = s;
  return t;
}

BogoliubovTransform BogoliubovTransform::particle_hole(int n, int i) {
  if (i < 0 || i >= n) {
    throw PreconditionError("particle-hole mode out of range");
  }
  auto t = identity(n, Statistics::fermi);
  t.T(i, i) = 0.0;
  t.T(n + i, n + i) = 0.0;
  t.T(i, n + i) = 1.0;
  t.T(n + i, i) = 1.0;
  return t;
}

BogoliubovTransform BogoliubovTransform::then(const BogoliubovTransform& next) const {
  if (next.statistics != statistics || next.T.rows() != T.rows()) {
    throw PreconditionError("cannot compose Bogoliubov transforms of different type or size");
  }
  return {next.T * T, statistics};
}

BogoliubovTransform BogoliubovTransform::inverse() const {
  if (statistics == Statistics::fermi) {
    return {T.adjoint(), statistics};
  }
  const CMatrix j = doubled_j(static_cast<int>(T.rows() / 2));
  return {j * T.adjoint() * j, statistics};
}

double BogoliubovTransform::structure_defect() const {
  if (T.rows() != T.cols() || T.rows() % 2 != 0) {
    return std::numeric_limits<double>::infinity();
  }
  const int n = static_cast<int>(T.rows() / 2);
  double defect = 0.0;
  if (statistics == Statistics::fermi) {
    defect = (T * T.adjoint() - CMatrix::Identity(2 * n, 2 * n)).cwiseAbs().maxCoeff();
  } else {
    const CMatrix j = doubled_j(n);
    defect = (T * j * T.adjoint() - j).cwiseAbs().maxCoeff();
  }
  const CMatrix u = T.topLeftCorner(n, n);
  const CMatrix v = T.topRightCorner(n, n);
  defect = std::max(defect, (T.bottomLeftCorner(n, n) - v.conjugate()).cwiseAbs().maxCoeff());
  defect = std::max(defect, (T.bottomRightCorner(n, n) - u.conjugate()).cwiseAbs().maxCoeff());
  return defect;
}

QuasifreeSymbol bogoliubov_rotate(const QuasifreeSymbol& sym, const BogoliubovTransform& t) {
  if (t.statistics != sym.statistics) {
    throw PreconditionError("Bogoliubov transform statistics differ from the symbol");
  }
  if (t.T.rows() != 2 * sym.modes()) {
    throw PreconditionError("Bogoliubov transform size differs from the symbol");
  }
  const double defect = t.structure_defect();
  if (defect > 1e-10) {
    throw PreconditionError("transformation is not structure-preserving (defect " + describe(defect) + ")");
  }
  CMatrix g = t.T * sym.generalized_density() * t.T.adjoint();
  g = 0.5 * (g + g.adjoint()).eval();
  auto out = QuasifreeSymbol::from_generalized_density(g, sym.statistics);
  try {
    out.validate(1e-10);
  } catch (const PreconditionError& e) {
    throw NumericalError(std::string("rotated symbol lost its invariants: ") + e.what());
  }
  return out;
}

QuasifreeSymbol bogoliubov_rotate(const QuasifreeSymbol& sym, const std::vector<PairAngle>& angles) {
  const int n = sym.modes();
  auto t = BogoliubovTransform::identity(n, sym.statistics);
  for (const auto& a : angles) {
    t = t.then(sym.statistics == Statistics::fermi ? BogoliubovTransform::fermi_pair_rotation(n, a.i, a.j, a.theta)
                                                   : BogoliubovTransform::bose_two_mode_squeeze(n, a.i, a.j, a.theta));
  }
  return bogoliubov_rotate(sym, t);
}

QuasifreeScan quasifree_beta_scan(const OneParticleHamiltonian& h, const RegionProjection& regions,
                                  const std::vector<double>& betas, double tol, double tol_beta) {
  if (betas.empty()) {
    throw PreconditionError("beta grid is empty");
  }
  if (!std::is_sorted(betas.begin(), betas.end())) {
    throw PreconditionError("beta grid must be ascending");
  }
  regions.validate(static_cast<int>(h.V.rows()));
  auto eval = [&](double beta) { return fermion_pt_test(fermi_symbol(h, beta), regions, tol); };

  QuasifreeScan scan;
  for (double beta : betas) {
    const auto v = eval(beta);
    scan.rows.push_back({beta, v.criterion_value, v});
  }
  for (std::size_t i = 1; i < scan.rows.size(); ++i) {
    if (scan.rows[i].verdict.tag != VerdictTag::NPT_entangled) {
      continue;
    }
    if (scan.rows[i - 1].verdict.tag == VerdictTag::NPT_entangled) {
      break;
    }
    double lo = scan.rows[i - 1].beta;
    double hi = scan.rows[i].beta;
    while (hi - lo > tol_beta) {
      const double mid = 0.5 * (lo + hi);
      (eval(mid).tag == VerdictTag::NPT_entangled ? hi : lo) = mid;
    }
    scan.threshold = 0.5 * (lo + hi);
    break;
  }
  return scan;
}

} // namespace thermosep
