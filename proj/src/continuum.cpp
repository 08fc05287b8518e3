#include "thermosep/continuum.hpp"

#include "thermosep/errors.hpp"
#include "thermosep/quasifree.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace thermosep {

namespace {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const Rule& gauss_rule() {
  static const Rule rule = [] {
    using G = boost::math::quadrature::gauss<double, 20>;
    Rule r;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.nodes.push_back(x[i]);
      r.weights.push_back(w[i]);
      if (x[i] != 0.0) {
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
      }
    }
    return r;
  }();
  return rule;
}

template <std::size_t N, typename F>
std::array<Complex, N> composite(const F& f, double a, double b, int panels) {
  const auto& rule = gauss_rule();
  std::array<Complex, N> sum{};
  const double h = (b - a) / panels;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * h;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const auto v = f(mid + 0.5 * h * rule.nodes[i]);
      for (std::size_t j = 0; j < N; ++j) {
        sum[j] += (0.5 * h * rule.weights[i]) * v[j];
      }
    }
  }
  return sum;
}

template <std::size_t N, typename F>
std::array<Complex, N> refine(const F& f, double a, double b, const QuadratureConfig& q, int* panels_used) {
  if (!(b > a)) {
    if (panels_used) {
      *panels_used = 0;
    }
    return {};
  }
  int panels = std::max(1, q.initial_panels);
  auto prev = composite<N>(f, a, b, panels);
  while (panels < q.max_panels) {
    panels *= 2;
    auto next = composite<N>(f, a, b, panels);
    double diff = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      diff = std::max(diff, std::abs(next[j] - prev[j]));
    }
    prev = next;
    if (diff <= q.tol) {
      if (panels_used) {
        *panels_used = panels;
      }
      return prev;
    }
  }
  throw NumericalError("quadrature did not converge on [" + describe(a) + ", " + describe(b) +
                       "] with " + std::to_string(q.max_panels) + " panels");
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

Complex base_momentum(ModeFamily family, double x0, double w, double p) {
  using std::numbers::pi;
  const Complex phase = std::exp(Complex(0.0, -p * x0));
  switch (family) {
  case ModeFamily::gaussian:
    return std::pow(2.0 * w * w / pi, 0.25) * std::exp(-w * w * p * p) * phase;
  case ModeFamily::cosine_bump: {
    const double k = pi / (2.0 * w);
    double core;
    if (std::abs(k - p) <= std::abs(k + p)) {
      core = 2.0 * k * w * sinc((k - p) * w) / (k + p);
    } else {
      core = 2.0 * k * w * sinc((k + p) * w) / (k - p);
    }
    return core / std::sqrt(2.0 * pi * w) * phase;
  }
  case ModeFamily::exponential: {
    const double kappa = 1.0 / w;
    return std::sqrt(kappa) * 2.0 * kappa / (kappa * kappa + p * p) / std::sqrt(2.0 * pi) * phase;
  }
  }
  return 0.0;
}

double base_position(ModeFamily family, double x0, double w, double x) {
  using std::numbers::pi;
  const double u = x - x0;
  switch (family) {
  case ModeFamily::gaussian:
    return std::pow(2.0 * pi * w * w, -0.25) * std::exp(-u * u / (4.0 * w * w));
  case ModeFamily::cosine_bump:
    return std::abs(u) <= w ? std::cos(pi * u / (2.0 * w)) / std::sqrt(w) : 0.0;
  case ModeFamily::exponential:
    return std::exp(-std::abs(u) / w) / std::sqrt(w);
  }
  return 0.0;
}

} // namespace

ModeFamily mode_family_from_name(const std::string& name) {
  if (name == "gaussian") return ModeFamily::gaussian;
  if (name == "cosine_bump") return ModeFamily::cosine_bump;
  if (name == "exponential") return ModeFamily::exponential;
  throw PreconditionError("unknown mode family '" + name + "'");
}

std::string to_string(ModeFamily family) {
  switch (family) {
  case ModeFamily::gaussian: return "gaussian";
  case ModeFamily::cosine_bump: return "cosine_bump";
  case ModeFamily::exponential: return "exponential";
  }
  return "?";
}

Complex ModeFunction::momentum(double p) const {
  return amplitude * base_momentum(family, center, width, momentum_scale * p);
}

double ModeFunction::position(double x) const {
  return amplitude / momentum_scale * base_position(family, center, width, x / momentum_scale);
}

std::pair<double, double> ModeFunction::support() const {
  double reach = width;
  if (family == ModeFamily::gaussian) {
    reach = 20.0 * width;
  } else if (family == ModeFamily::exponential) {
    reach = 48.0 * width;
  }
  return {momentum_scale * (center - reach), momentum_scale * (center + reach)};
}

std::vector<double> ModeFunction::kinks() const {
  const double c = momentum_scale * center;
  switch (family) {
  case ModeFamily::gaussian: return {};
  case ModeFamily::cosine_bump: return {c - momentum_scale * width, c + momentum_scale * width};
  case ModeFamily::exponential: return {c};
  }
  return {};
}

ModeFunction scale_mode(const ModeFunction& f, double beta, ScalingConvention convention) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw PreconditionError("scale_mode needs a finite beta > 0");
  }
  ModeFunction out = f;
  if (convention == ScalingConvention::quarter_power) {
    out.amplitude *= std::pow(beta, 0.25);
    out.momentum_scale *= std::sqrt(beta);
  } else {
    out.amplitude *= std::sqrt(beta);
    out.momentum_scale *= beta;
  }
  return out;
}

double composite_gauss(const std::function<double(double)>& g, double a, double b, const QuadratureConfig& q,
                       int* panels_used) {
  auto f = [&](double x) { return std::array<Complex, 1>{Complex(g(x))}; };
  return refine<1>(f, a, b, q, panels_used)[0].real();
}

double position_overlap(const ModeFunction& f, const ModeFunction& g, double tol) {
  const auto [fa, fb] = f.support();
  const auto [ga, gb] = g.support();
  const double a = std::max(fa, ga);
  const double b = std::min(fb, gb);
  if (!(b > a)) {
    return 0.0;
  }
  std::vector<double> cuts = {a, b};
  for (const auto* m : {&f, &g}) {
    for (double k : m->kinks()) {
      if (k > a && k < b) {
        cuts.push_back(k);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  QuadratureConfig q;
  q.tol = tol;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += composite_gauss([&](double x) { return f.position(x) * g.position(x); }, cuts[i], cuts[i + 1], q);
  }
  return total;
}

ModeKernel continuum_mode_kernel(const ModeFunction& f, const ModeFunction& g, double beta,
                                 const QuadratureConfig& q) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw PreconditionError("continuum kernel needs a finite beta > 0");
  }
  ModeKernel k;
  k.overlap = position_overlap(f, g);
  if (std::abs(k.overlap) > 1e-8) {
    throw PreconditionError("mode functions are not orthogonal (overlap " + describe(k.overlap) + ")");
  }
  const double cutoff = std::sqrt(std::log(1.0 / q.tail) / beta);
  auto integrand = [&](double p) {
    const double x = beta * p * p;
    const double fermi = x > 0.0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 0.5;
    const Complex u0 = f.momentum(p);
    const Complex u1 = g.momentum(p);
    return std::array<Complex, 4>{std::conj(u0) * u0 * fermi, std::conj(u0) * u1 * fermi,
                                  std::conj(u1) * u0 * fermi, std::conj(u1) * u1 * fermi};
  };
  const auto v = refine<4>(integrand, -cutoff, cutoff, q, &k.panels);
  k.A.resize(2, 2);
  k.A << v[0], v[1], v[2], v[3];
  k.A = 0.5 * (k.A + k.A.adjoint()).eval();
  return k;
}

ScalingReport scaling_invariance_check(const ModeFunction& f, const ModeFunction& g, const std::vector<double>& betas,
                                       const ScalingOptions& options) {
  ScalingReport report;
  report.reference = continuum_mode_kernel(f, g, 1.0, options.quadrature).A;
  auto verdict = [](const CMatrix& a) {
    QuasifreeSymbol sym{a, CMatrix::Zero(2, 2), Statistics::fermi};
    return fermion_pt_test(sym, {{0}, {1}}).tag;
  };
  const auto ref_tag = verdict(report.reference);
  report.passed = true;
  for (double beta : betas) {
    const auto fb = scale_mode(f, beta, options.convention);
    const auto gb = options.scale_partner ? scale_mode(g, beta, options.convention) : g;
    ScalingRow row;
    row.beta = beta;
    const CMatrix a = continuum_mode_kernel(fb, gb, beta, options.quadrature).A;
    row.max_abs_diff = (a - report.reference).cwiseAbs().maxCoeff();
    row.agree = row.max_abs_diff <= options.tol;
    row.same_verdict = verdict(a) == ref_tag;
    report.passed = report.passed && row.agree;
    report.rows.push_back(row);
  }
  return report;
}

} // namespace thermosep
