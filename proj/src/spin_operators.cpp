#include "thermosep/spin_operators.hpp"

#include "thermosep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace thermosep {

namespace {

std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> strides(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) {
    strides[k] = strides[k + 1] * dims[k + 1];
  }
  return strides;
}

int wrap(int site, int n) { return ((site % n) + n) % n; }

double param_or(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

LocalTerm two_site(double coefficient, SiteMatrixId a, SiteMatrixId b) {
  return {coefficient, {{0, SiteMatrix::named(a)}, {1, SiteMatrix::named(b)}}};
}

LocalTerm one_site(double coefficient, SiteMatrixId a) {
  return {coefficient, {{0, SiteMatrix::named(a)}}};
}

} // namespace

CMatrix single_site_matrix(SiteMatrixId id, int d) {
  if (d < 1) {
    throw PreconditionError("site dimension must be positive");
  }
  const bool pauli = id == SiteMatrixId::sigma_x || id == SiteMatrixId::sigma_y || id == SiteMatrixId::sigma_z;
  if (pauli && d != 2) {
    throw PreconditionError("Pauli matrix requested with site dimension " + std::to_string(d));
  }
  CMatrix m = CMatrix::Zero(d, d);
  switch (id) {
  case SiteMatrixId::identity:
    m.setIdentity();
    break;
  case SiteMatrixId::sigma_x:
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    break;
  case SiteMatrixId::sigma_y:
    m(0, 1) = -kI;
    m(1, 0) = kI;
    break;
  case SiteMatrixId::sigma_z:
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    break;
  case SiteMatrixId::custom:
    throw PreconditionError("custom site matrix has no canonical form");
  }
  return m;
}

CMatrix single_site_matrix(const SiteMatrix& m, int d) {
  if (m.id != SiteMatrixId::custom) {
    return single_site_matrix(m.id, d);
  }
  if (m.custom.rows() != d || m.custom.cols() != d) {
    throw PreconditionError("custom site matrix has wrong dimension");
  }
  if (!is_hermitian(m.custom)) {
    throw PreconditionError("custom site matrix is not Hermitian");
  }
  return m.custom;
}

SiteMatrixId site_matrix_id_from_name(const std::string& name) {
  if (name == "identity" || name == "I") return SiteMatrixId::identity;
  if (name == "sigma_x" || name == "x") return SiteMatrixId::sigma_x;
  if (name == "sigma_y" || name == "y") return SiteMatrixId::sigma_y;
  if (name == "sigma_z" || name == "z") return SiteMatrixId::sigma_z;
  throw PreconditionError("unknown single-site matrix id '" + name + "'");
}

std::string to_string(SiteMatrixId id) {
  switch (id) {
  case SiteMatrixId::identity: return "identity";
  case SiteMatrixId::sigma_x: return "sigma_x";
  case SiteMatrixId::sigma_y: return "sigma_y";
  case SiteMatrixId::sigma_z: return "sigma_z";
  case SiteMatrixId::custom: return "custom";
  }
  return "?";
}

void LocalTerm::validate(int site_dim) const {
  if (!std::isfinite(coefficient)) {
    throw PreconditionError("term coefficient is not finite");
  }
  std::set<int> offsets;
  for (const auto& f : factors) {
    if (!offsets.insert(f.offset).second) {
      throw PreconditionError("duplicate site offset " + std::to_string(f.offset) + " in local term");
    }
    single_site_matrix(f.matrix, site_dim); // validates dimension and hermiticity
  }
}

int LocalTerm::range() const {
  if (factors.empty()) {
    return 0;
  }
  auto [lo, hi] = std::minmax_element(factors.begin(), factors.end(),
                                      [](const Factor& a, const Factor& b) { return a.offset < b.offset; });
  return hi->offset - lo->offset;
}

void ModelSpec::validate() const {
  if (n_sites < 1) {
    throw PreconditionError("n_sites must be positive");
  }
  if (site_dim < 2) {
    throw PreconditionError("spin models need site_dim >= 2");
  }
  for (const auto& t : terms) {
    t.validate(site_dim);
    if (t.range() >= n_sites) {
      throw PreconditionError("local term range does not fit in " + std::to_string(n_sites) + " sites");
    }
  }
  for (const auto& m : mean_field_terms) {
    single_site_matrix(m.matrix, site_dim);
    if (!std::isfinite(m.coupling)) {
      throw PreconditionError("mean-field coupling is not finite");
    }
  }
}

int ModelSpec::hilbert_dim() const {
  long d = 1;
  for (int k = 0; k < n_sites; ++k) {
    d *= site_dim;
    if (d > 4096) {
      throw PreconditionError("Hilbert space dimension exceeds 4096 (dense desk scale)");
    }
  }
  return static_cast<int>(d);
}

void Operator::validate() const {
  if (matrix.rows() != matrix.cols()) {
    throw PreconditionError("operator matrix is not square");
  }
  if (product(subsystem_dims) != matrix.rows()) {
    throw PreconditionError("operator dimension does not match subsystem dims");
  }
}

CMatrix embed_local(const CMatrix& local, std::span<const int> sites, const std::vector<int>& dims) {
  const int n = static_cast<int>(dims.size());
  std::vector<int> local_dims;
  std::set<int> seen;
  for (int s : sites) {
    if (s < 0 || s >= n) {
      throw PreconditionError("site " + std::to_string(s) + " out of range");
    }
    if (!seen.insert(s).second) {
      throw PreconditionError("site " + std::to_string(s) + " listed twice");
    }
    local_dims.push_back(dims[s]);
  }
  const int dl = product(local_dims);
  if (local.rows() != dl || local.cols() != dl) {
    throw PreconditionError("local operator dimension does not match its sites");
  }

  const auto strides = strides_of(dims);
  const auto local_strides = strides_of(local_dims);
  const long full = product(dims);

  // Offset contributed by local index c when written into the full index.
  std::vector<long> offset(dl, 0);
  for (int c = 0; c < dl; ++c) {
    for (std::size_t m = 0; m < sites.size(); ++m) {
      const long digit = (c / local_strides[m]) % local_dims[m];
      offset[c] += digit * strides[sites[m]];
    }
  }

  CMatrix out = CMatrix::Zero(full, full);
  for (long i = 0; i < full; ++i) {
    long r = 0;
    long base = i;
    for (std::size_t m = 0; m < sites.size(); ++m) {
      const long digit = (i / strides[sites[m]]) % dims[sites[m]];
      r += digit * local_strides[m];
      base -= digit * strides[sites[m]];
    }
    for (int c = 0; c < dl; ++c) {
      const Complex v = local(r, c);
      if (v != Complex(0.0)) {
        out(i, base + offset[c]) += v;
      }
    }
  }
  return out;
}

Operator embed_term(const LocalTerm& term, int base_site, const ModelSpec& model) {
  const auto dims = model.dims();
  model.hilbert_dim();
  if (term.factors.empty()) {
    const int d = product(dims);
    return {term.coefficient * CMatrix::Identity(d, d), dims};
  }

  std::vector<int> sites;
  CMatrix local = CMatrix::Identity(1, 1);
  for (const auto& f : term.factors) {
    int site = base_site + f.offset;
    if (model.boundary == Boundary::open) {
      if (site < 0 || site >= model.n_sites) {
        throw PreconditionError("term site " + std::to_string(site) + " outside open chain");
      }
    } else {
      site = wrap(site, model.n_sites);
    }
    sites.push_back(site);
    local = kron(local, single_site_matrix(f.matrix, model.site_dim));
  }
  return {term.coefficient * embed_local(local, sites, dims), dims};
}

Operator build_hamiltonian(const ModelSpec& model) {
  model.validate();
  const auto dims = model.dims();
  const int dim = model.hilbert_dim();
  CMatrix h = CMatrix::Zero(dim, dim);

  for (const auto& term : model.terms) {
    int min_offset = 0;
    int max_offset = 0;
    if (!term.factors.empty()) {
      min_offset = term.factors.front().offset;
      max_offset = min_offset;
      for (const auto& f : term.factors) {
        min_offset = std::min(min_offset, f.offset);
        max_offset = std::max(max_offset, f.offset);
      }
    }
    for (int base = 0; base < model.n_sites; ++base) {
      if (model.boundary == Boundary::open &&
          (base + min_offset < 0 || base + max_offset >= model.n_sites)) {
        continue;
      }
      h += embed_term(term, base, model).matrix;
    }
  }

  for (const auto& mf : model.mean_field_terms) {
    const CMatrix m = single_site_matrix(mf.matrix, model.site_dim);
    const CMatrix pair = kron(m, m);
    const double scale = mf.coupling / model.n_sites;
    for (int k = 0; k < model.n_sites; ++k) {
      for (int l = 0; l < model.n_sites; ++l) {
        if (k == l) {
          continue;
        }
        const int sites[2] = {k, l};
        h += scale * embed_local(pair, sites, dims);
      }
    }
  }

  // Remove rounding asymmetry so downstream Hermitian checks see exact symmetry.
  h = 0.5 * (h + h.adjoint()).eval();
  return {h, dims};
}

Operator translate_operator(const Operator& op, int shift) {
  op.validate();
  const auto& dims = op.subsystem_dims;
  const int n = static_cast<int>(dims.size());
  if (n == 0) {
    return op;
  }
  if (std::adjacent_find(dims.begin(), dims.end(), std::not_equal_to<>()) != dims.end()) {
    throw PreconditionError("translate_operator needs equal site dimensions");
  }
  const int s = wrap(shift, n);
  if (s == 0) {
    return op;
  }
  const auto strides = strides_of(dims);
  const long full = op.dim();
  std::vector<long> perm(full);
  for (long i = 0; i < full; ++i) {
    long j = 0;
    for (int k = 0; k < n; ++k) {
      const long digit = (i / strides[k]) % dims[k];
      j += digit * strides[wrap(k + s, n)];
    }
    perm[i] = j;
  }
  CMatrix out(full, full);
  for (long i = 0; i < full; ++i) {
    for (long j = 0; j < full; ++j) {
      out(perm[i], perm[j]) = op.matrix(i, j);
    }
  }
  return {out, dims};
}

ModelSpec make_preset(const std::string& name, int n_sites, Boundary boundary,
                      const std::map<std::string, double>& params) {
  const auto& allowed = preset_parameters(name);
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw PreconditionError("preset '" + name + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      throw PreconditionError("preset parameter '" + key + "' is not finite");
    }
  }

  ModelSpec m;
  m.n_sites = n_sites;
  m.site_dim = 2;
  m.boundary = boundary;
  using enum SiteMatrixId;
  if (name == "ising") {
    const double j = param_or(params, "J", 1.0);
    m.terms.push_back(two_site(-j, sigma_z, sigma_z));
  } else if (name == "heisenberg") {
    const double j = param_or(params, "J", 1.0);
    m.terms.push_back(two_site(j, sigma_x, sigma_x));
    m.terms.push_back(two_site(j, sigma_y, sigma_y));
    m.terms.push_back(two_site(j, sigma_z, sigma_z));
  } else if (name == "transverse_ising") {
    const double j = param_or(params, "J", 1.0);
    const double g = param_or(params, "g", 1.0);
    m.terms.push_back(two_site(-j, sigma_z, sigma_z));
    m.terms.push_back(one_site(-g, sigma_x));
  } else if (name == "meanfield_h1") {
    m.terms.push_back(one_site(param_or(params, "a", 1.0), sigma_z));
  } else if (name == "meanfield_h2") {
    m.terms.push_back(one_site(param_or(params, "c", 1.0), sigma_z));
    const double coupling = param_or(params, "coupling", 1.0);
    for (auto id : {sigma_x, sigma_y, sigma_z}) {
      m.mean_field_terms.push_back({SiteMatrix::named(id), coupling});
    }
  }
  m.validate();
  return m;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ising", "heisenberg", "transverse_ising", "meanfield_h1",
                                                  "meanfield_h2"};
  return names;
}

const std::vector<std::string>& preset_parameters(const std::string& name) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"ising", {"J"}},
      {"heisenberg", {"J"}},
      {"transverse_ising", {"J", "g"}},
      {"meanfield_h1", {"a"}},
      {"meanfield_h2", {"c", "coupling"}},
  };
  auto it = table.find(name);
  if (it == table.end()) {
    throw PreconditionError("unknown model preset '" + name + "'");
  }
  return it->second;
}

} // namespace thermosep
