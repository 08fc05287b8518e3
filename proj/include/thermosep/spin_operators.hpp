#pragma once

#include "thermosep/linalg.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace thermosep {

enum class SiteMatrixId { identity, sigma_x, sigma_y, sigma_z, custom };

/// A single-site operator: one of the named matrices, or a custom
/// Hermitian d x d matrix.
struct SiteMatrix {
  SiteMatrixId id = SiteMatrixId::identity;
  CMatrix custom;

  static SiteMatrix named(SiteMatrixId id) { return {id, {}}; }
  static SiteMatrix from_matrix(CMatrix m) { return {SiteMatrixId::custom, std::move(m)}; }
};

/// Pauli matrices use sigma_z = diag(1, -1). Throws PreconditionError for a
/// Pauli id with d != 2 or for `custom` (which has no canonical matrix).
CMatrix single_site_matrix(SiteMatrixId id, int d);
CMatrix single_site_matrix(const SiteMatrix& m, int d);

SiteMatrixId site_matrix_id_from_name(const std::string& name);
std::string to_string(SiteMatrixId id);

struct Factor {
  int offset = 0;
  SiteMatrix matrix;
};

/// coefficient * (product of factors placed at base + offset).
struct LocalTerm {
  double coefficient = 1.0;
  std::vector<Factor> factors;

  void validate(int site_dim) const;
  /// Largest offset minus smallest offset (0 for a single-site term).
  int range() const;
};

enum class Boundary { periodic, open };

/// (coupling / n_sites) * sum over ordered pairs k != l of m^k m^l.
struct MeanFieldTerm {
  SiteMatrix matrix;
  double coupling = 1.0;
};

struct ModelSpec {
  int n_sites = 2;
  int site_dim = 2;
  Boundary boundary = Boundary::periodic;
  std::vector<LocalTerm> terms;
  std::vector<MeanFieldTerm> mean_field_terms;

  void validate() const;
  std::vector<int> dims() const { return std::vector<int>(n_sites, site_dim); }
  int hilbert_dim() const;
};

/// A matrix over a tensor product; site 0 is the leftmost Kronecker factor.
struct Operator {
  CMatrix matrix;
  std::vector<int> subsystem_dims;

  int dim() const { return static_cast<int>(matrix.rows()); }
  void validate() const;
};

/// Places `local` (acting on `sites`, in the listed tensor order) into the
/// full space described by `dims`.
CMatrix embed_local(const CMatrix& local, std::span<const int> sites, const std::vector<int>& dims);

Operator embed_term(const LocalTerm& term, int base_site, const ModelSpec& model);

/// Sum of all translates of every local term plus the mean-field part.
/// Open boundaries only include translates that fit inside the chain.
Operator build_hamiltonian(const ModelSpec& model);

/// Conjugation by the cyclic shift that moves site k to site k + shift.
Operator translate_operator(const Operator& op, int shift);

/// Named presets: "ising" (J), "heisenberg" (J), "transverse_ising" (J, g),
/// "meanfield_h1" (a), "meanfield_h2" (c, coupling). Missing parameters take
/// the defaults J = 1, g = 1, a = 1, c = 1, coupling = 1.
ModelSpec make_preset(const std::string& name, int n_sites, Boundary boundary,
                      const std::map<std::string, double>& params = {});

const std::vector<std::string>& preset_names();
const std::vector<std::string>& preset_parameters(const std::string& name);

} // namespace thermosep
