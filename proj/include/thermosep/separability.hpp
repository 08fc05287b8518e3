#pragma once

#include "thermosep/gibbs_thermal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace thermosep {

enum class VerdictTag { NPT_entangled, PPT_pass, separable_certified };

std::string to_string(VerdictTag tag);

struct Verdict {
  VerdictTag tag = VerdictTag::PPT_pass;
  double criterion_value = 0.0;
  double tolerance = 0.0;
};

inline constexpr double kPptTolerance = 1e-10;

/// Transpose on the second factor. Requires exactly two subsystem dims.
CMatrix partial_transpose(const DensityMatrix& rho);

struct PptResult {
  double min_eig = 0.0;
  Verdict verdict;
};

PptResult ppt_min_eig(const DensityMatrix& rho, double tol = kPptTolerance);

double negativity(const DensityMatrix& rho);

/// Trace norm of the realigned matrix R_{(a a'),(b b')} = rho_{(a b),(a' b')}.
double ccnr_realignment(const DensityMatrix& rho);

/// 1 / sqrt(D (D - 1))
double separable_ball_radius(int total_dim);

bool tracial_ball_check(const DensityMatrix& rho);

struct ChshOptions {
  int restarts = 16;
  int steps = 500;
  std::uint64_t seed = 20240531;
};

struct ChshResult {
  double value = 0.0;
  bool converged = false;
};

/// See-saw over dichotomic observables sign(M) on each side.
ChshResult chsh_max(const DensityMatrix& rho, const ChshOptions& options = {});

struct PairRecord {
  RegionPair pair;
  int order = 0;
  int distance = 0;
  double min_eig = 0.0;
  double negativity = 0.0;
  Verdict verdict;
};

struct OrderReport {
  int max_checked_N = 0;
  std::optional<int> first_entangled_N;
  std::optional<RegionPair> witness_pair;
  std::vector<PairRecord> records;
};

struct PairEnumeration {
  int n_sites = 0;
  int max_size = 1;
  bool periodic = true;
  bool all_subsets = false;
  long budget = 200000;
};

/// Unordered pairs of disjoint regions with sizes <= max_size. Contiguous
/// intervals (wrapping on a ring) unless all_subsets is set. Sorted by
/// (order, region1, region2); region1 is the lexicographically smaller set.
std::vector<RegionPair> enumerate_region_pairs(const PairEnumeration& spec);

int pair_order(const RegionPair& pair);
int pair_distance(const RegionPair& pair, int n_sites, bool periodic);

PairRecord evaluate_pair(const DensityMatrix& rho, const RegionPair& pair, bool periodic,
                         double tol = kPptTolerance);

OrderReport entanglement_order(const DensityMatrix& rho, int n_max, bool periodic, bool all_subsets = false,
                               double tol = kPptTolerance);

struct ThresholdOptions {
  int grid_intervals = 64;
  double tol_beta = 1e-6;
  double ppt_tol = kPptTolerance;
};

/// First beta in [beta_lo, beta_hi] where the smallest partial-transpose
/// eigenvalue over `pairs` turns negative, located on a uniform grid and then
/// bisected. Empty when no grid point is NPT.
std::optional<double> beta_threshold(const ThermalFamily& family, const std::vector<RegionPair>& pairs,
                                     double beta_lo, double beta_hi, const ThresholdOptions& options = {});

std::optional<double> beta_threshold(const ModelSpec& model, const RegionPair& pair, double beta_lo,
                                     double beta_hi, double tol_beta = 1e-6);

} // namespace thermosep
