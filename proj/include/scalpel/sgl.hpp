#pragma once

#include "scalpel/core.hpp"
#include "scalpel/segment.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scalpel {

/// Filtered dictionary with column k divided by its squared norm, i.e. every
/// pixel of component k carries the value 1 / size_k.
struct ScaledDictionary {
  SpatialDictionary source;
  std::vector<double> scale;

  std::size_t size() const { return scale.size(); }
  /// Dense P x K matrix (tests and small problems only).
  Matrix dense() const;
};

ScaledDictionary scale_dictionary(const SpatialDictionary& af);

/// Connected components of the column-overlap graph and their pixel footprints.
struct OverlapPartition {
  std::vector<std::vector<int>> groups;      // column indices, sorted
  std::vector<std::vector<int>> footprints;  // pixel indices, sorted
};

OverlapPartition partition_components(const SpatialDictionary& af);

struct SglConfig {
  double lambda = 0.0;
  double alpha = 0.9;
  double tol = 1e-8;      // relative objective change
  int max_iter = 10000;

  void validate() const;
};

/// K_f x T non-negative traces; an all-zero row is a deselected component.
struct TemporalTraces {
  Matrix values;

  int components() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
  std::vector<int> selected() const;
};

/// (1 - c / ||(y)_+||_2)_+ (y)_+, the zero vector when (y)_+ = 0.
Vector nonneg_group_soft_threshold(const Vector& y, double c);

/// Closed-form trace for a group holding a single component.
/// `y_m` is |M| x T, `a_tilde` the scaled column restricted to the same rows.
Vector solve_single(const Matrix& y_m, const Vector& a_tilde, double lambda, double alpha);

/// Closed form from the projection r = Y^T a and the squared norm a^T a.
Vector solve_single_projected(const Vector& projection, double sq_norm, double lambda,
                              double alpha);

/// Sufficient statistics of one group: gram = A^T A, proj = A^T Y, yy = ||Y||_F^2.
struct GroupSystem {
  Matrix gram;
  Matrix proj;
  double yy = 0.0;
};

GroupSystem make_group_system(const Matrix& y_m, const Matrix& a_mn);

struct GgdResult {
  Matrix z;
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> history;  // objective after each iteration
};

/// Raised when generalized gradient descent exhausts max_iter.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Matrix last, double gap)
      : Error(what), last_iterate(std::move(last)), objective_gap(gap) {}
  Matrix last_iterate;
  double objective_gap;
};

/// 1 / max_n sum_j a_j^T a_n, the diagonally dominant step size.
double ggd_step_size(const Matrix& gram);

/// Generalized gradient descent on one overlap group. The smooth part is the
/// squared loss plus the l1 term (linear on the non-negative orthant); the prox
/// is the non-negative group soft-threshold applied row by row.
GgdResult solve_group_ggd(const GroupSystem& sys, double lambda, double alpha,
                          const Matrix* warm_start, const SglConfig& cfg);
GgdResult solve_group_ggd(const Matrix& y_m, const Matrix& a_mn, double lambda, double alpha,
                          const Matrix* warm_start, const SglConfig& cfg);

/// Objective of the group problem given its sufficient statistics.
double group_objective(const GroupSystem& sys, const Matrix& z, double lambda, double alpha);

/// Full objective 0.5 ||Y - A Z||_F^2 + lambda alpha sum |z| + lambda (1 - alpha) sum ||z_k||,
/// evaluated from the residual directly.
double sgl_objective(const Matrix& y, const Matrix& a_tilde, const Matrix& z, double lambda,
                     double alpha);

/// Scaled dictionary, overlap partition and per-group statistics for one data
/// matrix, reused across penalty values.
class SglProblem {
 public:
  /// `pixel_subset`, when given, restricts the problem to those rows of Y
  /// (column scaling is kept from the full dictionary).
  SglProblem(const VideoMatrix& y, const SpatialDictionary& af,
             std::optional<std::span<const int>> pixel_subset = std::nullopt);

  int components() const { return static_cast<int>(scaled_.size()); }
  int frames() const { return frames_; }
  const OverlapPartition& partition() const { return partition_; }
  const ScaledDictionary& scaled() const { return scaled_; }
  const GroupSystem& group(std::size_t s) const { return systems_[s]; }

  /// A~^T Y, one row per component.
  const Matrix& projections() const { return projections_; }

  TemporalTraces solve(double lambda, double alpha, const SglConfig& cfg,
                       const TemporalTraces* warm_start = nullptr) const;

  /// One penalty value per overlap group.
  TemporalTraces solve(std::span<const double> group_lambdas, double alpha, const SglConfig& cfg,
                       const TemporalTraces* warm_start = nullptr) const;

  /// Sum of per-group objectives; equals the full objective up to the constant
  /// contributed by pixels outside every footprint.
  double objective(const TemporalTraces& z, double lambda, double alpha) const;

  /// Every component in one group, solved by generalized gradient descent
  /// (no decomposition).
  TemporalTraces solve_monolithic(double lambda, double alpha, const SglConfig& cfg) const;
  double monolithic_objective(const TemporalTraces& z, double lambda, double alpha) const;

 private:
  ScaledDictionary scaled_;
  std::vector<std::vector<int>> local_pixels_;  // per column, rows of the restricted Y
  OverlapPartition partition_;
  std::vector<GroupSystem> systems_;
  Matrix projections_;
  int frames_ = 0;
  double outside_yy_ = 0.0;  // ||Y||^2 over rows outside every footprint
};

TemporalTraces solve_sgl(const VideoMatrix& y, const SpatialDictionary& af, double lambda,
                         double alpha, const SglConfig& cfg);

/// Solutions along a strictly decreasing penalty sequence, each warm-started
/// from the previous one.
std::vector<TemporalTraces> solve_path(const SglProblem& problem, std::span<const double> lambdas,
                                       double alpha, const SglConfig& cfg);
std::vector<TemporalTraces> solve_path(const VideoMatrix& y, const SpatialDictionary& af,
                                       std::span<const double> lambdas, double alpha,
                                       const SglConfig& cfg);

/// Smallest lambda at which the whole solution is zero, from A~^T Y.
/// Closed form for alpha in {0, 1}; per-row bisection otherwise.
double max_lambda(const Matrix& projections, double alpha);
double max_lambda(const SglProblem& problem, double alpha);

/// Smallest lambda zeroing one row (the per-row condition).
double row_zero_lambda(const Vector& row, double alpha);

/// Sufficient bound max_k min(max_l (r_kl)_+ / alpha, ||(r_k)_+|| / (1 - alpha)).
double corollary_lambda_bound(const Matrix& projections, double alpha);

/// n values log-spaced from hi down to lo.
std::vector<double> log_spaced_lambdas(double hi, double lo, int n);

/// -quantile_{0.1%}(Y) / alpha.
double lambda_quantile_rule(const VideoMatrix& y, double alpha, double q = 0.001);

struct ValidationResult {
  double lambda = 0.0;       // penalty for the full-data solve: lambda_star / (|train| / footprint pixels)
  double lambda_star = 0.0;  // selected on the training pixels
  std::vector<double> path;
  std::vector<double> errors;
  std::vector<int> train_pixels;
  int validation_pixels = 0;
  std::vector<std::string> warnings;
};

struct ValidationConfig {
  double train_fraction = 0.6;
  int path_length = 20;
  double path_ratio = 0.01;        // smallest / largest lambda on the path
  double error_slack = 0.05;       // accept errors within 5% of the minimum
  double threshold_quantile = 0.001;
};

/// Validation-set choice of lambda: train on a seeded 60% of every footprint,
/// score the thresholded reconstruction error on the remaining pixels.
ValidationResult select_lambda_validation(const VideoMatrix& y, const SpatialDictionary& af,
                                          double alpha, const SglConfig& cfg, std::uint64_t seed,
                                          const ValidationConfig& vcfg = {});

struct KeepDrop {
  int index = 0;
  bool keep = true;
};

/// Parses lines "keep <k>" / "drop <k>"; blank lines and '#' comments are ignored.
std::vector<KeepDrop> parse_keep_drop(const std::string& text);

struct FilteredDictionary {
  SpatialDictionary dictionary;
  std::vector<int> kept;  // indices into the refined dictionary
};

/// Keeps columns whose cluster has at least `min_members` members, then applies
/// the explicit overrides in order.
FilteredDictionary filter_dictionary(const SpatialDictionary& a, std::span<const int> cluster_sizes,
                                     int min_members, std::span<const KeepDrop> manual = {});

}  // namespace scalpel
