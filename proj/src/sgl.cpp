#include "scalpel/sgl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace scalpel {

Matrix ScaledDictionary::dense() const {
  Matrix a = Matrix::Zero(source.geometry.pixels(), static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) {
    for (const int p : source.components[k].pixels) a(p, static_cast<Eigen::Index>(k)) = scale[k];
  }
  return a;
}

ScaledDictionary scale_dictionary(const SpatialDictionary& af) {
  ScaledDictionary out{af, {}};
  out.scale.reserve(af.size());
  for (std::size_t k = 0; k < af.size(); ++k) {
    const auto n = af.components[k].pixels.size();
    if (n == 0) throw Error("cannot scale empty dictionary column " + std::to_string(k));
    out.scale.push_back(1.0 / static_cast<double>(n));
  }
  return out;
}

namespace {

int uf_find(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto& px = parent[static_cast<std::size_t>(x)];
    px = parent[static_cast<std::size_t>(px)];
    x = px;
  }
  return x;
}

// Overlap-graph components of columns given as row lists over `rows` rows.
OverlapPartition partition_columns(const std::vector<std::vector<int>>& columns, int rows) {
  const int k = static_cast<int>(columns.size());
  std::vector<int> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> owner(static_cast<std::size_t>(rows), -1);
  for (int c = 0; c < k; ++c) {
    for (const int p : columns[static_cast<std::size_t>(c)]) {
      auto& o = owner[static_cast<std::size_t>(p)];
      if (o < 0) {
        o = c;
        continue;
      }
      const int a = uf_find(parent, o), b = uf_find(parent, c);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  }
  OverlapPartition out;
  std::vector<int> slot(static_cast<std::size_t>(k), -1);
  for (int c = 0; c < k; ++c) {
    auto& s = slot[static_cast<std::size_t>(uf_find(parent, c))];
    if (s < 0) {
      s = static_cast<int>(out.groups.size());
      out.groups.emplace_back();
      out.footprints.emplace_back();
    }
    out.groups[static_cast<std::size_t>(s)].push_back(c);
    auto& fp = out.footprints[static_cast<std::size_t>(s)];
    fp.insert(fp.end(), columns[static_cast<std::size_t>(c)].begin(),
              columns[static_cast<std::size_t>(c)].end());
  }
  for (auto& fp : out.footprints) {
    std::sort(fp.begin(), fp.end());
    fp.erase(std::unique(fp.begin(), fp.end()), fp.end());
  }
  return out;
}

// scale * sum of the listed rows of y, accumulated in list order. Every
// projection goes through here so that equal inputs give bitwise-equal output.
Vector project(const Matrix& y, std::span<const int> rows, double scale) {
  Vector acc = Vector::Zero(y.cols());
  for (const int r : rows) acc += y.row(r).transpose();
  return scale * acc;
}

double positive_norm(const Vector& r, double shift) {
  return (r.array() - shift).cwiseMax(0.0).matrix().norm();
}

}  // namespace

OverlapPartition partition_components(const SpatialDictionary& af) {
  std::vector<std::vector<int>> cols;
  cols.reserve(af.size());
  for (const auto& c : af.components) cols.push_back(c.pixels);
  return partition_columns(cols, af.geometry.pixels());
}

void SglConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  if (!(tol > 0.0)) throw Error("tol must be positive");
  if (max_iter < 1) throw Error("max_iter must be at least 1");
}

std::vector<int> TemporalTraces::selected() const {
  std::vector<int> out;
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    if ((values.row(k).array() != 0.0).any()) out.push_back(static_cast<int>(k));
  }
  return out;
}

Vector nonneg_group_soft_threshold(const Vector& y, double c) {
  if (!(c >= 0.0)) throw Error("threshold must be non-negative");
  const Vector pos = y.cwiseMax(0.0);
  const double norm = pos.norm();
  if (norm == 0.0) return Vector::Zero(y.size());
  const double factor = std::max(0.0, 1.0 - c / norm);
  if (factor == 0.0) return Vector::Zero(y.size());
  return factor * pos;
}

Vector solve_single_projected(const Vector& projection, double sq_norm, double lambda,
                              double alpha) {
  if (sq_norm <= 0.0) return Vector::Zero(projection.size());
  const double norm = positive_norm(projection, lambda * alpha);
  if (norm == 0.0) return Vector::Zero(projection.size());
  const double factor = std::max(0.0, 1.0 - lambda * (1.0 - alpha) / norm);
  if (factor == 0.0) return Vector::Zero(projection.size());
  return factor * ((projection.array() - lambda * alpha).cwiseMax(0.0) / sq_norm).matrix();
}

Vector solve_single(const Matrix& y_m, const Vector& a_tilde, double lambda, double alpha) {
  if (y_m.rows() != a_tilde.size()) throw Error("column and data rows differ");
  return solve_single_projected(y_m.transpose() * a_tilde, a_tilde.squaredNorm(), lambda, alpha);
}

GroupSystem make_group_system(const Matrix& y_m, const Matrix& a_mn) {
  if (y_m.rows() != a_mn.rows()) throw Error("group data and columns differ in rows");
  GroupSystem sys;
  sys.gram = a_mn.transpose() * a_mn;
  sys.proj = a_mn.transpose() * y_m;
  sys.yy = y_m.squaredNorm();
  return sys;
}

double ggd_step_size(const Matrix& gram) {
  const double denom = gram.rowwise().sum().maxCoeff();
  if (!(denom > 0.0)) throw Error("group has no pixels");
  return 1.0 / denom;
}

double group_objective(const GroupSystem& sys, const Matrix& z, double lambda, double alpha) {
  const double loss =
      0.5 * sys.yy - (z.array() * sys.proj.array()).sum() +
      0.5 * (z.array() * (sys.gram * z).array()).sum();
  return loss + lambda * alpha * z.cwiseAbs().sum() +
         lambda * (1.0 - alpha) * z.rowwise().norm().sum();
}

GgdResult solve_group_ggd(const GroupSystem& sys, double lambda, double alpha,
                          const Matrix* warm_start, const SglConfig& cfg) {
  const auto k = sys.gram.rows();
  const auto t_frames = sys.proj.cols();
  const double step = ggd_step_size(sys.gram);
  const double group_thresh = lambda * (1.0 - alpha) * step;

  GgdResult res;
  res.z = Matrix::Zero(k, t_frames);
  if (warm_start) {
    if (warm_start->rows() != k || warm_start->cols() != t_frames) {
      throw Error("warm start has the wrong shape");
    }
    if ((warm_start->array() < 0.0).any()) throw Error("warm start must be non-negative");
    res.z = *warm_start;
  }
  double f_prev = group_objective(sys, res.z, lambda, alpha);
  Matrix grad(k, t_frames);
  Matrix moved(k, t_frames);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    grad.noalias() = sys.gram * res.z;
    grad -= sys.proj;
    grad.array() += lambda * alpha;
    moved = res.z - step * grad;
    for (Eigen::Index n = 0; n < k; ++n) {
      auto row = moved.row(n);
      row = row.cwiseMax(0.0);
      const double norm = row.norm();
      const double factor = norm > 0.0 ? std::max(0.0, 1.0 - group_thresh / norm) : 0.0;
      if (factor == 0.0) {
        row.setZero();
      } else {
        row *= factor;
      }
    }
    res.z.swap(moved);
    const double f = group_objective(sys, res.z, lambda, alpha);
    res.history.push_back(f);
    res.iterations = it;
    res.objective = f;
    const double change = std::abs(f_prev - f);
    if (change <= cfg.tol * std::max(std::abs(f_prev), std::numeric_limits<double>::min())) {
      return res;
    }
    f_prev = f;
    if (it == cfg.max_iter) {
      throw ConvergenceError("generalized gradient descent did not converge in " +
                                 std::to_string(cfg.max_iter) + " iterations",
                             res.z, change);
    }
  }
  return res;
}

GgdResult solve_group_ggd(const Matrix& y_m, const Matrix& a_mn, double lambda, double alpha,
                          const Matrix* warm_start, const SglConfig& cfg) {
  return solve_group_ggd(make_group_system(y_m, a_mn), lambda, alpha, warm_start, cfg);
}

double sgl_objective(const Matrix& y, const Matrix& a_tilde, const Matrix& z, double lambda,
                     double alpha) {
  const double loss = 0.5 * (y - a_tilde * z).squaredNorm();
  return loss + lambda * alpha * z.cwiseAbs().sum() +
         lambda * (1.0 - alpha) * z.rowwise().norm().sum();
}

namespace {

GroupSystem build_system(const Matrix& y, const std::vector<int>& group,
                         const std::vector<int>& footprint,
                         const std::vector<std::vector<int>>& local_pixels,
                         const std::vector<double>& scale, int rows) {
  const auto k = static_cast<Eigen::Index>(group.size());
  GroupSystem sys;
  sys.proj.resize(k, y.cols());
  sys.gram = Matrix::Zero(k, k);
  std::vector<std::vector<char>> member(group.size(), std::vector<char>(static_cast<std::size_t>(rows), 0));
  for (Eigen::Index n = 0; n < k; ++n) {
    const auto col = static_cast<std::size_t>(group[static_cast<std::size_t>(n)]);
    sys.proj.row(n) = project(y, local_pixels[col], scale[col]).transpose();
    for (const int r : local_pixels[col]) member[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)] = 1;
  }
  for (Eigen::Index n = 0; n < k; ++n) {
    const auto cn = static_cast<std::size_t>(group[static_cast<std::size_t>(n)]);
    for (Eigen::Index m = n; m < k; ++m) {
      const auto cm = static_cast<std::size_t>(group[static_cast<std::size_t>(m)]);
      double shared = 0.0;
      for (const int r : local_pixels[cn]) {
        shared += member[static_cast<std::size_t>(m)][static_cast<std::size_t>(r)];
      }
      sys.gram(n, m) = sys.gram(m, n) = scale[cn] * scale[cm] * shared;
    }
  }
  sys.yy = 0.0;
  for (const int r : footprint) sys.yy += y.row(r).squaredNorm();
  return sys;
}

}  // namespace

SglProblem::SglProblem(const VideoMatrix& y, const SpatialDictionary& af,
                       std::optional<std::span<const int>> pixel_subset)
    : scaled_(scale_dictionary(af)), frames_(y.frames()) {
  if (af.geometry.pixels() != y.pixels()) throw Error("dictionary geometry does not match video");
  Matrix yr;
  int rows = y.pixels();
  if (pixel_subset) {
    std::vector<int> subset(pixel_subset->begin(), pixel_subset->end());
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    std::vector<int> local(static_cast<std::size_t>(y.pixels()), -1);
    rows = static_cast<int>(subset.size());
    yr.resize(rows, y.frames());
    for (int i = 0; i < rows; ++i) {
      const int p = subset[static_cast<std::size_t>(i)];
      if (p < 0 || p >= y.pixels()) throw Error("pixel subset index out of range");
      local[static_cast<std::size_t>(p)] = i;
      yr.row(i) = y.values.row(p);
    }
    local_pixels_.resize(af.size());
    for (std::size_t k = 0; k < af.size(); ++k) {
      for (const int p : af.components[k].pixels) {
        if (local[static_cast<std::size_t>(p)] >= 0) local_pixels_[k].push_back(local[static_cast<std::size_t>(p)]);
      }
    }
  } else {
    yr = y.values;
    local_pixels_.reserve(af.size());
    for (const auto& c : af.components) local_pixels_.push_back(c.pixels);
  }

  partition_ = partition_columns(local_pixels_, rows);
  projections_.resize(components(), frames_);
  std::vector<char> covered(static_cast<std::size_t>(rows), 0);
  for (std::size_t s = 0; s < partition_.groups.size(); ++s) {
    systems_.push_back(build_system(yr, partition_.groups[s], partition_.footprints[s],
                                    local_pixels_, scaled_.scale, rows));
    for (std::size_t n = 0; n < partition_.groups[s].size(); ++n) {
      projections_.row(partition_.groups[s][n]) = systems_.back().proj.row(static_cast<Eigen::Index>(n));
    }
    for (const int r : partition_.footprints[s]) covered[static_cast<std::size_t>(r)] = 1;
  }
  for (int r = 0; r < rows; ++r) {
    if (!covered[static_cast<std::size_t>(r)]) outside_yy_ += yr.row(r).squaredNorm();
  }
}

TemporalTraces SglProblem::solve(double lambda, double alpha, const SglConfig& cfg,
                                 const TemporalTraces* warm_start) const {
  const std::vector<double> lambdas(partition_.groups.size(), lambda);
  return solve(lambdas, alpha, cfg, warm_start);
}

TemporalTraces SglProblem::solve(std::span<const double> group_lambdas, double alpha,
                                 const SglConfig& cfg, const TemporalTraces* warm_start) const {
  cfg.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  if (group_lambdas.size() != partition_.groups.size()) {
    throw Error("need one lambda per overlap group");
  }
  TemporalTraces out{Matrix::Zero(components(), frames_)};
  for (std::size_t s = 0; s < partition_.groups.size(); ++s) {
    const double lambda = group_lambdas[s];
    if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
    const auto& group = partition_.groups[s];
    const auto& sys = systems_[s];
    if (group.size() == 1) {
      out.values.row(group[0]) =
          solve_single_projected(sys.proj.row(0).transpose(), sys.gram(0, 0), lambda, alpha)
              .transpose();
      continue;
    }
    Matrix warm;
    if (warm_start) {
      warm.resize(static_cast<Eigen::Index>(group.size()), frames_);
      for (std::size_t n = 0; n < group.size(); ++n) {
        warm.row(static_cast<Eigen::Index>(n)) = warm_start->values.row(group[n]);
      }
    }
    const auto res = solve_group_ggd(sys, lambda, alpha, warm_start ? &warm : nullptr, cfg);
    for (std::size_t n = 0; n < group.size(); ++n) {
      out.values.row(group[n]) = res.z.row(static_cast<Eigen::Index>(n));
    }
  }
  return out;
}

double SglProblem::objective(const TemporalTraces& z, double lambda, double alpha) const {
  double total = 0.5 * outside_yy_;
  for (std::size_t s = 0; s < partition_.groups.size(); ++s) {
    const auto& group = partition_.groups[s];
    Matrix zs(static_cast<Eigen::Index>(group.size()), frames_);
    for (std::size_t n = 0; n < group.size(); ++n) {
      zs.row(static_cast<Eigen::Index>(n)) = z.values.row(group[n]);
    }
    total += group_objective(systems_[s], zs, lambda, alpha);
  }
  return total;
}

namespace {

GroupSystem monolithic_system(const std::vector<GroupSystem>& systems,
                              const OverlapPartition& partition, int k, int frames) {
  GroupSystem all;
  all.gram = Matrix::Zero(k, k);
  all.proj = Matrix::Zero(k, frames);
  for (std::size_t s = 0; s < systems.size(); ++s) {
    const auto& g = partition.groups[s];
    for (std::size_t n = 0; n < g.size(); ++n) {
      all.proj.row(g[n]) = systems[s].proj.row(static_cast<Eigen::Index>(n));
      for (std::size_t m = 0; m < g.size(); ++m) {
        all.gram(g[n], g[m]) = systems[s].gram(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      }
    }
    all.yy += systems[s].yy;
  }
  return all;
}

}  // namespace

TemporalTraces SglProblem::solve_monolithic(double lambda, double alpha, const SglConfig& cfg) const {
  cfg.validate();
  const auto sys = monolithic_system(systems_, partition_, components(), frames_);
  return {solve_group_ggd(sys, lambda, alpha, nullptr, cfg).z};
}

double SglProblem::monolithic_objective(const TemporalTraces& z, double lambda, double alpha) const {
  const auto sys = monolithic_system(systems_, partition_, components(), frames_);
  return 0.5 * outside_yy_ + group_objective(sys, z.values, lambda, alpha);
}

TemporalTraces solve_sgl(const VideoMatrix& y, const SpatialDictionary& af, double lambda,
                         double alpha, const SglConfig& cfg) {
  if (af.empty()) throw Error("empty filtered dictionary");
  return SglProblem(y, af).solve(lambda, alpha, cfg);
}

std::vector<TemporalTraces> solve_path(const SglProblem& problem, std::span<const double> lambdas,
                                       double alpha, const SglConfig& cfg) {
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    if (!(lambdas[i] < lambdas[i - 1])) throw Error("lambda path must be strictly decreasing");
  }
  std::vector<TemporalTraces> out;
  out.reserve(lambdas.size());
  for (const double lambda : lambdas) {
    out.push_back(problem.solve(lambda, alpha, cfg, out.empty() ? nullptr : &out.back()));
  }
  return out;
}

std::vector<TemporalTraces> solve_path(const VideoMatrix& y, const SpatialDictionary& af,
                                       std::span<const double> lambdas, double alpha,
                                       const SglConfig& cfg) {
  return solve_path(SglProblem(y, af), lambdas, alpha, cfg);
}

double row_zero_lambda(const Vector& row, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  const double top = row.size() ? std::max(0.0, row.maxCoeff()) : 0.0;
  const double norm = positive_norm(row, 0.0);
  if (top == 0.0) return 0.0;
  if (alpha == 1.0) return top;
  if (alpha == 0.0) return norm;
  auto zeroes = [&](double lambda) {
    return lambda * (1.0 - alpha) >= positive_norm(row, lambda * alpha);
  };
  double hi = std::min(top / alpha, norm / (1.0 - alpha));
  while (!zeroes(hi)) hi *= 1.0 + 1e-12;
  double lo = 0.0;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (zeroes(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double max_lambda(const Matrix& projections, double alpha) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < projections.rows(); ++k) {
    best = std::max(best, row_zero_lambda(projections.row(k).transpose(), alpha));
  }
  return best;
}

double max_lambda(const SglProblem& problem, double alpha) {
  return max_lambda(problem.projections(), alpha);
}

double corollary_lambda_bound(const Matrix& projections, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("bound requires alpha in (0, 1)");
  double best = 0.0;
  for (Eigen::Index k = 0; k < projections.rows(); ++k) {
    const Vector pos = projections.row(k).transpose().cwiseMax(0.0);
    best = std::max(best, std::min(pos.maxCoeff() / alpha, pos.norm() / (1.0 - alpha)));
  }
  return best;
}

std::vector<double> log_spaced_lambdas(double hi, double lo, int n) {
  if (n < 1) throw Error("need at least one lambda");
  if (!(hi > 0.0 && lo > 0.0 && lo <= hi)) throw Error("need 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        n == 1 ? hi : hi * std::pow(lo / hi, static_cast<double>(i) / (n - 1));
  }
  return out;
}

double lambda_quantile_rule(const VideoMatrix& y, double alpha, double q) {
  if (!(alpha > 0.0)) throw Error("quantile rule requires alpha > 0");
  return -quantile(y, q) / alpha;
}

std::vector<KeepDrop> parse_keep_drop(const std::string& text) {
  std::vector<KeepDrop> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::string verb;
    long index = -1;
    char extra = 0;
    char buf[16] = {};
    const int got = std::sscanf(line.c_str() + first, "%15s %ld %c", buf, &index, &extra);
    verb = buf;
    if (got != 2 || (verb != "keep" && verb != "drop") || index < 0) {
      throw Error("keep/drop line " + std::to_string(line_no) + ": expected 'keep <k>' or 'drop <k>'");
    }
    out.push_back({static_cast<int>(index), verb == "keep"});
  }
  return out;
}

FilteredDictionary filter_dictionary(const SpatialDictionary& a, std::span<const int> cluster_sizes,
                                     int min_members, std::span<const KeepDrop> manual) {
  if (cluster_sizes.size() != a.size()) throw Error("cluster sizes do not match dictionary columns");
  std::vector<char> keep(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) keep[k] = cluster_sizes[k] >= min_members;
  for (const auto& kd : manual) {
    if (kd.index < 0 || static_cast<std::size_t>(kd.index) >= a.size()) {
      throw Error("keep/drop index " + std::to_string(kd.index) + " out of range");
    }
    keep[static_cast<std::size_t>(kd.index)] = kd.keep;
  }
  FilteredDictionary out;
  out.dictionary.geometry = a.geometry;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!keep[k]) continue;
    out.dictionary.components.push_back(a.components[k]);
    out.kept.push_back(static_cast<int>(k));
  }
  if (out.dictionary.empty()) throw Error("empty filtered dictionary");
  return out;
}

}  // namespace scalpel
