#include "scalpel/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace scalpel {

void PreprocessConfig::validate() const {
  if (!(bandwidth > 0.0)) throw Error("bandwidth must be positive");
  if (spline_df < 2) throw Error("spline_df must be at least 2");
  if (!(denom_quantile > 0.0 && denom_quantile < 1.0)) {
    throw Error("denom_quantile must lie in (0, 1)");
  }
}

GaussianSmoother1D::GaussianSmoother1D(int length, double sigma)
    : length_(length),
      first_(static_cast<std::size_t>(length)),
      weights_(static_cast<std::size_t>(length)) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  for (int i = 0; i < length; ++i) {
    const int lo = std::max(0, i - radius);
    const int hi = std::min(length - 1, i + radius);
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1));
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int k = lo; k <= hi; ++k) {
      const double d = k - i;
      const double wk = std::exp(-0.5 * d * d / (sigma * sigma));
      w[static_cast<std::size_t>(k - lo)] = wk;
      s0 += wk;
      s1 += wk * d;
      s2 += wk * d * d;
    }
    const double det = s0 * s2 - s1 * s1;
    const bool symmetric = (i - lo) == (hi - i);
    if (symmetric || det <= 1e-12 * s0 * s0) {
      for (auto& wk : w) wk /= s0;
    } else {
      // Equivalent kernel of a weighted local-linear fit evaluated at i.
      for (int k = lo; k <= hi; ++k) {
        const double d = k - i;
        auto& wk = w[static_cast<std::size_t>(k - lo)];
        wk = wk * (s2 - s1 * d) / det;
      }
    }
    first_[static_cast<std::size_t>(i)] = lo;
    weights_[static_cast<std::size_t>(i)] = std::move(w);
  }
}

namespace {

// Smooths `count` interleaved 1-D signals: element k of signal s lives at
// data[offset(s) + k * stride].
template <typename OffsetFn>
void smooth_lines(double* data, int count, int stride, const GaussianSmoother1D& sm,
                  OffsetFn offset, std::vector<double>& scratch) {
  const int n = sm.length();
  scratch.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < count; ++s) {
    double* line = data + offset(s);
    for (int i = 0; i < n; ++i) {
      const auto& w = sm.weights(i);
      const int lo = sm.first_tap(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k] * line[static_cast<std::ptrdiff_t>(lo + static_cast<int>(k)) * stride];
      }
      scratch[static_cast<std::size_t>(i)] = acc;
    }
    for (int i = 0; i < n; ++i) {
      line[static_cast<std::ptrdiff_t>(i) * stride] = scratch[static_cast<std::size_t>(i)];
    }
  }
}

}  // namespace

VideoMatrix spatial_smooth(const VideoMatrix& video, double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error("bandwidth must be positive");
  VideoMatrix out = video;
  const auto& g = video.geometry;
  const GaussianSmoother1D along_width(g.width, bandwidth);
  const GaussianSmoother1D along_height(g.height, bandwidth);
  std::vector<double> scratch;
  for (int j = 0; j < out.frames(); ++j) {
    double* frame = out.values.col(j).data();
    smooth_lines(frame, g.height, 1, along_width, [&](int r) { return r * g.width; }, scratch);
    smooth_lines(frame, g.width, g.width, along_height, [](int c) { return c; }, scratch);
  }
  return out;
}

VideoMatrix temporal_smooth(const VideoMatrix& video, double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error("bandwidth must be positive");
  const int frames = video.frames();
  const GaussianSmoother1D sm(frames, bandwidth);
  Matrix smoothed = Matrix::Zero(video.values.rows(), frames);
  for (int j = 0; j < frames; ++j) {
    const auto& w = sm.weights(j);
    const int lo = sm.first_tap(j);
    for (std::size_t k = 0; k < w.size(); ++k) {
      smoothed.col(j) += w[k] * video.values.col(lo + static_cast<int>(k));
    }
  }
  return VideoMatrix(std::move(smoothed), video.geometry);
}

VideoMatrix gaussian_smooth(const VideoMatrix& video, double bandwidth) {
  return temporal_smooth(spatial_smooth(video, bandwidth), bandwidth);
}

Vector frame_medians(const VideoMatrix& video) {
  Vector m(video.frames());
  for (int j = 0; j < video.frames(); ++j) {
    m(j) = median(std::span<const double>(video.values.col(j).data(),
                                          static_cast<std::size_t>(video.pixels())));
  }
  return m;
}

namespace {

// Cox-de Boor evaluation of all B-spline basis functions at x.
Eigen::RowVectorXd bspline_row(double x, const std::vector<double>& knots, int degree, int nbasis) {
  const int nk = static_cast<int>(knots.size());
  // Locate span: knots[span] <= x < knots[span+1], clamped to the last non-empty span.
  int span = degree;
  while (span < nk - degree - 2 && x >= knots[static_cast<std::size_t>(span + 1)]) ++span;
  std::vector<double> N(static_cast<std::size_t>(degree + 1), 0.0);
  std::vector<double> left(static_cast<std::size_t>(degree + 1)), right(static_cast<std::size_t>(degree + 1));
  N[0] = 1.0;
  for (int d = 1; d <= degree; ++d) {
    left[static_cast<std::size_t>(d)] = x - knots[static_cast<std::size_t>(span + 1 - d)];
    right[static_cast<std::size_t>(d)] = knots[static_cast<std::size_t>(span + d)] - x;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(d - r)];
      const double tmp = denom == 0.0 ? 0.0 : N[static_cast<std::size_t>(r)] / denom;
      N[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(d - r)] * tmp;
    }
    N[static_cast<std::size_t>(d)] = saved;
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nbasis);
  for (int r = 0; r <= degree; ++r) row(span - degree + r) = N[static_cast<std::size_t>(r)];
  return row;
}

}  // namespace

Vector fit_regression_spline(const Vector& series, int df) {
  const int n = static_cast<int>(series.size());
  if (df < 2) throw Error("spline_df must be at least 2");
  if (n < df) throw Error("too few frames for spline fit");
  const int degree = std::min(3, df - 1);
  const int interior = df - degree - 1;
  const double x0 = 0.0;
  const double x1 = static_cast<double>(n - 1);

  std::vector<double> knots;
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), x0);
  for (int k = 1; k <= interior; ++k) {
    knots.push_back(x0 + (x1 - x0) * k / (interior + 1));
  }
  knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), x1);

  Matrix basis(n, df);
  for (int i = 0; i < n; ++i) basis.row(i) = bspline_row(static_cast<double>(i), knots, degree, df);
  const Vector coef = basis.colPivHouseholderQr().solve(series);
  return basis * coef;
}

VideoMatrix bleach_correct(const VideoMatrix& video, int spline_df, BleachBaseline baseline) {
  if (video.frames() < spline_df) throw Error("too few frames for spline fit");
  Vector trend = fit_regression_spline(frame_medians(video), spline_df);
  if (baseline == BleachBaseline::kKeepInitial) trend.array() -= trend(0);
  VideoMatrix out = video;
  out.values.rowwise() -= trend.transpose();
  return out;
}

VideoMatrix delta_f_over_f(const VideoMatrix& video, double denom_quantile) {
  const double offset = quantile(video, denom_quantile);
  const int frames = video.frames();
  VideoMatrix out = video;
  std::vector<double> row(static_cast<std::size_t>(frames));
  for (int i = 0; i < video.pixels(); ++i) {
    for (int j = 0; j < frames; ++j) row[static_cast<std::size_t>(j)] = video.values(i, j);
    const double med = median(row);
    const double denom = med + offset;
    if (denom == 0.0) {
      throw Error("zero delta f/f denominator at pixel " + std::to_string(i));
    }
    for (int j = 0; j < frames; ++j) out.values(i, j) = (video.values(i, j) - med) / denom;
  }
  return out;
}

VideoMatrix preprocess(const VideoMatrix& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  if (raw.empty()) throw Error("empty input");
  const VideoMatrix smoothed = gaussian_smooth(raw, cfg.bandwidth);
  const VideoMatrix corrected =
      bleach_correct(smoothed, cfg.spline_df, BleachBaseline::kKeepInitial);
  return delta_f_over_f(corrected, cfg.denom_quantile);
}

}  // namespace scalpel
