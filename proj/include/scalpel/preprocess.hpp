#pragma once

#include "scalpel/core.hpp"

namespace scalpel {

struct PreprocessConfig {
  double bandwidth = 1.0;       // Gaussian sigma, in pixels and in frames
  int spline_df = 10;           // basis size of the bleaching trend fit
  double denom_quantile = 0.10;  // quantile of the whole video added to the Δf/f denominator

  void validate() const;
};

/// What bleach_correct subtracts from frame j.
enum class BleachBaseline {
  kRemove,       // the fitted trend m(j); frames end up centred on zero
  kKeepInitial,  // m(j) - m(0); the fluorescence level of the first frame is kept
};

/// One-dimensional Gaussian kernel smoother (sigma in samples, radius ceil(4 sigma)).
/// Interior outputs are the normalized kernel average. Near the ends the fit is
/// local-linear, so constants and straight lines pass through unchanged.
class GaussianSmoother1D {
 public:
  GaussianSmoother1D(int length, double sigma);

  int length() const { return length_; }
  int first_tap(int i) const { return first_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& weights(int i) const { return weights_[static_cast<std::size_t>(i)]; }

 private:
  int length_;
  std::vector<int> first_;
  std::vector<std::vector<double>> weights_;
};

VideoMatrix spatial_smooth(const VideoMatrix& video, double bandwidth);
VideoMatrix temporal_smooth(const VideoMatrix& video, double bandwidth);

/// Spatial pass on every frame, then temporal pass on every pixel trace.
VideoMatrix gaussian_smooth(const VideoMatrix& video, double bandwidth);

/// Per-frame median fluorescence.
Vector frame_medians(const VideoMatrix& video);

/// Least-squares cubic B-spline regression of `series` on its index with
/// exactly `df` basis functions and equally spaced interior knots.
Vector fit_regression_spline(const Vector& series, int df);

VideoMatrix bleach_correct(const VideoMatrix& video, int spline_df,
                           BleachBaseline baseline = BleachBaseline::kRemove);

/// y = (y0 - median_t(y0_i)) / (median_t(y0_i) + quantile_q(Y0)).
VideoMatrix delta_f_over_f(const VideoMatrix& video, double denom_quantile);

/// Smoothing, bleaching correction (keeping the initial level) and Δf/f.
VideoMatrix preprocess(const VideoMatrix& raw, const PreprocessConfig& cfg);

}  // namespace scalpel
