#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scalpel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frame dimensions. Pixels are indexed row-major: p = row * width + col.
struct FrameGeometry {
  int height = 0;
  int width = 0;

  FrameGeometry() = default;
  FrameGeometry(int h, int w);

  int pixels() const { return height * width; }
  int row(int p) const { return p / width; }
  int col(int p) const { return p % width; }
  int index(int r, int c) const { return r * width + c; }

  bool operator==(const FrameGeometry&) const = default;
};

/// P x T fluorescence matrix. Column j is frame j, row i is the trace of pixel i.
struct VideoMatrix {
  Matrix values;
  FrameGeometry geometry;

  VideoMatrix() = default;
  VideoMatrix(Matrix v, FrameGeometry g);

  int pixels() const { return static_cast<int>(values.rows()); }
  int frames() const { return static_cast<int>(values.cols()); }
  bool empty() const { return values.size() == 0; }
};

/// Video with every entry not exceeding `threshold` set to zero.
struct ThresholdedVideo {
  Matrix values;
  double threshold = 0.0;
};

/// q-quantile with linear interpolation between order statistics
/// (position q * (n - 1), zero-indexed).
double quantile(std::span<const double> values, double q);
double quantile(const VideoMatrix& video, double q);

/// Median; mean of the two central order statistics for even counts.
double median(std::span<const double> values);

ThresholdedVideo threshold_video(const VideoMatrix& video, double threshold);

}  // namespace scalpel
