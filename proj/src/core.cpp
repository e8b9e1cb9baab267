#include "scalpel/core.hpp"

#include <algorithm>
#include <cmath>

namespace scalpel {

FrameGeometry::FrameGeometry(int h, int w) : height(h), width(w) {
  if (h < 1 || w < 1) {
    throw Error("frame geometry must be at least 1x1, got " + std::to_string(h) + "x" +
                std::to_string(w));
  }
}

VideoMatrix::VideoMatrix(Matrix v, FrameGeometry g) : values(std::move(v)), geometry(g) {
  if (values.rows() != geometry.pixels()) {
    throw Error("video has " + std::to_string(values.rows()) + " pixel rows but geometry has " +
                std::to_string(geometry.pixels()) + " pixels");
  }
}

namespace {

// Selects the k-th and (k+1)-th order statistics in place.
double interpolate_order_stats(std::vector<double>& buf, double pos) {
  const auto n = buf.size();
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.end());
  const double a = buf[lo];
  if (frac == 0.0 || lo + 1 >= n) return a;
  const double b = *std::min_element(buf.begin() + static_cast<std::ptrdiff_t>(lo) + 1, buf.end());
  return a + frac * (b - a);
}

}  // namespace

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error("empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
  std::vector<double> buf(values.begin(), values.end());
  return interpolate_order_stats(buf, q * static_cast<double>(buf.size() - 1));
}

double quantile(const VideoMatrix& video, double q) {
  return quantile(std::span<const double>(video.values.data(),
                                          static_cast<std::size_t>(video.values.size())),
                  q);
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error("empty input");
  std::vector<double> buf(values.begin(), values.end());
  const auto n = buf.size();
  const auto mid = n / 2;
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
  const double upper = buf[mid];
  if (n % 2 == 1) return upper;
  const double lower =
      *std::max_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

ThresholdedVideo threshold_video(const VideoMatrix& video, double threshold) {
  ThresholdedVideo out;
  out.threshold = threshold;
  out.values = video.values.unaryExpr([threshold](double v) { return v > threshold ? v : 0.0; });
  return out;
}

}  // namespace scalpel
