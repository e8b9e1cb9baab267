#pragma once

#include "scalpel/core.hpp"

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

namespace scalpel {

/// Component extracted from one thresholded frame.
struct FrameProvenance {
  int frame = 0;
  double threshold = 0.0;
  bool operator==(const FrameProvenance&) const = default;
};

/// Component chosen to represent a cluster of preliminary elements.
struct ClusterProvenance {
  int element = 0;  // index into the preliminary dictionary
  int members = 0;  // cluster size
  bool operator==(const ClusterProvenance&) const = default;
};

using Provenance = std::variant<FrameProvenance, ClusterProvenance>;

/// Binary spatial mask stored as a sorted list of pixel indices.
struct SpatialComponent {
  std::vector<int> pixels;
  Provenance provenance;

  std::size_t size() const { return pixels.size(); }
};

/// Ordered columns of a binary P x K matrix sharing one frame geometry.
struct SpatialDictionary {
  FrameGeometry geometry;
  std::vector<SpatialComponent> components;

  std::size_t size() const { return components.size(); }
  bool empty() const { return components.empty(); }
};

struct SegmentConfig {
  int min_size = 25;
  int max_size = 500;
  int max_width = 30;
  int max_height = 30;
  double threshold_quantile = 0.001;

  void validate() const;
};

/// Row-major 0/1 image.
struct BinaryImage {
  FrameGeometry geometry;
  std::vector<std::uint8_t> pixels;

  bool at(int p) const { return pixels[static_cast<std::size_t>(p)] != 0; }
};

/// -min(Y), -quantile_q(Y) and their average, sorted ascending.
std::array<double, 3> compute_thresholds(const VideoMatrix& y, double threshold_quantile);

BinaryImage threshold_frame(std::span<const double> frame, double threshold,
                            const FrameGeometry& geometry);

/// Maximal 4-connected sets of foreground pixels, each sorted, ordered by
/// smallest pixel index.
std::vector<std::vector<int>> connected_components(const BinaryImage& image);

struct BoundingBox {
  int width = 0;
  int height = 0;
};
BoundingBox bounding_box(std::span<const int> pixels, const FrameGeometry& geometry);

/// Keeps components with size in [min_size, max_size] whose bounding box fits
/// inside max_width x max_height.
std::vector<std::vector<int>> filter_components(std::vector<std::vector<int>> components,
                                                const FrameGeometry& geometry,
                                                const SegmentConfig& cfg);

/// Segments every frame at every threshold. Columns are ordered by
/// (threshold, frame, smallest pixel).
SpatialDictionary build_preliminary_dictionary(const VideoMatrix& y, const SegmentConfig& cfg);

/// Same, with explicitly supplied thresholds.
SpatialDictionary build_preliminary_dictionary(const VideoMatrix& y, const SegmentConfig& cfg,
                                               std::span<const double> thresholds);

}  // namespace scalpel
