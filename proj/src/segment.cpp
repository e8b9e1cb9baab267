#include "scalpel/segment.hpp"

#include <algorithm>
#include <numeric>

namespace scalpel {

void SegmentConfig::validate() const {
  if (min_size <= 0 || min_size > max_size) throw Error("require 0 < min_size <= max_size");
  if (max_width < 1 || max_height < 1) throw Error("max_width and max_height must be >= 1");
  if (!(threshold_quantile >= 0.0 && threshold_quantile <= 1.0)) {
    throw Error("threshold_quantile must lie in [0, 1]");
  }
}

std::array<double, 3> compute_thresholds(const VideoMatrix& y, double threshold_quantile) {
  if (y.empty()) throw Error("empty input");
  const double from_min = -y.values.minCoeff();
  const double from_quantile = -quantile(y, threshold_quantile);
  std::array<double, 3> t{from_min, from_quantile, 0.5 * (from_min + from_quantile)};
  std::sort(t.begin(), t.end());
  if (t[0] <= 0.0) {
    throw Error("preprocessing contract violated: segmentation thresholds must be positive");
  }
  return t;
}

BinaryImage threshold_frame(std::span<const double> frame, double threshold,
                            const FrameGeometry& geometry) {
  if (static_cast<int>(frame.size()) != geometry.pixels()) {
    throw Error("frame size does not match geometry");
  }
  BinaryImage img{geometry, std::vector<std::uint8_t>(frame.size())};
  for (std::size_t p = 0; p < frame.size(); ++p) img.pixels[p] = frame[p] > threshold ? 1 : 0;
  return img;
}

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto& px = parent[static_cast<std::size_t>(x)];
    px = parent[static_cast<std::size_t>(px)];
    x = px;
  }
  return x;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) std::swap(a, b);
  parent[static_cast<std::size_t>(a)] = b;
}

}  // namespace

// Two-pass labelling with union-find over left and upper neighbours.
std::vector<std::vector<int>> connected_components(const BinaryImage& image) {
  const auto& g = image.geometry;
  const int n = g.pixels();
  if (static_cast<int>(image.pixels.size()) != n) throw Error("image size does not match geometry");
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const int p = g.index(r, c);
      if (!image.at(p)) continue;
      if (c > 0 && image.at(p - 1)) unite(parent, p, p - 1);
      if (r > 0 && image.at(p - g.width)) unite(parent, p, p - g.width);
    }
  }
  // Roots are the smallest member index, so scanning in pixel order yields the
  // required component order.
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int p = 0; p < n; ++p) {
    if (!image.at(p)) continue;
    const int root = find_root(parent, p);
    auto& s = slot[static_cast<std::size_t>(root)];
    if (s < 0) {
      s = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(s)].push_back(p);
  }
  return out;
}

BoundingBox bounding_box(std::span<const int> pixels, const FrameGeometry& geometry) {
  if (pixels.empty()) return {};
  int rmin = geometry.height, rmax = -1, cmin = geometry.width, cmax = -1;
  for (const int p : pixels) {
    const int r = geometry.row(p), c = geometry.col(p);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  return {cmax - cmin + 1, rmax - rmin + 1};
}

std::vector<std::vector<int>> filter_components(std::vector<std::vector<int>> components,
                                                const FrameGeometry& geometry,
                                                const SegmentConfig& cfg) {
  std::erase_if(components, [&](const std::vector<int>& comp) {
    const auto n = static_cast<int>(comp.size());
    if (n < cfg.min_size || n > cfg.max_size) return true;
    const auto box = bounding_box(comp, geometry);
    return box.width > cfg.max_width || box.height > cfg.max_height;
  });
  return components;
}

SpatialDictionary build_preliminary_dictionary(const VideoMatrix& y, const SegmentConfig& cfg,
                                               std::span<const double> thresholds) {
  cfg.validate();
  SpatialDictionary dict;
  dict.geometry = y.geometry;
  const auto npix = static_cast<std::size_t>(y.pixels());
  for (const double threshold : thresholds) {
    for (int j = 0; j < y.frames(); ++j) {
      const std::span<const double> frame(y.values.col(j).data(), npix);
      auto comps =
          filter_components(connected_components(threshold_frame(frame, threshold, y.geometry)),
                            y.geometry, cfg);
      for (auto& comp : comps) {
        dict.components.push_back({std::move(comp), FrameProvenance{j, threshold}});
      }
    }
  }
  if (dict.empty()) {
    throw Error(
        "empty preliminary dictionary: no component survived segmentation; try lowering the "
        "thresholds (smaller threshold_quantile) or relaxing the size filter");
  }
  return dict;
}

SpatialDictionary build_preliminary_dictionary(const VideoMatrix& y, const SegmentConfig& cfg) {
  const auto t = compute_thresholds(y, cfg.threshold_quantile);
  return build_preliminary_dictionary(y, cfg, t);
}

}  // namespace scalpel
