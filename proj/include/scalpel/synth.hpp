#pragma once

#include "scalpel/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace scalpel {

/// Ground truth and nuisance terms of a synthetic video
/// Y = A* Z* + trend 1^T (per frame) + N(0, noise_sd^2).
struct SyntheticSpec {
  FrameGeometry geometry{1, 1};
  int frames = 1;
  std::vector<std::vector<int>> masks;  // binary columns of A*, sorted pixel lists
  Matrix traces;                        // K x T, non-negative
  double noise_sd = 0.0;
  Vector trend;                         // per-frame offset added to every pixel; empty means none
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  VideoMatrix raw;
  SyntheticSpec truth;
};

SyntheticData generate(const SyntheticSpec& spec);

/// Pixels of the axis-aligned ellipse ((r - cr)/rr)^2 + ((c - cc)/rc)^2 <= 1,
/// clipped to the frame.
std::vector<int> ellipse_mask(const FrameGeometry& g, double cr, double cc, double rr, double rc);

/// Sparse spike trains convolved with an exponential decay, each row scaled to
/// peak 1. Every row gets at least one spike.
Matrix spike_traces(int components, int frames, double rate, double decay_frames, std::uint64_t seed);

struct SceneOptions {
  FrameGeometry geometry{50, 50};
  int frames = 500;
  int disjoint = 8;           // single ellipses on a 3 x 3 grid of cells
  bool overlapping_pair = true;  // two overlapping ellipses in the last cell
  double baseline = 10.0;
  double bleach = 0.0;        // linear decay of the baseline over the recording
  double noise_sd = 0.2;
  double spike_rate = 0.01;
  double decay_frames = 8.0;
  std::uint64_t seed = 0;
};

/// Elliptical neurons of 50 to 120 pixels placed on a grid with gaps between cells.
SyntheticSpec elliptical_scene(const SceneOptions& opt);

/// Ground truth as JSON: geometry, masks, traces, noise and trend.
std::string truth_to_json(const SyntheticSpec& spec);

/// Builds a spec from JSON: either explicit {height, width, frames, masks,
/// traces, noise_sd, trend, seed} or a scene {"scene": {...SceneOptions fields}}.
SyntheticSpec spec_from_json(const std::string& text);

}  // namespace scalpel
