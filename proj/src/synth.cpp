#include "scalpel/synth.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using nlohmann::json;

namespace scalpel {

void SyntheticSpec::validate() const {
  if (frames < 1) throw Error("synthetic spec needs at least one frame");
  if (traces.rows() != static_cast<Eigen::Index>(masks.size()) || traces.cols() != frames) {
    throw Error("synthetic traces must be K x T");
  }
  if ((traces.array() < 0.0).any()) throw Error("synthetic traces must be non-negative");
  for (const auto& m : masks) {
    for (const int p : m) {
      if (p < 0 || p >= geometry.pixels()) throw Error("synthetic mask pixel outside the frame");
    }
  }
  if (trend.size() != 0 && trend.size() != frames) throw Error("trend needs one value per frame");
  if (!(noise_sd >= 0.0)) throw Error("noise sd must be non-negative");
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Matrix y = Matrix::Zero(spec.geometry.pixels(), spec.frames);
  for (std::size_t k = 0; k < spec.masks.size(); ++k) {
    for (const int p : spec.masks[k]) y.row(p) += spec.traces.row(static_cast<Eigen::Index>(k));
  }
  if (spec.trend.size()) y.rowwise() += spec.trend.transpose();
  if (spec.noise_sd > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sd);
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      for (Eigen::Index p = 0; p < y.rows(); ++p) y(p, j) += noise(rng);
    }
  }
  return {VideoMatrix(std::move(y), spec.geometry), spec};
}

std::vector<int> ellipse_mask(const FrameGeometry& g, double cr, double cc, double rr, double rc) {
  std::vector<int> out;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const double u = (r - cr) / rr, v = (c - cc) / rc;
      if (u * u + v * v <= 1.0) out.push_back(g.index(r, c));
    }
  }
  return out;
}

Matrix spike_traces(int components, int frames, double rate, double decay_frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fire(rate);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  std::uniform_int_distribution<int> when(0, frames - 1);
  const double keep = std::exp(-1.0 / decay_frames);
  Matrix z = Matrix::Zero(components, frames);
  for (int k = 0; k < components; ++k) {
    std::vector<double> spikes(static_cast<std::size_t>(frames), 0.0);
    bool any = false;
    for (auto& s : spikes) {
      if (fire(rng)) {
        s = amp(rng);
        any = true;
      }
    }
    if (!any) spikes[static_cast<std::size_t>(when(rng))] = 1.0;
    double level = 0.0;
    for (int j = 0; j < frames; ++j) {
      level = level * keep + spikes[static_cast<std::size_t>(j)];
      z(k, j) = level;
    }
    z.row(k) /= z.row(k).maxCoeff();
  }
  return z;
}

SyntheticSpec elliptical_scene(const SceneOptions& opt) {
  const int cells = opt.disjoint + (opt.overlapping_pair ? 1 : 0);
  if (opt.disjoint < 0 || cells > 9) throw Error("scene holds at most 9 grid cells");
  const auto& g = opt.geometry;
  const double cell_h = g.height / 3.0, cell_w = g.width / 3.0;
  if (cell_h < 14.0 || cell_w < 14.0) throw Error("scene needs frames of at least 42 x 42 pixels");

  SyntheticSpec spec;
  spec.geometry = g;
  spec.frames = opt.frames;
  spec.noise_sd = opt.noise_sd;
  spec.seed = opt.seed;
  std::mt19937_64 rng(opt.seed ^ 0x5ca1ab1eULL);
  std::uniform_real_distribution<double> radius(4.0, 6.0);
  auto centre = [&](int cell) {
    return std::pair{cell_h * (cell / 3 + 0.5) - 0.5, cell_w * (cell % 3 + 0.5) - 0.5};
  };
  for (int cell = 0; cell < opt.disjoint; ++cell) {
    const auto [cr, cc] = centre(cell);
    spec.masks.push_back(ellipse_mask(g, cr, cc, radius(rng), radius(rng)));
  }
  if (opt.overlapping_pair) {
    const auto [cr, cc] = centre(opt.disjoint);
    spec.masks.push_back(ellipse_mask(g, cr, cc - 3.0, 5.5, 4.0));
    spec.masks.push_back(ellipse_mask(g, cr, cc + 3.0, 5.5, 4.0));
  }
  spec.traces = spike_traces(static_cast<int>(spec.masks.size()), opt.frames, opt.spike_rate,
                             opt.decay_frames, opt.seed + 1);
  spec.trend.resize(opt.frames);
  for (int j = 0; j < opt.frames; ++j) {
    const double frac = opt.frames > 1 ? static_cast<double>(j) / (opt.frames - 1) : 0.0;
    spec.trend(j) = opt.baseline - opt.bleach * frac;
  }
  return spec;
}

std::string truth_to_json(const SyntheticSpec& spec) {
  json traces = json::array();
  for (Eigen::Index k = 0; k < spec.traces.rows(); ++k) {
    traces.push_back(std::vector<double>(spec.traces.row(k).begin(), spec.traces.row(k).end()));
  }
  json j = {{"height", spec.geometry.height},
            {"width", spec.geometry.width},
            {"frames", spec.frames},
            {"noise_sd", spec.noise_sd},
            {"seed", spec.seed},
            {"masks", spec.masks},
            {"traces", traces},
            {"trend", std::vector<double>(spec.trend.begin(), spec.trend.end())}};
  return j.dump(1) + "\n";
}

SyntheticSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed synthetic spec: ") + e.what());
  }
  try {
    if (j.contains("scene")) {
      const auto& s = j["scene"];
      SceneOptions opt;
      opt.geometry = FrameGeometry(s.value("height", 50), s.value("width", 50));
      opt.frames = s.value("frames", opt.frames);
      opt.disjoint = s.value("disjoint", opt.disjoint);
      opt.overlapping_pair = s.value("overlapping_pair", opt.overlapping_pair);
      opt.baseline = s.value("baseline", opt.baseline);
      opt.bleach = s.value("bleach", opt.bleach);
      opt.noise_sd = s.value("noise_sd", opt.noise_sd);
      opt.spike_rate = s.value("spike_rate", opt.spike_rate);
      opt.decay_frames = s.value("decay_frames", opt.decay_frames);
      opt.seed = s.value("seed", opt.seed);
      return elliptical_scene(opt);
    }
    SyntheticSpec spec;
    spec.geometry = FrameGeometry(j.at("height").get<int>(), j.at("width").get<int>());
    spec.frames = j.at("frames").get<int>();
    spec.masks = j.value("masks", std::vector<std::vector<int>>{});
    for (auto& m : spec.masks) std::sort(m.begin(), m.end());
    spec.traces = Matrix::Zero(static_cast<Eigen::Index>(spec.masks.size()), spec.frames);
    if (j.contains("traces")) {
      const auto rows = j["traces"].get<std::vector<std::vector<double>>>();
      if (rows.size() != spec.masks.size()) throw Error("synthetic spec needs one trace per mask");
      for (std::size_t k = 0; k < rows.size(); ++k) {
        if (static_cast<int>(rows[k].size()) != spec.frames) throw Error("trace length must equal frames");
        for (int t = 0; t < spec.frames; ++t) spec.traces(static_cast<Eigen::Index>(k), t) = rows[k][static_cast<std::size_t>(t)];
      }
    }
    spec.noise_sd = j.value("noise_sd", 0.0);
    if (j.contains("trend")) {
      const auto tr = j["trend"].get<std::vector<double>>();
      spec.trend = Eigen::Map<const Vector>(tr.data(), static_cast<Eigen::Index>(tr.size()));
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(std::string("synthetic spec: ") + e.what());
  }
}

}  // namespace scalpel
