#include "doctest.h"
#include "helpers.hpp"
#include "scalpel/preprocess.hpp"

#include <cmath>

using namespace scalpel;

namespace {

VideoMatrix noise_video(int h, int w, int t, double base, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix m = testing::gaussian(h * w, t, rng, sd);
  m.array() += base;
  return {m, FrameGeometry(h, w)};
}

}  // namespace

TEST_CASE("config validation") {
  PreprocessConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.bandwidth = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.spline_df = 1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.denom_quantile = 1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("smoother weights sum to one and reproduce lines") {
  for (const int n : {1, 2, 5, 9, 40}) {
    const GaussianSmoother1D sm(n, 1.3);
    for (int i = 0; i < n; ++i) {
      double s0 = 0.0, s1 = 0.0;
      const auto& w = sm.weights(i);
      for (std::size_t k = 0; k < w.size(); ++k) {
        s0 += w[k];
        s1 += w[k] * (sm.first_tap(i) + static_cast<int>(k));
      }
      CHECK(s0 == doctest::Approx(1.0).epsilon(1e-13));
      if (n > 1) CHECK(s1 == doctest::Approx(i).epsilon(1e-12));
    }
  }
}

TEST_CASE("gaussian_smooth preserves constants and commutes with offsets") {
  Matrix c = Matrix::Constant(12, 7, 3.25);
  const auto out = gaussian_smooth(testing::video(c, 3, 4), 1.0);
  CHECK((out.values.array() - 3.25).abs().maxCoeff() < 1e-13);

  const auto v = noise_video(5, 6, 9, 0.0, 1.0, 4);
  VideoMatrix shifted = v;
  shifted.values.array() += 2.0;
  const auto a = gaussian_smooth(v, 1.0), b = gaussian_smooth(shifted, 1.0);
  CHECK(((b.values.array() - a.values.array()) - 2.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("spatial impulse becomes a symmetric blob of unit mass") {
  Matrix m = Matrix::Zero(21 * 21, 1);
  const FrameGeometry g(21, 21);
  m(g.index(10, 10), 0) = 1.0;
  const auto out = spatial_smooth(VideoMatrix(m, g), 1.0);
  CHECK(out.values.sum() == doctest::Approx(1.0).epsilon(1e-13));
  for (int d = 1; d <= 4; ++d) {
    const double right = out.values(g.index(10, 10 + d), 0);
    CHECK(out.values(g.index(10, 10 - d), 0) == doctest::Approx(right).epsilon(1e-14));
    CHECK(out.values(g.index(10 + d, 10), 0) == doctest::Approx(right).epsilon(1e-14));
  }
}

TEST_CASE("single frame is unchanged by temporal smoothing") {
  const auto v = noise_video(3, 3, 1, 0.0, 1.0, 5);
  CHECK(temporal_smooth(v, 1.0).values == v.values);
}

TEST_CASE("bleach_correct") {
  SUBCASE("constant medians are subtracted") {
    Matrix m = Matrix::Constant(6, 12, 4.0);
    const auto out = bleach_correct(testing::video(m, 2, 3), 10);
    CHECK(out.values.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("linear medians leave medians near zero") {
    auto v = noise_video(4, 5, 60, 0.0, 1.0, 6);
    const Vector m0 = frame_medians(v);
    for (int j = 0; j < 60; ++j) v.values.col(j).array() += 5.0 - 0.05 * j - m0(j);
    const auto out = bleach_correct(v, 10);
    const Vector med = frame_medians(out);
    CHECK(med.segment(1, 58).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("zeros stay zeros") {
    const auto out = bleach_correct(testing::video(Matrix::Zero(4, 10), 2, 2), 10);
    CHECK(out.values.isZero(0.0));
  }
  SUBCASE("too few frames") {
    CHECK_THROWS_WITH(bleach_correct(testing::video(Matrix::Zero(4, 9), 2, 2), 10),
                      "too few frames for spline fit");
  }
  SUBCASE("invariant to added linear frame signals") {
    const auto v = noise_video(4, 4, 50, 0.0, 1.0, 7);
    VideoMatrix w = v;
    for (int j = 0; j < 50; ++j) w.values.col(j).array() += 1.5 - 0.02 * j;
    const auto a = bleach_correct(v, 10), b = bleach_correct(w, 10);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("delta_f_over_f") {
  const auto out = delta_f_over_f(testing::video(Matrix{{2, 4, 6}, {1, 1, 1}}, 1, 2), 0.5);
  // quantile_0.5 of {2,4,6,1,1,1} = 1.5; pixel 0: median 4, denominator 5.5
  CHECK(out.values(0, 0) == doctest::Approx(-2 / 5.5));
  CHECK(out.values(0, 1) == 0.0);
  CHECK(out.values(1, 0) == 0.0);

  // the worked example: median 4 plus a global quantile term of 1
  const auto ex = delta_f_over_f(testing::video(Matrix{{2, 4, 6}, {1, 1, 1}, {1, 1, 1}}, 3, 1), 0.0);
  CHECK(ex.values(0, 0) == doctest::Approx(-0.4));
  CHECK(ex.values(0, 2) == doctest::Approx(0.4));

  const auto same = delta_f_over_f(testing::video(Matrix{{1, 5, 2}, {1, 5, 2}}, 1, 2), 0.2);
  CHECK(same.values.row(0) == same.values.row(1));

  CHECK_THROWS_WITH(delta_f_over_f(testing::video(Matrix{{-1, 1, 1}, {-1, -1, -1}}, 1, 2), 0.0),
                    "zero delta f/f denominator at pixel 0");
}

TEST_CASE("preprocess contracts") {
  SUBCASE("row medians are zero") {
    const auto out = preprocess(noise_video(6, 6, 41, 10.0, 1.0, 8), {});
    for (int i = 0; i < out.pixels(); ++i) {
      const std::vector<double> row(out.values.row(i).begin(), out.values.row(i).end());
      CHECK(std::abs(median(row)) <= 1e-12);
    }
  }
  SUBCASE("constant video maps to zero") {
    const auto out = preprocess(testing::video(Matrix::Constant(16, 30, 7.3), 4, 4), {});
    CHECK(out.values.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("noise around a baseline is centred") {
    const auto out = preprocess(noise_video(16, 16, 200, 10.0, 1.0, 9), {});
    const double mean = out.values.mean();
    const double sd = std::sqrt((out.values.array() - mean).square().mean());
    CHECK(std::abs(mean) < 0.05 * sd);
  }
  SUBCASE("linear bleaching is removed") {
    const auto v = noise_video(10, 10, 120, 10.0, 0.5, 10);
    VideoMatrix w = v;
    for (int j = 0; j < 120; ++j) w.values.col(j).array() -= 0.02 * j;
    const Vector a = frame_medians(preprocess(v, {}));
    const Vector b = frame_medians(preprocess(w, {}));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
  }
}
