#include "scalpel/sgl.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace scalpel {

ValidationResult select_lambda_validation(const VideoMatrix& y, const SpatialDictionary& af,
                                          double alpha, const SglConfig& cfg, std::uint64_t seed,
                                          const ValidationConfig& vcfg) {
  if (af.empty()) throw Error("empty filtered dictionary");
  if (!(vcfg.train_fraction > 0.0 && vcfg.train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  if (vcfg.path_length < 1) throw Error("path_length must be at least 1");
  ValidationResult res;
  const int npix = y.pixels();

  // 1. Per-group training sample.
  const auto partition = partition_components(af);
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < partition.footprints.size(); ++s) {
    auto fp = partition.footprints[s];
    if (fp.size() == 1) {
      res.warnings.push_back("group " + std::to_string(s) +
                             " has a single-pixel footprint; it trains on that pixel only");
    }
    const auto take = static_cast<std::size_t>(
        std::ceil(vcfg.train_fraction * static_cast<double>(fp.size())));
    std::shuffle(fp.begin(), fp.end(), rng);
    res.train_pixels.insert(res.train_pixels.end(), fp.begin(), fp.begin() + static_cast<long>(take));
  }
  std::sort(res.train_pixels.begin(), res.train_pixels.end());

  std::vector<char> in_train(static_cast<std::size_t>(npix), 0);
  for (const int p : res.train_pixels) in_train[static_cast<std::size_t>(p)] = 1;
  res.validation_pixels = npix - static_cast<int>(res.train_pixels.size());
  if (res.validation_pixels == 0) throw Error("validation set is empty");

  // 2. Path on the training pixels.
  const SglProblem train(y, af, std::span<const int>(res.train_pixels));
  const double lambda_max = max_lambda(train, alpha);
  // Rescaling uses the footprint pixel count: pixels outside every footprint
  // add only a constant to the loss.
  std::size_t footprint_pixels = 0;
  for (const auto& fp : partition.footprints) footprint_pixels += fp.size();
  const double scale_back =
      static_cast<double>(res.train_pixels.size()) / static_cast<double>(footprint_pixels);
  if (lambda_max == 0.0) {
    res.warnings.push_back("training projections are non-positive; every lambda gives zero traces");
    return res;
  }
  res.path = log_spaced_lambdas(lambda_max, lambda_max * vcfg.path_ratio, vcfg.path_length);
  const auto solutions = solve_path(train, res.path, alpha, cfg);

  // 3. Thresholded validation error. Validation pixels outside every column
  // contribute ||y^B||^2 regardless of lambda.
  const double tau = -quantile(y, vcfg.threshold_quantile);
  const auto scaled = scale_dictionary(af);
  std::vector<int> slot(static_cast<std::size_t>(npix), -1);
  std::vector<int> covered;
  for (const auto& c : af.components) {
    for (const int p : c.pixels) {
      if (in_train[static_cast<std::size_t>(p)] || slot[static_cast<std::size_t>(p)] >= 0) continue;
      slot[static_cast<std::size_t>(p)] = static_cast<int>(covered.size());
      covered.push_back(p);
    }
  }
  const auto frames = y.frames();
  auto thresholded_row = [&](int p) {
    return Vector(y.values.row(p).transpose().unaryExpr([tau](double v) { return v > tau ? v : 0.0; }));
  };
  double base = 0.0;
  for (int p = 0; p < npix; ++p) {
    if (!in_train[static_cast<std::size_t>(p)] && slot[static_cast<std::size_t>(p)] < 0) {
      base += thresholded_row(p).squaredNorm();
    }
  }
  Matrix yb_cov(static_cast<Eigen::Index>(covered.size()), frames);
  for (std::size_t i = 0; i < covered.size(); ++i) {
    yb_cov.row(static_cast<Eigen::Index>(i)) = thresholded_row(covered[i]).transpose();
  }
  Matrix fit(yb_cov.rows(), frames);
  for (const auto& z : solutions) {
    fit.setZero();
    for (std::size_t k = 0; k < af.size(); ++k) {
      if ((z.values.row(static_cast<Eigen::Index>(k)).array() == 0.0).all()) continue;
      for (const int p : af.components[k].pixels) {
        const int i = slot[static_cast<std::size_t>(p)];
        if (i >= 0) fit.row(i) += scaled.scale[k] * z.values.row(static_cast<Eigen::Index>(k));
      }
    }
    res.errors.push_back((base + (yb_cov - fit).squaredNorm()) / res.validation_pixels);
  }

  // 4. Largest lambda within the slack of the minimum error (path is descending).
  const double best = *std::min_element(res.errors.begin(), res.errors.end());
  for (std::size_t i = 0; i < res.errors.size(); ++i) {
    if (res.errors[i] <= (1.0 + vcfg.error_slack) * best) {
      res.lambda_star = res.path[i];
      break;
    }
  }
  // 5. Rescale for the full-data solve.
  res.lambda = res.lambda_star / scale_back;
  return res;
}

}  // namespace scalpel
