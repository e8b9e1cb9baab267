#include "scalpel/diagnostics.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace scalpel {

Vector pixel_variance(const VideoMatrix& y) {
  const auto t = y.frames();
  Vector var = Vector::Zero(y.pixels());
  if (t < 2) return var;
  for (int p = 0; p < y.pixels(); ++p) {
    // Shift by the first sample so a constant pixel gives exactly zero.
    const Vector d = y.values.row(p).transpose().array() - y.values(p, 0);
    const double mean = d.mean();
    var(p) = (d.array() - mean).square().sum() / (t - 1);
  }
  return var;
}

namespace {

std::string numbered(const char* stem, std::size_t k, const char* ext) {
  std::ostringstream name;
  name << stem << '_' << std::setw(4) << std::setfill('0') << k << ext;
  return name.str();
}

void write_image(const fs::path& path, const cv::Mat& img, std::vector<fs::path>& written) {
  if (!cv::imwrite(path.string(), img)) throw Error("cannot write " + path.string());
  written.push_back(path);
}

// Variance rescaled to 8 bits, enlarged so small fields of view stay visible.
cv::Mat variance_gray(const Vector& var, const FrameGeometry& g, int zoom) {
  cv::Mat img(g.height, g.width, CV_8U);
  const double hi = var.size() ? var.maxCoeff() : 0.0;
  for (int p = 0; p < g.pixels(); ++p) {
    img.at<std::uint8_t>(g.row(p), g.col(p)) =
        hi > 0.0 ? static_cast<std::uint8_t>(std::lround(255.0 * var(p) / hi)) : 0;
  }
  cv::Mat big;
  cv::resize(img, big, cv::Size(), zoom, zoom, cv::INTER_NEAREST);
  return big;
}

cv::Mat trace_plot(const Eigen::Ref<const Vector>& trace) {
  const int w = 640, h = 200, margin = 10;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  const auto n = trace.size();
  if (n == 0) return img;
  const double hi = std::max(trace.maxCoeff(), 1e-300);
  std::vector<cv::Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = n > 1 ? static_cast<double>(j) / static_cast<double>(n - 1) : 0.5;
    const double yv = trace(j) / hi;
    pts.emplace_back(margin + static_cast<int>(std::lround(x * (w - 2 * margin))),
                     h - margin - static_cast<int>(std::lround(yv * (h - 2 * margin))));
  }
  cv::line(img, {margin, h - margin}, {w - margin, h - margin}, cv::Scalar(160, 160, 160));
  cv::polylines(img, pts, false, cv::Scalar(180, 60, 0), 1, cv::LINE_AA);
  return img;
}

}  // namespace

std::vector<fs::path> emit_diagnostics(const VideoMatrix& y, const SpatialDictionary& af,
                                       const TemporalTraces& z, const fs::path& outdir) {
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec || !fs::is_directory(outdir)) throw Error("cannot create directory " + outdir.string());
  if (z.components() != static_cast<int>(af.size())) throw Error("traces and dictionary differ in size");
  std::vector<fs::path> written;
  const auto& g = y.geometry;
  const Vector var = pixel_variance(y);

  const auto csv_path = outdir / "variance.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path.string());
  char buf[32];
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", var(g.index(r, c)));
      csv << (c ? "," : "") << buf;
    }
    csv << '\n';
  }
  csv.close();
  written.push_back(csv_path);

  const int zoom = std::max(1, 256 / std::max(g.height, g.width));
  const cv::Mat gray = variance_gray(var, g, zoom);
  cv::Mat heat;
  cv::applyColorMap(gray, heat, cv::COLORMAP_INFERNO);
  write_image(outdir / "variance.png", heat, written);

  cv::Mat base;
  cv::cvtColor(gray, base, cv::COLOR_GRAY2BGR);
  for (std::size_t k = 0; k < af.size(); ++k) {
    cv::Mat overlay = base.clone();
    for (const int p : af.components[k].pixels) {
      const cv::Rect cell(g.col(p) * zoom, g.row(p) * zoom, zoom, zoom);
      overlay(cell).setTo(cv::Scalar(0, 0, 255));
    }
    cv::addWeighted(overlay, 0.6, base, 0.4, 0.0, overlay);
    write_image(outdir / numbered("mask", k, ".png"), overlay, written);
    write_image(outdir / numbered("trace", k, ".png"),
                trace_plot(z.values.row(static_cast<Eigen::Index>(k)).transpose()), written);
  }
  return written;
}

}  // namespace scalpel
