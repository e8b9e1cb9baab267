#include "scalpel/video_io.hpp"

#include "json.hpp"
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace scalpel {

static_assert(std::endian::native == std::endian::little, "flat files assume a little-endian host");

VideoFormat parse_video_format(const std::string& name) {
  if (name == "frames") return VideoFormat::kFrames;
  if (name == "flat") return VideoFormat::kFlat;
  throw Error("unknown video format '" + name + "' (expected frames or flat)");
}

VideoMatrix load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("frame directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".tif" || ext == ".tiff") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no PNG or TIFF frames in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  VideoMatrix video;
  for (std::size_t j = 0; j < files.size(); ++j) {
    const cv::Mat img = cv::imread(files[j].string(), cv::IMREAD_UNCHANGED);
    if (img.empty()) throw Error("cannot read frame " + files[j].string());
    if (img.channels() != 1) throw Error("non-grayscale input: " + files[j].string());
    cv::Mat frame;
    img.convertTo(frame, CV_64F);
    if (j == 0) {
      video.geometry = FrameGeometry(frame.rows, frame.cols);
      video.values.resize(video.geometry.pixels(), static_cast<Eigen::Index>(files.size()));
    } else if (frame.rows != video.geometry.height || frame.cols != video.geometry.width) {
      throw Error("inconsistent frame dimensions: " + files[j].string() + " is " +
                  std::to_string(frame.rows) + "x" + std::to_string(frame.cols) + ", expected " +
                  std::to_string(video.geometry.height) + "x" + std::to_string(video.geometry.width));
    }
    for (int r = 0; r < frame.rows; ++r) {
      const auto* row = frame.ptr<double>(r);
      for (int c = 0; c < frame.cols; ++c) {
        video.values(video.geometry.index(r, c), static_cast<Eigen::Index>(j)) = row[c];
      }
    }
  }
  return video;
}

fs::path sidecar_path(const fs::path& flat) {
  auto p = flat;
  p.replace_extension(".json");
  return p;
}

namespace {

std::size_t type_size(FlatType t) {
  switch (t) {
    case FlatType::kFloat32: return 4;
    case FlatType::kFloat64: return 8;
    case FlatType::kUint16: return 2;
  }
  return 0;
}

FlatType parse_type(const std::string& s) {
  if (s == "float32") return FlatType::kFloat32;
  if (s == "float64") return FlatType::kFloat64;
  if (s == "uint16") return FlatType::kUint16;
  throw Error("unsupported sidecar dtype '" + s + "'");
}

std::string type_name(FlatType t) {
  switch (t) {
    case FlatType::kFloat32: return "float32";
    case FlatType::kFloat64: return "float64";
    case FlatType::kUint16: return "uint16";
  }
  return "";
}

int require_int(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("sidecar is missing field '") + key + "'");
  if (!j[key].is_number_integer()) throw Error(std::string("sidecar field '") + key + "' must be an integer");
  return j[key].get<int>();
}

}  // namespace

VideoMatrix load_flat(const fs::path& path) {
  const auto side = sidecar_path(path);
  std::ifstream meta_in(side);
  if (!meta_in) throw Error("missing sidecar " + side.string());
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw Error("malformed sidecar " + side.string() + ": " + e.what());
  }
  const int height = require_int(meta, "height");
  const int width = require_int(meta, "width");
  const int frames = require_int(meta, "frames");
  if (frames < 1) throw Error("sidecar frames must be positive");
  const FlatType type = meta.contains("dtype") ? parse_type(meta["dtype"].get<std::string>())
                                               : FlatType::kFloat32;
  const FrameGeometry geometry(height, width);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = static_cast<std::size_t>(geometry.pixels()) * static_cast<std::size_t>(frames);
  const std::size_t width_bytes = type_size(type);
  if (bytes.size() != expected * width_bytes) {
    throw Error("sidecar declares P*T = " + std::to_string(expected) + " values but " +
                path.string() + " holds " + std::to_string(bytes.size() / width_bytes) +
                " (" + std::to_string(bytes.size()) + " bytes)");
  }
  Matrix values(geometry.pixels(), frames);
  const char* src = bytes.data();
  for (int j = 0; j < frames; ++j) {
    for (int p = 0; p < geometry.pixels(); ++p, src += width_bytes) {
      double v = 0.0;
      if (type == FlatType::kFloat32) {
        float f;
        std::memcpy(&f, src, 4);
        v = f;
      } else if (type == FlatType::kFloat64) {
        std::memcpy(&v, src, 8);
      } else {
        std::uint16_t u;
        std::memcpy(&u, src, 2);
        v = u;
      }
      values(p, j) = v;
    }
  }
  return {std::move(values), geometry};
}

VideoMatrix load_video(const fs::path& path, VideoFormat format) {
  if (!fs::exists(path)) throw Error("input not found: " + path.string());
  return format == VideoFormat::kFrames ? load_frames(path) : load_flat(path);
}

void save_flat(const VideoMatrix& video, const fs::path& path, FlatType type) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (int j = 0; j < video.frames(); ++j) {
    for (int p = 0; p < video.pixels(); ++p) {
      const double v = video.values(p, j);
      if (type == FlatType::kFloat32) {
        const auto f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
      } else if (type == FlatType::kFloat64) {
        out.write(reinterpret_cast<const char*>(&v), 8);
      } else {
        const auto u = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
        out.write(reinterpret_cast<const char*>(&u), 2);
      }
    }
  }
  if (!out) throw Error("failed writing " + path.string());
  const json meta = {{"height", video.geometry.height},
                     {"width", video.geometry.width},
                     {"frames", video.frames()},
                     {"dtype", type_name(type)}};
  std::ofstream side(sidecar_path(path));
  if (!side) throw Error("cannot write " + sidecar_path(path).string());
  side << meta.dump(2) << '\n';
}

void save_frames(const VideoMatrix& video, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& g = video.geometry;
  cv::Mat frame(g.height, g.width, CV_32F);
  for (int j = 0; j < video.frames(); ++j) {
    for (int r = 0; r < g.height; ++r) {
      auto* row = frame.ptr<float>(r);
      for (int c = 0; c < g.width; ++c) row[c] = static_cast<float>(video.values(g.index(r, c), j));
    }
    std::ostringstream name;
    name << "frame_" << std::setw(5) << std::setfill('0') << j << ".tif";
    if (!cv::imwrite((dir / name.str()).string(), frame)) {
      throw Error("cannot write frame " + (dir / name.str()).string());
    }
  }
}

}  // namespace scalpel
