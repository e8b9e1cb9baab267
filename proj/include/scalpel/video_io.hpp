#pragma once

#include "scalpel/core.hpp"

#include <filesystem>
#include <string>

namespace scalpel {

enum class VideoFormat {
  kFrames,  // directory of grayscale PNG/TIFF images, one per frame
  kFlat,    // raw little-endian matrix plus a JSON sidecar
};

VideoFormat parse_video_format(const std::string& name);

/// Element type of a flat file. float32 is the default exchange format;
/// float64 keeps intermediates bit-exact.
enum class FlatType { kFloat32, kFloat64, kUint16 };

/// Frames are sorted by filename, so zero-padded numbering gives time order.
VideoMatrix load_frames(const std::filesystem::path& dir);

/// `path` is the binary file; the sidecar is the same path with extension
/// ".json" and holds {height, width, frames, dtype?}. Data is frame-major,
/// each frame row-major.
VideoMatrix load_flat(const std::filesystem::path& path);

VideoMatrix load_video(const std::filesystem::path& path, VideoFormat format);

std::filesystem::path sidecar_path(const std::filesystem::path& flat);

void save_flat(const VideoMatrix& video, const std::filesystem::path& path,
               FlatType type = FlatType::kFloat64);

/// One 32-bit float TIFF per frame, named frame_00000.tif, ...
void save_frames(const VideoMatrix& video, const std::filesystem::path& dir);

}  // namespace scalpel
