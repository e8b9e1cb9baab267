#pragma once

#include "scalpel/core.hpp"
#include "scalpel/segment.hpp"
#include "scalpel/sgl.hpp"

#include <filesystem>
#include <vector>

namespace scalpel {

/// Per-pixel variance over frames (divisor T - 1; zero when T = 1).
Vector pixel_variance(const VideoMatrix& y);

/// Writes variance.csv (height x width grid) and variance.png, then for every
/// component mask_<k>.png (mask over the variance map) and trace_<k>.png (line
/// plot of row k of z). Returns the files written.
std::vector<std::filesystem::path> emit_diagnostics(const VideoMatrix& y, const SpatialDictionary& af,
                                                    const TemporalTraces& z,
                                                    const std::filesystem::path& outdir);

}  // namespace scalpel
