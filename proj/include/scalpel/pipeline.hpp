#pragma once

#include "scalpel/cluster.hpp"
#include "scalpel/core.hpp"
#include "scalpel/preprocess.hpp"
#include "scalpel/segment.hpp"
#include "scalpel/sgl.hpp"
#include "scalpel/video_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace scalpel {

enum class LambdaMode { kQuantile, kValidation, kFixed };

LambdaMode parse_lambda_mode(const std::string& name);
std::string to_string(LambdaMode mode);

struct PipelineConfig {
  PreprocessConfig preprocess;
  SegmentConfig segment;
  ClusterConfig cluster;
  SglConfig sgl;
  int min_members = 5;
  LambdaMode lambda_mode = LambdaMode::kQuantile;
  std::optional<double> fixed_lambda;  // required for LambdaMode::kFixed
  std::filesystem::path input;
  VideoFormat format = VideoFormat::kFlat;
  std::filesystem::path out;
  std::optional<std::filesystem::path> keep_drop;
  std::uint64_t seed = 0;
  bool diagnostics = true;

  void validate() const;
};

/// Failure inside one pipeline step; what() is prefixed with the step name.
class StepError : public Error {
 public:
  StepError(std::string step, const std::string& message)
      : Error(step + ": " + message), step_(std::move(step)) {}
  const std::string& step() const { return step_; }

 private:
  std::string step_;
};

struct StepTiming {
  std::string step;
  double seconds = 0.0;
};

struct RunManifest {
  std::string config_json;  // snapshot of the PipelineConfig
  int preliminary = 0;      // K0
  int refined = 0;          // K
  int filtered = 0;         // K_f
  int selected = 0;         // nonzero rows of Z
  std::array<double, 3> thresholds{};
  double lambda = 0.0;
  std::vector<StepTiming> timings;
  std::vector<std::string> warnings;
  bool empty_result = false;

  /// Pretty-printed JSON document.
  std::string to_json() const;
};

std::string config_to_json(const PipelineConfig& cfg);

/// Dictionary as a CSV of (component, pixel) rows plus a JSON sidecar with the
/// geometry and per-component provenance.
void save_dictionary(const SpatialDictionary& dict, const std::filesystem::path& csv);
SpatialDictionary load_dictionary(const std::filesystem::path& csv);

/// Header `component,frame_0,...,frame_{T-1}`; values printed with %.17g.
void save_traces(const TemporalTraces& z, const std::filesystem::path& csv);
/// Header `component,pixel`.
void save_masks(const SpatialDictionary& dict, const std::filesystem::path& csv);

/// Step 2: dissimilarities, minimax clustering, cut and representatives.
RefinedDictionary refine_dictionary(const VideoMatrix& y, const SpatialDictionary& preliminary,
                                    const ClusterConfig& cfg, double threshold_quantile);

/// Rebuilds cluster sizes from the provenance of a saved refined dictionary.
RefinedDictionary refined_from_dictionary(const SpatialDictionary& dict);

struct SolveOutcome {
  FilteredDictionary filtered;
  double lambda = 0.0;
  TemporalTraces traces;
  std::vector<std::string> warnings;
  bool empty = false;  // every column was filtered out
};

/// Filter, lambda choice and the sparse group lasso solve.
SolveOutcome solve_step(const VideoMatrix& y, const RefinedDictionary& refined,
                        const PipelineConfig& cfg);

/// Runs every step and writes into cfg.out:
///   preprocessed.bin/.json, preliminary_dictionary.csv/.json,
///   refined_dictionary.csv/.json, filtered_dictionary.csv/.json,
///   traces.csv, masks.csv, manifest.json and diagnostics/.
RunManifest run_pipeline(const PipelineConfig& cfg);

}  // namespace scalpel
