#include "scalpel/pipeline.hpp"

#include "json.hpp"
#include "scalpel/diagnostics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace scalpel {

LambdaMode parse_lambda_mode(const std::string& name) {
  if (name == "quantile") return LambdaMode::kQuantile;
  if (name == "validation") return LambdaMode::kValidation;
  if (name == "fixed") return LambdaMode::kFixed;
  throw Error("unknown lambda mode '" + name + "' (expected quantile, validation or fixed)");
}

std::string to_string(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::kQuantile: return "quantile";
    case LambdaMode::kValidation: return "validation";
    case LambdaMode::kFixed: return "fixed";
  }
  return "";
}

void PipelineConfig::validate() const {
  preprocess.validate();
  segment.validate();
  cluster.validate();
  sgl.validate();
  if (min_members < 1) throw Error("min_members must be at least 1");
  if (lambda_mode == LambdaMode::kFixed) {
    if (!fixed_lambda) throw Error("lambda mode 'fixed' needs a lambda value");
    if (!(*fixed_lambda >= 0.0)) throw Error("lambda must be non-negative");
  }
  if (lambda_mode == LambdaMode::kQuantile && !(sgl.alpha > 0.0)) {
    throw Error("quantile rule requires alpha > 0");
  }
  if (out.empty()) throw Error("output directory not set");
}

namespace {

std::string spatial_name(SpatialMetric m) {
  switch (m) {
    case SpatialMetric::kCosine: return "cosine";
    case SpatialMetric::kUnion: return "union";
    case SpatialMetric::kMin: return "min";
    case SpatialMetric::kMax: return "max";
  }
  return "";
}

json config_json(const PipelineConfig& cfg) {
  json j;
  j["preprocess"] = {{"bandwidth", cfg.preprocess.bandwidth},
                     {"spline_df", cfg.preprocess.spline_df},
                     {"denom_quantile", cfg.preprocess.denom_quantile}};
  j["segment"] = {{"min_size", cfg.segment.min_size},
                  {"max_size", cfg.segment.max_size},
                  {"max_width", cfg.segment.max_width},
                  {"max_height", cfg.segment.max_height},
                  {"threshold_quantile", cfg.segment.threshold_quantile}};
  j["cluster"] = {{"omega", cfg.cluster.omega},
                  {"cut_height", cfg.cluster.cut_height},
                  {"spatial", spatial_name(cfg.cluster.spatial)}};
  j["sgl"] = {{"alpha", cfg.sgl.alpha}, {"tol", cfg.sgl.tol}, {"max_iter", cfg.sgl.max_iter}};
  j["min_members"] = cfg.min_members;
  j["lambda_mode"] = to_string(cfg.lambda_mode);
  j["lambda"] = cfg.fixed_lambda ? json(*cfg.fixed_lambda) : json(nullptr);
  j["input"] = cfg.input.string();
  j["format"] = cfg.format == VideoFormat::kFrames ? "frames" : "flat";
  j["out"] = cfg.out.string();
  j["keep_drop"] = cfg.keep_drop ? json(cfg.keep_drop->string()) : json(nullptr);
  j["seed"] = cfg.seed;
  return j;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string config_to_json(const PipelineConfig& cfg) { return config_json(cfg).dump(2); }

std::string RunManifest::to_json() const {
  json j;
  j["config"] = json::parse(config_json.empty() ? "{}" : config_json);
  j["counts"] = {{"preliminary", preliminary},
                 {"refined", refined},
                 {"filtered", filtered},
                 {"selected", selected}};
  j["thresholds"] = thresholds;
  j["lambda"] = lambda;
  j["empty_result"] = empty_result;
  j["warnings"] = warnings;
  json t = json::array();
  for (const auto& s : timings) t.push_back({{"step", s.step}, {"seconds", s.seconds}});
  j["timings"] = t;
  return j.dump(2) + "\n";
}

void save_dictionary(const SpatialDictionary& dict, const fs::path& csv) {
  auto out = open_out(csv);
  out << "component,pixel\n";
  json comps = json::array();
  for (std::size_t k = 0; k < dict.size(); ++k) {
    const auto& c = dict.components[k];
    for (const int p : c.pixels) out << k << ',' << p << '\n';
    json entry = {{"size", c.size()}};
    if (const auto* f = std::get_if<FrameProvenance>(&c.provenance)) {
      entry["frame"] = f->frame;
      entry["threshold"] = f->threshold;
    } else {
      const auto& cl = std::get<ClusterProvenance>(c.provenance);
      entry["element"] = cl.element;
      entry["members"] = cl.members;
    }
    comps.push_back(entry);
  }
  if (!out) throw Error("failed writing " + csv.string());
  auto meta_path = csv;
  meta_path.replace_extension(".json");
  auto meta = open_out(meta_path);
  meta << json{{"height", dict.geometry.height}, {"width", dict.geometry.width}, {"components", comps}}
              .dump(2)
       << '\n';
}

SpatialDictionary load_dictionary(const fs::path& csv) {
  auto meta_path = csv;
  meta_path.replace_extension(".json");
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw Error("missing dictionary metadata " + meta_path.string());
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw Error("malformed dictionary metadata " + meta_path.string() + ": " + e.what());
  }
  SpatialDictionary dict;
  try {
    dict.geometry = FrameGeometry(meta.at("height").get<int>(), meta.at("width").get<int>());
    for (const auto& entry : meta.at("components")) {
      SpatialComponent c;
      if (entry.contains("frame")) {
        c.provenance = FrameProvenance{entry.at("frame").get<int>(), entry.at("threshold").get<double>()};
      } else {
        c.provenance = ClusterProvenance{entry.at("element").get<int>(), entry.at("members").get<int>()};
      }
      dict.components.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error("dictionary metadata " + meta_path.string() + ": " + e.what());
  }
  std::ifstream in(csv);
  if (!in) throw Error("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "component,pixel") throw Error(csv.string() + ": expected header 'component,pixel'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long k = -1, p = -1;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld%c", &k, &p, &extra) != 2 || k < 0 ||
        static_cast<std::size_t>(k) >= dict.size() || p < 0 || p >= dict.geometry.pixels()) {
      throw Error(csv.string() + ": bad row at line " + std::to_string(line_no));
    }
    dict.components[static_cast<std::size_t>(k)].pixels.push_back(static_cast<int>(p));
  }
  for (std::size_t k = 0; k < dict.size(); ++k) {
    auto& px = dict.components[k].pixels;
    std::sort(px.begin(), px.end());
    px.erase(std::unique(px.begin(), px.end()), px.end());
    if (px.size() != meta["components"][k].value("size", px.size())) {
      throw Error(csv.string() + ": component " + std::to_string(k) + " size disagrees with metadata");
    }
  }
  return dict;
}

void save_traces(const TemporalTraces& z, const fs::path& csv) {
  auto out = open_out(csv);
  out << "component";
  for (int j = 0; j < z.frames(); ++j) out << ",frame_" << j;
  out << '\n';
  for (int k = 0; k < z.components(); ++k) {
    out << k;
    for (int j = 0; j < z.frames(); ++j) out << ',' << format_double(z.values(k, j));
    out << '\n';
  }
  if (!out) throw Error("failed writing " + csv.string());
}

void save_masks(const SpatialDictionary& dict, const fs::path& csv) {
  auto out = open_out(csv);
  out << "component,pixel\n";
  for (std::size_t k = 0; k < dict.size(); ++k) {
    for (const int p : dict.components[k].pixels) out << k << ',' << p << '\n';
  }
  if (!out) throw Error("failed writing " + csv.string());
}

RefinedDictionary refine_dictionary(const VideoMatrix& y, const SpatialDictionary& preliminary,
                                    const ClusterConfig& cfg, double threshold_quantile) {
  cfg.validate();
  const auto ds = alternative_spatial_dissimilarity(preliminary, cfg.spatial);
  const auto yb = threshold_video(y, -quantile(y, threshold_quantile));
  const auto dt = temporal_dissimilarity(preliminary, yb);
  const auto d = combined_dissimilarity(ds, dt, cfg.omega);
  const auto clusters = cut_dendrogram(protoclust(d), cfg.cut_height);
  return cluster_representatives(clusters, d, preliminary);
}

RefinedDictionary refined_from_dictionary(const SpatialDictionary& dict) {
  RefinedDictionary out{dict, {}, {}};
  for (const auto& c : dict.components) {
    const auto* cl = std::get_if<ClusterProvenance>(&c.provenance);
    if (!cl) throw Error("dictionary has no cluster sizes; run the cluster step first");
    out.representatives.push_back(cl->element);
    out.cluster_sizes.push_back(cl->members);
  }
  return out;
}

SolveOutcome solve_step(const VideoMatrix& y, const RefinedDictionary& refined,
                        const PipelineConfig& cfg) {
  SolveOutcome res;
  std::vector<KeepDrop> manual;
  if (cfg.keep_drop) {
    std::ifstream in(*cfg.keep_drop);
    if (!in) throw StepError("filter", "cannot open keep/drop file " + cfg.keep_drop->string());
    std::stringstream text;
    text << in.rdbuf();
    try {
      manual = parse_keep_drop(text.str());
    } catch (const Error& e) {
      throw StepError("filter", e.what());
    }
  }
  try {
    res.filtered = filter_dictionary(refined.dictionary, refined.cluster_sizes, cfg.min_members, manual);
  } catch (const Error& e) {
    if (std::string(e.what()) != "empty filtered dictionary") throw StepError("filter", e.what());
    res.empty = true;
    res.filtered.dictionary.geometry = refined.dictionary.geometry;
    res.traces.values.resize(0, y.frames());
    res.warnings.emplace_back("empty filtered dictionary: no cluster reached min_members");
    return res;
  }

  try {
    switch (cfg.lambda_mode) {
      case LambdaMode::kQuantile:
        res.lambda = lambda_quantile_rule(y, cfg.sgl.alpha, cfg.segment.threshold_quantile);
        break;
      case LambdaMode::kFixed:
        res.lambda = *cfg.fixed_lambda;
        break;
      case LambdaMode::kValidation: {
        ValidationConfig vcfg;
        vcfg.threshold_quantile = cfg.segment.threshold_quantile;
        const auto v = select_lambda_validation(y, res.filtered.dictionary, cfg.sgl.alpha, cfg.sgl,
                                                cfg.seed, vcfg);
        res.lambda = v.lambda;
        res.warnings.insert(res.warnings.end(), v.warnings.begin(), v.warnings.end());
        break;
      }
    }
    if (!(res.lambda >= 0.0)) throw Error("selected lambda is negative");
  } catch (const Error& e) {
    throw StepError("lambda", e.what());
  }

  try {
    res.traces = solve_sgl(y, res.filtered.dictionary, res.lambda, cfg.sgl.alpha, cfg.sgl);
  } catch (const Error& e) {
    throw StepError("solve", e.what());
  }
  return res;
}

namespace {

class Timer {
 public:
  explicit Timer(std::vector<StepTiming>& sink, std::string step)
      : sink_(sink), step_(std::move(step)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    sink_.push_back({step_, d.count()});
  }

 private:
  std::vector<StepTiming>& sink_;
  std::string step_;
  std::chrono::steady_clock::time_point start_;
};

template <typename F>
auto step(const char* name, std::vector<StepTiming>& timings, F&& body) {
  Timer timer(timings, name);
  try {
    return body();
  } catch (const StepError&) {
    throw;
  } catch (const std::exception& e) {
    throw StepError(name, e.what());
  }
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
  RunManifest m;
  auto& timings = m.timings;
  step("config", timings, [&] { cfg.validate(); });
  m.config_json = config_to_json(cfg);
  step("output", timings, [&] { fs::create_directories(cfg.out); });

  const auto raw = step("load", timings, [&] { return load_video(cfg.input, cfg.format); });
  const auto y = step("preprocess", timings, [&] {
    auto v = preprocess(raw, cfg.preprocess);
    save_flat(v, cfg.out / "preprocessed.bin", FlatType::kFloat64);
    return v;
  });

  const auto preliminary = step("segment", timings, [&] {
    m.thresholds = compute_thresholds(y, cfg.segment.threshold_quantile);
    auto d = build_preliminary_dictionary(y, cfg.segment, m.thresholds);
    save_dictionary(d, cfg.out / "preliminary_dictionary.csv");
    return d;
  });
  m.preliminary = static_cast<int>(preliminary.size());

  const auto refined = step("cluster", timings, [&] {
    auto r = refine_dictionary(y, preliminary, cfg.cluster, cfg.segment.threshold_quantile);
    save_dictionary(r.dictionary, cfg.out / "refined_dictionary.csv");
    return r;
  });
  m.refined = static_cast<int>(refined.dictionary.size());

  const auto outcome = step("sparse group lasso", timings, [&] { return solve_step(y, refined, cfg); });
  m.filtered = static_cast<int>(outcome.filtered.dictionary.size());
  m.selected = static_cast<int>(outcome.traces.selected().size());
  m.lambda = outcome.lambda;
  m.empty_result = outcome.empty || m.selected == 0;
  m.warnings = outcome.warnings;

  step("write", timings, [&] {
    save_dictionary(outcome.filtered.dictionary, cfg.out / "filtered_dictionary.csv");
    save_traces(outcome.traces, cfg.out / "traces.csv");
    save_masks(outcome.filtered.dictionary, cfg.out / "masks.csv");
  });
  if (cfg.diagnostics) {
    step("diagnostics", timings, [&] {
      emit_diagnostics(y, outcome.filtered.dictionary, outcome.traces, cfg.out / "diagnostics");
    });
  }
  auto out = open_out(cfg.out / "manifest.json");
  out << m.to_json();
  if (!out) throw StepError("write", "failed writing manifest.json");
  return m;
}

}  // namespace scalpel
