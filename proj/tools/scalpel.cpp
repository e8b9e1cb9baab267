// Command-line front end: full runs and single steps on saved intermediates.
#include "CLI11.hpp"
#include "json.hpp"
#include "scalpel/pipeline.hpp"
#include "scalpel/synth.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace scalpel;

namespace {

struct Options {
  std::string input;
  std::string format = "flat";
  std::string out;
  std::string dictionary;
  std::string lambda_mode = "quantile";
  double lambda = -1.0;
  std::string keep_drop;
  std::string spec;
  PipelineConfig cfg;
};

void add_segment_flags(CLI::App* app, Options& o) {
  app->add_option("--threshold-quantile", o.cfg.segment.threshold_quantile,
                  "quantile q giving thresholds -quantile_q(Y) and -min(Y)");
  app->add_option("--min-size", o.cfg.segment.min_size);
  app->add_option("--max-size", o.cfg.segment.max_size);
  app->add_option("--max-width", o.cfg.segment.max_width);
  app->add_option("--max-height", o.cfg.segment.max_height);
}

void add_cluster_flags(CLI::App* app, Options& o) {
  app->add_option("--omega", o.cfg.cluster.omega, "weight of the spatial dissimilarity");
  app->add_option("--cut-height", o.cfg.cluster.cut_height, "dendrogram cut-point");
}

void add_solve_flags(CLI::App* app, Options& o) {
  app->add_option("--min-members", o.cfg.min_members, "smallest cluster kept");
  app->add_option("--alpha", o.cfg.sgl.alpha, "l1 / group mixing weight");
  app->add_option("--lambda-mode", o.lambda_mode, "quantile, validation or fixed");
  app->add_option("--lambda", o.lambda, "penalty for --lambda-mode fixed");
  app->add_option("--seed", o.cfg.seed, "seed of the validation split");
  app->add_option("--keep-drop", o.keep_drop, "file of 'keep <k>' / 'drop <k>' lines");
  app->add_option("--tol", o.cfg.sgl.tol, "relative objective change for convergence");
  app->add_option("--max-iter", o.cfg.sgl.max_iter);
}

void finish_config(Options& o) {
  o.cfg.input = o.input;
  o.cfg.format = parse_video_format(o.format);
  o.cfg.out = o.out;
  o.cfg.lambda_mode = parse_lambda_mode(o.lambda_mode);
  if (o.lambda >= 0.0) o.cfg.fixed_lambda = o.lambda;
  if (!o.keep_drop.empty()) o.cfg.keep_drop = fs::path(o.keep_drop);
}

int run(Options& o) {
  finish_config(o);
  const auto m = run_pipeline(o.cfg);
  std::cout << "preliminary " << m.preliminary << ", refined " << m.refined << ", filtered "
            << m.filtered << ", selected " << m.selected << ", lambda " << m.lambda << '\n';
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int preprocess_cmd(Options& o) {
  finish_config(o);
  o.cfg.preprocess.validate();
  const auto raw = load_video(o.cfg.input, o.cfg.format);
  save_flat(preprocess(raw, o.cfg.preprocess), o.cfg.out / "preprocessed.bin", FlatType::kFloat64);
  std::cout << (o.cfg.out / "preprocessed.bin").string() << '\n';
  return 0;
}

int segment_cmd(Options& o) {
  const auto y = load_flat(o.input);
  const auto t = compute_thresholds(y, o.cfg.segment.threshold_quantile);
  const auto d = build_preliminary_dictionary(y, o.cfg.segment, t);
  save_dictionary(d, fs::path(o.out) / "preliminary_dictionary.csv");
  std::cout << "thresholds " << t[0] << ' ' << t[1] << ' ' << t[2] << ", " << d.size()
            << " preliminary elements\n";
  return 0;
}

int cluster_cmd(Options& o) {
  const auto y = load_flat(o.input);
  const auto prelim = load_dictionary(o.dictionary);
  const auto r = refine_dictionary(y, prelim, o.cfg.cluster, o.cfg.segment.threshold_quantile);
  save_dictionary(r.dictionary, fs::path(o.out) / "refined_dictionary.csv");
  std::cout << r.dictionary.size() << " refined elements\n";
  return 0;
}

int solve_cmd(Options& o) {
  finish_config(o);
  const auto y = load_flat(o.input);
  const auto refined = refined_from_dictionary(load_dictionary(o.dictionary));
  const auto res = solve_step(y, refined, o.cfg);
  save_dictionary(res.filtered.dictionary, o.cfg.out / "filtered_dictionary.csv");
  save_traces(res.traces, o.cfg.out / "traces.csv");
  save_masks(res.filtered.dictionary, o.cfg.out / "masks.csv");
  std::ofstream(o.cfg.out / "solve.json")
      << nlohmann::json{{"lambda", res.lambda},
                        {"filtered", res.filtered.dictionary.size()},
                        {"selected", res.traces.selected().size()},
                        {"kept", res.filtered.kept},
                        {"warnings", res.warnings}}
             .dump(2)
      << '\n';
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "lambda " << res.lambda << ", " << res.traces.selected().size() << " of "
            << res.filtered.dictionary.size() << " components selected\n";
  return 0;
}

int synth_cmd(Options& o) {
  std::ifstream in(o.spec);
  if (!in) throw Error("cannot open spec " + o.spec);
  std::stringstream text;
  text << in.rdbuf();
  const auto data = generate(spec_from_json(text.str()));
  const fs::path out = o.out;
  save_flat(data.raw, out / "video.bin", FlatType::kFloat32);
  save_frames(data.raw, out / "frames");
  std::ofstream(out / "truth.json") << truth_to_json(data.truth);
  std::cout << "wrote " << data.raw.frames() << " frames of " << data.raw.geometry.height << "x"
            << data.raw.geometry.width << " to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calcium imaging segmentation, clustering and sparse group lasso"};
  app.require_subcommand(1);
  Options o;

  auto* run_app = app.add_subcommand("run", "all steps from raw video to traces");
  run_app->add_option("--input", o.input, "frame directory or flat binary file")->required();
  run_app->add_option("--format", o.format, "frames or flat");
  run_app->add_option("--out", o.out, "output directory")->required();
  add_segment_flags(run_app, o);
  add_cluster_flags(run_app, o);
  add_solve_flags(run_app, o);
  bool no_diag = false;
  run_app->add_flag("--no-diagnostics", no_diag, "skip images");

  auto* pre_app = app.add_subcommand("preprocess", "smoothing, bleach correction and delta f/f");
  pre_app->add_option("--input", o.input)->required();
  pre_app->add_option("--format", o.format);
  pre_app->add_option("--out", o.out)->required();

  auto* seg_app = app.add_subcommand("segment", "preliminary dictionary from a preprocessed video");
  seg_app->add_option("--input", o.input, "preprocessed flat binary")->required();
  seg_app->add_option("--out", o.out)->required();
  add_segment_flags(seg_app, o);

  auto* clu_app = app.add_subcommand("cluster", "refined dictionary by prototype clustering");
  clu_app->add_option("--input", o.input, "preprocessed flat binary")->required();
  clu_app->add_option("--dictionary", o.dictionary, "preliminary dictionary CSV")->required();
  clu_app->add_option("--out", o.out)->required();
  clu_app->add_option("--threshold-quantile", o.cfg.segment.threshold_quantile);
  add_cluster_flags(clu_app, o);

  auto* sol_app = app.add_subcommand("solve", "filter and fit traces");
  sol_app->add_option("--input", o.input, "preprocessed flat binary")->required();
  sol_app->add_option("--dictionary", o.dictionary, "refined dictionary CSV")->required();
  sol_app->add_option("--out", o.out)->required();
  sol_app->add_option("--threshold-quantile", o.cfg.segment.threshold_quantile);
  add_solve_flags(sol_app, o);

  auto* syn_app = app.add_subcommand("synth", "synthetic video with ground truth");
  syn_app->add_option("--spec", o.spec, "JSON spec")->required();
  syn_app->add_option("--out", o.out)->required();

  CLI11_PARSE(app, argc, argv);
  o.cfg.diagnostics = !no_diag;
  try {
    if (*run_app) return run(o);
    if (*pre_app) return preprocess_cmd(o);
    if (*seg_app) return segment_cmd(o);
    if (*clu_app) return cluster_cmd(o);
    if (*sol_app) return solve_cmd(o);
    if (*syn_app) return synth_cmd(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
