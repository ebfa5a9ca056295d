#include "partprompt/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "partprompt/benchmark.hpp"
#include "partprompt/distance.hpp"
#include "partprompt/errors.hpp"
#include "partprompt/io.hpp"
#include "partprompt/prompts.hpp"
#include "partprompt/retrieval.hpp"
#include "partprompt/scene.hpp"
#include "partprompt/segmenter.hpp"

namespace partprompt {

namespace fs = std::filesystem;

namespace {

struct ImageSize {
  int height = 0;
  int width = 0;
};

void add_image_size(CLI::App* cmd, ImageSize& size) {
  cmd->add_option("--image-height", size.height, "Image height in pixels (default: grid height)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--image-width", size.width, "Image width in pixels (default: grid width)")
      ->check(CLI::NonNegativeNumber);
}

struct SegmenterFlags {
  std::string kind = "mock";
  double theta = kDefaultMockThreshold;
  std::string command;
  long long timeout_ms = 120000;
};

void add_segmenter(CLI::App* cmd, SegmenterFlags& f) {
  cmd->add_option("--segmenter", f.kind, "mock or sidecar")->check(CLI::IsMember({"mock", "sidecar"}));
  cmd->add_option("--theta", f.theta, "Mock segmenter threshold");
  cmd->add_option("--sidecar-cmd", f.command, "Sidecar command; receives request.json as its last argument");
  cmd->add_option("--sidecar-timeout-ms", f.timeout_ms, "Sidecar timeout")->check(CLI::PositiveNumber);
}

std::unique_ptr<Segmenter> make_segmenter(const SegmenterFlags& f) {
  if (f.kind == "sidecar") {
    if (f.command.empty()) throw Error(ErrorKind::InvalidArgument, "--segmenter sidecar needs --sidecar-cmd");
    SidecarOptions o;
    o.command = f.command;
    o.timeout = std::chrono::milliseconds(f.timeout_ms);
    return std::make_unique<SidecarSegmenter>(std::move(o));
  }
  return std::make_unique<MockSegmenter>(f.theta);
}

struct DistanceFlags {
  std::string measure = "wasserstein_exact";
  std::size_t cap = kDefaultSubsampleCap;
  double sinkhorn_epsilon = 0.05;
  std::size_t js_bins = 32;
  std::size_t hungarian_parts = 8;
};

void add_distance(CLI::App* cmd, DistanceFlags& f) {
  cmd->add_option("--measure", f.measure, "wasserstein_exact | sinkhorn | js_2pc | hungarian");
  cmd->add_option("--cap", f.cap, "Subsample cap per set")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  cmd->add_option("--sinkhorn-epsilon", f.sinkhorn_epsilon, "Entropic regularization")->check(CLI::PositiveNumber);
  cmd->add_option("--js-bins", f.js_bins, "Histogram bins per axis")->check(CLI::PositiveNumber);
  cmd->add_option("--hungarian-parts", f.hungarian_parts, "Parts per set")->check(CLI::PositiveNumber);
}

DistanceOptions to_options(const DistanceFlags& f, RngSeed seed) {
  DistanceOptions o;
  o.measure = parse_measure(f.measure);
  o.cap = f.cap;
  o.seed = seed;
  o.sinkhorn_epsilon = f.sinkhorn_epsilon;
  o.js_bins = f.js_bins;
  o.hungarian_parts = f.hungarian_parts;
  return o;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
  } else {
    io::write_file(path, text);
  }
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

struct Inputs {
  std::string ref_feat;
  std::string ref_mask;
  std::string target;
  ImageSize size;
};

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--ref-feat", in.ref_feat, "Reference features (.npy, H x W x D float32)")->required();
  cmd->add_option("--ref-mask", in.ref_mask, "Reference mask (.pgm or .npy)")->required();
  cmd->add_option("--target", in.target, "Target features (.npy)")->required();
  add_image_size(cmd, in.size);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Part-aware point prompts for promptable segmentation", "partprompt"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--seed", seed, "Master seed (default 0)");
  app.add_option("--jobs", jobs, "Concurrent candidates/scenes")->check(CLI::PositiveNumber);

  // prompt
  Inputs prompt_in;
  std::size_t prompt_pos = 1;
  std::size_t prompt_neg = 1;
  std::string prompt_mode = "natural";
  std::string prompt_out;
  auto* prompt = app.add_subcommand("prompt", "Synthesize positive/negative point prompts");
  add_inputs(prompt, prompt_in);
  prompt->add_option("--pos", prompt_pos, "Number of parts / positive prompts")->check(CLI::PositiveNumber);
  prompt->add_option("--neg", prompt_neg, "Number of negative prompts (natural: 0 or 1)");
  prompt->add_option("--mode", prompt_mode, "natural or medical")->check(CLI::IsMember({"natural", "medical"}));
  prompt->add_option("--out", prompt_out, "Output JSON (default stdout)");

  // retrieve
  Inputs ret_in;
  std::string pos_range = "1-5";
  std::string neg_range = "1";
  std::string ret_mode = "natural";
  DistanceFlags ret_dist;
  SegmenterFlags ret_seg;
  std::string ret_out;
  std::string ret_mask_out;
  auto* retrieve = app.add_subcommand("retrieve", "Pick the prompt counts whose mask best matches the reference");
  add_inputs(retrieve, ret_in);
  retrieve->add_option("--pos-range", pos_range, "Positive counts, N or LO-HI");
  retrieve->add_option("--neg-range", neg_range, "Negative counts, N or LO-HI");
  retrieve->add_option("--mode", ret_mode, "natural or medical")->check(CLI::IsMember({"natural", "medical"}));
  add_distance(retrieve, ret_dist);
  add_segmenter(retrieve, ret_seg);
  retrieve->add_option("--out", ret_out, "Outcome JSON (default stdout)");
  retrieve->add_option("--mask-out", ret_mask_out, "Winner mask (.pgm or .npy)");

  // segment-mock
  std::string sm_target;
  std::string sm_prompts;
  std::string sm_out;
  double sm_theta = kDefaultMockThreshold;
  ImageSize sm_size;
  auto* segment = app.add_subcommand("segment-mock", "Run the prototype-matching segmenter on a prompt file");
  segment->add_option("--target", sm_target, "Target features (.npy)")->required();
  segment->add_option("--prompts", sm_prompts, "Prompt JSON")->required();
  segment->add_option("--theta", sm_theta, "Foreground threshold");
  segment->add_option("--out", sm_out, "Output mask (.pgm or .npy)")->required();
  add_image_size(segment, sm_size);

  // distance
  std::string da, dam, db, dbm;
  DistanceFlags dist_flags;
  std::string dist_out;
  auto* distance = app.add_subcommand("distance", "Distance between two masked feature sets");
  distance->add_option("--a", da, "Features A (.npy)")->required();
  distance->add_option("--a-mask", dam, "Mask A")->required();
  distance->add_option("--b", db, "Features B (.npy)")->required();
  distance->add_option("--b-mask", dbm, "Mask B")->required();
  add_distance(distance, dist_flags);
  distance->add_option("--out", dist_out, "Output JSON (default stdout)");

  // gen-scene
  SceneSpec scene;
  std::string scene_dir;
  auto* gen = app.add_subcommand("gen-scene", "Write a synthetic reference/target pair with ground truth");
  gen->add_option("--out-dir", scene_dir, "Output directory")->required();
  gen->add_option("--height", scene.height);
  gen->add_option("--width", scene.width);
  gen->add_option("--dim", scene.dim);
  gen->add_option("--parts", scene.parts);
  gen->add_option("--noise", scene.noise);
  gen->add_option("--center-scale", scene.center_scale);
  gen->add_option("--background-clusters", scene.background_clusters);
  gen->add_option("--object-fraction", scene.object_fraction);
  gen->add_option("--max-shift", scene.max_shift);
  gen->add_option("--deform", scene.deform);
  gen->add_flag("--identical-layouts", scene.identical_layouts);

  // bench
  std::string bench_config;
  std::string bench_out;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "Run a TOML-configured ablation over synthetic scenes");
  bench->add_option("--config", bench_config, "Benchmark TOML")->required();
  bench->add_option("--out", bench_out, "Report JSON (default stdout)");
  bench->add_option("--csv", bench_csv, "Per-scene CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const RngSeed master{seed};
  try {
    if (*prompt) {
      const auto ref = io::read_feature_map(prompt_in.ref_feat);
      const auto mask = io::read_mask(prompt_in.ref_mask);
      const auto target = io::read_feature_map(prompt_in.target, prompt_in.size.height, prompt_in.size.width);
      const auto prompts = synthesize_prompts(ref, mask, target, prompt_pos, parse_negative_mode(prompt_mode),
                                              prompt_neg, master);
      emit(prompts_to_json(prompts), prompt_out, out);
    } else if (*retrieve) {
      const auto ref = io::read_feature_map(ret_in.ref_feat);
      const auto mask = io::read_mask(ret_in.ref_mask);
      const auto target = io::read_feature_map(ret_in.target, ret_in.size.height, ret_in.size.width);
      RetrievalConfig rc;
      rc.pos_range = parse_range(pos_range);
      rc.neg_range = parse_range(neg_range);
      rc.neg_mode = parse_negative_mode(ret_mode);
      rc.distance = to_options(ret_dist, master);
      rc.seed = master;
      rc.jobs = jobs;
      const auto segmenter = make_segmenter(ret_seg);
      const auto outcome = retrieve_optimal(ref, mask, target, rc, *segmenter);
      if (!ret_mask_out.empty()) io::write_mask(outcome.winner_mask, ret_mask_out);
      emit(dump(to_json(outcome, rc)), ret_out, out);
    } else if (*segment) {
      const auto target = io::read_feature_map(sm_target, sm_size.height, sm_size.width);
      const auto prompts = prompts_from_json(io::read_file(sm_prompts), target);
      io::write_mask(mock_prototype_segment(target, prompts, sm_theta), sm_out);
    } else if (*distance) {
      const auto fa = io::read_feature_map(da);
      const auto fb = io::read_feature_map(db);
      const auto a = masked_select(fa, io::read_mask(dam), Polarity::Foreground);
      const auto b = masked_select(fb, io::read_mask(dbm), Polarity::Foreground);
      emit(dump(to_json(measure_distance(a, b, to_options(dist_flags, master)))), dist_out, out);
    } else if (*gen) {
      scene.seed = master;
      const Scene s = generate_scene(scene);
      const fs::path dir = scene_dir;
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());
      io::write_feature_map(s.reference, dir / "reference.npy");
      io::write_mask(s.reference_mask, dir / "reference_mask.pgm");
      io::write_feature_map(s.target, dir / "target.npy");
      io::write_mask(s.target_truth, dir / "target_truth.pgm");
      io::write_pgm(dir / "reference_parts.pgm", scene.height, scene.width, s.reference_parts);
      io::write_pgm(dir / "target_parts.pgm", scene.height, scene.width, s.target_parts);
    } else if (*bench) {
      BenchConfig config = load_bench_config(bench_config);
      if (app.get_option("--jobs")->count() > 0) config.jobs = jobs;
      if (app.get_option("--seed")->count() > 0) config.seed = master;
      const EvalReport report = run_benchmark(config);
      if (!bench_csv.empty()) io::write_file(bench_csv, to_csv(report));
      emit(dump(to_json(report)), bench_out, out);
    }
  } catch (const Error& e) {
    err << "partprompt: " << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    err << "partprompt: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace partprompt
