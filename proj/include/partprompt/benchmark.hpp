#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "partprompt/distance.hpp"
#include "partprompt/retrieval.hpp"
#include "partprompt/scene.hpp"
#include "partprompt/segmenter.hpp"

namespace partprompt {

/// One row of the method table. A non-retrieval method with a multi-valued
/// range expands into one fixed method per (pos, neg) pair.
struct MethodSpec {
  std::string name;
  bool retrieval = false;
  CountRange pos{1, 1};
  NegativeMode mode = NegativeMode::Natural;
  CountRange neg{1, 1};
  Measure measure = Measure::WassersteinExact;
};

struct SceneGroup {
  SceneSpec spec;  // spec.seed is overwritten per scene
  std::size_t count = 1;
};

struct BenchConfig {
  RngSeed seed{};
  std::vector<SceneGroup> scenes;
  std::vector<MethodSpec> methods;
  std::string segmenter = "mock";  // mock | sidecar
  double theta = kDefaultMockThreshold;
  SidecarOptions sidecar;
  DistanceOptions distance;  // measure comes from each method
  int jobs = 1;
};

BenchConfig parse_bench_config(std::string_view toml_text, const std::string& source_name = "<config>");
BenchConfig load_bench_config(const std::filesystem::path& path);

/// Methods after range expansion, in table order.
std::vector<MethodSpec> expand_methods(const std::vector<MethodSpec>& methods);

/// Scene specs in evaluation order with their derived seeds.
std::vector<SceneSpec> expand_scenes(const BenchConfig& config);

/// Seed driving prompt synthesis and retrieval for scene `index`.
RngSeed scene_pipeline_seed(RngSeed master, std::size_t index);

struct EvalRow {
  std::size_t scene = 0;
  std::uint64_t scene_seed = 0;
  std::string method;
  std::optional<Candidate> chosen;  // empty when every retrieval candidate was empty
  double dice = 0.0;
  double iou = 0.0;
  std::size_t mask_area = 0;
  double distance = 0.0;         // retrieval winner distance; NaN for fixed methods
  std::vector<double> grid_dice;  // retrieval only: Dice of every candidate, grid order
};

struct MethodAggregate {
  std::string method;
  std::size_t scenes = 0;
  double mean_dice = 0.0;
  double mean_iou = 0.0;
};

struct EvalReport {
  RngSeed seed{};
  std::size_t scene_count = 0;
  std::vector<EvalRow> rows;  // scene-major, then method order
  std::vector<MethodAggregate> aggregates;
  nlohmann::ordered_json config;
};

EvalReport run_benchmark(const BenchConfig& config, const Segmenter& segmenter);
/// Builds the segmenter named in the config.
EvalReport run_benchmark(const BenchConfig& config);
EvalReport run_benchmark(const std::filesystem::path& config_path);

nlohmann::ordered_json to_json(const EvalReport& report);
/// scene,scene_seed,method,pos,neg,dice,iou,mask_area,distance
std::string to_csv(const EvalReport& report);

}  // namespace partprompt
