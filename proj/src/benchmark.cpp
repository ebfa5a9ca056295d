#include "partprompt/benchmark.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <set>

#include <fmt/format.h>
#include <toml.hpp>

#include "partprompt/errors.hpp"
#include "partprompt/io.hpp"
#include "partprompt/metrics.hpp"

namespace partprompt {

namespace {

std::string where(const std::string& source, const toml::source_region& region) {
  if (!region.begin) return source;
  return fmt::format("{}:{}", source, region.begin.line);
}

// Typed access to one TOML table; every key must be consumed so typos surface.
class TableReader {
 public:
  TableReader(const toml::table& table, const std::string& source) : table_(table), source_(source) {}

  [[noreturn]] void fail(const toml::node& node, const std::string& message) const {
    throw Error(ErrorKind::ConfigError, where(source_, node.source()) + ": " + message);
  }
  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorKind::ConfigError, where(source_, table_.source()) + ": " + message);
  }

  const toml::node* get(std::string_view key) {
    used_.insert(std::string(key));
    return table_.get(key);
  }

  template <class T>
  std::optional<T> opt(std::string_view key) {
    const toml::node* n = get(key);
    if (!n) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n->value<double>()) return *v;  // integers convert too
    } else if constexpr (std::is_same_v<T, bool>) {
      if (n->is_boolean()) return *n->value<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (n->is_integer()) return static_cast<T>(*n->value<std::int64_t>());
    } else {
      if (n->is_string()) return *n->value<std::string>();
    }
    fail(*n, fmt::format("'{}' has the wrong type", key));
  }

  template <class T>
  T value_or(std::string_view key, T fallback) {
    auto v = opt<T>(key);
    return v ? *v : fallback;
  }

  std::int64_t non_negative(std::string_view key, std::int64_t fallback) {
    const auto v = value_or<std::int64_t>(key, fallback);
    if (v < 0) fail(*table_.get(key), fmt::format("'{}' must be >= 0", key));
    return v;
  }

  CountRange range(std::string_view key, CountRange fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (n->is_integer()) {
      const auto v = *n->value<std::int64_t>();
      if (v < 0) fail(*n, fmt::format("'{}' must be >= 0", key));
      return {static_cast<std::size_t>(v), static_cast<std::size_t>(v)};
    }
    if (n->is_string()) {
      try {
        return parse_range(*n->value<std::string>());
      } catch (const Error& e) {
        fail(*n, e.what());
      }
    }
    fail(*n, fmt::format("'{}' must be an integer or a \"LO-HI\" string", key));
  }

  void finish() const {
    for (auto&& [key, node] : table_) {
      if (!used_.count(std::string(key.str()))) fail(node, fmt::format("unknown key '{}'", key.str()));
    }
  }

 private:
  const toml::table& table_;
  const std::string& source_;
  std::set<std::string> used_;
};

const toml::array* array_of_tables(TableReader& root, std::string_view key) {
  const toml::node* n = root.get(key);
  if (!n) return nullptr;
  const toml::array* arr = n->as_array();
  if (!arr || !arr->is_array_of_tables()) root.fail(*n, fmt::format("'{}' must be an array of tables", key));
  return arr;
}

SceneGroup parse_scene(const toml::table& t, const std::string& source) {
  TableReader r(t, source);
  SceneGroup g;
  SceneSpec& s = g.spec;
  g.count = static_cast<std::size_t>(r.non_negative("count", 1));
  s.height = r.value_or<int>("height", s.height);
  s.width = r.value_or<int>("width", s.width);
  s.dim = r.value_or<int>("dim", s.dim);
  s.parts = r.value_or<int>("parts", s.parts);
  s.center_scale = r.value_or<double>("center_scale", s.center_scale);
  s.noise = r.value_or<double>("noise", s.noise);
  if (const toml::node* n = r.get("part_spreads")) {
    const toml::array* arr = n->as_array();
    if (!arr) r.fail(*n, "'part_spreads' must be an array of numbers");
    for (const auto& e : *arr) {
      const auto v = e.value<double>();
      if (!v) r.fail(e, "'part_spreads' entries must be numbers");
      s.part_spreads.push_back(*v);
    }
  }
  s.background_clusters = r.value_or<int>("background_clusters", s.background_clusters);
  s.object_fraction = r.value_or<double>("object_fraction", s.object_fraction);
  s.max_shift = r.value_or<int>("max_shift", s.max_shift);
  s.deform = r.value_or<double>("deform", s.deform);
  s.identical_layouts = r.value_or<bool>("identical_layouts", s.identical_layouts);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return g;
}

MethodSpec parse_method(const toml::table& t, const std::string& source, std::size_t index) {
  TableReader r(t, source);
  MethodSpec m;
  m.retrieval = r.value_or<bool>("retrieval", false);
  try {
    if (auto mode = r.opt<std::string>("mode")) m.mode = parse_negative_mode(*mode);
    if (auto measure = r.opt<std::string>("measure")) m.measure = parse_measure(*measure);
  } catch (const Error& e) {
    r.fail(e.what());
  }
  m.pos = r.range("pos", m.retrieval ? CountRange{1, 5} : CountRange{1, 1});
  m.neg = r.range("neg", CountRange{1, 1});
  m.name = r.value_or<std::string>("name", "");
  if (m.name.empty()) {
    m.name = m.retrieval ? fmt::format("retrieval-{}", to_string(m.measure)) : fmt::format("method{}", index);
  }
  r.finish();
  RetrievalConfig check;
  check.pos_range = m.pos;
  check.neg_range = m.neg;
  check.neg_mode = m.mode;
  try {
    check.validate();
  } catch (const Error& e) {
    r.fail(fmt::format("method '{}': {}", m.name, e.what()));
  }
  return m;
}

BinaryMask empty_like(const BinaryMask& m) { return BinaryMask(m.height(), m.width()); }

struct SceneResult {
  std::vector<EvalRow> rows;
};

SceneResult evaluate_scene(const BenchConfig& config, const std::vector<MethodSpec>& methods, const SceneSpec& spec,
                           std::size_t index, const Segmenter& segmenter) {
  const Scene scene = generate_scene(spec);
  const RngSeed pipeline = scene_pipeline_seed(config.seed, index);
  const auto reference_foreground = masked_select(scene.reference, scene.reference_mask, Polarity::Foreground);

  SceneResult out;
  for (const MethodSpec& m : methods) {
    EvalRow row;
    row.scene = index;
    row.scene_seed = spec.seed.value;
    row.method = m.name;
    row.distance = std::numeric_limits<double>::quiet_NaN();
    BinaryMask mask = empty_like(scene.target_truth);
    if (m.retrieval) {
      RetrievalConfig rc;
      rc.pos_range = m.pos;
      rc.neg_range = m.neg;
      rc.neg_mode = m.mode;
      rc.distance = config.distance;
      rc.distance.measure = m.measure;
      rc.seed = pipeline;
      try {
        auto outcome = retrieve_optimal(scene.reference, scene.reference_mask, scene.target, rc, segmenter);
        row.chosen = outcome.winner;
        row.distance = outcome.winner_distance;
        mask = std::move(outcome.winner_mask);
        for (const Trial& t : outcome.trials) row.grid_dice.push_back(dice(t.mask, scene.target_truth));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::AllCandidatesEmpty) throw;
        for (std::size_t i = 0; i < rc.candidates().size(); ++i) row.grid_dice.push_back(dice(mask, scene.target_truth));
      }
    } else {
      const Candidate c{m.pos.lo, m.neg.lo};
      const PromptSet prompts = synthesize_prompts(reference_foreground, scene.reference, scene.reference_mask,
                                                   scene.target, c.pos, m.mode, c.neg, candidate_seed(pipeline, c));
      mask = segmenter.segment(scene.target, prompts);
      row.chosen = c;
    }
    row.dice = dice(mask, scene.target_truth);
    row.iou = iou(mask, scene.target_truth);
    row.mask_area = mask.area();
    out.rows.push_back(std::move(row));
  }
  return out;
}

nlohmann::ordered_json config_echo(const BenchConfig& config, const std::vector<MethodSpec>& methods) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed.value;
  j["segmenter"] = config.segmenter;
  if (config.segmenter == "sidecar") {
    j["sidecar_command"] = config.sidecar.command;
    j["sidecar_timeout_ms"] = config.sidecar.timeout.count();
  } else {
    j["theta"] = config.theta;
  }
  j["jobs"] = config.jobs;
  j["distance"] = {{"cap", config.distance.cap},
                   {"sinkhorn_epsilon", config.distance.sinkhorn_epsilon},
                   {"sinkhorn_max_iter", config.distance.sinkhorn_max_iter},
                   {"sinkhorn_tol", config.distance.sinkhorn_tol},
                   {"js_bins", config.distance.js_bins},
                   {"hungarian_parts", config.distance.hungarian_parts}};
  auto scenes = nlohmann::ordered_json::array();
  for (const auto& g : config.scenes) {
    const SceneSpec& s = g.spec;
    scenes.push_back({{"count", g.count},
                      {"height", s.height},
                      {"width", s.width},
                      {"dim", s.dim},
                      {"parts", s.parts},
                      {"center_scale", s.center_scale},
                      {"noise", s.noise},
                      {"part_spreads", s.part_spreads},
                      {"background_clusters", s.background_clusters},
                      {"object_fraction", s.object_fraction},
                      {"max_shift", s.max_shift},
                      {"deform", s.deform},
                      {"identical_layouts", s.identical_layouts}});
  }
  j["scenes"] = std::move(scenes);
  auto ms = nlohmann::ordered_json::array();
  for (const auto& m : methods) {
    ms.push_back({{"name", m.name},
                  {"retrieval", m.retrieval},
                  {"pos", {m.pos.lo, m.pos.hi}},
                  {"mode", to_string(m.mode)},
                  {"neg", {m.neg.lo, m.neg.hi}},
                  {"measure", to_string(m.measure)}});
  }
  j["methods"] = std::move(ms);
  return j;
}

nlohmann::ordered_json finite_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

BenchConfig parse_bench_config(std::string_view toml_text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::ConfigError,
                fmt::format("{}:{}: {}", source_name, e.source().begin.line, e.description()));
  }
  TableReader r(root, source_name);
  BenchConfig c;
  c.seed.value = static_cast<std::uint64_t>(r.non_negative("seed", 0));
  c.theta = r.value_or<double>("theta", c.theta);
  c.jobs = r.value_or<int>("jobs", c.jobs);
  if (c.jobs < 1) r.fail("'jobs' must be >= 1");
  c.segmenter = r.value_or<std::string>("segmenter", c.segmenter);
  if (c.segmenter != "mock" && c.segmenter != "sidecar") {
    r.fail(fmt::format("segmenter must be \"mock\" or \"sidecar\", got \"{}\"", c.segmenter));
  }
  c.sidecar.command = r.value_or<std::string>("sidecar_command", "");
  c.sidecar.timeout = std::chrono::milliseconds(r.non_negative("sidecar_timeout_ms", c.sidecar.timeout.count()));
  if (c.segmenter == "sidecar" && c.sidecar.command.empty()) r.fail("segmenter \"sidecar\" needs 'sidecar_command'");

  if (const toml::node* n = r.get("distance")) {
    const toml::table* t = n->as_table();
    if (!t) r.fail(*n, "'distance' must be a table");
    TableReader d(*t, source_name);
    c.distance.cap = static_cast<std::size_t>(d.non_negative("cap", static_cast<std::int64_t>(c.distance.cap)));
    c.distance.sinkhorn_epsilon = d.value_or<double>("sinkhorn_epsilon", c.distance.sinkhorn_epsilon);
    c.distance.sinkhorn_max_iter = static_cast<std::size_t>(
        d.non_negative("sinkhorn_max_iter", static_cast<std::int64_t>(c.distance.sinkhorn_max_iter)));
    c.distance.sinkhorn_tol = d.value_or<double>("sinkhorn_tol", c.distance.sinkhorn_tol);
    c.distance.js_bins = static_cast<std::size_t>(d.non_negative("js_bins", static_cast<std::int64_t>(c.distance.js_bins)));
    c.distance.hungarian_parts = static_cast<std::size_t>(
        d.non_negative("hungarian_parts", static_cast<std::int64_t>(c.distance.hungarian_parts)));
    d.finish();
    if (c.distance.cap < 2) d.fail("'cap' must be >= 2");
    if (c.distance.sinkhorn_epsilon <= 0) d.fail("'sinkhorn_epsilon' must be > 0");
  }

  if (const toml::array* arr = array_of_tables(r, "scenes")) {
    for (const auto& e : *arr) c.scenes.push_back(parse_scene(*e.as_table(), source_name));
  }
  if (const toml::array* arr = array_of_tables(r, "methods")) {
    std::size_t i = 0;
    for (const auto& e : *arr) c.methods.push_back(parse_method(*e.as_table(), source_name, i++));
  }
  r.finish();
  return c;
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
  return parse_bench_config(io::read_file(path), path.string());
}

std::vector<MethodSpec> expand_methods(const std::vector<MethodSpec>& methods) {
  std::vector<MethodSpec> out;
  for (const MethodSpec& m : methods) {
    if (m.retrieval || (m.pos.size() == 1 && m.neg.size() == 1)) {
      out.push_back(m);
      continue;
    }
    for (std::size_t p = m.pos.lo; p <= m.pos.hi; ++p) {
      for (std::size_t n = m.neg.lo; n <= m.neg.hi; ++n) {
        MethodSpec f = m;
        f.pos = {p, p};
        f.neg = {n, n};
        f.name = m.neg.size() == 1 ? fmt::format("{}/pos={}", m.name, p) : fmt::format("{}/pos={},neg={}", m.name, p, n);
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

std::vector<SceneSpec> expand_scenes(const BenchConfig& config) {
  std::vector<SceneSpec> out;
  for (const SceneGroup& g : config.scenes) {
    for (std::size_t i = 0; i < g.count; ++i) {
      SceneSpec s = g.spec;
      s.seed = derive_seed(config.seed, {0x5CE4E, out.size()});
      out.push_back(std::move(s));
    }
  }
  return out;
}

RngSeed scene_pipeline_seed(RngSeed master, std::size_t index) { return derive_seed(master, {0x919E, index}); }

EvalReport run_benchmark(const BenchConfig& config, const Segmenter& segmenter) {
  if (config.jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
  const auto methods = expand_methods(config.methods);
  const auto specs = expand_scenes(config);

  std::vector<SceneResult> results(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  const auto n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.jobs) if (config.jobs > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      results[i] = evaluate_scene(config, methods, specs[i], static_cast<std::size_t>(i), segmenter);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("scene {}: {}", i, e.what()));
    }
  }

  EvalReport report;
  report.seed = config.seed;
  report.scene_count = specs.size();
  report.config = config_echo(config, methods);
  for (auto& r : results) {
    for (auto& row : r.rows) report.rows.push_back(std::move(row));
  }
  if (!specs.empty()) {
    for (const MethodSpec& m : methods) {
      MethodAggregate a;
      a.method = m.name;
      for (const EvalRow& row : report.rows) {
        if (row.method != m.name) continue;
        ++a.scenes;
        a.mean_dice += row.dice;
        a.mean_iou += row.iou;
      }
      if (a.scenes) {
        a.mean_dice /= static_cast<double>(a.scenes);
        a.mean_iou /= static_cast<double>(a.scenes);
      }
      report.aggregates.push_back(std::move(a));
    }
  }
  return report;
}

EvalReport run_benchmark(const BenchConfig& config) {
  std::unique_ptr<Segmenter> segmenter;
  if (config.segmenter == "sidecar") {
    segmenter = std::make_unique<SidecarSegmenter>(config.sidecar);
  } else {
    segmenter = std::make_unique<MockSegmenter>(config.theta);
  }
  return run_benchmark(config, *segmenter);
}

EvalReport run_benchmark(const std::filesystem::path& config_path) {
  return run_benchmark(load_bench_config(config_path));
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed.value;
  j["scene_count"] = report.scene_count;
  j["config"] = report.config;
  auto aggregates = nlohmann::ordered_json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"method", a.method}, {"scenes", a.scenes}, {"mean_dice", a.mean_dice}, {"mean_iou", a.mean_iou}});
  }
  j["aggregates"] = std::move(aggregates);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["scene"] = r.scene;
    row["scene_seed"] = r.scene_seed;
    row["method"] = r.method;
    if (r.chosen) {
      row["pos"] = r.chosen->pos;
      row["neg"] = r.chosen->neg;
    } else {
      row["pos"] = nullptr;
      row["neg"] = nullptr;
    }
    row["dice"] = r.dice;
    row["iou"] = r.iou;
    row["mask_area"] = r.mask_area;
    row["distance"] = finite_or_null(r.distance);
    if (!r.grid_dice.empty()) row["grid_dice"] = r.grid_dice;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::string out = "scene,scene_seed,method,pos,neg,dice,iou,mask_area,distance\n";
  for (const auto& r : report.rows) {
    const std::string pos = r.chosen ? std::to_string(r.chosen->pos) : "";
    const std::string neg = r.chosen ? std::to_string(r.chosen->neg) : "";
    const std::string dist = std::isfinite(r.distance) ? fmt::format("{:.9g}", r.distance) : "";
    std::string method = r.method;
    if (method.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : method) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      method = quoted + "\"";
    }
    out += fmt::format("{},{},{},{},{},{:.9g},{:.9g},{},{}\n", r.scene, r.scene_seed, method, pos, neg, r.dice, r.iou,
                       r.mask_area, dist);
  }
  return out;
}

}  // namespace partprompt
