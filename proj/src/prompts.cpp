#include "partprompt/prompts.hpp"

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "partprompt/errors.hpp"
#include "partprompt/kernels.hpp"

namespace partprompt {

std::string_view to_string(NegativeMode mode) { return mode == NegativeMode::Natural ? "natural" : "medical"; }

NegativeMode parse_negative_mode(std::string_view text) {
  if (text == "natural") return NegativeMode::Natural;
  if (text == "medical") return NegativeMode::Medical;
  throw Error(ErrorKind::InvalidArgument, "unknown mode '" + std::string(text) + "' (natural|medical)");
}

SimilarityStack similarity_maps(const PartSet& parts, const FeatureMap& target) {
  if (parts.means.cols() != static_cast<std::size_t>(target.dim())) {
    throw Error(ErrorKind::DimMismatch, "part dim " + std::to_string(parts.means.cols()) + " vs target dim " +
                                            std::to_string(target.dim()));
  }
  SimilarityStack s;
  s.n = parts.means.rows();
  s.height = target.height();
  s.width = target.width();
  s.maps = kernels::omp::cosine_matrix(parts.means, target.to_matrix());
  return s;
}

namespace {

PromptPoint make_point(std::size_t index, int width, int part, double score, const FeatureMap& target) {
  PromptPoint p;
  p.cell = {static_cast<int>(index / width), static_cast<int>(index % width)};
  p.pixel = grid_to_pixel(p.cell, target);
  p.part = part;
  p.score = score;
  return p;
}

std::vector<PromptPoint> argmax_per_map(const SimilarityStack& s, const FeatureMap& target) {
  std::vector<PromptPoint> out;
  const std::size_t cells = s.maps.cols();
  for (std::size_t c = 0; c < s.n; ++c) {
    auto row = s.maps.row(c);
    std::size_t best = 0;
    for (std::size_t i = 1; i < cells; ++i) {
      if (row[i] > row[best]) best = i;
    }
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const PromptPoint& p) {
      return static_cast<std::size_t>(p.cell.row) * s.width + p.cell.col == best;
    });
    if (!duplicate) out.push_back(make_point(best, s.width, static_cast<int>(c), row[best], target));
  }
  return out;
}

}  // namespace

std::vector<PromptPoint> select_positive_prompts(const SimilarityStack& maps, const FeatureMap& target) {
  return argmax_per_map(maps, target);
}

PromptPoint select_negative_prompt_natural(const SimilarityStack& maps, const FeatureMap& target) {
  if (maps.n == 0) throw Error(ErrorKind::InvalidArgument, "empty similarity stack");
  const std::size_t cells = maps.maps.cols();
  std::vector<double> mean(cells, 0.0);
  for (std::size_t c = 0; c < maps.n; ++c) {
    auto row = maps.maps.row(c);
    for (std::size_t i = 0; i < cells; ++i) mean[i] += row[i];
  }
  for (double& v : mean) v /= static_cast<double>(maps.n);
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells; ++i) {
    if (mean[i] < mean[best]) best = i;
  }
  return make_point(best, maps.width, 0, mean[best], target);
}

std::vector<PromptPoint> select_negative_prompts_medical(const FeatureMap& reference, const BinaryMask& reference_mask,
                                                         const FeatureMap& target, std::size_t m, RngSeed seed) {
  const auto background = masked_select(reference, reference_mask, Polarity::Background);
  const auto parts = cluster_parts(background, m, seed);
  return argmax_per_map(similarity_maps(parts, target), target);
}

PromptSet synthesize_prompts(const FeatureSet& reference_foreground, const FeatureMap& reference,
                             const BinaryMask& reference_mask, const FeatureMap& target, std::size_t pos_count,
                             NegativeMode neg_mode, std::size_t neg_count, RngSeed seed) {
  if (neg_mode == NegativeMode::Natural && neg_count > 1) {
    throw Error(ErrorKind::InvalidArgument, "natural mode takes at most one negative prompt");
  }
  const auto parts = cluster_parts(reference_foreground, pos_count, derive_seed(seed, {1}));
  const auto maps = similarity_maps(parts, target);

  PromptSet out;
  out.mode = neg_mode;
  out.positives = select_positive_prompts(maps, target);
  if (neg_count == 0) return out;
  if (neg_mode == NegativeMode::Natural) {
    out.negatives.push_back(select_negative_prompt_natural(maps, target));
  } else {
    out.negatives = select_negative_prompts_medical(reference, reference_mask, target, neg_count, derive_seed(seed, {2}));
  }
  return out;
}

PromptSet synthesize_prompts(const FeatureMap& reference, const BinaryMask& reference_mask, const FeatureMap& target,
                             std::size_t pos_count, NegativeMode neg_mode, std::size_t neg_count, RngSeed seed) {
  const auto foreground = masked_select(reference, reference_mask, Polarity::Foreground);
  return synthesize_prompts(foreground, reference, reference_mask, target, pos_count, neg_mode, neg_count, seed);
}

namespace {

void append_points(std::string& out, const std::vector<PromptPoint>& points) {
  out += "[";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    out += fmt::format("{}\n    {{\"x\": {}, \"y\": {}, \"part\": {}, \"score\": {:.6f}}}", i ? "," : "", p.pixel.x,
                       p.pixel.y, p.part, p.score);
  }
  out += points.empty() ? "]" : "\n  ]";
}

}  // namespace

std::string prompts_to_json(const PromptSet& prompts) {
  std::string out = fmt::format("{{\n  \"mode\": \"{}\",\n  \"positives\": ", to_string(prompts.mode));
  append_points(out, prompts.positives);
  out += ",\n  \"negatives\": ";
  append_points(out, prompts.negatives);
  out += "\n}\n";
  return out;
}

namespace {

std::vector<PromptPoint> parse_points(const nlohmann::json& arr, const FeatureMap& target, const char* field) {
  if (!arr.is_array()) throw Error(ErrorKind::FormatError, std::string("prompts: '") + field + "' must be an array");
  std::vector<PromptPoint> out;
  for (const auto& item : arr) {
    PromptPoint p;
    p.pixel = {item.at("x").get<int>(), item.at("y").get<int>()};
    p.part = item.value("part", 0);
    p.score = item.value("score", 0.0);
    p.cell = pixel_to_grid(p.pixel, target);
    out.push_back(p);
  }
  return out;
}

}  // namespace

PromptSet prompts_from_json(std::string_view text, const FeatureMap& target) {
  try {
    const auto doc = nlohmann::json::parse(text);
    PromptSet out;
    out.mode = parse_negative_mode(doc.at("mode").get<std::string>());
    out.positives = parse_points(doc.at("positives"), target, "positives");
    out.negatives = parse_points(doc.value("negatives", nlohmann::json::array()), target, "negatives");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("prompts JSON: ") + e.what());
  }
}

}  // namespace partprompt
