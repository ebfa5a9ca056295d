#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "partprompt/clustering.hpp"
#include "partprompt/feature.hpp"
#include "partprompt/rng.hpp"

namespace partprompt {

/// n similarity maps over the target grid; maps(c, i * width + j) = S^c_ij.
struct SimilarityStack {
  std::size_t n = 0;
  int height = 0;
  int width = 0;
  Matrix maps;

  double at(std::size_t c, int row, int col) const { return maps(c, static_cast<std::size_t>(row) * width + col); }
};

enum class NegativeMode { Natural, Medical };

std::string_view to_string(NegativeMode mode);
NegativeMode parse_negative_mode(std::string_view text);

struct PromptPoint {
  PixelPoint pixel;
  GridPoint cell;
  int part = 0;
  double score = 0.0;
};

struct PromptSet {
  NegativeMode mode = NegativeMode::Natural;
  std::vector<PromptPoint> positives;
  std::vector<PromptPoint> negatives;
};

SimilarityStack similarity_maps(const PartSet& parts, const FeatureMap& target);

/// One prompt per map at its global argmax (ties: smallest row-major index).
/// Coinciding cells keep the lowest part index.
std::vector<PromptPoint> select_positive_prompts(const SimilarityStack& maps, const FeatureMap& target);

/// The argmin of the element-wise mean map.
PromptPoint select_negative_prompt_natural(const SimilarityStack& maps, const FeatureMap& target);

/// Clusters reference background features into m parts and takes each part's
/// argmax over the target: those cells look most like known background.
std::vector<PromptPoint> select_negative_prompts_medical(const FeatureMap& reference, const BinaryMask& reference_mask,
                                                         const FeatureMap& target, std::size_t m, RngSeed seed);

/// Full pipeline: foreground selection, part clustering, similarity maps and
/// point selection. In natural mode neg_count must be 0 or 1.
PromptSet synthesize_prompts(const FeatureMap& reference, const BinaryMask& reference_mask, const FeatureMap& target,
                             std::size_t pos_count, NegativeMode neg_mode, std::size_t neg_count, RngSeed seed);

/// Same as above with the reference foreground already selected.
PromptSet synthesize_prompts(const FeatureSet& reference_foreground, const FeatureMap& reference,
                             const BinaryMask& reference_mask, const FeatureMap& target, std::size_t pos_count,
                             NegativeMode neg_mode, std::size_t neg_count, RngSeed seed);

/// {"mode", "positives":[{"x","y","part","score"}], "negatives":[...]}; fixed
/// field order, scores printed with six decimals, trailing newline.
std::string prompts_to_json(const PromptSet& prompts);

/// Parses the document written by prompts_to_json. Grid cells are recovered
/// from pixel coordinates through `target`.
PromptSet prompts_from_json(std::string_view text, const FeatureMap& target);

}  // namespace partprompt
