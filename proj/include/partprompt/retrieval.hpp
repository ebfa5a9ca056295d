#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "partprompt/distance.hpp"
#include "partprompt/prompts.hpp"
#include "partprompt/segmenter.hpp"

namespace partprompt {

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
  std::size_t size() const { return hi >= lo ? hi - lo + 1 : 0; }
};

/// Parses "3" or "1-5".
CountRange parse_range(std::string_view text);

struct Candidate {
  std::size_t pos = 1;
  std::size_t neg = 1;
  friend bool operator==(const Candidate&, const Candidate&) = default;
  friend auto operator<=>(const Candidate&, const Candidate&) = default;
};

struct RetrievalConfig {
  CountRange pos_range{1, 5};
  NegativeMode neg_mode = NegativeMode::Natural;
  CountRange neg_range{1, 1};
  DistanceOptions distance;  // distance.seed is ignored; sub-seeds come from `seed`
  RngSeed seed{};
  std::vector<Candidate> excluded;
  int jobs = 1;

  void validate() const;
  /// pos_range x neg_range in lexicographic order, minus `excluded`.
  std::vector<Candidate> candidates() const;
};

/// Seed used for everything evaluated under one candidate.
RngSeed candidate_seed(RngSeed master, Candidate c);

struct Trial {
  Candidate candidate;
  DistanceResult distance;  // value = +inf when the candidate mask is empty
  std::size_t mask_area = 0;
  BinaryMask mask{1, 1};
  PromptSet prompts;
};

struct RetrievalOutcome {
  Candidate winner;
  BinaryMask winner_mask{1, 1};
  PromptSet winner_prompts;
  double winner_distance = 0.0;
  std::vector<Trial> trials;  // grid order
};

/// Evaluates every candidate (prompts -> segmenter -> target foreground ->
/// distance to the reference foreground) and keeps the smallest finite
/// distance; ties go to the lexicographically smaller candidate. Throws
/// AllCandidatesEmpty when no candidate yields a non-empty mask.
RetrievalOutcome retrieve_optimal(const FeatureMap& reference, const BinaryMask& reference_mask,
                                  const FeatureMap& target, const RetrievalConfig& config, const Segmenter& segmenter);

/// Distance for one candidate; the same arithmetic path retrieve_optimal uses.
Trial evaluate_candidate(const FeatureSet& reference_foreground, const FeatureMap& reference,
                         const BinaryMask& reference_mask, const FeatureMap& target, const RetrievalConfig& config,
                         const Segmenter& segmenter, Candidate candidate);

nlohmann::ordered_json to_json(const RetrievalOutcome& outcome, const RetrievalConfig& config);

}  // namespace partprompt
