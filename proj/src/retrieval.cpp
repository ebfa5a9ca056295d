#include "partprompt/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>

#include "partprompt/errors.hpp"

namespace partprompt {

CountRange parse_range(std::string_view text) {
  auto parse_one = [&](std::string_view s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw Error(ErrorKind::InvalidArgument, "bad range '" + std::string(text) + "' (expected N or LO-HI)");
    }
    return v;
  };
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) {
    const auto v = parse_one(text);
    return {v, v};
  }
  return {parse_one(text.substr(0, dash)), parse_one(text.substr(dash + 1))};
}

void RetrievalConfig::validate() const {
  if (pos_range.size() == 0 || pos_range.lo < 1) throw Error(ErrorKind::InvalidArgument, "positive range must be non-empty with lower bound >= 1");
  if (neg_range.size() == 0) throw Error(ErrorKind::InvalidArgument, "negative range must be non-empty");
  if (neg_mode == NegativeMode::Natural && neg_range.hi > 1) {
    throw Error(ErrorKind::InvalidArgument, "natural mode takes 0 or 1 negative prompts");
  }
  if (neg_mode == NegativeMode::Medical && neg_range.lo < 1) {
    throw Error(ErrorKind::InvalidArgument, "medical negative range lower bound must be >= 1");
  }
  if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
}

std::vector<Candidate> RetrievalConfig::candidates() const {
  std::vector<Candidate> out;
  for (std::size_t p = pos_range.lo; p <= pos_range.hi; ++p) {
    for (std::size_t m = neg_range.lo; m <= neg_range.hi; ++m) {
      const Candidate c{p, m};
      if (std::find(excluded.begin(), excluded.end(), c) == excluded.end()) out.push_back(c);
    }
  }
  return out;
}

RngSeed candidate_seed(RngSeed master, Candidate c) { return derive_seed(master, {c.pos, c.neg}); }

Trial evaluate_candidate(const FeatureSet& reference_foreground, const FeatureMap& reference,
                         const BinaryMask& reference_mask, const FeatureMap& target, const RetrievalConfig& config,
                         const Segmenter& segmenter, Candidate candidate) {
  const RngSeed seed = candidate_seed(config.seed, candidate);
  Trial t;
  t.candidate = candidate;
  t.prompts = synthesize_prompts(reference_foreground, reference, reference_mask, target, candidate.pos,
                                 config.neg_mode, candidate.neg, seed);
  t.mask = segmenter.segment(target, t.prompts);
  t.mask_area = t.mask.area();
  t.distance.measure = config.distance.measure;
  if (t.mask_area == 0) {
    t.distance.value = std::numeric_limits<double>::infinity();
    return t;
  }
  const auto target_foreground = masked_select(target, t.mask, Polarity::Foreground);
  DistanceOptions options = config.distance;
  options.seed = derive_seed(seed, {3});
  t.distance = measure_distance(reference_foreground, target_foreground, options);
  return t;
}

RetrievalOutcome retrieve_optimal(const FeatureMap& reference, const BinaryMask& reference_mask,
                                  const FeatureMap& target, const RetrievalConfig& config, const Segmenter& segmenter) {
  config.validate();
  const auto grid = config.candidates();
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "candidate grid is empty");
  const auto reference_foreground = masked_select(reference, reference_mask, Polarity::Foreground);

  std::vector<Trial> trials(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.jobs) if (config.jobs > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      trials[i] = evaluate_candidate(reference_foreground, reference, reference_mask, target, config, segmenter, grid[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "candidate (pos=" + std::to_string(grid[i].pos) + ", neg=" + std::to_string(grid[i].neg) +
                                "): " + e.what());
    }
  }

  std::size_t best = trials.size();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!std::isfinite(trials[i].distance.value)) continue;
    if (best == trials.size() || trials[i].distance.value < trials[best].distance.value) best = i;
  }
  if (best == trials.size()) {
    throw Error(ErrorKind::AllCandidatesEmpty, "every candidate produced an empty mask");
  }

  RetrievalOutcome out;
  out.winner = trials[best].candidate;
  out.winner_mask = trials[best].mask;
  out.winner_prompts = trials[best].prompts;
  out.winner_distance = trials[best].distance.value;
  out.trials = std::move(trials);
  return out;
}

nlohmann::ordered_json to_json(const RetrievalOutcome& outcome, const RetrievalConfig& config) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  cfg["mode"] = to_string(config.neg_mode);
  cfg["pos_range"] = {config.pos_range.lo, config.pos_range.hi};
  cfg["neg_range"] = {config.neg_range.lo, config.neg_range.hi};
  cfg["measure"] = to_string(config.distance.measure);
  cfg["cap"] = config.distance.cap;
  cfg["seed"] = config.seed.value;
  j["config"] = std::move(cfg);

  j["winner"] = {{"pos", outcome.winner.pos}, {"neg", outcome.winner.neg}};
  j["winner_distance"] = outcome.winner_distance;
  j["winner_mask_area"] = outcome.winner_mask.area();
  j["prompts"] = nlohmann::ordered_json::parse(prompts_to_json(outcome.winner_prompts));

  auto trials = nlohmann::ordered_json::array();
  for (const auto& t : outcome.trials) {
    nlohmann::ordered_json row;
    row["pos"] = t.candidate.pos;
    row["neg"] = t.candidate.neg;
    row["mask_area"] = t.mask_area;
    row["positives"] = t.prompts.positives.size();
    row["negatives"] = t.prompts.negatives.size();
    row["distance"] = to_json(t.distance);
    trials.push_back(std::move(row));
  }
  j["trials"] = std::move(trials);
  return j;
}

}  // namespace partprompt
