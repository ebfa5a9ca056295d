#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "partprompt/feature.hpp"
#include "partprompt/prompts.hpp"

namespace partprompt {

/// A promptable segmenter: target features + point prompts -> grid mask.
/// Implementations must be deterministic and safe to call concurrently.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual bool accepts_negatives() const = 0;
  virtual BinaryMask segment(const FeatureMap& target, const PromptSet& prompts) const = 0;
};

inline constexpr double kDefaultMockThreshold = 0.5;

/// Prototype matcher standing in for a real decoder. A cell is foreground iff
/// s+ > s- and s+ >= theta, where s+ (s-) is its best cosine similarity to the
/// target vectors under the positive (negative) prompt cells; s- = -1 without
/// negatives.
BinaryMask mock_prototype_segment(const FeatureMap& target, const PromptSet& prompts,
                                  double theta = kDefaultMockThreshold);

class MockSegmenter final : public Segmenter {
 public:
  explicit MockSegmenter(double theta = kDefaultMockThreshold) : theta_(theta) {}
  bool accepts_negatives() const override { return true; }
  BinaryMask segment(const FeatureMap& target, const PromptSet& prompts) const override {
    return mock_prototype_segment(target, prompts, theta_);
  }

 private:
  double theta_;
};

// Sidecar protocol. Each call gets a fresh workspace directory holding
//   request.json  {"feature_map", "image", "image_size", "grid_size", "prompts", "respond_to"}
//   features.npy  target features
// and runs `<command> request.json` with the workspace as working directory.
// The sidecar writes a P5 PGM mask at grid resolution to `respond_to` and
// exits 0. Paths in the request are workspace-relative.

struct SegmentRequest {
  const FeatureMap* target = nullptr;
  std::optional<std::filesystem::path> image;
  PromptSet prompts;
};

struct SegmentResponse {
  BinaryMask mask;
  std::string status;
  std::string diagnostics;
};

struct SidecarOptions {
  std::string command;
  std::chrono::milliseconds timeout{120000};
  /// Parent for workspaces; defaults to $PARTPROMPT_TMPDIR, then the system temp dir.
  std::optional<std::filesystem::path> workspace_root;
};

/// request.json contents for `request` (byte-stable for identical requests).
std::string sidecar_request_json(const SegmentRequest& request);

/// Runs one sidecar round trip. Throws ProtocolError (missing or malformed
/// response), Timeout or SidecarFailure (nonzero exit); messages carry the
/// sidecar's captured output. The workspace is removed on success.
SegmentResponse external_segment(const SegmentRequest& request, const SidecarOptions& options);

class SidecarSegmenter final : public Segmenter {
 public:
  explicit SidecarSegmenter(SidecarOptions options, bool accepts_negatives = true)
      : options_(std::move(options)), accepts_negatives_(accepts_negatives) {}
  bool accepts_negatives() const override { return accepts_negatives_; }
  BinaryMask segment(const FeatureMap& target, const PromptSet& prompts) const override;

 private:
  SidecarOptions options_;
  bool accepts_negatives_;
};

}  // namespace partprompt
