#include "partprompt/segmenter.hpp"

#include "partprompt/errors.hpp"
#include "partprompt/kernels.hpp"

namespace partprompt {

namespace {

Matrix probe_vectors(const FeatureMap& target, const std::vector<PromptPoint>& points) {
  Matrix out(points.size(), static_cast<std::size_t>(target.dim()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto cell = target.cell(points[i].cell.row, points[i].cell.col);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < cell.size(); ++k) dst[k] = cell[k];
  }
  return out;
}

}  // namespace

BinaryMask mock_prototype_segment(const FeatureMap& target, const PromptSet& prompts, double theta) {
  if (prompts.positives.empty()) throw Error(ErrorKind::InvalidArgument, "mock segmenter needs a positive prompt");
  const Matrix cells = target.to_matrix();
  const auto pos = kernels::omp::max_cosine(cells, probe_vectors(target, prompts.positives), -1.0);
  const auto neg = kernels::omp::max_cosine(cells, probe_vectors(target, prompts.negatives), -1.0);

  std::vector<std::uint8_t> bits(cells.rows());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (pos[i] > neg[i] && pos[i] >= theta) ? 1 : 0;
  return BinaryMask(target.height(), target.width(), std::move(bits));
}

BinaryMask SidecarSegmenter::segment(const FeatureMap& target, const PromptSet& prompts) const {
  SegmentRequest request;
  request.target = &target;
  request.prompts = prompts;
  if (!accepts_negatives_) request.prompts.negatives.clear();
  return external_segment(request, options_).mask;
}

}  // namespace partprompt
