#include "partprompt/metrics.hpp"

#include <string>

#include "partprompt/errors.hpp"

namespace partprompt {

namespace {

struct Overlap {
  std::size_t intersection = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;
};

Overlap overlap(const BinaryMask& p, const BinaryMask& t) {
  if (p.height() != t.height() || p.width() != t.width()) {
    throw Error(ErrorKind::DimMismatch, "mask " + std::to_string(p.height()) + "x" + std::to_string(p.width()) +
                                            " vs truth " + std::to_string(t.height()) + "x" + std::to_string(t.width()));
  }
  Overlap o;
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      const bool a = p.at(r, c) != 0;
      const bool b = t.at(r, c) != 0;
      o.predicted += a;
      o.truth += b;
      o.intersection += a && b;
    }
  }
  return o;
}

}  // namespace

double dice(const BinaryMask& predicted, const BinaryMask& truth) {
  const auto o = overlap(predicted, truth);
  if (o.predicted + o.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(o.intersection) / static_cast<double>(o.predicted + o.truth);
}

double iou(const BinaryMask& predicted, const BinaryMask& truth) {
  const auto o = overlap(predicted, truth);
  const std::size_t uni = o.predicted + o.truth - o.intersection;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(uni);
}

}  // namespace partprompt
