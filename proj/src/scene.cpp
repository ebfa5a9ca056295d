#include "partprompt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "partprompt/errors.hpp"

namespace partprompt {

void SceneSpec::validate() const {
  if (height < 1 || width < 1 || dim < 1) throw Error(ErrorKind::SpecInfeasible, "scene dims must be >= 1");
  if (parts < 1 || parts > 254) throw Error(ErrorKind::SpecInfeasible, "part count must be in [1, 254]");
  if (background_clusters < 1) throw Error(ErrorKind::SpecInfeasible, "need at least one background cluster");
  if (!part_spreads.empty() && part_spreads.size() != static_cast<std::size_t>(parts)) {
    throw Error(ErrorKind::SpecInfeasible, "part_spreads must list one spread per part");
  }
  if (noise < 0 || center_scale <= 0 || deform < 0 || deform >= 1 || max_shift < 0) {
    throw Error(ErrorKind::SpecInfeasible, "noise/deform/shift/scale out of range");
  }
  if (object_fraction <= 0 || object_fraction > 1) throw Error(ErrorKind::SpecInfeasible, "object_fraction must be in (0, 1]");
  const int bw = std::max(1, static_cast<int>(std::lround(object_fraction * width)));
  if (bw < parts) {
    throw Error(ErrorKind::SpecInfeasible, "object box width " + std::to_string(bw) + " cannot hold " +
                                               std::to_string(parts) + " disjoint parts");
  }
}

namespace {

struct Layout {
  int top = 0;
  int left = 0;
  int box_height = 0;
  std::vector<int> strip_widths;

  int box_width() const {
    int w = 0;
    for (int s : strip_widths) w += s;
    return w;
  }
};

std::vector<int> split_width(int total, int parts, double jitter, Rng& rng) {
  std::vector<double> weight(static_cast<std::size_t>(parts));
  for (double& w : weight) w = 1.0 + jitter * (2.0 * uniform01(rng) - 1.0);
  double sum = 0.0;
  for (double w : weight) sum += w;
  // One column each, the rest proportional to the weights (largest remainder).
  const int spare = total - parts;
  std::vector<int> widths(static_cast<std::size_t>(parts), 1);
  std::vector<std::pair<double, int>> remainder;
  int used = 0;
  for (int k = 0; k < parts; ++k) {
    const double share = spare * weight[k] / sum;
    const int whole = static_cast<int>(std::floor(share));
    widths[k] += whole;
    used += whole;
    remainder.push_back({share - whole, k});
  }
  std::stable_sort(remainder.begin(), remainder.end(), [](auto a, auto b) { return a.first > b.first; });
  for (int i = 0; i < spare - used; ++i) ++widths[remainder[static_cast<std::size_t>(i)].second];
  return widths;
}

int random_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

Layout reference_layout(const SceneSpec& spec, Rng& rng) {
  const int bh = std::max(1, static_cast<int>(std::lround(spec.object_fraction * spec.height)));
  const int bw = std::max(1, static_cast<int>(std::lround(spec.object_fraction * spec.width)));
  Layout l;
  l.box_height = bh;
  l.strip_widths = split_width(bw, spec.parts, 0.5, rng);
  l.top = random_int(rng, 0, spec.height - bh);
  l.left = random_int(rng, 0, spec.width - bw);
  return l;
}

Layout target_layout(const SceneSpec& spec, const Layout& ref, Rng& rng) {
  if (spec.identical_layouts) return ref;
  auto scaled = [&](int v, int limit, int floor_v) {
    const double f = 1.0 + spec.deform * (2.0 * uniform01(rng) - 1.0);
    return std::clamp(static_cast<int>(std::lround(v * f)), floor_v, limit);
  };
  Layout l;
  l.box_height = scaled(ref.box_height, spec.height, 1);
  const int bw = scaled(ref.box_width(), spec.width, spec.parts);
  l.strip_widths = split_width(bw, spec.parts, 0.5, rng);
  const int dr = random_int(rng, -spec.max_shift, spec.max_shift);
  const int dc = random_int(rng, -spec.max_shift, spec.max_shift);
  l.top = std::clamp(ref.top + dr, 0, spec.height - l.box_height);
  l.left = std::clamp(ref.left + dc, 0, spec.width - bw);
  return l;
}

std::vector<std::uint8_t> rasterize(const SceneSpec& spec, const Layout& l) {
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(spec.height) * spec.width, 0);
  int col = l.left;
  for (int k = 0; k < spec.parts; ++k) {
    for (int c = col; c < col + l.strip_widths[k]; ++c) {
      for (int r = l.top; r < l.top + l.box_height; ++r) {
        labels[static_cast<std::size_t>(r) * spec.width + c] = static_cast<std::uint8_t>(k + 1);
      }
    }
    col += l.strip_widths[k];
  }
  return labels;
}

FeatureMap render(const SceneSpec& spec, const std::vector<std::uint8_t>& labels, const Matrix& part_centers,
                  const Matrix& background_centers, RngSeed noise_seed) {
  Rng rng = make_rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<std::size_t>(spec.dim);
  std::vector<float> data(labels.size() * d);
  for (std::size_t idx = 0; idx < labels.size(); ++idx) {
    const int col = static_cast<int>(idx % spec.width);
    std::span<const double> center;
    double spread = spec.noise;
    if (labels[idx] == 0) {
      const auto band = static_cast<std::size_t>(col * spec.background_clusters / spec.width);
      center = background_centers.row(band);
    } else {
      const std::size_t k = labels[idx] - 1u;
      center = part_centers.row(k);
      if (!spec.part_spreads.empty()) spread = spec.part_spreads[k];
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double z = gauss(rng);
      data[idx * d + j] = static_cast<float>(center[j] + spread * z);
    }
  }
  return FeatureMap(spec.height, spec.width, spec.dim, std::move(data));
}

BinaryMask to_mask(const SceneSpec& spec, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> bits(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = labels[i] ? 1 : 0;
  return BinaryMask(spec.height, spec.width, std::move(bits));
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng layout_rng = make_rng(derive_seed(spec.seed, {1}));
  const Layout ref = reference_layout(spec, layout_rng);
  const Layout tgt = target_layout(spec, ref, layout_rng);

  Rng center_rng = make_rng(derive_seed(spec.seed, {2}));
  std::normal_distribution<double> gauss(0.0, spec.center_scale);
  Matrix part_centers(static_cast<std::size_t>(spec.parts), static_cast<std::size_t>(spec.dim));
  for (double& v : part_centers.values()) v = gauss(center_rng);
  Matrix background_centers(static_cast<std::size_t>(spec.background_clusters), static_cast<std::size_t>(spec.dim));
  for (double& v : background_centers.values()) v = gauss(center_rng);

  auto ref_labels = rasterize(spec, ref);
  auto tgt_labels = rasterize(spec, tgt);
  // Zero noise with identical layouts must reproduce the reference exactly,
  // so both maps share the noise stream in that case.
  const RngSeed ref_noise = derive_seed(spec.seed, {3});
  const RngSeed tgt_noise = spec.identical_layouts ? ref_noise : derive_seed(spec.seed, {4});

  Scene s{render(spec, ref_labels, part_centers, background_centers, ref_noise),
          to_mask(spec, ref_labels),
          render(spec, tgt_labels, part_centers, background_centers, tgt_noise),
          to_mask(spec, tgt_labels),
          std::move(ref_labels),
          std::move(tgt_labels)};
  return s;
}

}  // namespace partprompt
