#include "partprompt/feature.hpp"

#include <cmath>
#include <string>

#include "partprompt/errors.hpp"

namespace partprompt {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(ErrorKind::DimMismatch, "matrix data length " + std::to_string(values_.size()) +
                                            " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

FeatureMap::FeatureMap(int height, int width, int dim, std::vector<float> data, int image_height,
                       int image_width)
    : height_(height),
      width_(width),
      dim_(dim),
      image_height_(image_height > 0 ? image_height : height),
      image_width_(image_width > 0 ? image_width : width),
      data_(std::move(data)) {
  if (height < 1 || width < 1 || dim < 1) {
    throw Error(ErrorKind::InvalidArgument, "feature map dims must be >= 1");
  }
  const std::size_t expected = static_cast<std::size_t>(height) * width * dim;
  if (data_.size() != expected) {
    throw Error(ErrorKind::DimMismatch, "feature map data length " + std::to_string(data_.size()) +
                                            " != " + std::to_string(expected));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "feature map contains NaN/Inf");
  }
}

std::span<const float> FeatureMap::cell(int row, int col) const {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) {
    throw Error(ErrorKind::OutOfBounds, "cell (" + std::to_string(row) + "," + std::to_string(col) + ")");
  }
  return cell(static_cast<std::size_t>(row) * width_ + col);
}

std::span<const float> FeatureMap::cell(std::size_t index) const {
  return {data_.data() + index * dim_, static_cast<std::size_t>(dim_)};
}

Matrix FeatureMap::to_matrix() const {
  return Matrix(cell_count(), dim_, std::vector<double>(data_.begin(), data_.end()));
}

FeatureMap FeatureMap::with_image_size(int image_height, int image_width) const {
  return FeatureMap(height_, width_, dim_, data_, image_height, image_width);
}

BinaryMask::BinaryMask(int height, int width)
    : BinaryMask(height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0)) {}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  if (height < 1 || width < 1) throw Error(ErrorKind::InvalidArgument, "mask dims must be >= 1");
  if (bits_.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::DimMismatch, "mask bit count " + std::to_string(bits_.size()) + " != " +
                                            std::to_string(height) + "x" + std::to_string(width));
  }
  for (auto b : bits_) {
    if (b > 1) throw Error(ErrorKind::InvalidArgument, "mask entries must be 0 or 1");
  }
}

std::size_t BinaryMask::area() const noexcept {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

std::vector<double> l2_normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm < 1e-12) throw Error(ErrorKind::ZeroVector, "cannot normalize a vector with norm < 1e-12");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

FeatureSet masked_select(const FeatureMap& features, const BinaryMask& mask, Polarity polarity) {
  if (mask.height() != features.height() || mask.width() != features.width()) {
    throw Error(ErrorKind::DimMismatch,
                "mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                    " vs feature grid " + std::to_string(features.height()) + "x" +
                    std::to_string(features.width()));
  }
  const std::uint8_t wanted = polarity == Polarity::Foreground ? 1 : 0;
  const auto bits = mask.bits();
  std::size_t count = 0;
  for (auto b : bits) count += (b == wanted);
  if (count == 0) {
    throw Error(ErrorKind::EmptySelection, polarity == Polarity::Foreground ? "mask has no foreground cells"
                                                                            : "mask has no background cells");
  }

  FeatureSet out;
  out.vectors = Matrix(count, features.dim());
  out.origins.reserve(count);
  std::size_t r = 0;
  for (int i = 0; i < features.height(); ++i) {
    for (int j = 0; j < features.width(); ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * features.width() + j;
      if (bits[idx] != wanted) continue;
      const auto src = features.cell(idx);
      auto dst = out.vectors.row(r++);
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k];
      out.origins.push_back({i, j});
    }
  }
  return out;
}

PixelPoint grid_to_pixel(GridPoint p, const FeatureMap& features) {
  if (p.row < 0 || p.row >= features.height() || p.col < 0 || p.col >= features.width()) {
    throw Error(ErrorKind::OutOfBounds,
                "grid point (" + std::to_string(p.row) + "," + std::to_string(p.col) + ") outside " +
                    std::to_string(features.height()) + "x" + std::to_string(features.width()));
  }
  const double sx = static_cast<double>(features.image_width()) / features.width();
  const double sy = static_cast<double>(features.image_height()) / features.height();
  return {static_cast<int>(std::floor((p.col + 0.5) * sx)), static_cast<int>(std::floor((p.row + 0.5) * sy))};
}

namespace {

int nearest_axis_cell(int pixel, int cells, int pixels) {
  const int guess = static_cast<int>(std::floor(static_cast<double>(pixel) * cells / pixels));
  const double scale = static_cast<double>(pixels) / cells;
  for (int c : {guess, guess + 1, guess - 1}) {
    if (c < 0 || c >= cells) continue;
    if (static_cast<int>(std::floor((c + 0.5) * scale)) == pixel) return c;
  }
  return guess < 0 ? 0 : (guess >= cells ? cells - 1 : guess);
}

}  // namespace

GridPoint pixel_to_grid(PixelPoint p, const FeatureMap& features) {
  if (p.x < 0 || p.x >= features.image_width() || p.y < 0 || p.y >= features.image_height()) {
    throw Error(ErrorKind::OutOfBounds,
                "pixel (" + std::to_string(p.x) + "," + std::to_string(p.y) + ") outside image " +
                    std::to_string(features.image_width()) + "x" + std::to_string(features.image_height()));
  }
  return {nearest_axis_cell(p.y, features.height(), features.image_height()),
          nearest_axis_cell(p.x, features.width(), features.image_width())};
}

}  // namespace partprompt
