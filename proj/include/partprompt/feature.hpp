#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace partprompt {

/// Dense row-major matrix of doubles. Used for feature sets, part means, cost
/// matrices and similarity stacks; all distance arithmetic runs in 64-bit.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct GridPoint {
  int row = 0;
  int col = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// H x W grid of D-dimensional feature vectors, stored as 32-bit floats.
/// image_height/image_width describe the source image used for prompt
/// coordinates; they default to the grid size (stride 1).
class FeatureMap {
 public:
  FeatureMap(int height, int width, int dim, std::vector<float> data, int image_height = 0,
             int image_width = 0);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int dim() const noexcept { return dim_; }
  int image_height() const noexcept { return image_height_; }
  int image_width() const noexcept { return image_width_; }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> cell(int row, int col) const;
  std::span<const float> cell(std::size_t index) const;

  /// All cells as a (H*W) x D matrix of doubles, row-major scan order.
  Matrix to_matrix() const;

  FeatureMap with_image_size(int image_height, int image_width) const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int height_;
  int width_;
  int dim_;
  int image_height_;
  int image_width_;
  std::vector<float> data_;
};

class BinaryMask {
 public:
  BinaryMask(int height, int width);
  BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(int row, int col) const { return bits_[static_cast<std::size_t>(row) * width_ + col] != 0; }
  void set(int row, int col, bool value) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t area() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_;
  int width_;
  std::vector<std::uint8_t> bits_;
};

/// Vectors gathered from a feature map, with the grid cell each one came from.
struct FeatureSet {
  Matrix vectors;
  std::vector<GridPoint> origins;

  std::size_t count() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
};

enum class Polarity { Foreground, Background };

std::vector<double> l2_normalize(std::span<const double> v);

FeatureSet masked_select(const FeatureMap& features, const BinaryMask& mask, Polarity polarity);

PixelPoint grid_to_pixel(GridPoint p, const FeatureMap& features);

/// Inverse of grid_to_pixel: the cell whose patch center maps to `p`, or the
/// cell containing `p` when no center maps there exactly.
GridPoint pixel_to_grid(PixelPoint p, const FeatureMap& features);

}  // namespace partprompt
