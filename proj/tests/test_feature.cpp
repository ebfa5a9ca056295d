#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <limits>

#include "partprompt/errors.hpp"
#include "partprompt/feature.hpp"
#include "support.hpp"

using namespace partprompt;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

FeatureMap iota_map(int h, int w, int d) {
  std::vector<float> data(static_cast<std::size_t>(h) * w * d);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i);
  return FeatureMap(h, w, d, std::move(data));
}

}  // namespace

TEST_SUITE("feature") {
  TEST_CASE("feature map validation") {
    CHECK(kind_of([] { FeatureMap(2, 2, 3, std::vector<float>(11)); }) == ErrorKind::DimMismatch);
    CHECK(kind_of([] { FeatureMap(0, 2, 3, {}); }) == ErrorKind::InvalidArgument);
    std::vector<float> nan(12, 0.f);
    nan[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK(kind_of([&] { FeatureMap(2, 2, 3, nan); }) == ErrorKind::InvalidArgument);
    const auto f = iota_map(2, 2, 3);
    CHECK(f.image_height() == 2);
    CHECK(f.image_width() == 2);
    CHECK(f.cell(1, 0)[0] == 6.f);
  }

  TEST_CASE("binary mask rejects non-binary bits") {
    CHECK(kind_of([] { BinaryMask(1, 2, {0, 2}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { BinaryMask(1, 2, {0}); }) == ErrorKind::DimMismatch);
    CHECK(BinaryMask(2, 2, {1, 0, 1, 1}).area() == 3);
  }

  TEST_CASE("l2_normalize") {
    const double a[] = {1, 0};
    CHECK(l2_normalize(a) == std::vector<double>{1, 0});
    const double b[] = {3, 4};
    const auto nb = l2_normalize(b);
    CHECK(nb[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(nb[1] == doctest::Approx(0.8).epsilon(1e-15));
    const double z[] = {0, 0};
    CHECK(kind_of([&] { l2_normalize(z); }) == ErrorKind::ZeroVector);
  }

  TEST_CASE("masked_select") {
    const auto f = iota_map(2, 2, 3);
    const auto all = masked_select(f, BinaryMask(2, 2, {1, 1, 1, 1}), Polarity::Foreground);
    REQUIRE(all.count() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(all.vectors(i, 0) == 3.0 * static_cast<double>(i));
    CHECK(all.origins[2] == GridPoint{1, 0});

    CHECK(kind_of([&] { masked_select(f, BinaryMask(2, 2), Polarity::Foreground); }) == ErrorKind::EmptySelection);

    const BinaryMask diag(2, 2, {1, 0, 0, 1});
    const auto fg = masked_select(f, diag, Polarity::Foreground);
    REQUIRE(fg.count() == 2);
    CHECK(fg.origins[0] == GridPoint{0, 0});
    CHECK(fg.origins[1] == GridPoint{1, 1});
    CHECK(fg.vectors(1, 2) == 11.0);
    const auto bg = masked_select(f, diag, Polarity::Background);
    CHECK(fg.count() + bg.count() == 4);
    CHECK(bg.origins[0] == GridPoint{0, 1});

    CHECK(kind_of([&] { masked_select(f, BinaryMask(3, 2), Polarity::Foreground); }) == ErrorKind::DimMismatch);
  }

  TEST_CASE("grid_to_pixel uses patch centers") {
    const auto big = FeatureMap(64, 64, 1, std::vector<float>(64 * 64, 1.f), 1024, 1024);
    CHECK(grid_to_pixel({0, 0}, big) == PixelPoint{8, 8});
    CHECK(grid_to_pixel({63, 63}, big) == PixelPoint{1016, 1016});
    const auto small = FeatureMap(2, 2, 1, std::vector<float>(4, 1.f), 4, 4);
    CHECK(grid_to_pixel({0, 1}, small) == PixelPoint{3, 1});
    CHECK(kind_of([&] { grid_to_pixel({2, 0}, small); }) == ErrorKind::OutOfBounds);
  }

  TEST_CASE("grid_to_pixel is injective and inverted by pixel_to_grid") {
    for (auto [h, w, ih, iw] : {std::array{5, 7, 5, 7}, std::array{5, 7, 37, 50}, std::array{3, 3, 1000, 17}}) {
      const FeatureMap f(h, w, 1, std::vector<float>(static_cast<std::size_t>(h) * w, 1.f), ih, iw);
      std::set<std::pair<int, int>> seen;
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          const auto p = grid_to_pixel({r, c}, f);
          CHECK(p.x < iw);
          CHECK(p.y < ih);
          CHECK(seen.insert({p.x, p.y}).second);
          CHECK(pixel_to_grid(p, f) == GridPoint{r, c});
        }
      }
    }
  }
}
