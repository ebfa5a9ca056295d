#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "partprompt/feature.hpp"

namespace partprompt::io {

// NPY v1.0: little-endian float32 features of shape (H, W, D); masks as
// uint8 of shape (H, W). PGM: binary P5, maxval <= 255, any nonzero byte is
// foreground; masks are written as 0/255.

std::string encode_feature_map(const FeatureMap& features);
FeatureMap decode_feature_map(std::string_view bytes, int image_height = 0, int image_width = 0);

FeatureMap read_feature_map(const std::filesystem::path& path, int image_height = 0, int image_width = 0);
void write_feature_map(const FeatureMap& features, const std::filesystem::path& path);

std::string encode_mask_pgm(const BinaryMask& mask);
std::string encode_mask_npy(const BinaryMask& mask);
/// Sniffs the NPY magic; anything else is parsed as PGM.
BinaryMask decode_mask(std::string_view bytes);

BinaryMask read_mask(const std::filesystem::path& path);
/// `.npy` extension writes NPY uint8, anything else PGM P5.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Raw 8-bit grayscale P5 (used for part label maps).
void write_pgm(const std::filesystem::path& path, int height, int width, const std::vector<std::uint8_t>& pixels);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace partprompt::io
