#include "partprompt/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "partprompt/errors.hpp"

namespace partprompt::io {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

namespace {

constexpr std::string_view kNpyMagic = "\x93NUMPY";

std::string npy_header(std::string_view descr, const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    dict += (shape.size() == 1 || i + 1 < shape.size()) ? "," : "";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // magic(6) + version(2) + length(2) + dict + padding + '\n' is a multiple of 64.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';

  std::string out(kNpyMagic);
  out += '\x01';
  out += '\x00';
  const auto len = static_cast<std::uint16_t>(dict.size());
  out += static_cast<char>(len & 0xFF);
  out += static_cast<char>(len >> 8);
  out += dict;
  return out;
}

struct NpyHeader {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t data_offset = 0;
};

std::string_view dict_value(std::string_view dict, std::string_view key) {
  const std::string quoted = "'" + std::string(key) + "'";
  auto pos = dict.find(quoted);
  if (pos == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY header lacks '" + std::string(key) + "'");
  pos = dict.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY header malformed near " + quoted);
  ++pos;
  while (pos < dict.size() && std::isspace(static_cast<unsigned char>(dict[pos]))) ++pos;
  return dict.substr(pos);
}

NpyHeader parse_npy_header(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 6) != kNpyMagic) throw Error(ErrorKind::FormatError, "bad NPY magic");
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    offset = 10;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw Error(ErrorKind::FormatError, "truncated NPY header");
    for (int i = 0; i < 4; ++i) header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    offset = 12;
  } else {
    throw Error(ErrorKind::FormatError, "unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len) throw Error(ErrorKind::FormatError, "truncated NPY header");
  const std::string_view dict = bytes.substr(offset, header_len);

  NpyHeader h;
  h.data_offset = offset + header_len;

  auto descr = dict_value(dict, "descr");
  if (descr.empty() || (descr[0] != '\'' && descr[0] != '"')) throw Error(ErrorKind::FormatError, "NPY descr not a string");
  const auto close = descr.find(descr[0], 1);
  if (close == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY descr unterminated");
  h.descr = std::string(descr.substr(1, close - 1));

  auto fortran = dict_value(dict, "fortran_order");
  if (fortran.starts_with("True")) {
    h.fortran_order = true;
  } else if (!fortran.starts_with("False")) {
    throw Error(ErrorKind::FormatError, "NPY fortran_order malformed");
  }

  auto shape = dict_value(dict, "shape");
  if (shape.empty() || shape[0] != '(') throw Error(ErrorKind::FormatError, "NPY shape malformed");
  const auto end = shape.find(')');
  if (end == std::string_view::npos) throw Error(ErrorKind::FormatError, "NPY shape unterminated");
  std::string inner(shape.substr(1, end - 1));
  for (char& c : inner) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(inner);
  std::string tok;
  while (in >> tok) {
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw Error(ErrorKind::FormatError, "NPY shape entry '" + tok + "' is not an integer");
    }
    h.shape.push_back(std::stoull(tok));
  }
  return h;
}

std::string shape_text(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

int checked_dim(std::size_t v) {
  if (v == 0 || v > static_cast<std::size_t>(1) << 30) {
    throw Error(ErrorKind::FormatError, "dimension " + std::to_string(v) + " out of range");
  }
  return static_cast<int>(v);
}

BinaryMask decode_mask_npy(std::string_view bytes) {
  const auto h = parse_npy_header(bytes);
  if (h.descr != "|u1" && h.descr != "<u1" && h.descr != "|b1" && h.descr != "|i1") {
    throw Error(ErrorKind::FormatError, "mask NPY dtype must be 8-bit, got '" + h.descr + "'");
  }
  if (h.fortran_order) throw Error(ErrorKind::FormatError, "fortran-order NPY is not supported");
  if (h.shape.size() != 2) throw Error(ErrorKind::FormatError, "mask NPY must be 2-D, got shape " + shape_text(h.shape));
  const int height = checked_dim(h.shape[0]);
  const int width = checked_dim(h.shape[1]);
  const std::size_t count = static_cast<std::size_t>(height) * width;
  if (bytes.size() < h.data_offset + count) throw Error(ErrorKind::FormatError, "truncated mask NPY payload");
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = bytes[h.data_offset + i] != 0 ? 1 : 0;
  return BinaryMask(height, width, std::move(bits));
}

// Reads the next header token of a PGM, skipping whitespace and '#' comments.
std::string pgm_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) && bytes[pos] != '#') ++pos;
  if (start == pos) throw Error(ErrorKind::FormatError, "truncated PGM header");
  return std::string(bytes.substr(start, pos - start));
}

int pgm_int(std::string_view bytes, std::size_t& pos, const char* what) {
  const auto tok = pgm_token(bytes, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      tok.size() > 9) {
    throw Error(ErrorKind::FormatError, std::string("PGM ") + what + " '" + tok + "' is not a valid integer");
  }
  return std::stoi(tok);
}

BinaryMask decode_mask_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5") throw Error(ErrorKind::FormatError, "not a binary PGM (expected P5)");
  const int width = pgm_int(bytes, pos, "width");
  const int height = pgm_int(bytes, pos, "height");
  const int maxval = pgm_int(bytes, pos, "maxval");
  if (width < 1 || height < 1) throw Error(ErrorKind::FormatError, "PGM dims must be >= 1");
  if (maxval < 1 || maxval > 255) throw Error(ErrorKind::FormatError, "PGM maxval must be in [1, 255]");
  if (pos >= bytes.size()) throw Error(ErrorKind::FormatError, "truncated PGM payload");
  ++pos;  // single whitespace after maxval
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < count) {
    throw Error(ErrorKind::FormatError, "truncated PGM payload: " + std::to_string(bytes.size() - pos) + " of " +
                                            std::to_string(count) + " bytes");
  }
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = bytes[pos + i] != 0 ? 1 : 0;
  return BinaryMask(height, width, std::move(bits));
}

}  // namespace

std::string encode_feature_map(const FeatureMap& f) {
  std::string out = npy_header("<f4", {static_cast<std::size_t>(f.height()), static_cast<std::size_t>(f.width()),
                                       static_cast<std::size_t>(f.dim())});
  const auto data = f.data();
  const std::size_t offset = out.size();
  out.resize(offset + data.size() * sizeof(float));
  std::memcpy(out.data() + offset, data.data(), data.size() * sizeof(float));
  return out;
}

FeatureMap decode_feature_map(std::string_view bytes, int image_height, int image_width) {
  const auto h = parse_npy_header(bytes);
  if (h.descr != "<f4") throw Error(ErrorKind::FormatError, "feature NPY dtype must be '<f4', got '" + h.descr + "'");
  if (h.fortran_order) throw Error(ErrorKind::FormatError, "fortran-order NPY is not supported");
  if (h.shape.size() != 3) {
    throw Error(ErrorKind::FormatError, "feature NPY must have shape (H, W, D), got " + shape_text(h.shape));
  }
  const int height = checked_dim(h.shape[0]);
  const int width = checked_dim(h.shape[1]);
  const int dim = checked_dim(h.shape[2]);
  const std::size_t count = static_cast<std::size_t>(height) * width * dim;
  if (bytes.size() - h.data_offset < count * sizeof(float)) {
    throw Error(ErrorKind::FormatError, "truncated feature NPY payload");
  }
  std::vector<float> data(count);
  std::memcpy(data.data(), bytes.data() + h.data_offset, count * sizeof(float));
  try {
    return FeatureMap(height, width, dim, std::move(data), image_height, image_width);
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.what());
  }
}

FeatureMap read_feature_map(const std::filesystem::path& path, int image_height, int image_width) {
  const auto bytes = read_file(path);
  try {
    return decode_feature_map(bytes, image_height, image_width);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_feature_map(const FeatureMap& features, const std::filesystem::path& path) {
  write_file(path, encode_feature_map(features));
}

std::string encode_mask_pgm(const BinaryMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  for (auto b : mask.bits()) out += static_cast<char>(b ? 255 : 0);
  return out;
}

std::string encode_mask_npy(const BinaryMask& mask) {
  std::string out = npy_header("|u1", {static_cast<std::size_t>(mask.height()), static_cast<std::size_t>(mask.width())});
  for (auto b : mask.bits()) out += static_cast<char>(b);
  return out;
}

BinaryMask decode_mask(std::string_view bytes) {
  if (bytes.starts_with(kNpyMagic)) return decode_mask_npy(bytes);
  return decode_mask_pgm(bytes);
}

BinaryMask read_mask(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_mask(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  write_file(path, path.extension() == ".npy" ? encode_mask_npy(mask) : encode_mask_pgm(mask));
}

void write_pgm(const std::filesystem::path& path, int height, int width, const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorKind::DimMismatch, "PGM pixel count mismatch");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  write_file(path, out);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoError, "read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path.string() + "'");
}

}  // namespace partprompt::io
