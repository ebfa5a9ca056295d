#include <doctest.h>

#include "partprompt/errors.hpp"
#include "partprompt/io.hpp"
#include "support.hpp"

using namespace partprompt;

namespace {

std::string error_text(auto&& f, ErrorKind expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.kind() == expected);
    return e.what();
  }
  FAIL("expected an Error");
  return {};
}

// Minimal NPY v1.0 writer for hand-made headers.
std::string npy(const std::string& dict, std::size_t payload_bytes) {
  std::string header = dict;
  while ((10 + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::string out = "\x93NUMPY";
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(header.size() & 0xff);
  out += static_cast<char>(header.size() >> 8);
  return out + header + std::string(payload_bytes, '\0');
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("feature map round trip is bit exact") {
    support::TempDir dir;
    const FeatureMap f(2, 2, 3, {0.f, -1.5f, 3.25f, 1e-30f, 7.f, 8.f, -0.f, 1e30f, 2.f, 3.f, 4.f, 5.f});
    io::write_feature_map(f, dir / "f.npy");
    const auto bytes = io::read_file(dir / "f.npy");
    CHECK(bytes.size() % 16 == 0);
    CHECK(bytes.substr(0, 6) == "\x93NUMPY");
    CHECK(bytes.find("'descr': '<f4'") != std::string::npos);
    CHECK(bytes.find("(2, 2, 3)") != std::string::npos);
    const auto back = io::read_feature_map(dir / "f.npy");
    CHECK(back == f);
    CHECK(io::encode_feature_map(back) == bytes);
  }

  TEST_CASE("feature map format errors") {
    error_text([] { io::decode_feature_map("\x93NUMPX\x01\x00"); }, ErrorKind::FormatError);
    const auto two_d = npy("{'descr': '<f4', 'fortran_order': False, 'shape': (3, 4), }", 48);
    const auto msg = error_text([&] { io::decode_feature_map(two_d); }, ErrorKind::FormatError);
    CHECK(msg.find("(3, 4)") != std::string::npos);
    error_text([] { io::decode_feature_map(npy("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1), }", 8)); },
               ErrorKind::FormatError);
    error_text([] { io::decode_feature_map(npy("{'descr': '<f4', 'fortran_order': True, 'shape': (1, 1, 1), }", 4)); },
               ErrorKind::FormatError);
    error_text([] { io::decode_feature_map(npy("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 2, 2), }", 12)); },
               ErrorKind::FormatError);
    const auto ok = io::decode_feature_map(npy("{'descr': '<f4', 'fortran_order': False, 'shape': (1, 2, 2), }", 16), 10, 20);
    CHECK(ok.image_height() == 10);
    CHECK(ok.image_width() == 20);
    error_text([] { io::read_feature_map("/nonexistent/f.npy"); }, ErrorKind::IoError);
  }

  TEST_CASE("PGM masks") {
    const auto m = io::decode_mask(std::string("P5\n2 2\n255\n") + std::string("\x00\xff\xff\x00", 4));
    CHECK(m == BinaryMask(2, 2, {0, 1, 1, 0}));
    const auto seven = io::decode_mask(std::string("P5 # comment\n3 1 7\n") + std::string("\x07\x00\x01", 3));
    CHECK(seven == BinaryMask(1, 3, {1, 0, 1}));
    error_text([] { io::decode_mask(std::string("P5\n2 2\n255\n") + std::string("\x00\xff", 2)); }, ErrorKind::FormatError);
    error_text([] { io::decode_mask("P2\n1 1\n255\n0"); }, ErrorKind::FormatError);
    error_text([] { io::decode_mask("P5\n1 1\n0\n\x00"); }, ErrorKind::FormatError);

    const BinaryMask mask(2, 3, {1, 0, 1, 0, 1, 1});
    const auto pgm = io::encode_mask_pgm(mask);
    CHECK(pgm.substr(0, 2) == "P5");
    CHECK(io::decode_mask(pgm) == mask);
    CHECK(io::decode_mask(io::encode_mask_npy(mask)) == mask);
  }

  TEST_CASE("write_mask picks the format from the extension") {
    support::TempDir dir;
    const BinaryMask mask(3, 2, {1, 1, 0, 0, 1, 0});
    io::write_mask(mask, dir / "m.npy");
    io::write_mask(mask, dir / "m.pgm");
    CHECK(io::read_file(dir / "m.npy").substr(0, 6) == "\x93NUMPY");
    CHECK(io::read_file(dir / "m.pgm").substr(0, 2) == "P5");
    CHECK(io::read_mask(dir / "m.npy") == mask);
    CHECK(io::read_mask(dir / "m.pgm") == mask);
  }
}
