#include <doctest.h>

#include <filesystem>

#include "rfsgd/digits.hpp"
#include "rfsgd/idx.hpp"

using namespace rfsgd;

namespace {

IdxImages tiny() {
  IdxImages im;
  im.count = 3, im.rows = 2, im.cols = 2;
  im.pixels = {0, 1, 2, 3, 10, 20, 30, 40, 255, 254, 253, 252};
  return im;
}

}  // namespace

TEST_CASE("image and label round trip") {
  const IdxImages im = tiny();
  const std::vector<std::uint8_t> bytes = encode_idx_images(im);
  CHECK(bytes.size() == 16 + 12);
  CHECK(bytes[2] == 0x08);
  CHECK(bytes[3] == 0x03);
  const IdxImages back = parse_idx_images(bytes);
  CHECK(back.count == 3);
  CHECK(back.rows == 2);
  CHECK(back.cols == 2);
  CHECK(back.pixels == im.pixels);
  CHECK(back.at(1, 1, 0) == 30);

  const std::vector<std::uint8_t> labels{3, 7, 3};
  CHECK(parse_idx_labels(encode_idx_labels(labels)) == labels);
}

TEST_CASE("malformed files report the byte offset") {
  std::vector<std::uint8_t> bytes = encode_idx_images(tiny());
  bytes[3] = 0x01;
  try {
    parse_idx_images(bytes);
    FAIL("accepted a bad magic");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 0);
  }
  bytes = encode_idx_images(tiny());
  bytes.resize(10);
  try {
    parse_idx_images(bytes);
    FAIL("accepted a truncated header");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 8);
  }
  bytes = encode_idx_images(tiny());
  bytes.pop_back();
  CHECK_THROWS_AS(parse_idx_images(bytes), ParseError);
  std::vector<std::uint8_t> lab = encode_idx_labels(std::vector<std::uint8_t>{1, 2});
  lab.pop_back();
  CHECK_THROWS_AS(parse_idx_labels(lab), ParseError);
}

TEST_CASE("image and label counts must agree") {
  try {
    check_idx_pair(tiny(), std::vector<std::uint8_t>{1, 2});
    FAIL("accepted mismatched counts");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "rfsgd_idx_test";
  std::filesystem::create_directories(dir);
  write_idx_images(dir / "img", tiny());
  write_idx_labels(dir / "lab", std::vector<std::uint8_t>{0, 1, 2});
  CHECK(load_idx_images(dir / "img").pixels == tiny().pixels);
  CHECK(load_idx_labels(dir / "lab").size() == 3);
  CHECK_THROWS_AS(load_idx_images(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("binary digit split") {
  const DigitImages di = synthesize_digits(4, 50, {3, 7});
  CHECK(di.images.rows == 28);
  CHECK(di.images.count == 100);
  BinaryDigitOptions opts;
  opts.n_per_class = 20;
  opts.noise_sd = 0.0;
  opts.seed = 9;
  const BinaryDigitSplit s = make_binary_digit_split(di.images, di.labels, opts);
  CHECK(s.train.size() == 40);
  CHECK(s.train.dim() == 784);
  CHECK(s.X_test.rows() == 60);
  CHECK((s.train.y.array() == 1.0).count() == 20);
  CHECK((s.train.y.array() == -1.0).count() == 20);
  CHECK(s.train.X.maxCoeff() <= 1.0);
  CHECK(s.train.X.minCoeff() >= 0.0);
  REQUIRE(s.train.fstar);
  CHECK(*s.train.fstar == s.train.y);
  opts.n_per_class = 51;
  CHECK_THROWS(make_binary_digit_split(di.images, di.labels, opts));
}
