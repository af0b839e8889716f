#include "rfsgd/idx.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "rfsgd/error.hpp"

namespace rfsgd {
namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size())
    throw ParseError(std::string("truncated IDX header while reading ") + what, offset);
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open IDX file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write IDX file '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error("short write to '" + path.string() + "'");
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxImageMagic)
    throw ParseError("bad IDX image magic " + hex32(magic) + ", expected " + hex32(kIdxImageMagic), 0);
  IdxImages out;
  out.count = read_be32(bytes, 4, "image count");
  out.rows = read_be32(bytes, 8, "row count");
  out.cols = read_be32(bytes, 12, "column count");
  const std::size_t payload = std::size_t(out.count) * out.rows * out.cols;
  if (bytes.size() - 16 < payload)
    throw ParseError("truncated IDX image payload: need " + std::to_string(payload) + " bytes, have " +
                         std::to_string(bytes.size() - 16),
                     bytes.size());
  out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + std::ptrdiff_t(payload));
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxLabelMagic)
    throw ParseError("bad IDX label magic " + hex32(magic) + ", expected " + hex32(kIdxLabelMagic), 0);
  const std::uint32_t count = read_be32(bytes, 4, "label count");
  if (bytes.size() - 8 < count)
    throw ParseError("truncated IDX label payload: need " + std::to_string(count) + " bytes, have " +
                         std::to_string(bytes.size() - 8),
                     bytes.size());
  return {bytes.begin() + 8, bytes.begin() + 8 + count};
}

IdxImages load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file(path)); }

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(read_file(path));
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  if (images.pixels.size() != std::size_t(images.count) * images.rows * images.cols)
    throw InvalidArgument("IdxImages pixel buffer does not match count x rows x cols");
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, std::uint32_t(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  write_file(path, encode_idx_images(images));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  write_file(path, encode_idx_labels(labels));
}

void check_idx_pair(const IdxImages& images, std::span<const std::uint8_t> labels) {
  if (images.count != labels.size())
    throw ParseError("IDX count mismatch: " + std::to_string(images.count) + " images vs " +
                         std::to_string(labels.size()) + " labels",
                     4);
}

}  // namespace rfsgd
