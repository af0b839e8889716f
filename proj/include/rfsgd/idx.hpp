#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rfsgd {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// n images of rows x cols unsigned bytes, stored image-major then row-major.
struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t image_size() const { return std::size_t(rows) * cols; }
  std::uint8_t at(std::size_t image, std::size_t r, std::size_t c) const {
    return pixels[image * image_size() + r * cols + c];
  }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * image_size(), image_size()};
  }
};

// Parsers take the raw file contents; errors are ParseError with the failing offset.
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Throws ParseError when the image and label counts disagree.
void check_idx_pair(const IdxImages& images, std::span<const std::uint8_t> labels);

}  // namespace rfsgd
