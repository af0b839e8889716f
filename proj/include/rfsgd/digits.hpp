#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rfsgd/data.hpp"
#include "rfsgd/idx.hpp"
#include "rfsgd/types.hpp"

namespace rfsgd {

struct BinaryDigitOptions {
  int digit_a = 3;  // label -1
  int digit_b = 7;  // label +1
  Index n_per_class = 300;
  Seed seed = 0;
  double noise_sd = 1.0;
  double pixel_scale = 1.0 / 255.0;
};

struct BinaryDigitSplit {
  Dataset<double> train;
  Matrix<double> X_test;  // every remaining image of the two digits
  Vector<double> y_test;
};

/// Random n_per_class images of each digit, labels in {-1, +1}. Synthetic
/// noise eps ~ N(0, noise_sd^2) is drawn and fstar = y - eps is recorded.
Dataset<double> make_binary_digit_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                                          const BinaryDigitOptions& opts);
BinaryDigitSplit make_binary_digit_split(const IdxImages& images, std::span<const std::uint8_t> labels,
                                         const BinaryDigitOptions& opts);

struct DigitImages {
  IdxImages images;
  std::vector<std::uint8_t> labels;
};

/// Renders 28x28 stroke drawings of the requested digits (0-9) with random
/// jitter in position, scale, slant and stroke width, shuffled together.
DigitImages synthesize_digits(Seed seed, Index per_digit, const std::vector<int>& digits);

/// Loads `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` from dir,
/// if both are present.
std::optional<DigitImages> load_mnist_dir(const std::filesystem::path& dir);

}  // namespace rfsgd
