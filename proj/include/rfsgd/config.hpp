#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rfsgd/data.hpp"
#include "rfsgd/decomposition.hpp"
#include "rfsgd/features.hpp"
#include "rfsgd/optimizer.hpp"

namespace rfsgd {

struct DataSpec {
  enum class Source { Synthetic, Idx };
  enum class Target { Linear, Laplace };
  // Auto: class labels for real files, planted for the synthesized fixture.
  enum class IdxTarget { Auto, Labels, Planted };

  Source source = Source::Synthetic;

  // synthetic
  Index n = 200;
  Index d = 50;
  Index n_test = 1000;
  CovSpec covariance;
  Target target = Target::Linear;
  double target_norm = 1.0;
  double bandwidth = 0.0;  // 0 means d
  double noise_sd = 0.1;

  // idx: explicit paths, else a directory holding the MNIST training files,
  // else the RFSGD_MNIST_DIR environment variable, else a synthesized fixture.
  std::string images;
  std::string labels;
  std::string mnist_dir;
  int digit_a = 3;
  int digit_b = 7;
  Index n_per_class = 300;
  double pixel_scale = 1.0 / 255.0;
  Index fixture_per_digit = 1000;
  // Planted: f* = <phi(x), theta*> for a cos/sin map with m = training size,
  // scaled to unit RMS on the training images.
  IdxTarget idx_target = IdxTarget::Auto;
};

struct DecompositionSpec {
  bool enabled = false;
  MonteCarloCounts mc{1, 20, 1};
  TargetKind target = TargetKind::MinNormFit;
  double target_norm = 1.0;
  bool antithetic = true;
};

struct SpectraSpec {
  std::vector<Index> m_grid{32, 64, 128, 256};
  int draws = 30;
  double samples_per_feature = 4.0;  // n = samples_per_feature * m, d = m
};

struct OutputSpec {
  std::string dir = ".";
  std::string csv = "sweep.csv";
  std::string svg = "sweep.svg";
  std::vector<std::string> metrics{"test_mse_sgd", "test_mse_minnorm"};
  bool log_y = false;
};

struct SweepSpec {
  DataSpec data;
  Activation activation = Activation::CosSin;
  std::vector<Index> m_grid;
  std::vector<StepSchedule> schedules{StepSchedule(1.0, 0.5)};
  Index epochs = 1;
  InitScheme init = InitScheme::zero();
  Index repetitions = 1;
  DecompositionSpec decomposition;
  SpectraSpec spectra;
  OutputSpec outputs;
  Seed seed_base = 0;
  int parallelism = 1;

  /// Number of training samples the sweep will see.
  Index train_size() const {
    return data.source == DataSpec::Source::Idx ? 2 * data.n_per_class : data.n;
  }
};

/// Schema errors are ConfigError with the offending key and line.
SweepSpec parse_config_string(const std::string& text);
SweepSpec parse_config(const std::filesystem::path& path);

}  // namespace rfsgd
