#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfsgd/config.hpp"

namespace rfsgd {

/// One (m, schedule, repetition) cell. Missing values are NaN.
struct SweepRow {
  double ratio = NAN;  // m / n, m counting cos/sin pairs once
  Index m = 0;
  Index n = 0;
  Index d = 0;
  double zeta = NAN;
  double gamma0 = NAN;
  Seed seed = 0;
  double test_mse_sgd = NAN;
  double test_mse_minnorm = NAN;
  double train_mse_minnorm = NAN;
  double B1 = NAN, B2 = NAN, B3 = NAN;
  double V1 = NAN, V2 = NAN, V3 = NAN;
  double bias = NAN;
  double variance = NAN;
  double excess = NAN;
  bool stability_warning = false;
};

/// CSV columns in row order.
const std::vector<std::string>& sweep_columns();
/// Columns that can be plotted.
bool is_metric(const std::string& name);
double metric_value(const SweepRow& row, const std::string& name);

struct SweepMeta {
  std::string data_source;
  Index test_count = 0;
  Index failed_cells = 0;
  std::vector<std::string> failures;  // "m=.. schedule=.. rep=..: message"
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepMeta meta;
};

struct SweepData {
  Dataset<double> train;
  Matrix<double> X_test;
  Vector<double> y_test;  // clean targets for synthetic data, labels for digits
  std::string source;
};

/// Training and test data of one repetition.
SweepData load_sweep_data(const SweepSpec& spec, Index repetition);

/// Seed of the cell (m, schedule index, repetition).
Seed cell_seed(Seed base, Index m, std::size_t schedule, Index repetition);

/// Runs every cell; rows come back ordered by (m, schedule, repetition)
/// whatever the parallelism. A failing cell keeps its row with the affected
/// fields missing.
SweepResult run_sweep(const SweepSpec& spec, int parallelism = 1);

/// Recomputes a single cell in isolation.
SweepRow run_cell(const SweepSpec& spec, Index m, std::size_t schedule, Index repetition);

inline constexpr const char* kCsvVersionLine = "# rfsgd-sweep-csv v1";

void write_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path, const SweepMeta* meta = nullptr);
std::string format_csv(const std::vector<SweepRow>& rows, const SweepMeta* meta = nullptr);
std::vector<SweepRow> read_csv(const std::filesystem::path& path);
std::vector<SweepRow> parse_csv(const std::string& text);

struct SeriesPoint {
  double ratio = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single value
  Index count = 0;
};

struct Series {
  std::string label;
  std::vector<SeriesPoint> points;
};

/// Mean and sample std of `metric` per ratio, one series per schedule.
/// Missing values are skipped and do not count.
std::vector<Series> aggregate(const std::vector<SweepRow>& rows, const std::string& metric);

std::string render_svg_string(const std::vector<SweepRow>& rows, const std::vector<std::string>& metrics,
                              bool log_y = false);
void render_svg(const std::vector<SweepRow>& rows, const std::vector<std::string>& metrics,
                const std::filesystem::path& path, bool log_y = false);

}  // namespace rfsgd
