#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfsgd/sweep.hpp"

using namespace rfsgd;

namespace {

SweepSpec small_spec() {
  SweepSpec s = parse_config_string(R"(
seed: 5
activation: cossin
m_grid: [4, 10, 20]
schedules: [{gamma0: 1.0, zeta: 0.5}, {gamma0: 0.5, zeta: 0}]
repetitions: 2
data: {n: 20, d: 3, n_test: 50, noise_sd: 0.2}
decomposition: {enabled: true, n_W: 1, n_noise: 4, target: min_norm}
)");
  return s;
}

}  // namespace

TEST_CASE("csv header is pinned") {
  const std::string csv = format_csv({});
  CHECK(csv ==
        "# rfsgd-sweep-csv v1\n"
        "ratio,m,n,d,zeta,gamma0,seed,test_mse_sgd,test_mse_minnorm,train_mse_minnorm,B1,B2,B3,V1,V2,V3,bias,"
        "variance,excess,stability_warning\n");
  CHECK(parse_csv(csv).empty());
}

TEST_CASE("csv round trip keeps every digit") {
  SweepRow r;
  r.ratio = 1.0 / 3.0;
  r.m = 7, r.n = 21, r.d = 4;
  r.zeta = 0.5, r.gamma0 = 0.1;
  r.seed = 18446744073709551557ULL;
  r.test_mse_sgd = 3.141592653589793e-7;
  r.test_mse_minnorm = 2.718281828459045e12;
  r.train_mse_minnorm = 0.0;
  r.B1 = -1e-300;
  r.stability_warning = true;
  SweepMeta meta;
  meta.data_source = "synthetic-linear";
  meta.test_count = 50;
  const std::vector<SweepRow> back = parse_csv(format_csv({r, r}, &meta));
  REQUIRE(back.size() == 2);
  CHECK(back[0].ratio == r.ratio);
  CHECK(back[0].seed == r.seed);
  CHECK(back[0].test_mse_sgd == r.test_mse_sgd);
  CHECK(back[0].test_mse_minnorm == r.test_mse_minnorm);
  CHECK(back[0].B1 == r.B1);
  CHECK(std::isnan(back[0].V3));
  CHECK(back[0].stability_warning);
  CHECK_THROWS(parse_csv("ratio,m\n1,2\n"));
}

TEST_CASE("aggregation uses the sample standard deviation") {
  std::vector<SweepRow> rows(3);
  for (int i = 0; i < 3; ++i) rows[i].ratio = 0.5, rows[i].zeta = 0, rows[i].gamma0 = 1, rows[i].test_mse_sgd = i + 1;
  SweepRow missing = rows[0];
  missing.test_mse_sgd = NAN;
  rows.push_back(missing);
  const auto series = aggregate(rows, "test_mse_sgd");
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].points.size() == 1);
  CHECK(series[0].points[0].mean == 2.0);
  CHECK(series[0].points[0].sd == doctest::Approx(1.0));
  CHECK(series[0].points[0].count == 3);
  CHECK_THROWS_AS(aggregate(rows, "accuracy"), InvalidArgument);
}

TEST_CASE("svg is self-contained") {
  std::vector<SweepRow> rows(3);
  for (int i = 0; i < 3; ++i) rows[i].ratio = 0.5 * (i + 1), rows[i].zeta = 0, rows[i].gamma0 = 1, rows[i].bias = i + 1;
  const std::string svg = render_svg_string(rows, {"bias"}, true);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("href") == std::string::npos);
  CHECK(svg.find("<title>ratio=1 mean=2 sd=0 count=1</title>") != std::string::npos);
  CHECK_THROWS_AS(render_svg_string({}, {"bias"}), InvalidArgument);
  CHECK_THROWS_AS(render_svg_string(rows, {"test_mse_sgd"}), InvalidArgument);
}

TEST_CASE("single cell sweep") {
  SweepSpec s = small_spec();
  s.m_grid = {6};
  s.schedules.resize(1);
  s.repetitions = 1;
  const SweepResult r = run_sweep(s);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].m == 6);
  CHECK(r.rows[0].ratio == 6.0 / 20.0);
  CHECK(r.meta.test_count == 50);
  CHECK(r.meta.failed_cells == 0);
}

TEST_CASE("sweep is deterministic and cells are reproducible alone") {
  const SweepSpec s = small_spec();
  const SweepResult a = run_sweep(s, 1), b = run_sweep(s, 3);
  REQUIRE(a.rows.size() == 12);
  CHECK(format_csv(a.rows, &a.meta) == format_csv(b.rows, &b.meta));
  CHECK(a.rows[0].m == 4);
  CHECK(a.rows[1].m == 4);
  CHECK(a.rows[2].gamma0 == 0.5);
  CHECK(a.rows[11].m == 20);
  for (const SweepRow& row : a.rows) {
    CHECK(row.test_mse_sgd >= 0.0);
    CHECK(std::isfinite(row.variance));
  }
  const SweepRow one = run_cell(s, 10, 1, 1);
  const SweepRow& same = a.rows[7];  // (m index 1, schedule 1, repetition 1)
  CHECK(same.m == 10);
  CHECK(format_csv({one}) == format_csv({same}));
}

TEST_CASE("divergent cells are marked, not fatal") {
  SweepSpec s = small_spec();
  s.schedules = {StepSchedule(400.0, 0.0)};
  s.decomposition.enabled = false;
  s.repetitions = 1;
  const SweepResult r = run_sweep(s);
  CHECK(r.rows.size() == 3);
  CHECK(r.meta.failed_cells == 3);
  for (const SweepRow& row : r.rows) {
    CHECK(std::isnan(row.test_mse_sgd));
    CHECK(row.stability_warning);
    CHECK(std::isfinite(row.test_mse_minnorm));
  }
}

TEST_CASE("csv and svg files") {
  const auto dir = std::filesystem::temp_directory_path() / "rfsgd_sweep_test";
  std::filesystem::create_directories(dir);
  SweepSpec s = small_spec();
  s.repetitions = 1;
  const SweepResult r = run_sweep(s);
  write_csv(r.rows, dir / "out.csv", &r.meta);
  const auto back = read_csv(dir / "out.csv");
  CHECK(format_csv(back) == format_csv(r.rows));
  render_svg(back, {"test_mse_sgd", "variance"}, dir / "out.svg");
  CHECK(std::filesystem::file_size(dir / "out.svg") > 500);
  CHECK_THROWS(write_csv(r.rows, dir / "no" / "such" / "dir.csv"));
  std::filesystem::remove_all(dir);
}
