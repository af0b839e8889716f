// rfsgd: sweep / spectra / decompose / plot driver.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfsgd/config.hpp"
#include "rfsgd/decomposition.hpp"
#include "rfsgd/digits.hpp"
#include "rfsgd/spectral.hpp"
#include "rfsgd/sweep.hpp"

namespace fs = std::filesystem;
using namespace rfsgd;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::string out_dir;
};

// --out-dir beats RFSGD_OUT_DIR, which beats outputs.dir in the config.
fs::path resolve_out_dir(const Globals& g, const SweepSpec& spec) {
  fs::path dir = spec.outputs.dir;
  if (const char* env = std::getenv("RFSGD_OUT_DIR"); env && *env) dir = env;
  if (!g.out_dir.empty()) dir = g.out_dir;
  fs::create_directories(dir);
  return dir;
}

SweepSpec load_spec(const std::string& path, const Globals& g) {
  SweepSpec spec = parse_config(path);
  if (g.seed) spec.seed_base = *g.seed;
  if (g.parallelism) spec.parallelism = *g.parallelism;
  return spec;
}

int cmd_sweep(const std::string& config, const Globals& g) {
  const SweepSpec spec = load_spec(config, g);
  const fs::path dir = resolve_out_dir(g, spec);
  const SweepResult res = run_sweep(spec, spec.parallelism);
  write_csv(res.rows, dir / spec.outputs.csv, &res.meta);
  std::printf("data: %s, n=%lld, test=%lld, %zu rows\n", res.meta.data_source.c_str(),
              static_cast<long long>(spec.train_size()), static_cast<long long>(res.meta.test_count),
              res.rows.size());
  for (const auto& f : res.meta.failures) std::fprintf(stderr, "failed cell %s\n", f.c_str());
  try {
    render_svg(res.rows, spec.outputs.metrics, dir / spec.outputs.svg, spec.outputs.log_y);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "svg skipped: %s\n", e.what());
  }
  std::printf("wrote %s and %s\n", (dir / spec.outputs.csv).c_str(), (dir / spec.outputs.svg).c_str());
  return res.meta.failed_cells == 0 ? 0 : 3;
}

int cmd_spectra(const std::string& config, const Globals& g) {
  const SweepSpec spec = load_spec(config, g);
  const fs::path dir = resolve_out_dir(g, spec);
  const SweepData data = load_sweep_data(spec, 0);
  const Matrix<double>& X = data.train.X;
  std::ofstream csv(dir / "spectra.csv");
  csv << "m,p,a,b,a2,trace,eigenvalues,trace_mean,trace_sd,trace_max_over_mean\n";
  std::printf("expected covariance on %s data (n=%lld, d=%lld)\n", data.source.c_str(),
              static_cast<long long>(X.rows()), static_cast<long long>(X.cols()));
  for (Index m : spec.m_grid) {
    const CovarianceSummary s = expected_cov(spec.activation, X, m);
    std::vector<Seed> seeds;
    for (int k = 0; k < std::max(30, spec.spectra.draws); ++k) seeds.push_back(derive_seed(spec.seed_base, {51, std::uint64_t(m), std::uint64_t(k)}));
    const TraceConcentration tc = trace_concentration<double>(seeds, m, X, spec.activation);
    std::string eig;
    for (const auto& c : s.eigenvalues) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s%.10g(x%lld)", eig.empty() ? "" : " ", c.value,
                    static_cast<long long>(c.multiplicity));
      eig += buf;
    }
    std::printf("m=%-5lld p=%-5lld a=%.6g b=%.6g a2=%.6g trace=%.6g  eig: %s  Tr(Sigma_hat) %.6g +- %.3g\n",
                static_cast<long long>(m), static_cast<long long>(s.dim()), s.a, s.b, s.a2, s.trace, eig.c_str(),
                tc.mean, tc.sd);
    char line[512];
    std::snprintf(line, sizeof line, "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(m), static_cast<long long>(s.dim()), s.a, s.b, s.a2, s.trace, eig.c_str(),
                  tc.mean, tc.sd, tc.max_over_mean);
    csv << line;
  }

  std::ofstream moments(dir / "second_moment.csv");
  moments << "m,d,n,inverse_trace,gap_min_eig,mean_cov_distance,top_eigenvalue\n";
  std::printf("second-moment diagnostic (synthetic isotropic inputs, d = m, n = %g m, %d draws)\n",
              spec.spectra.samples_per_feature, spec.spectra.draws);
  for (Index m : spec.spectra.m_grid) {
    const Index n = Index(spec.spectra.samples_per_feature * double(m));
    const Matrix<double> Xs = gen_inputs<double>(derive_seed(spec.seed_base, {52, std::uint64_t(m)}), n, m, CovSpec::identity());
    const SecondMomentDiagnostic dg =
        second_moment_diagnostic<double>(spec.activation, Xs, m, spec.spectra.draws, derive_seed(spec.seed_base, {53, std::uint64_t(m)}));
    std::printf("m=%-5lld Tr[inv(Sigma_tilde) avg Sigma_hat^2]=%.6g  gap min eig=%.3g  |avg Sigma_hat - Sigma_tilde|=%.3g\n",
                static_cast<long long>(m), dg.inverse_trace, dg.gap_min_eig, dg.mean_cov_distance);
    char line[256];
    std::snprintf(line, sizeof line, "%lld,%lld,%lld,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(m),
                  static_cast<long long>(m), static_cast<long long>(n), dg.inverse_trace, dg.gap_min_eig,
                  dg.mean_cov_distance, dg.top_eigenvalue);
    moments << line;
  }
  std::printf("wrote %s and %s\n", (dir / "spectra.csv").c_str(), (dir / "second_moment.csv").c_str());
  return 0;
}

int cmd_decompose(const std::string& config, const Globals& g) {
  const SweepSpec spec = load_spec(config, g);
  const fs::path dir = resolve_out_dir(g, spec);
  const SweepData data = load_sweep_data(spec, 0);
  DecompositionConfig cfg;
  cfg.activation = spec.activation;
  cfg.m = spec.m_grid.front();
  cfg.schedule = spec.schedules.front();
  cfg.mc = spec.decomposition.mc;
  cfg.target = spec.decomposition.target;
  cfg.target_norm = spec.decomposition.target_norm;
  cfg.antithetic = spec.decomposition.antithetic;
  cfg.seed = spec.seed_base;
  const DecompositionReport r = estimate_terms<double>(data.train, cfg);

  nlohmann::json j;
  j["data"] = data.source;
  j["m"] = cfg.m;
  j["p"] = r.feature_dim;
  j["n"] = data.train.size();
  j["d"] = data.train.dim();
  j["gamma0"] = cfg.schedule.gamma0;
  j["zeta"] = cfg.schedule.zeta;
  j["counts"] = {{"n_W", r.counts.n_W}, {"n_noise", r.counts.n_noise}, {"n_order", r.counts.n_order}};
  std::printf("m=%lld p=%lld n=%lld gamma0=%g zeta=%g  draws W=%lld noise=%lld order=%lld\n",
              static_cast<long long>(cfg.m), static_cast<long long>(r.feature_dim),
              static_cast<long long>(data.train.size()), cfg.schedule.gamma0, cfg.schedule.zeta,
              static_cast<long long>(r.counts.n_W), static_cast<long long>(r.counts.n_noise),
              static_cast<long long>(r.counts.n_order));
  const std::pair<const char*, Estimate> fields[] = {
      {"B1", r.B1},     {"B2", r.B2},           {"B3", r.B3},         {"V1", r.V1},
      {"V2", r.V2},     {"V3", r.V3},           {"bias", r.bias},     {"variance", r.variance},
      {"excess", r.excess}, {"additivity_gap", r.additivity_gap}};
  for (const auto& [name, e] : fields) {
    std::printf("  %-15s %.6e +- %.2e\n", name, e.mean, e.stderr);
    j["terms"][name] = {{"mean", e.mean}, {"stderr", e.stderr}};
  }
  std::ofstream(dir / "decompose.json") << j.dump(2) << '\n';
  std::printf("wrote %s\n", (dir / "decompose.json").c_str());
  return 0;
}

int cmd_plot(const std::string& csv, const std::vector<std::string>& metrics, const std::string& out, bool log_y) {
  const auto rows = read_csv(csv);
  render_svg(rows, metrics, out, log_y);
  std::printf("wrote %s (%zu rows)\n", out.c_str(), rows.size());
  return 0;
}

int cmd_make_fixture(const std::string& dir, Index per_digit, const std::vector<int>& digits, std::uint64_t seed) {
  fs::create_directories(dir);
  const DigitImages di = synthesize_digits(seed, per_digit, digits);
  write_idx_images(fs::path(dir) / "train-images-idx3-ubyte", di.images);
  write_idx_labels(fs::path(dir) / "train-labels-idx1-ubyte", di.labels);
  std::printf("wrote %u images to %s\n", di.images.count, dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-features regression with averaged SGD: sweeps, spectra and bias/variance decomposition"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  int parallelism = 1;
  auto* seed_opt = app.add_option("--seed", seed, "override the config's base seed");
  auto* par_opt = app.add_option("--parallelism", parallelism, "worker threads for independent cells")
                      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "output directory (else $RFSGD_OUT_DIR, else outputs.dir)");

  std::string config;
  auto* sweep = app.add_subcommand("sweep", "run a configured sweep, write CSV and SVG");
  sweep->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  auto* spectra = app.add_subcommand("spectra", "expected covariance spectra and concentration diagnostics");
  spectra->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);
  auto* decompose = app.add_subcommand("decompose", "bias/variance decomposition at the first grid point");
  decompose->add_option("config", config, "YAML config")->required()->check(CLI::ExistingFile);

  std::string csv_path, svg_path;
  std::vector<std::string> metrics;
  bool log_y = false;
  auto* plot = app.add_subcommand("plot", "render a sweep CSV as SVG");
  plot->add_option("csv", csv_path, "sweep CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--metric", metrics, "column to plot (repeatable)")->required();
  plot->add_option("-o,--output", svg_path, "SVG path")->required();
  plot->add_flag("--log-y", log_y, "logarithmic y axis");

  std::string fixture_dir;
  Index per_digit = 1000;
  std::vector<int> digits{3, 7};
  auto* fixture = app.add_subcommand("make-fixture", "write a synthetic digit set in IDX format");
  fixture->add_option("dir", fixture_dir, "output directory")->required();
  fixture->add_option("--per-digit", per_digit, "images per digit")->check(CLI::PositiveNumber);
  fixture->add_option("--digits", digits, "digits to draw")->check(CLI::Range(0, 9));

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*par_opt) g.parallelism = parallelism;

  try {
    if (*sweep) return cmd_sweep(config, g);
    if (*spectra) return cmd_spectra(config, g);
    if (*decompose) return cmd_decompose(config, g);
    if (*plot) return cmd_plot(csv_path, metrics, svg_path, log_y);
    if (*fixture) return cmd_make_fixture(fixture_dir, per_digit, digits, g.seed.value_or(0));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rfsgd: %s\n", e.what());
    return 1;
  }
  return 0;
}
