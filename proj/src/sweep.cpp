#include "rfsgd/sweep.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "rfsgd/digits.hpp"
#include "rfsgd/error.hpp"

namespace rfsgd {
namespace {

struct DataSource {
  std::optional<DigitImages> digits;
  std::string description;
  bool fixture = false;
};

DataSource open_source(const SweepSpec& spec) {
  DataSource src;
  const DataSpec& d = spec.data;
  if (d.source == DataSpec::Source::Synthetic) {
    src.description = d.target == DataSpec::Target::Linear ? "synthetic-linear" : "synthetic-laplace";
    return src;
  }
  if (!d.images.empty() || !d.labels.empty()) {
    if (d.images.empty() || d.labels.empty()) throw InvalidArgument("data.images and data.labels go together");
    DigitImages di{load_idx_images(d.images), load_idx_labels(d.labels)};
    check_idx_pair(di.images, di.labels);
    src.digits = std::move(di);
    src.description = "idx:" + d.images;
    return src;
  }
  std::string dir = d.mnist_dir;
  if (dir.empty())
    if (const char* env = std::getenv("RFSGD_MNIST_DIR")) dir = env;
  if (!dir.empty()) {
    if (auto di = load_mnist_dir(dir)) {
      src.digits = std::move(di);
      src.description = "idx:" + dir;
      return src;
    }
    if (!d.mnist_dir.empty()) throw InvalidArgument("no MNIST training files in '" + dir + "'");
  }
  src.digits = synthesize_digits(derive_seed(spec.seed_base, {31}), d.fixture_per_digit, {d.digit_a, d.digit_b});
  src.description = "synthetic-idx-fixture";
  src.fixture = true;
  return src;
}

SweepData prepare(const SweepSpec& spec, const DataSource& src, Index repetition) {
  const DataSpec& d = spec.data;
  const Seed seed = derive_seed(spec.seed_base, {41, std::uint64_t(repetition)});
  SweepData out;
  if (d.source == DataSpec::Source::Idx) {
    BinaryDigitOptions opts;
    opts.digit_a = d.digit_a;
    opts.digit_b = d.digit_b;
    opts.n_per_class = d.n_per_class;
    opts.seed = seed;
    opts.noise_sd = d.noise_sd;
    opts.pixel_scale = d.pixel_scale;
    BinaryDigitSplit split = make_binary_digit_split(src.digits->images, src.digits->labels, opts);
    if (split.X_test.rows() == 0) throw InvalidArgument("no test images left after drawing the training set");
    out.train = std::move(split.train);
    out.X_test = std::move(split.X_test);
    out.y_test = std::move(split.y_test);
    const bool planted = d.idx_target == DataSpec::IdxTarget::Planted ||
                         (d.idx_target == DataSpec::IdxTarget::Auto && src.fixture);
    if (planted) {
      Dataset<double>& ds = out.train;
      const FeatureMap<double> ref(derive_seed(seed, {5}), ds.size(), ds.dim(), Activation::CosSin);
      PlantedTarget<double> t = plant_rf_target(ref, derive_seed(seed, {6}), 1.0, ds.X);
      const double scale = 1.0 / std::sqrt(t.fstar.squaredNorm() / double(ds.size()));
      ds.fstar = scale * t.fstar;
      Rng rng(derive_seed(seed, {7}));
      ds.y = *ds.fstar + d.noise_sd * standard_normal<double>(rng, ds.size());
      out.y_test = scale * (ref.apply_batch(out.X_test) * t.theta_star);
    }
    return out;
  }
  const Matrix<double> all = gen_inputs<double>(derive_seed(seed, {1}), d.n + d.n_test, d.d, d.covariance);
  Dataset<double>& ds = out.train;
  ds.X = all.topRows(d.n);
  out.X_test = all.bottomRows(d.n_test);
  ds.noise_sd = d.noise_sd;
  if (d.target == DataSpec::Target::Laplace) {
    const double bw = d.bandwidth > 0.0 ? d.bandwidth : double(d.d);
    LaplaceTarget<double> t = gen_target_laplace<double>(derive_seed(seed, {2}), ds.X, out.X_test, bw, d.noise_sd);
    ds.fstar = std::move(t.fstar_train);
    ds.y = std::move(t.y_train);
    out.y_test = std::move(t.fstar_eval);
    ds.provenance = Provenance::SyntheticLaplace;
  } else {
    Rng rng(derive_seed(seed, {3}));
    Vector<double> beta = standard_normal<double>(rng, d.d);
    beta *= d.target_norm / beta.norm();
    ds.fstar = ds.X * beta;
    ds.y = *ds.fstar + d.noise_sd * standard_normal<double>(rng, d.n);
    out.y_test = out.X_test * beta;
    ds.provenance = Provenance::SyntheticLinear;
  }
  return out;
}

SweepRow compute_cell(const SweepSpec& spec, const SweepData& data, Index m, std::size_t s, Index rep,
                      std::string& failure) {
  const StepSchedule& sched = spec.schedules.at(s);
  const Dataset<double>& train = data.train;
  SweepRow row;
  row.m = m;
  row.n = train.size();
  row.d = train.dim();
  row.ratio = double(m) / double(row.n);
  row.zeta = sched.zeta;
  row.gamma0 = sched.gamma0;
  row.seed = cell_seed(spec.seed_base, m, s, rep);

  const FeatureMap<double> map(derive_seed(row.seed, {1}), m, row.d, spec.activation);
  const Matrix<double> Phi = map.apply_batch(train.X);
  const Vector<double> theta_mn = min_norm_fit<double>(Phi, train.y);
  row.train_mse_minnorm = (Phi * theta_mn - train.y).squaredNorm() / double(row.n);
  row.test_mse_minnorm = test_mse<double>(theta_mn, map, data.X_test, data.y_test);

  try {
    SgdOptions opts;
    opts.epochs = spec.epochs;
    opts.seed = derive_seed(row.seed, {2});
    const SgdOutcome<double> out = sgd_average_features<double>(Phi, train.y, sched, spec.init, opts);
    row.stability_warning = out.stability_warning;
    row.test_mse_sgd = test_mse<double>(out.theta_bar, map, data.X_test, data.y_test);
  } catch (const DivergenceError& e) {
    row.stability_warning = true;
    failure = e.what();
  }

  if (spec.decomposition.enabled) {
    DecompositionConfig cfg;
    cfg.activation = spec.activation;
    cfg.m = m;
    cfg.schedule = sched;
    cfg.mc = spec.decomposition.mc;
    cfg.target = spec.decomposition.target;
    cfg.target_norm = spec.decomposition.target_norm;
    cfg.antithetic = spec.decomposition.antithetic;
    cfg.seed = derive_seed(row.seed, {3});
    const DecompositionReport r = estimate_terms<double>(train, cfg);
    row.B1 = r.B1.mean, row.B2 = r.B2.mean, row.B3 = r.B3.mean;
    row.V1 = r.V1.mean, row.V2 = r.V2.mean, row.V3 = r.V3.mean;
    row.bias = r.bias.mean, row.variance = r.variance.mean, row.excess = r.excess.mean;
  }
  return row;
}

SweepRow failed_row(const SweepSpec& spec, Index n, Index d, Index m, std::size_t s, Index rep) {
  SweepRow row;
  row.m = m;
  row.n = n;
  row.d = d;
  row.ratio = double(m) / double(n);
  row.zeta = spec.schedules.at(s).zeta;
  row.gamma0 = spec.schedules.at(s).gamma0;
  row.seed = cell_seed(spec.seed_base, m, s, rep);
  return row;
}

}  // namespace

SweepData load_sweep_data(const SweepSpec& spec, Index repetition) {
  const DataSource src = open_source(spec);
  SweepData data = prepare(spec, src, repetition);
  data.source = src.description;
  return data;
}

Seed cell_seed(Seed base, Index m, std::size_t schedule, Index repetition) {
  return derive_seed(base, {std::uint64_t(m), std::uint64_t(schedule), std::uint64_t(repetition)});
}

SweepRow run_cell(const SweepSpec& spec, Index m, std::size_t schedule, Index repetition) {
  const SweepData data = load_sweep_data(spec, repetition);
  std::string failure;
  return compute_cell(spec, data, m, schedule, repetition, failure);
}

SweepResult run_sweep(const SweepSpec& spec, int parallelism) {
  if (spec.m_grid.empty()) throw InvalidArgument("m_grid is empty");
  if (spec.schedules.empty()) throw InvalidArgument("no step-size schedules");
  SweepResult res;
  const DataSource src = open_source(spec);
  res.meta.data_source = src.description;
  std::vector<SweepData> data;
  for (Index r = 0; r < spec.repetitions; ++r) data.push_back(prepare(spec, src, r));
  res.meta.test_count = data.front().X_test.rows();

  struct Cell {
    Index m;
    std::size_t s;
    Index rep;
  };
  std::vector<Cell> cells;
  for (Index m : spec.m_grid)
    for (std::size_t s = 0; s < spec.schedules.size(); ++s)
      for (Index r = 0; r < spec.repetitions; ++r) cells.push_back({m, s, r});

  res.rows.resize(cells.size());
  std::vector<std::string> failures(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      const SweepData& pd = data[std::size_t(c.rep)];
      try {
        res.rows[i] = compute_cell(spec, pd, c.m, c.s, c.rep, failures[i]);
      } catch (const std::exception& e) {
        res.rows[i] = failed_row(spec, pd.train.size(), pd.train.dim(), c.m, c.s, c.rep);
        failures[i] = e.what();
      }
    }
  };
  const int width = std::max(1, std::min<int>(parallelism, int(cells.size())));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < width; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (failures[i].empty()) continue;
    ++res.meta.failed_cells;
    res.meta.failures.push_back("m=" + std::to_string(cells[i].m) + " schedule=" + std::to_string(cells[i].s) +
                                " rep=" + std::to_string(cells[i].rep) + ": " + failures[i]);
  }
  return res;
}

}  // namespace rfsgd
