#include "rfsgd/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rfsgd/error.hpp"
#include "rfsgd/sweep.hpp"

namespace rfsgd {
namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

void reject_unknown(const YAML::Node& map, const std::string& where, const std::set<std::string>& allowed) {
  if (!map.IsMap()) throw ConfigError(where, line_of(map), "expected a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError(where.empty() ? key : where + "." + key, line_of(kv.first), "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, line_of(n), "wrong type");
  }
}

template <typename T>
void read(const YAML::Node& map, const std::string& key, const std::string& where, T& out) {
  if (const YAML::Node n = map[key]) out = scalar<T>(n, where.empty() ? key : where + "." + key);
}

Index positive(const YAML::Node& n, const std::string& field) {
  const long long v = scalar<long long>(n, field);
  if (v < 1) throw ConfigError(field, line_of(n), "must be >= 1");
  return Index(v);
}

void read_positive(const YAML::Node& map, const std::string& key, const std::string& where, Index& out) {
  if (const YAML::Node n = map[key]) out = positive(n, where.empty() ? key : where + "." + key);
}

StepSchedule schedule_from(const YAML::Node& n, const std::string& field) {
  reject_unknown(n, field, {"gamma0", "zeta"});
  double g = 1.0, z = 0.0;
  read(n, "gamma0", field, g);
  read(n, "zeta", field, z);
  if (!(g > 0.0)) throw ConfigError(field + ".gamma0", line_of(n), "must be > 0");
  if (!(z >= 0.0 && z < 1.0)) throw ConfigError(field + ".zeta", line_of(n), "must lie in [0, 1)");
  return StepSchedule(g, z);
}

std::vector<Index> index_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(field, line_of(n), "expected a non-empty list");
  std::vector<Index> out;
  for (const auto& v : n) out.push_back(positive(v, field));
  return out;
}

void parse_data(const YAML::Node& n, DataSpec& d) {
  reject_unknown(n, "data",
                 {"source", "n", "d", "n_test", "covariance", "target", "target_norm", "bandwidth", "noise_sd",
                  "images", "labels", "mnist_dir", "digits", "n_per_class", "pixel_scale", "fixture_per_digit", "idx_target"});
  if (const YAML::Node s = n["source"]) {
    const auto v = scalar<std::string>(s, "data.source");
    if (v == "synthetic") d.source = DataSpec::Source::Synthetic;
    else if (v == "idx") d.source = DataSpec::Source::Idx;
    else throw ConfigError("data.source", line_of(s), "expected 'synthetic' or 'idx', got '" + v + "'");
  }
  read_positive(n, "n", "data", d.n);
  read_positive(n, "d", "data", d.d);
  read_positive(n, "n_test", "data", d.n_test);
  if (const YAML::Node c = n["covariance"]) {
    if (c.IsScalar()) {
      if (c.as<std::string>() != "identity")
        throw ConfigError("data.covariance", line_of(c), "expected 'identity' or a mapping");
      d.covariance = CovSpec::identity();
    } else {
      reject_unknown(c, "data.covariance", {"power_law", "matrix"});
      if (const YAML::Node e = c["power_law"]) {
        const double ex = scalar<double>(e, "data.covariance.power_law");
        if (!(ex >= 0.0)) throw ConfigError("data.covariance.power_law", line_of(e), "must be >= 0");
        d.covariance = CovSpec::power_law(ex);
      } else if (const YAML::Node mnode = c["matrix"]) {
        if (!mnode.IsSequence()) throw ConfigError("data.covariance.matrix", line_of(mnode), "expected rows");
        const Index k = Index(mnode.size());
        Matrix<double> M(k, k);
        for (Index i = 0; i < k; ++i) {
          const YAML::Node row = mnode[std::size_t(i)];
          if (!row.IsSequence() || Index(row.size()) != k)
            throw ConfigError("data.covariance.matrix", line_of(row), "matrix must be square");
          for (Index j = 0; j < k; ++j) M(i, j) = scalar<double>(row[std::size_t(j)], "data.covariance.matrix");
        }
        d.covariance = CovSpec::explicit_matrix(M);
      }
    }
  }
  if (const YAML::Node t = n["target"]) {
    const auto v = scalar<std::string>(t, "data.target");
    if (v == "linear") d.target = DataSpec::Target::Linear;
    else if (v == "laplace") d.target = DataSpec::Target::Laplace;
    else throw ConfigError("data.target", line_of(t), "expected 'linear' or 'laplace', got '" + v + "'");
  }
  read(n, "target_norm", "data", d.target_norm);
  read(n, "bandwidth", "data", d.bandwidth);
  read(n, "noise_sd", "data", d.noise_sd);
  if (!(d.target_norm > 0.0)) throw ConfigError("data.target_norm", line_of(n), "must be > 0");
  if (!(d.bandwidth >= 0.0)) throw ConfigError("data.bandwidth", line_of(n), "must be >= 0");
  if (!(d.noise_sd >= 0.0)) throw ConfigError("data.noise_sd", line_of(n), "must be >= 0");
  read(n, "images", "data", d.images);
  read(n, "labels", "data", d.labels);
  read(n, "mnist_dir", "data", d.mnist_dir);
  if (const YAML::Node g = n["digits"]) {
    if (!g.IsSequence() || g.size() != 2) throw ConfigError("data.digits", line_of(g), "expected two digits");
    d.digit_a = scalar<int>(g[0], "data.digits");
    d.digit_b = scalar<int>(g[1], "data.digits");
    if (d.digit_a < 0 || d.digit_a > 9 || d.digit_b < 0 || d.digit_b > 9 || d.digit_a == d.digit_b)
      throw ConfigError("data.digits", line_of(g), "expected two distinct digits in 0..9");
  }
  read_positive(n, "n_per_class", "data", d.n_per_class);
  read(n, "pixel_scale", "data", d.pixel_scale);
  if (!(d.pixel_scale > 0.0)) throw ConfigError("data.pixel_scale", line_of(n), "must be > 0");
  read_positive(n, "fixture_per_digit", "data", d.fixture_per_digit);
  if (const YAML::Node t = n["idx_target"]) {
    const auto v = scalar<std::string>(t, "data.idx_target");
    if (v == "auto") d.idx_target = DataSpec::IdxTarget::Auto;
    else if (v == "labels") d.idx_target = DataSpec::IdxTarget::Labels;
    else if (v == "planted") d.idx_target = DataSpec::IdxTarget::Planted;
    else throw ConfigError("data.idx_target", line_of(t), "expected 'auto', 'labels' or 'planted', got '" + v + "'");
  }
}

}  // namespace

SweepSpec parse_config_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("", 0, "empty configuration");
  reject_unknown(root, "",
                 {"seed", "parallelism", "activation", "m_grid", "ratio_grid", "schedule", "schedules", "epochs",
                  "init", "repetitions", "data", "decomposition", "spectra", "outputs"});

  SweepSpec spec;
  if (const YAML::Node s = root["seed"]) spec.seed_base = scalar<std::uint64_t>(s, "seed");
  if (const YAML::Node p = root["parallelism"]) spec.parallelism = int(positive(p, "parallelism"));
  if (const YAML::Node d = root["data"]) parse_data(d, spec.data);
  if (const YAML::Node a = root["activation"]) {
    try {
      spec.activation = parse_activation(scalar<std::string>(a, "activation"));
    } catch (const InvalidArgument& e) {
      throw ConfigError("activation", line_of(a), e.what());
    }
  }

  const YAML::Node mg = root["m_grid"], rg = root["ratio_grid"];
  if (mg && rg) throw ConfigError("ratio_grid", line_of(rg), "give either m_grid or ratio_grid, not both");
  if (!mg && !rg) throw ConfigError("m_grid", line_of(root), "missing (or give ratio_grid)");
  int grid_line = 0;
  if (mg) {
    spec.m_grid = index_list(mg, "m_grid");
    grid_line = line_of(mg);
  } else {
    if (!rg.IsSequence() || rg.size() == 0) throw ConfigError("ratio_grid", line_of(rg), "expected a non-empty list");
    const double n = double(spec.train_size());
    for (const auto& r : rg) {
      const double ratio = scalar<double>(r, "ratio_grid");
      if (!(ratio > 0.0)) throw ConfigError("ratio_grid", line_of(r), "ratios must be > 0");
      spec.m_grid.push_back(std::max<Index>(1, Index(std::llround(ratio * n))));
    }
    grid_line = line_of(rg);
  }
  for (std::size_t i = 1; i < spec.m_grid.size(); ++i)
    if (spec.m_grid[i] <= spec.m_grid[i - 1])
      throw ConfigError(mg ? "m_grid" : "ratio_grid", grid_line, "must be strictly increasing");

  const YAML::Node one = root["schedule"], many = root["schedules"];
  if (one && many) throw ConfigError("schedules", line_of(many), "give either schedule or schedules, not both");
  if (one) spec.schedules = {schedule_from(one, "schedule")};
  if (many) {
    if (!many.IsSequence() || many.size() == 0)
      throw ConfigError("schedules", line_of(many), "expected a non-empty list");
    spec.schedules.clear();
    for (std::size_t i = 0; i < many.size(); ++i)
      spec.schedules.push_back(schedule_from(many[i], "schedules[" + std::to_string(i) + "]"));
  }
  read_positive(root, "epochs", "", spec.epochs);
  read_positive(root, "repetitions", "", spec.repetitions);

  if (const YAML::Node in = root["init"]) {
    if (in.IsScalar()) {
      const auto v = in.as<std::string>();
      if (v == "zero") spec.init = InitScheme::zero();
      else if (v == "near_min_norm") spec.init = InitScheme::near_min_norm(1.0);
      else throw ConfigError("init", line_of(in), "expected zero, near_min_norm or a mapping");
    } else {
      reject_unknown(in, "init", {"constant", "near_min_norm"});
      if (in["constant"]) spec.init = InitScheme::constant(scalar<double>(in["constant"], "init.constant"));
      else if (in["near_min_norm"]) {
        const double sd = scalar<double>(in["near_min_norm"], "init.near_min_norm");
        if (!(sd >= 0.0)) throw ConfigError("init.near_min_norm", line_of(in), "must be >= 0");
        spec.init = InitScheme::near_min_norm(sd);
      }
    }
  }

  if (const YAML::Node dc = root["decomposition"]) {
    reject_unknown(dc, "decomposition", {"enabled", "n_W", "n_noise", "n_order", "target", "target_norm", "antithetic"});
    DecompositionSpec& d = spec.decomposition;
    d.enabled = true;
    read(dc, "enabled", "decomposition", d.enabled);
    read_positive(dc, "n_W", "decomposition", d.mc.n_W);
    read_positive(dc, "n_noise", "decomposition", d.mc.n_noise);
    read_positive(dc, "n_order", "decomposition", d.mc.n_order);
    read(dc, "antithetic", "decomposition", d.antithetic);
    read(dc, "target_norm", "decomposition", d.target_norm);
    if (const YAML::Node t = dc["target"]) {
      const auto v = scalar<std::string>(t, "decomposition.target");
      if (v == "min_norm") d.target = TargetKind::MinNormFit;
      else if (v == "planted") d.target = TargetKind::Planted;
      else throw ConfigError("decomposition.target", line_of(t), "expected 'min_norm' or 'planted'");
    }
  }

  if (const YAML::Node sp = root["spectra"]) {
    reject_unknown(sp, "spectra", {"m_grid", "draws", "samples_per_feature"});
    if (sp["m_grid"]) spec.spectra.m_grid = index_list(sp["m_grid"], "spectra.m_grid");
    if (sp["draws"]) spec.spectra.draws = int(positive(sp["draws"], "spectra.draws"));
    read(sp, "samples_per_feature", "spectra", spec.spectra.samples_per_feature);
  }

  if (const YAML::Node o = root["outputs"]) {
    reject_unknown(o, "outputs", {"dir", "csv", "svg", "metrics", "log_y"});
    read(o, "dir", "outputs", spec.outputs.dir);
    read(o, "csv", "outputs", spec.outputs.csv);
    read(o, "svg", "outputs", spec.outputs.svg);
    read(o, "log_y", "outputs", spec.outputs.log_y);
    if (const YAML::Node m = o["metrics"]) {
      if (!m.IsSequence() || m.size() == 0) throw ConfigError("outputs.metrics", line_of(m), "expected a non-empty list");
      spec.outputs.metrics.clear();
      for (const auto& v : m) {
        const auto name = scalar<std::string>(v, "outputs.metrics");
        if (!is_metric(name)) throw ConfigError("outputs.metrics", line_of(v), "unknown metric '" + name + "'");
        spec.outputs.metrics.push_back(name);
      }
    }
  }
  return spec;
}

SweepSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

}  // namespace rfsgd
