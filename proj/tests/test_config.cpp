#include <doctest.h>

#include "rfsgd/config.hpp"
#include "rfsgd/error.hpp"

using namespace rfsgd;

namespace {

ConfigError config_error(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("config accepted: " << text);
  return ConfigError("", 0, "");
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  const SweepSpec s = parse_config_string("m_grid: [4, 8]\n");
  CHECK(s.m_grid == std::vector<Index>{4, 8});
  CHECK(s.activation == Activation::CosSin);
  CHECK(s.repetitions == 1);
  CHECK(s.epochs == 1);
  REQUIRE(s.schedules.size() == 1);
  CHECK(s.schedules[0].gamma0 == 1.0);
  CHECK(s.schedules[0].zeta == 0.5);
  CHECK(s.data.source == DataSpec::Source::Synthetic);
  CHECK(s.data.n == 200);
  CHECK_FALSE(s.decomposition.enabled);
  CHECK(s.outputs.csv == "sweep.csv");
}

TEST_CASE("full config") {
  const SweepSpec s = parse_config_string(R"(
seed: 17
parallelism: 2
activation: relu
ratio_grid: [0.5, 1, 2]
schedules:
  - {gamma0: 0.5, zeta: 0}
  - {gamma0: 1.0, zeta: 0.5}
epochs: 3
init: {near_min_norm: 0.2}
repetitions: 4
data:
  n: 40
  d: 8
  covariance: {power_law: 1.5}
  target: laplace
  noise_sd: 0.3
decomposition: {enabled: true, n_W: 2, n_noise: 6, target: planted}
outputs: {metrics: [bias, variance], log_y: true}
)");
  CHECK(s.seed_base == 17);
  CHECK(s.parallelism == 2);
  CHECK(s.activation == Activation::ReLU);
  CHECK(s.m_grid == std::vector<Index>{20, 40, 80});
  CHECK(s.schedules.size() == 2);
  CHECK(s.init.kind == InitScheme::Kind::NearMinNorm);
  CHECK(s.init.value == 0.2);
  CHECK(s.data.covariance.kind == CovSpec::Kind::DiagonalPowerLaw);
  CHECK(s.data.target == DataSpec::Target::Laplace);
  CHECK(s.decomposition.mc.n_W == 2);
  CHECK(s.decomposition.target == TargetKind::Planted);
  CHECK(s.outputs.log_y);
}

TEST_CASE("cossin ratio grid counts pairs") {
  const SweepSpec s = parse_config_string("ratio_grid: [0.25, 0.5]\ndata: {source: idx, n_per_class: 50}\n");
  CHECK(s.train_size() == 100);
  CHECK(s.m_grid == std::vector<Index>{25, 50});
}

TEST_CASE("schema violations") {
  CHECK(config_error("m_grid: [4]\nschedule: {gamma0: 1, zeta: 1.0}\n").field() == "schedule.zeta");
  CHECK(config_error("m_grid: [8, 4]\n").field() == "m_grid");
  CHECK(config_error("m_grid: [4, 4]\n").field() == "m_grid");
  const ConfigError unknown = config_error("m_grid: [4]\ndata:\n  n: 10\n  colour: red\n");
  CHECK(unknown.field() == "data.colour");
  CHECK(unknown.line() == 4);
  CHECK(config_error("m_grid: [4]\nrepetitions: 0\n").field() == "repetitions");
  CHECK(config_error("m_grid: [4]\nepochs: many\n").field() == "epochs");
  CHECK(config_error("m_grid: [4]\noutputs: {metrics: [accuracy]}\n").field() == "outputs.metrics");
  CHECK(config_error("m_grid: [4]\nactivation: tanh\n").field() == "activation");
  CHECK(config_error("m_grid: [4]\nratio_grid: [1]\n").field() == "ratio_grid");
  CHECK(config_error("seed: 1\n").field() == "m_grid");
  CHECK(config_error("m_grid: [4\n").line() > 0);
  CHECK_THROWS_AS(parse_config("/nonexistent/config.yaml"), ConfigError);
}
