#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kgd/harness.hpp"

using namespace kgd;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.problem.name = "sinbowl";
  cfg.problem.noise_std = 1.0;
  cfg.optimizer.method = Method::Kgd;
  cfg.optimizer.alpha = {ScheduleKind::Constant, 0.1, 1.0};
  cfg.steps = 50;
  cfg.seeds = {1, 2};
  cfg.record_every = 1;
  return cfg;
}

// step_micros is wall-clock telemetry; everything else must be identical.
bool equal_modulo_timing(const TraceRecord& a, const TraceRecord& b) {
  return a.seed == b.seed && a.t == b.t && a.f_value == b.f_value &&
         a.grad_norm == b.grad_norm && a.gain_min == b.gain_min && a.gain_max == b.gain_max &&
         a.p_min_eig == b.p_min_eig && a.p_max_eig == b.p_max_eig && a.status == b.status;
}

}  // namespace

TEST_CASE("run_experiment is deterministic given (config, seed)") {
  const auto cfg = base_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(equal_modulo_timing(a[i], b[i]));
}

TEST_CASE("permuting seeds permutes trace blocks without changing content") {
  auto cfg = base_config();
  cfg.seeds = {1, 2, 3};
  const auto forward = run_experiment(cfg);
  cfg.seeds = {3, 1, 2};
  const auto shuffled = run_experiment(cfg);

  auto rows_for = [](const std::vector<TraceRecord>& traces, std::uint64_t seed) {
    std::vector<TraceRecord> rows;
    for (const auto& r : traces) {
      if (r.seed == seed) rows.push_back(r);
    }
    return rows;
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto a = rows_for(forward, seed);
    const auto b = rows_for(shuffled, seed);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(equal_modulo_timing(a[i], b[i]));
  }
}

TEST_CASE("config validation") {
  auto cfg = base_config();
  cfg.steps = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = base_config();
  cfg.seeds.clear();
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg = base_config();
  cfg.record_every = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("record_every decimates but keeps the final step") {
  auto cfg = base_config();
  cfg.seeds = {1};
  cfg.steps = 55;
  cfg.record_every = 10;
  const auto traces = run_experiment(cfg);
  REQUIRE(traces.size() == 6);  // t = 9, 19, 29, 39, 49, 54
  CHECK(traces.back().t == 54);
  for (const auto& r : traces) CHECK(r.status == "ok");
}

TEST_CASE("trace CSV has the exact column header and empty non-applicable fields") {
  auto cfg = base_config();
  cfg.seeds = {1};
  cfg.steps = 3;
  cfg.optimizer.method = Method::Sgd;
  const auto traces = run_experiment(cfg);
  std::ostringstream out;
  write_trace_csv(traces, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "seed,t,f,grad_norm,gain_min,gain_max,p_min_eig,p_max_eig,step_micros,status");
  std::string row;
  std::getline(in, row);
  // baseline method: the four spectra columns are empty
  std::size_t empties = 0;
  for (std::size_t i = 0; i + 1 < row.size(); ++i) {
    if (row[i] == ',' && row[i + 1] == ',') ++empties;
  }
  CHECK(empties >= 3);
}

TEST_CASE("kgd rows carry gain and covariance spectra") {
  auto cfg = base_config();
  cfg.seeds = {1};
  cfg.steps = 5;
  const auto traces = run_experiment(cfg);
  for (const auto& r : traces) {
    REQUIRE(r.gain_min.has_value());
    REQUIRE(r.p_min_eig.has_value());
    CHECK(*r.gain_min > 0.0);
    CHECK(*r.gain_max < 1.0);
    CHECK(*r.p_min_eig > 0.0);
    CHECK(*r.p_max_eig >= *r.p_min_eig);
  }
}

TEST_CASE("divergent run records a failure row and later seeds proceed") {
  auto cfg = base_config();
  cfg.problem.name = "quadratic";
  cfg.problem.quad_n = 2;
  cfg.problem.quad_cond = 10.0;
  cfg.problem.noise_std = 1.0;
  cfg.optimizer.method = Method::Sgd;
  cfg.optimizer.alpha = {ScheduleKind::Constant, 300.0, 1.0};  // wildly unstable
  cfg.steps = 400;
  cfg.seeds = {1, 2};
  cfg.record_every = 400;
  const auto traces = run_experiment(cfg);
  bool seed1_failed = false;
  bool seed2_present = false;
  for (const auto& r : traces) {
    if (r.seed == 1 && r.status.rfind("fail:", 0) == 0) seed1_failed = true;
    if (r.seed == 2) seed2_present = true;
  }
  CHECK(seed1_failed);
  CHECK(seed2_present);
}

TEST_CASE("distributed run with block_size >= dim matches monolithic f values") {
  auto mono = base_config();
  mono.problem.name = "quadratic";
  mono.problem.quad_n = 6;
  mono.steps = 100;
  mono.seeds = {4};
  auto dist = mono;
  dist.block_size = 6;
  const auto a = run_experiment(mono);
  const auto b = run_experiment(dist);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].f_value.has_value());
    REQUIRE(b[i].f_value.has_value());
    CHECK(std::abs(*a[i].f_value - *b[i].f_value) <= 1e-14 * std::max(1.0, std::abs(*a[i].f_value)));
  }
}

TEST_CASE("summarize: final value, threshold crossing, and 'none'") {
  auto cfg = base_config();
  cfg.problem.name = "quadratic";
  cfg.problem.quad_n = 2;
  cfg.problem.quad_cond = 1.0;
  cfg.problem.noise_std = 0.0;
  cfg.optimizer.method = Method::Sgd;
  cfg.optimizer.alpha = {ScheduleKind::Constant, 0.1, 1.0};
  cfg.seeds = {1};
  cfg.steps = 200;
  const auto traces = run_experiment(cfg);

  const Summary s = summarize(traces, 1.0);
  REQUIRE(traces.back().f_value.has_value());
  CHECK(s.median_final_f == *traces.back().f_value);
  REQUIRE(s.median_iters_to_threshold.has_value());
  CHECK(*s.median_iters_to_threshold >= 0.0);

  const Summary none = summarize(traces, -1.0);  // below the global minimum
  CHECK_FALSE(none.median_iters_to_threshold.has_value());

  CHECK_THROWS_AS(summarize({}, 0.0), std::invalid_argument);
}

TEST_CASE("summarize: a per-step dominating trace crosses the threshold no later") {
  auto make_trace = [](double decay) {
    std::vector<TraceRecord> rows;
    for (long t = 0; t < 30; ++t) {
      TraceRecord r;
      r.seed = 1;
      r.t = t;
      r.f_value = 10.0 * std::pow(decay, static_cast<double>(t));
      r.grad_norm = *r.f_value;
      rows.push_back(r);
    }
    return rows;
  };
  const Summary fast = summarize(make_trace(0.7), 1.0);
  const Summary slow = summarize(make_trace(0.9), 1.0);
  REQUIRE(fast.median_iters_to_threshold.has_value());
  REQUIRE(slow.median_iters_to_threshold.has_value());
  CHECK(*fast.median_iters_to_threshold <= *slow.median_iters_to_threshold);
}

TEST_CASE("compare: identical configs give zero deltas") {
  auto cfg = base_config();
  cfg.steps = 30;
  cfg.seeds = {1, 2, 3};
  const auto report = compare(cfg, cfg, 0.0);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) CHECK(row.final_f_a == row.final_f_b);
  CHECK(report.ties == 3);
}

TEST_CASE("compare: overridden KGD against SGD gives zero deltas") {
  auto a = base_config();
  a.steps = 100;
  a.seeds = {5, 6, 7};
  a.optimizer.method = Method::Kgd;
  a.optimizer.gain_override = GainOverride::Identity;
  auto b = a;
  b.optimizer.method = Method::Sgd;
  b.optimizer.gain_override = GainOverride::None;
  const auto report = compare(a, b, 0.0);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) CHECK(row.final_f_a == row.final_f_b);
}

TEST_CASE("compare rejects mismatched problems or seeds") {
  auto a = base_config();
  auto b = base_config();
  b.problem.name = "quadratic";
  CHECK_THROWS_AS(compare(a, b, 0.0), std::invalid_argument);
  b = base_config();
  b.seeds = {9};
  CHECK_THROWS_AS(compare(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("config files: parse, defaults, and unknown-key rejection") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "problem = sinbowl\n"
        << "method = kgd\n"
        << "steps = 120\n"
        << "seeds = 3, 5, 8\n"
        << "alpha-kind = constant\n"
        << "alpha = 0.1\n"
        << "sigma-r = 2.5\n"
        << "record-every = 4\n";
  }
  const ExperimentConfig cfg = parse_config_file(path);
  CHECK(cfg.problem.name == "sinbowl");
  CHECK(cfg.optimizer.method == Method::Kgd);
  CHECK(cfg.steps == 120);
  REQUIRE(cfg.seeds.size() == 3);
  CHECK(cfg.seeds[1] == 5);
  CHECK(cfg.optimizer.sigma_r == 2.5);
  CHECK(cfg.optimizer.sigma_q == 0.01);  // default kept
  CHECK(cfg.record_every == 4);
  std::remove(path.c_str());

  CHECK_THROWS_AS(config_from_kv({{"seeds", "1"}, {"bogus-key", "1"}}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_kv({{"steps", "10"}}), std::invalid_argument);  // missing seeds

  {
    std::ofstream out(path);
    out << "not a key value line\n";
  }
  CHECK_THROWS_AS(parse_config_file(path), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("trace CSV files are byte-identical apart from the timing column") {
  auto cfg = base_config();
  cfg.seeds = {11};
  cfg.steps = 20;
  auto strip_timing = [](const std::vector<TraceRecord>& traces) {
    std::vector<TraceRecord> copy = traces;
    for (auto& r : copy) r.step_micros = 0;
    std::ostringstream out;
    write_trace_csv(copy, out);
    return out.str();
  };
  CHECK(strip_timing(run_experiment(cfg)) == strip_timing(run_experiment(cfg)));
}
