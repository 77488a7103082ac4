#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgd/distributed.hpp"
#include "kgd/problems.hpp"

namespace kgd {

/// Which problem to run and its parameters.
struct ProblemConfig {
  std::string name = "sinbowl";  // sinbowl | quadratic | bbvi | mlpreg
  double noise_std = 1.0;        // sinbowl / quadratic oracle noise
  std::size_t quad_n = 10;
  double quad_cond = 10.0;
  std::size_t bbvi_samples = 1;
  std::string mlp_arch = "small";  // small: (1,4,4,1), large: (1,20,20,1)
  std::size_t batch_size = 8;
  std::uint64_t data_seed = 1234;

  bool operator==(const ProblemConfig&) const = default;
};

struct ExperimentConfig {
  ProblemConfig problem;
  OptimizerConfig optimizer;
  std::size_t steps = 500;
  std::vector<std::uint64_t> seeds{1};
  std::optional<std::size_t> block_size;  // enables distributed mode
  std::string out_path;                   // empty: no file written
  std::size_t record_every = 1;
  bool track_spectra = true;
};

/// One recorded step. Optional fields are empty in the CSV when not
/// applicable (baseline methods, spectra off, failure rows).
struct TraceRecord {
  std::uint64_t seed = 0;
  long t = 0;
  std::optional<double> f_value;
  std::optional<double> grad_norm;
  std::optional<double> gain_min, gain_max;
  std::optional<double> p_min_eig, p_max_eig;
  std::int64_t step_micros = 0;
  std::string status = "ok";
};

Problem make_problem(const ProblemConfig& config);
/// Deterministic per-problem start; consumes rng only for mlpreg.
Vec initial_point(const ProblemConfig& config, const Problem& problem, Rng& rng);

std::vector<TraceRecord> run_experiment(const ExperimentConfig& config);

void write_trace_csv(const std::vector<TraceRecord>& traces, std::ostream& out);

struct Summary {
  std::size_t seeds = 0;
  std::size_t failed_seeds = 0;
  double median_final_f = 0.0;
  double iqr_final_f = 0.0;
  std::optional<double> median_iters_to_threshold;  // empty: "none"
  double median_final_grad_norm = 0.0;
};

Summary summarize(const std::vector<TraceRecord>& traces, double threshold);

struct ComparisonRow {
  std::uint64_t seed = 0;
  double final_f_a = 0.0;
  double final_f_b = 0.0;
  std::optional<double> iters_a, iters_b;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  int a_better = 0;  // final f strictly lower for a
  int b_better = 0;
  int ties = 0;
  Summary summary_a, summary_b;
};

ComparisonReport compare(const ExperimentConfig& config_a, const ExperimentConfig& config_b,
                         double threshold);

void write_compare_csv(const ComparisonReport& report, std::ostream& out);

/// Flat `key = value` config files mirroring the CLI flags; unknown keys
/// are rejected.
ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv);
ExperimentConfig parse_config_file(const std::string& path);

// --- diagnostic suite ---------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Full KGD run on the 2-D problem with the standard constants, compared
/// against the gradient-block recursion; trajectories must agree to 1e-10.
CheckResult check_reduction_equivalence();
/// Smoothing-gain eigenvalues strictly inside (0,1) for t in [5,500].
CheckResult check_gain_bounds();
/// Posterior covariance eigenvalues within [1e-6, 1e3] for t in [100,500].
CheckResult check_covariance_bounds();
/// Covariance mismatch decays: below 1e-3 of its initial size by t=50 and
/// non-increasing after t=5.
CheckResult check_robustness_decay();
/// Analytic gradients vs central finite differences, 20 random points each.
CheckResult check_gradient_oracles();

std::vector<CheckResult> verify_all();

}  // namespace kgd
