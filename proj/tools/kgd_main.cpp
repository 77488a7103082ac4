#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "kgd/harness.hpp"

namespace {

int run_command(const std::map<std::string, std::string>& kv) {
  const kgd::ExperimentConfig config = kgd::config_from_kv(kv);
  if (config.out_path.empty()) {
    std::cerr << "run: --out is required\n";
    return 2;
  }
  const auto traces = kgd::run_experiment(config);
  std::size_t failures = 0;
  for (const auto& r : traces) {
    if (r.status != "ok") ++failures;
  }
  std::cout << "wrote " << traces.size() << " records to " << config.out_path;
  if (failures > 0) std::cout << " (" << failures << " failure rows)";
  std::cout << "\n";
  return failures == 0 ? 0 : 1;
}

int compare_command(const std::string& path_a, const std::string& path_b, double threshold,
                    const std::string& out_path) {
  kgd::ExperimentConfig a = kgd::parse_config_file(path_a);
  kgd::ExperimentConfig b = kgd::parse_config_file(path_b);
  a.out_path.clear();
  b.out_path.clear();
  const kgd::ComparisonReport report = kgd::compare(a, b, threshold);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "compare: cannot open " << out_path << "\n";
    return 2;
  }
  kgd::write_compare_csv(report, out);
  std::cout << "paired seeds: " << report.rows.size() << "\n"
            << "final f, a better: " << report.a_better << ", b better: " << report.b_better
            << ", ties: " << report.ties << "\n"
            << "median final f: a = " << report.summary_a.median_final_f
            << ", b = " << report.summary_b.median_final_f << "\n";
  auto show_iters = [](const std::optional<double>& m) {
    return m ? std::to_string(*m) : std::string("none");
  };
  std::cout << "median iterations to threshold: a = "
            << show_iters(report.summary_a.median_iters_to_threshold)
            << ", b = " << show_iters(report.summary_b.median_iters_to_threshold) << "\n";
  return 0;
}

int verify_command() {
  const auto results = kgd::verify_all();
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

int dump_dataset_command(const std::string& out_path, std::uint64_t data_seed) {
  const kgd::MlpDataset data = kgd::make_mlp_dataset(data_seed);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "dump-dataset: cannot open " << out_path << "\n";
    return 2;
  }
  kgd::write_dataset_csv(data, out);
  std::cout << "wrote " << data.x.size() << " points to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kalman-filtered stochastic gradient descent benchmark"};
  app.require_subcommand(1);

  // run: options gathered as strings so the CLI and config files share one
  // key-value path.
  auto* run = app.add_subcommand("run", "run one experiment and write a CSV trace");
  std::map<std::string, std::string> kv;
  const std::vector<std::pair<std::string, std::string>> run_flags = {
      {"problem", "sinbowl|quadratic|bbvi|mlpreg"},
      {"method", "sgd|momentum|rmsprop|kgd|kgd-momentum|kgd-rmsprop"},
      {"steps", "iterations per seed"},
      {"seeds", "comma-separated seed list"},
      {"alpha-kind", "constant|harmonic|geometric"},
      {"alpha", "base stepsize"},
      {"alpha-rate", "geometric decay base (>= 1)"},
      {"sigma-q", "process noise scale"},
      {"sigma-r", "measurement noise scale"},
      {"p0", "initial covariance scale"},
      {"mu", "momentum coefficient"},
      {"gamma", "RMSProp decay"},
      {"block-size", "enable distributed mode with blocks of this size"},
      {"batch-size", "minibatch size (mlpreg)"},
      {"record-every", "trace decimation"},
      {"out", "output CSV path"},
      {"noise-std", "oracle noise std (sinbowl, quadratic)"},
      {"quad-n", "quadratic dimension"},
      {"quad-cond", "quadratic condition number"},
      {"bbvi-samples", "ELBO samples per oracle call"},
      {"mlp-arch", "small|large"},
      {"data-seed", "dataset generation seed (mlpreg)"},
  };
  auto values = std::make_shared<std::map<std::string, std::string>>();
  for (const auto& [flag, help] : run_flags) {
    run->add_option_function<std::string>(
        "--" + flag, [values, name = flag](const std::string& v) { (*values)[name] = v; }, help);
  }

  auto* cmp = app.add_subcommand("compare", "paired comparison of two experiment configs");
  std::string config_a, config_b, cmp_out;
  double threshold = 0.0;
  cmp->add_option("--config-a", config_a, "config file for run A")->required();
  cmp->add_option("--config-b", config_b, "config file for run B")->required();
  cmp->add_option("--threshold", threshold, "objective threshold for iterations-to-threshold")
      ->required();
  cmp->add_option("--out", cmp_out, "output CSV path")->required();

  auto* verify = app.add_subcommand("verify", "run the invariant/diagnostic suite");
  (void)verify;

  auto* dump = app.add_subcommand("dump-dataset", "write the regression dataset as CSV");
  std::string dump_out;
  std::uint64_t dump_seed = 1234;
  dump->add_option("--out", dump_out, "output CSV path")->required();
  dump->add_option("--data-seed", dump_seed, "dataset generation seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(*values);
    if (cmp->parsed()) return compare_command(config_a, config_b, threshold, cmp_out);
    if (verify->parsed()) return verify_command();
    if (dump->parsed()) return dump_dataset_command(dump_out, dump_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
