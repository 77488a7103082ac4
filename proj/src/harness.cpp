#include "kgd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace kgd {

namespace {

constexpr std::size_t kSpectraCap = 512;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  return fmt_double(*v);
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double median(const std::vector<double>& values) { return quantile(values, 0.5); }

}  // namespace

Problem make_problem(const ProblemConfig& config) {
  if (config.name == "sinbowl") return sinbowl_problem(config.noise_std);
  if (config.name == "quadratic") {
    return quadratic_problem(config.quad_n, config.quad_cond, config.noise_std);
  }
  if (config.name == "bbvi") return bbvi_problem(config.bbvi_samples);
  if (config.name == "mlpreg") {
    MlpSpec spec;
    if (config.mlp_arch == "small") {
      spec.layer_sizes = {1, 4, 4, 1};
    } else if (config.mlp_arch == "large") {
      spec.layer_sizes = {1, 20, 20, 1};
    } else {
      throw std::invalid_argument("make_problem: mlp-arch must be small or large, got " +
                                  config.mlp_arch);
    }
    return mlp_problem(spec, config.data_seed, config.batch_size);
  }
  throw std::invalid_argument("make_problem: unknown problem '" + config.name + "'");
}

Vec initial_point(const ProblemConfig& config, const Problem& problem, Rng& rng) {
  if (config.name == "sinbowl") return Vec{0.5, 0.5};
  if (config.name == "quadratic") {
    Vec x(problem.dim);
    for (std::size_t i = 0; i < x.dim(); ++i) x[i] = 2.0;
    return x;
  }
  if (config.name == "bbvi") return Vec{2.0, 2.0, -3.0, -3.0};
  if (config.name == "mlpreg") {
    MlpSpec spec;
    spec.layer_sizes = (config.mlp_arch == "large") ? std::vector<std::size_t>{1, 20, 20, 1}
                                                    : std::vector<std::size_t>{1, 4, 4, 1};
    return mlp_init(spec, rng);
  }
  throw std::invalid_argument("initial_point: unknown problem '" + config.name + "'");
}

namespace {

void validate(const ExperimentConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("run_experiment: steps must be >= 1");
  if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: seeds must be nonempty");
  if (cfg.record_every < 1) {
    throw std::invalid_argument("run_experiment: record-every must be >= 1");
  }
  if (cfg.block_size && *cfg.block_size == 0) {
    throw std::invalid_argument("run_experiment: block-size must be >= 1");
  }
}

std::optional<double> trace_grad_norm(const Problem& prob, const Vec& x, const Vec* direction) {
  if (prob.diag_grad) return norm(prob.diag_grad(x));
  if (direction) return norm(*direction);
  return std::nullopt;
}

std::pair<std::optional<double>, std::optional<double>> p_bounds(const FilterState& f,
                                                                 bool track) {
  if (!track || f.p.rows() > kSpectraCap) return {std::nullopt, std::nullopt};
  auto [lo, hi] = sym_eig_bounds(f.p);
  return {lo, hi};
}

void run_one_seed(const ExperimentConfig& cfg, const Problem& prob, std::uint64_t seed,
                  std::vector<TraceRecord>& out) {
  using clock = std::chrono::steady_clock;
  Rng rng(seed);

  OptimizerConfig opt = cfg.optimizer;
  opt.track_spectra = cfg.track_spectra;

  const bool distributed = cfg.block_size.has_value();
  std::size_t current_step = 0;
  try {
    const Vec x0 = initial_point(cfg.problem, prob, rng);
    const Vec first_grad = prob.grad_oracle(x0, rng);

    OptState mono;
    DistState dist;
    if (distributed) {
      dist = dist_init(opt, partition(prob.dim, *cfg.block_size), x0, first_grad);
    } else {
      mono = init(opt, x0, first_grad);
    }

    for (std::size_t t = 0; t < cfg.steps; ++t) {
      current_step = t;
      const auto start = clock::now();
      const Vec g = prob.grad_oracle(distributed ? dist.x : mono.x, rng);

      std::optional<double> gain_min, gain_max, pmin, pmax;
      const Vec* direction = nullptr;
      StepReport mono_report;
      if (distributed) {
        auto [next, rep] = dist_step(dist, opt, g);
        dist = std::move(next);
        if (std::isfinite(rep.gain_min)) gain_min = rep.gain_min;
        if (std::isfinite(rep.gain_max)) gain_max = rep.gain_max;
      } else {
        auto [next, rep] = step(mono, opt, g);
        mono = std::move(next);
        mono_report = std::move(rep);
        direction = &mono_report.direction;
        if (mono_report.gain) {
          if (std::isfinite(mono_report.gain->min_eig)) gain_min = mono_report.gain->min_eig;
          if (std::isfinite(mono_report.gain->max_eig)) gain_max = mono_report.gain->max_eig;
        }
      }
      const auto micros =
          std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - start).count();

      const bool record = ((t + 1) % cfg.record_every == 0) || (t + 1 == cfg.steps);
      if (!record) continue;

      const Vec& x = distributed ? dist.x : mono.x;
      if (distributed) {
        for (const OptState& block : dist.blocks) {
          if (!block.filter) continue;
          auto [lo, hi] = p_bounds(*block.filter, cfg.track_spectra);
          if (lo) pmin = pmin ? std::min(*pmin, *lo) : *lo;
          if (hi) pmax = pmax ? std::max(*pmax, *hi) : *hi;
        }
      } else if (mono.filter) {
        std::tie(pmin, pmax) = p_bounds(*mono.filter, cfg.track_spectra);
      }

      TraceRecord rec;
      rec.seed = seed;
      rec.t = static_cast<long>(t);
      rec.f_value = prob.objective(x);
      rec.grad_norm = trace_grad_norm(prob, x, direction);
      rec.gain_min = gain_min;
      rec.gain_max = gain_max;
      rec.p_min_eig = pmin;
      rec.p_max_eig = pmax;
      rec.step_micros = micros;
      rec.status = "ok";
      out.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    TraceRecord rec;
    rec.seed = seed;
    rec.t = static_cast<long>(current_step);
    rec.status = "fail: " + sanitize(e.what());
    out.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<TraceRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Problem prob = make_problem(cfg.problem);
  std::vector<TraceRecord> traces;
  for (std::uint64_t seed : cfg.seeds) run_one_seed(cfg, prob, seed, traces);
  if (!cfg.out_path.empty()) {
    std::ofstream file(cfg.out_path);
    if (!file) throw std::runtime_error("run_experiment: cannot open " + cfg.out_path);
    write_trace_csv(traces, file);
  }
  return traces;
}

void write_trace_csv(const std::vector<TraceRecord>& traces, std::ostream& out) {
  out << "seed,t,f,grad_norm,gain_min,gain_max,p_min_eig,p_max_eig,step_micros,status\n";
  for (const TraceRecord& r : traces) {
    out << r.seed << ',' << r.t << ',' << csv_cell(r.f_value) << ',' << csv_cell(r.grad_norm)
        << ',' << csv_cell(r.gain_min) << ',' << csv_cell(r.gain_max) << ','
        << csv_cell(r.p_min_eig) << ',' << csv_cell(r.p_max_eig) << ',' << r.step_micros << ','
        << r.status << '\n';
  }
}

namespace {

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  std::optional<double> iters_to_threshold;
};

std::vector<SeedOutcome> outcomes(const std::vector<TraceRecord>& traces, double threshold) {
  std::vector<SeedOutcome> result;
  for (const TraceRecord& r : traces) {
    if (result.empty() || result.back().seed != r.seed) {
      result.push_back(SeedOutcome{r.seed, false, 0.0, 0.0, std::nullopt});
    }
    SeedOutcome& o = result.back();
    if (r.status != "ok") {
      o.ok = false;
      continue;
    }
    o.ok = true;
    if (r.f_value) o.final_f = *r.f_value;
    if (r.grad_norm) o.final_grad_norm = *r.grad_norm;
    if (!o.iters_to_threshold && r.f_value && *r.f_value <= threshold) {
      o.iters_to_threshold = static_cast<double>(r.t);
    }
  }
  return result;
}

std::optional<double> median_iters(const std::vector<SeedOutcome>& outs) {
  std::vector<double> values;
  for (const auto& o : outs) {
    if (!o.ok) continue;
    values.push_back(o.iters_to_threshold ? *o.iters_to_threshold
                                          : std::numeric_limits<double>::infinity());
  }
  if (values.empty()) return std::nullopt;
  const double m = median(values);
  if (!std::isfinite(m)) return std::nullopt;
  return m;
}

}  // namespace

Summary summarize(const std::vector<TraceRecord>& traces, double threshold) {
  if (traces.empty()) throw std::invalid_argument("summarize: traces must be nonempty");
  const auto outs = outcomes(traces, threshold);
  Summary s;
  s.seeds = outs.size();
  std::vector<double> finals, grads;
  for (const auto& o : outs) {
    if (!o.ok) {
      ++s.failed_seeds;
      continue;
    }
    finals.push_back(o.final_f);
    grads.push_back(o.final_grad_norm);
  }
  s.median_final_f = median(finals);
  s.iqr_final_f = quantile(finals, 0.75) - quantile(finals, 0.25);
  s.median_final_grad_norm = median(grads);
  s.median_iters_to_threshold = median_iters(outs);
  return s;
}

ComparisonReport compare(const ExperimentConfig& config_a, const ExperimentConfig& config_b,
                         double threshold) {
  if (!(config_a.problem == config_b.problem)) {
    throw std::invalid_argument("compare: problems differ between configs");
  }
  if (config_a.seeds != config_b.seeds) {
    throw std::invalid_argument("compare: seed lists differ between configs");
  }
  const auto traces_a = run_experiment(config_a);
  const auto traces_b = run_experiment(config_b);
  const auto outs_a = outcomes(traces_a, threshold);
  const auto outs_b = outcomes(traces_b, threshold);

  ComparisonReport report;
  report.summary_a = summarize(traces_a, threshold);
  report.summary_b = summarize(traces_b, threshold);
  for (std::size_t i = 0; i < outs_a.size() && i < outs_b.size(); ++i) {
    if (!outs_a[i].ok || !outs_b[i].ok) continue;
    ComparisonRow row;
    row.seed = outs_a[i].seed;
    row.final_f_a = outs_a[i].final_f;
    row.final_f_b = outs_b[i].final_f;
    row.iters_a = outs_a[i].iters_to_threshold;
    row.iters_b = outs_b[i].iters_to_threshold;
    report.rows.push_back(row);
    const double delta = row.final_f_a - row.final_f_b;
    if (delta < 0.0) {
      ++report.a_better;
    } else if (delta > 0.0) {
      ++report.b_better;
    } else {
      ++report.ties;
    }
  }
  return report;
}

void write_compare_csv(const ComparisonReport& report, std::ostream& out) {
  out << "seed,final_f_a,final_f_b,delta_final_f,iters_to_threshold_a,iters_to_threshold_b\n";
  for (const ComparisonRow& r : report.rows) {
    out << r.seed << ',' << fmt_double(r.final_f_a) << ',' << fmt_double(r.final_f_b) << ','
        << fmt_double(r.final_f_a - r.final_f_b) << ',' << csv_cell(r.iters_a) << ','
        << csv_cell(r.iters_b) << '\n';
  }
}

// --- config files -------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw std::invalid_argument("seeds: need at least one value");
  return seeds;
}

Method parse_method(const std::string& s) {
  if (s == "sgd") return Method::Sgd;
  if (s == "momentum") return Method::Momentum;
  if (s == "rmsprop") return Method::RmsProp;
  if (s == "kgd") return Method::Kgd;
  if (s == "kgd-momentum") return Method::KgdMomentum;
  if (s == "kgd-rmsprop") return Method::KgdRmsProp;
  throw std::invalid_argument("method: unknown '" + s + "'");
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "constant") return ScheduleKind::Constant;
  if (s == "harmonic") return ScheduleKind::Harmonic;
  if (s == "geometric") return ScheduleKind::Geometric;
  throw std::invalid_argument("alpha-kind: unknown '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  cfg.seeds.clear();
  bool have_seeds = false;
  for (const auto& [key, value] : kv) {
    if (key == "problem") {
      cfg.problem.name = value;
    } else if (key == "method") {
      cfg.optimizer.method = parse_method(value);
    } else if (key == "steps") {
      cfg.steps = std::stoull(value);
    } else if (key == "seeds") {
      cfg.seeds = parse_seeds(value);
      have_seeds = true;
    } else if (key == "alpha-kind") {
      cfg.optimizer.alpha.kind = parse_schedule_kind(value);
    } else if (key == "alpha") {
      cfg.optimizer.alpha.a = std::stod(value);
    } else if (key == "alpha-rate") {
      cfg.optimizer.alpha.rate = std::stod(value);
    } else if (key == "sigma-q") {
      cfg.optimizer.sigma_q = std::stod(value);
    } else if (key == "sigma-r") {
      cfg.optimizer.sigma_r = std::stod(value);
    } else if (key == "p0") {
      cfg.optimizer.p0_scale = std::stod(value);
    } else if (key == "mu") {
      cfg.optimizer.mu = std::stod(value);
    } else if (key == "gamma") {
      cfg.optimizer.gamma = std::stod(value);
    } else if (key == "block-size") {
      cfg.block_size = std::stoull(value);
    } else if (key == "batch-size") {
      cfg.problem.batch_size = std::stoull(value);
    } else if (key == "record-every") {
      cfg.record_every = std::stoull(value);
    } else if (key == "out") {
      cfg.out_path = value;
    } else if (key == "noise-std") {
      cfg.problem.noise_std = std::stod(value);
    } else if (key == "quad-n") {
      cfg.problem.quad_n = std::stoull(value);
    } else if (key == "quad-cond") {
      cfg.problem.quad_cond = std::stod(value);
    } else if (key == "bbvi-samples") {
      cfg.problem.bbvi_samples = std::stoull(value);
    } else if (key == "mlp-arch") {
      cfg.problem.mlp_arch = value;
    } else if (key == "data-seed") {
      cfg.problem.data_seed = std::stoull(value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  if (!have_seeds) throw std::invalid_argument("config: missing 'seeds'");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("parse_config_file: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
    }
  }
  return config_from_kv(kv);
}

}  // namespace kgd
