#include "kgd/distributed.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace kgd {

BlockPartition partition(std::size_t n, std::size_t d) {
  if (n == 0 || d == 0) throw std::invalid_argument("partition: n and d must be positive");
  BlockPartition part;
  part.n = n;
  part.block_size = d;
  for (std::size_t begin = 0; begin < n; begin += d) {
    part.ranges.emplace_back(begin, std::min(begin + d, n));
  }
  return part;
}

namespace {

Vec slice(const Vec& v, std::size_t begin, std::size_t end) {
  Vec out(end - begin);
  for (std::size_t i = begin; i < end; ++i) out[i - begin] = v[i];
  return out;
}

}  // namespace

DistState dist_init(const OptimizerConfig& config, const BlockPartition& part, const Vec& x0,
                    const Vec& first_grad) {
  if (x0.dim() != part.n || first_grad.dim() != part.n) {
    throw std::invalid_argument("dist_init: vector dimension " + std::to_string(x0.dim()) +
                                " != partition dimension " + std::to_string(part.n));
  }
  DistState s;
  s.part = part;
  s.x = x0;
  s.t = 0;
  s.blocks.reserve(part.count());
  for (const auto& [begin, end] : part.ranges) {
    s.blocks.push_back(init(config, slice(x0, begin, end), slice(first_grad, begin, end)));
  }
  return s;
}

std::pair<DistState, DistStepReport> dist_step(const DistState& state,
                                               const OptimizerConfig& config,
                                               const Vec& grad_sample, BlockOrder order) {
  if (grad_sample.dim() != state.part.n) {
    throw std::invalid_argument("dist_step: gradient dimension " +
                                std::to_string(grad_sample.dim()) + " != partition dimension " +
                                std::to_string(state.part.n));
  }
  const std::size_t nb = state.blocks.size();
  DistState next;
  next.part = state.part;
  next.x = state.x;
  next.t = state.t + 1;
  next.blocks.resize(nb);
  std::vector<StepReport> reports(nb);

  auto run_block = [&](std::size_t i) {
    const auto& [begin, end] = state.part.ranges[i];
    auto [block_state, report] = step(state.blocks[i], config, slice(grad_sample, begin, end));
    for (std::size_t j = begin; j < end; ++j) next.x[j] = block_state.x[j - begin];
    next.blocks[i] = std::move(block_state);
    reports[i] = std::move(report);
  };

  switch (order) {
    case BlockOrder::Forward:
      for (std::size_t i = 0; i < nb; ++i) run_block(i);
      break;
    case BlockOrder::Reverse:
      for (std::size_t i = nb; i-- > 0;) run_block(i);
      break;
    case BlockOrder::Parallel: {
      const std::size_t workers = std::min<std::size_t>(
          nb, std::max(1u, std::thread::hardware_concurrency()));
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < nb; i += workers) run_block(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
      break;
    }
  }

  DistStepReport agg;
  agg.alpha = reports.empty() ? 0.0 : reports.front().alpha;
  agg.gain_min = std::numeric_limits<double>::quiet_NaN();
  agg.gain_max = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : reports) {
    if (!r.gain) continue;
    if (std::isfinite(r.gain->min_eig)) {
      agg.gain_min = std::isnan(agg.gain_min) ? r.gain->min_eig
                                              : std::min(agg.gain_min, r.gain->min_eig);
    }
    if (std::isfinite(r.gain->max_eig)) {
      agg.gain_max = std::isnan(agg.gain_max) ? r.gain->max_eig
                                              : std::max(agg.gain_max, r.gain->max_eig);
    }
  }
  return {std::move(next), agg};
}

FlopEstimate flop_estimate(std::size_t n, std::size_t d, double gamma_exp) {
  if (n == 0 || d == 0) throw std::invalid_argument("flop_estimate: n and d must be positive");
  if (gamma_exp < 2.0 || gamma_exp > 3.0) {
    throw std::invalid_argument("flop_estimate: gamma must be in [2,3], got " +
                                std::to_string(gamma_exp));
  }
  FlopEstimate est;
  const double blocks = std::ceil(static_cast<double>(n) / static_cast<double>(d));
  est.approximate = (n % d) != 0;
  est.monolithic = std::pow(static_cast<double>(n), gamma_exp);
  est.distributed = blocks * std::pow(static_cast<double>(std::min(d, n)), gamma_exp);
  est.speedup = est.monolithic / est.distributed;
  return est;
}

}  // namespace kgd
