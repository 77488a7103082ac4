#pragma once

#include <vector>

#include "kgd/optimizers.hpp"

namespace kgd {

/// Contiguous, disjoint, ordered cover of [0, n) by blocks of size <= D.
struct BlockPartition {
  std::size_t n = 0;
  std::size_t block_size = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // half-open [begin, end)

  std::size_t count() const { return ranges.size(); }
};

BlockPartition partition(std::size_t n, std::size_t d);

/// One independent filtered optimizer per block plus the merged iterate.
struct DistState {
  BlockPartition part;
  std::vector<OptState> blocks;
  Vec x;
  long t = 0;
};

enum class BlockOrder { Forward, Reverse, Parallel };

DistState dist_init(const OptimizerConfig& config, const BlockPartition& part, const Vec& x0,
                    const Vec& first_grad);

/// Aggregate per-iteration diagnostics over blocks (NaN when unavailable).
struct DistStepReport {
  double alpha = 0.0;
  double gain_min = 0.0;
  double gain_max = 0.0;
};

/// Advances every block on its slice of grad_sample and merges the
/// results. The merged state is identical regardless of block order.
std::pair<DistState, DistStepReport> dist_step(const DistState& state,
                                               const OptimizerConfig& config,
                                               const Vec& grad_sample,
                                               BlockOrder order = BlockOrder::Forward);

/// Matrix-cost model for the block-diagonal approximation:
/// monolithic n^gamma vs ceil(n/d) blocks of d^gamma.
struct FlopEstimate {
  double monolithic = 0.0;
  double distributed = 0.0;
  double speedup = 0.0;
  bool approximate = false;  // set when d does not divide n
};

FlopEstimate flop_estimate(std::size_t n, std::size_t d, double gamma_exp);

}  // namespace kgd
