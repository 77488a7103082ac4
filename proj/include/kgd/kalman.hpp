#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kgd/dense.hpp"
#include "kgd/models.hpp"

namespace kgd {

/// Raised when the innovation covariance loses positive definiteness.
struct FilterDivergence : std::runtime_error {
  long step;
  std::size_t pivot;
  FilterDivergence(long at_step, std::size_t pivot_index)
      : std::runtime_error("filter divergence at step " + std::to_string(at_step) +
                           ": innovation covariance not positive definite, pivot " +
                           std::to_string(pivot_index)),
        step(at_step),
        pivot(pivot_index) {}
};

/// Posterior state estimate and error covariance of one filter instance.
/// P is kept symmetric (re-symmetrized after every update).
struct FilterState {
  Vec z_hat;
  Mat p;
  long t = 0;
};

/// Smoothing gain K~_t = C_t K_t with its eigenvalue bounds. The bounds are
/// NaN when spectra tracking is off or the gain exceeds the diagnostic cap.
struct GainReport {
  Mat gain;
  double min_eig = 0.0;
  double max_eig = 0.0;
};

/// One-step-ahead prediction; t is the index of the step being formed.
struct Prior {
  Vec z;
  Mat p;
  long t = 0;
};

/// Covariance update form. Joseph is the default; Literal is the textbook
/// (I - KC) P form, kept for cross-checking the two agree.
enum class CovUpdate { Joseph, Literal };

Prior predict(const FilterState& state, const Mat& a_t, const Mat& q);

struct UpdateResult {
  FilterState state;
  GainReport gain;
};

UpdateResult update(const Prior& prior, const Mat& c, const Mat& r, const Vec& y,
                    CovUpdate form = CovUpdate::Joseph, bool spectra = true);

/// The n-dimensional gradient-smoothing recursion: the self-contained
/// marginal of the full filter on the gradient block.
struct ReducedStep {
  Vec g_hat;
  Mat p_gg;
  Mat gain;
};

ReducedStep reduced_gradient_step(const Vec& g_hat, const Mat& p_gg, const Vec& y,
                                  double sigma_q, double sigma_r);

/// Which part of the covariance difference the probe reports. The gradient
/// block is the uniformly observed marginal and the part the optimizer
/// consumes; the unobserved iterate block retains its initial mismatch, so
/// the full-state difference does not decay to zero.
enum class ProbeBlock { FullState, GradientBlock };

/// Runs two covariance-only recursions from p0_a and p0_b and returns the
/// Frobenius norm of their difference at t = 0..steps. Covariance evolution
/// is measurement-independent; alpha_fn supplies the stepsize for A_t.
/// Supports Plain and Momentum kinds (the RmsProp transition is
/// data-dependent).
std::vector<double> robustness_probe(const StateSpaceModel& model,
                                     const std::function<double(std::size_t)>& alpha_fn,
                                     const Mat& p0_a, const Mat& p0_b, std::size_t steps,
                                     ProbeBlock block = ProbeBlock::FullState);

}  // namespace kgd
