#pragma once

#include <optional>
#include <utility>

#include "kgd/kalman.hpp"

namespace kgd {

enum class Method { Sgd, Momentum, RmsProp, Kgd, KgdMomentum, KgdRmsProp };

bool is_filtered(Method m);
ModelKind model_kind(Method m);

enum class ScheduleKind { Constant, Harmonic, Geometric };

/// Stepsize schedule. Constant: a. Harmonic: a/(1+t). Geometric:
/// a*rate^{-t} with rate >= 1.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Constant;
  double a = 0.1;
  double rate = 1.0;
};

double alpha_at(const ScheduleSpec& schedule, std::size_t t);

enum class GainOverride { None, Identity };

struct OptimizerConfig {
  Method method = Method::Sgd;
  ScheduleSpec alpha;
  double sigma_q = 0.01;
  double sigma_r = 2.0;
  double p0_scale = 0.01;
  double mu = 0.9;
  double gamma = 0.9;
  double eps = 1e-8;
  GainOverride gain_override = GainOverride::None;
  // Run the filtered methods on the self-contained gradient-block marginal
  // instead of the full state (same trajectories up to rounding).
  bool reduced_filter = false;
  // Compute gain/covariance eigenvalue bounds along the way; turn off for
  // large-dimensional runs.
  bool track_spectra = true;

  StateSpaceModel model(std::size_t n) const;
};

struct OptState {
  Vec x;                              // authoritative iterate
  Vec aux_u;                          // momentum velocity (Momentum kinds)
  Vec aux_r;                          // RMSProp second moment (RmsProp kinds)
  std::optional<FilterState> filter;  // filtered kinds; z_hat is the full
                                      // state or just g_hat when reduced
  long t = 0;
};

struct StepReport {
  double alpha = 0.0;
  Vec direction;                      // update direction actually applied
  std::optional<GainReport> gain;     // filtered kinds
};

/// first_grad is drawn by every caller so oracle streams align across
/// methods; the filter's gradient-block estimate itself starts at zero.
OptState init(const OptimizerConfig& config, const Vec& x0, const Vec& first_grad);

std::pair<OptState, StepReport> step(const OptState& state, const OptimizerConfig& config,
                                     const Vec& grad_sample);

}  // namespace kgd
