#pragma once

#include <optional>

#include "kgd/dense.hpp"

namespace kgd {

enum class ModelKind { Plain, Momentum, RmsProp };

/// State-space setup for the filtered optimizers. The implied noise
/// covariances are Q = sigma_q * I_{state_dim} and R = sigma_r * I_n; they
/// are never stored densely here.
struct StateSpaceModel {
  ModelKind kind = ModelKind::Plain;
  std::size_t n = 0;       // parameter dimension
  double sigma_q = 0.01;
  double sigma_r = 2.0;
  double mu = 0.9;         // Momentum only
  double gamma = 0.9;      // RmsProp only
  double eps = 1e-8;       // RmsProp only

  std::size_t state_dim() const {
    return kind == ModelKind::Plain ? 2 * n : 3 * n;
  }
  /// Index of the first coordinate of the trailing gradient block.
  std::size_t g_offset() const { return state_dim() - n; }
};

/// Per-step inputs to the transition builder.
struct TransitionAux {
  double alpha = 0.0;                 // stepsize alpha_t
  std::optional<Vec> grad_sample;     // RmsProp: sample used in diag(.)
  std::optional<Vec> r;               // RmsProp: running second moment r_t
};

/// Block transition matrix A_t for the model kind.
Mat build_transition(const StateSpaceModel& model, const TransitionAux& aux);

/// n x state_dim selector of the trailing gradient block.
Mat observation(const StateSpaceModel& model);

/// det(A_t) from the upper-triangular block structure.
double transition_determinant_check(const StateSpaceModel& model, const TransitionAux& aux);

/// Elementwise 1 / (sqrt(gamma*r + (1-gamma)*g.*g) + eps).
Vec rmsprop_beta(const Vec& r, const Vec& grad, double gamma, double eps);

}  // namespace kgd
