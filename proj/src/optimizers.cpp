#include "kgd/optimizers.hpp"

#include <cmath>
#include <limits>

namespace kgd {

bool is_filtered(Method m) {
  return m == Method::Kgd || m == Method::KgdMomentum || m == Method::KgdRmsProp;
}

ModelKind model_kind(Method m) {
  switch (m) {
    case Method::Sgd:
    case Method::Kgd:
      return ModelKind::Plain;
    case Method::Momentum:
    case Method::KgdMomentum:
      return ModelKind::Momentum;
    case Method::RmsProp:
    case Method::KgdRmsProp:
      return ModelKind::RmsProp;
  }
  throw std::logic_error("model_kind: unknown method");
}

double alpha_at(const ScheduleSpec& schedule, std::size_t t) {
  if (schedule.a <= 0.0) {
    throw std::invalid_argument("alpha_at: base stepsize must be positive, got " +
                                std::to_string(schedule.a));
  }
  switch (schedule.kind) {
    case ScheduleKind::Constant:
      return schedule.a;
    case ScheduleKind::Harmonic:
      return schedule.a / (1.0 + static_cast<double>(t));
    case ScheduleKind::Geometric:
      if (schedule.rate < 1.0) {
        throw std::invalid_argument("alpha_at: geometric rate must be >= 1 (non-increasing)");
      }
      return schedule.a * std::pow(schedule.rate, -static_cast<double>(t));
  }
  throw std::logic_error("alpha_at: unknown schedule kind");
}

StateSpaceModel OptimizerConfig::model(std::size_t n) const {
  StateSpaceModel m;
  m.kind = model_kind(method);
  m.n = n;
  m.sigma_q = sigma_q;
  m.sigma_r = sigma_r;
  m.mu = mu;
  m.gamma = gamma;
  m.eps = eps;
  return m;
}

namespace {

bool uses_momentum(Method m) { return m == Method::Momentum || m == Method::KgdMomentum; }
bool uses_rmsprop(Method m) { return m == Method::RmsProp || m == Method::KgdRmsProp; }

void validate_config(const OptimizerConfig& c) {
  if (uses_momentum(c.method) && (c.mu <= 0.0 || c.mu >= 1.0)) {
    throw std::invalid_argument("OptimizerConfig: mu must be in (0,1), got " +
                                std::to_string(c.mu));
  }
  if (uses_rmsprop(c.method)) {
    if (c.gamma <= 0.0 || c.gamma >= 1.0)
      throw std::invalid_argument("OptimizerConfig: gamma must be in (0,1), got " +
                                  std::to_string(c.gamma));
    if (c.eps <= 0.0)
      throw std::invalid_argument("OptimizerConfig: eps must be positive");
  }
  if (is_filtered(c.method)) {
    if (c.sigma_q <= 0.0 || c.sigma_r <= 0.0)
      throw std::invalid_argument("OptimizerConfig: sigma_q and sigma_r must be positive");
    if (c.p0_scale <= 0.0)
      throw std::invalid_argument("OptimizerConfig: p0_scale must be positive");
  }
}

Vec extract_g_block(const Vec& z, std::size_t n) {
  Vec g(n);
  const std::size_t off = z.dim() - n;
  for (std::size_t i = 0; i < n; ++i) g[i] = z[off + i];
  return g;
}

std::pair<double, double> spectrum_or_nan(const Mat& gain, bool track) {
  if (!track || gain.rows() > 512) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  return sym_eig_bounds(symmetrize(gain));
}

/// Advance the filter with the gain pinned to the identity: the gradient
/// estimate becomes the measurement itself, bit for bit.
GainReport overridden_filter_step(OptState& next, const OptimizerConfig& config,
                                  const StateSpaceModel& model, const TransitionAux& aux,
                                  const Vec& y) {
  const std::size_t n = model.n;
  FilterState& f = *next.filter;
  if (config.reduced_filter) {
    f.z_hat = y;
    f.p = Mat::scaled_identity(n, config.sigma_r);  // Joseph form with K~ = I
    f.t += 1;
  } else {
    const Mat a_t = build_transition(model, aux);
    const Mat q = Mat::scaled_identity(model.state_dim(), config.sigma_q);
    Prior prior = predict(f, a_t, q);
    const std::size_t off = model.g_offset();
    for (std::size_t i = 0; i < n; ++i) prior.z[off + i] = y[i];
    // (I - C^T C) P- (I - C^T C)^T + C^T R C: zero the g rows/cols, put
    // sigma_r on the g diagonal.
    for (std::size_t i = 0; i < model.state_dim(); ++i) {
      for (std::size_t j = off; j < model.state_dim(); ++j) {
        prior.p(i, j) = 0.0;
        prior.p(j, i) = 0.0;
      }
    }
    for (std::size_t i = 0; i < n; ++i) prior.p(off + i, off + i) = config.sigma_r;
    f.z_hat = std::move(prior.z);
    f.p = std::move(prior.p);
    f.t = prior.t;
  }
  GainReport report;
  report.gain = Mat::identity(n);
  report.min_eig = 1.0;
  report.max_eig = 1.0;
  return report;
}

GainReport filter_step(OptState& next, const OptimizerConfig& config,
                       const StateSpaceModel& model, const TransitionAux& aux, const Vec& y,
                       Vec& v_out) {
  if (config.gain_override == GainOverride::Identity) {
    GainReport report = overridden_filter_step(next, config, model, aux, y);
    v_out = y;
    return report;
  }
  FilterState& f = *next.filter;
  if (config.reduced_filter) {
    ReducedStep rs = reduced_gradient_step(f.z_hat, f.p, y, config.sigma_q, config.sigma_r);
    f.z_hat = rs.g_hat;
    f.p = rs.p_gg;
    f.t += 1;
    v_out = f.z_hat;
    GainReport report;
    std::tie(report.min_eig, report.max_eig) = spectrum_or_nan(rs.gain, config.track_spectra);
    report.gain = std::move(rs.gain);
    return report;
  }
  const Mat a_t = build_transition(model, aux);
  const Mat q = Mat::scaled_identity(model.state_dim(), config.sigma_q);
  const Mat c = observation(model);
  const Mat r = Mat::scaled_identity(model.n, config.sigma_r);
  UpdateResult ur = update(predict(f, a_t, q), c, r, y, CovUpdate::Joseph, config.track_spectra);
  f = std::move(ur.state);
  v_out = extract_g_block(f.z_hat, model.n);
  return std::move(ur.gain);
}

}  // namespace

OptState init(const OptimizerConfig& config, const Vec& x0, const Vec& first_grad) {
  validate_config(config);
  if (x0.dim() == 0) throw std::invalid_argument("init: x0 must be nonempty");
  if (first_grad.dim() != x0.dim()) {
    throw std::invalid_argument("init: first_grad dimension " + std::to_string(first_grad.dim()) +
                                " != x0 dimension " + std::to_string(x0.dim()));
  }
  const std::size_t n = x0.dim();
  OptState s;
  s.x = x0;
  s.t = 0;
  if (uses_momentum(config.method)) s.aux_u = Vec(n);
  if (uses_rmsprop(config.method)) s.aux_r = Vec(n);
  if (is_filtered(config.method)) {
    const StateSpaceModel model = config.model(n);
    FilterState f;
    // The gradient-block estimate starts at zero rather than at the first
    // oracle sample: seeding it with a noisy draw makes the optimizer chase
    // that one sample at full magnitude through the low-gain warmup (~1/k
    // steps), which measurably scatters early iterates. first_grad is still
    // taken so callers draw it uniformly and oracle streams stay aligned
    // across methods.
    if (config.reduced_filter) {
      f.z_hat = Vec(n);
      f.p = Mat::scaled_identity(n, config.p0_scale);
    } else {
      Vec z0(model.state_dim());
      for (std::size_t i = 0; i < n; ++i) z0[i] = x0[i];
      f.z_hat = std::move(z0);
      f.p = Mat::scaled_identity(model.state_dim(), config.p0_scale);
    }
    f.t = 0;
    s.filter = std::move(f);
  }
  return s;
}

std::pair<OptState, StepReport> step(const OptState& state, const OptimizerConfig& config,
                                     const Vec& grad_sample) {
  const std::size_t n = state.x.dim();
  if (grad_sample.dim() != n) {
    throw std::invalid_argument("step: gradient dimension " + std::to_string(grad_sample.dim()) +
                                " != parameter dimension " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grad_sample[i])) {
      throw std::invalid_argument("step: non-finite gradient sample at index " +
                                  std::to_string(i) + ", step " + std::to_string(state.t));
    }
  }

  const double alpha = alpha_at(config.alpha, static_cast<std::size_t>(state.t));
  OptState next = state;
  next.t = state.t + 1;
  StepReport report;
  report.alpha = alpha;

  // Effective gradient estimate driving the x update: x <- x - alpha * direction.
  Vec direction;
  switch (config.method) {
    case Method::Sgd:
      direction = grad_sample;
      break;
    case Method::Momentum: {
      for (std::size_t i = 0; i < n; ++i)
        next.aux_u[i] = config.mu * state.aux_u[i] - (1.0 - config.mu) * grad_sample[i];
      direction = scale(next.aux_u, -1.0);
      break;
    }
    case Method::RmsProp: {
      direction = Vec(n);
      for (std::size_t i = 0; i < n; ++i) {
        next.aux_r[i] =
            config.gamma * state.aux_r[i] + (1.0 - config.gamma) * grad_sample[i] * grad_sample[i];
        direction[i] = grad_sample[i] / (std::sqrt(next.aux_r[i]) + config.eps);
      }
      break;
    }
    case Method::Kgd:
    case Method::KgdMomentum:
    case Method::KgdRmsProp: {
      const StateSpaceModel model = config.model(n);
      TransitionAux aux;
      aux.alpha = alpha;
      if (config.method == Method::KgdRmsProp) {
        aux.grad_sample = grad_sample;
        aux.r = state.aux_r;
      }
      Vec v;
      report.gain = filter_step(next, config, model, aux, grad_sample, v);
      if (config.method == Method::Kgd) {
        direction = std::move(v);
      } else if (config.method == Method::KgdMomentum) {
        for (std::size_t i = 0; i < n; ++i)
          next.aux_u[i] = config.mu * state.aux_u[i] - (1.0 - config.mu) * v[i];
        direction = scale(next.aux_u, -1.0);
      } else {
        direction = Vec(n);
        for (std::size_t i = 0; i < n; ++i) {
          next.aux_r[i] = config.gamma * state.aux_r[i] + (1.0 - config.gamma) * v[i] * v[i];
          direction[i] = v[i] / (std::sqrt(next.aux_r[i]) + config.eps);
        }
      }
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) next.x[i] = state.x[i] - alpha * direction[i];
  report.direction = std::move(direction);
  return {std::move(next), std::move(report)};
}

}  // namespace kgd
