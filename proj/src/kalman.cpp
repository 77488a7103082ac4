#include "kgd/kalman.hpp"

#include <cmath>
#include <limits>

namespace kgd {

namespace {

constexpr std::size_t kSpectraCap = 512;

std::pair<double, double> gain_spectrum(const Mat& gain, bool spectra) {
  if (!spectra || gain.rows() > kSpectraCap) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  // K~ = B (sigma_R I + B)^{-1} is symmetric up to rounding when R is a
  // scaled identity; symmetrize before the Jacobi pass.
  return sym_eig_bounds(symmetrize(gain));
}

}  // namespace

Prior predict(const FilterState& state, const Mat& a_t, const Mat& q) {
  const std::size_t m = state.z_hat.dim();
  if (a_t.rows() != m || a_t.cols() != m) {
    throw std::invalid_argument("predict: transition shape (" + a_t.shape_str() +
                                ") does not match state dimension " + std::to_string(m));
  }
  if (q.rows() != m || q.cols() != m) {
    throw std::invalid_argument("predict: process noise shape (" + q.shape_str() +
                                ") does not match state dimension " + std::to_string(m));
  }
  Prior prior;
  prior.z = mat_vec(a_t, state.z_hat);
  prior.p = symmetrize(add(mat_mul_nt(mat_mul(a_t, state.p), a_t), q));
  prior.t = state.t + 1;
  return prior;
}

UpdateResult update(const Prior& prior, const Mat& c, const Mat& r, const Vec& y,
                    CovUpdate form, bool spectra) {
  const std::size_t m = prior.z.dim();
  const std::size_t p = c.rows();
  if (c.cols() != m) {
    throw std::invalid_argument("update: observation shape (" + c.shape_str() +
                                ") does not match state dimension " + std::to_string(m));
  }
  if (r.rows() != p || r.cols() != p || y.dim() != p) {
    throw std::invalid_argument("update: measurement dimension mismatch (r " + r.shape_str() +
                                ", y " + std::to_string(y.dim()) + ", expected " +
                                std::to_string(p) + ")");
  }

  const Mat cp = mat_mul(c, prior.p);                    // C P-   (p x m)
  const Mat s = add(r, mat_mul_nt(cp, c));               // R + C P- C^T
  Mat k_t;                                               // K^T = S^{-1} C P-
  try {
    k_t = chol_solve(symmetrize(s), cp);
  } catch (const NotPositiveDefinite& e) {
    throw FilterDivergence(prior.t, e.pivot);
  }
  const Mat k = transpose(k_t);                          // m x p

  const Vec innovation = sub(y, mat_vec(c, prior.z));
  FilterState next;
  next.z_hat = add(prior.z, mat_vec(k, innovation));
  next.t = prior.t;

  const Mat kc = mat_mul(k, c);
  if (form == CovUpdate::Joseph) {
    Mat ident_minus_kc = scale(kc, -1.0);
    for (std::size_t i = 0; i < m; ++i) ident_minus_kc(i, i) += 1.0;
    const Mat core = mat_mul_nt(mat_mul(ident_minus_kc, prior.p), ident_minus_kc);
    next.p = symmetrize(add(core, mat_mul_nt(mat_mul(k, r), k)));
  } else {
    Mat ident_minus_kc = scale(kc, -1.0);
    for (std::size_t i = 0; i < m; ++i) ident_minus_kc(i, i) += 1.0;
    next.p = symmetrize(mat_mul(ident_minus_kc, prior.p));
  }

  GainReport report;
  report.gain = mat_mul(c, k);                           // K~ = C K  (p x p)
  std::tie(report.min_eig, report.max_eig) = gain_spectrum(report.gain, spectra);
  return {std::move(next), std::move(report)};
}

ReducedStep reduced_gradient_step(const Vec& g_hat, const Mat& p_gg, const Vec& y,
                                  double sigma_q, double sigma_r) {
  if (sigma_q <= 0.0 || sigma_r <= 0.0) {
    throw std::invalid_argument("reduced_gradient_step: sigma_q and sigma_r must be positive");
  }
  const std::size_t n = g_hat.dim();
  if (p_gg.rows() != n || p_gg.cols() != n || y.dim() != n) {
    throw std::invalid_argument("reduced_gradient_step: dimension mismatch (g " +
                                std::to_string(n) + ", p " + p_gg.shape_str() + ", y " +
                                std::to_string(y.dim()) + ")");
  }
  const Mat p_prior = add_scaled_identity(p_gg, sigma_q);
  const Mat s = add_scaled_identity(p_prior, sigma_r);
  const Mat gain = transpose(chol_solve(s, p_prior));    // K~ = P- (P- + sigma_R I)^{-1}

  ReducedStep out;
  // (I - K~) g + K~ y, evaluated in innovation form so g == y is a fixed
  // point exactly and the arithmetic matches the full filter's update.
  out.g_hat = add(g_hat, mat_vec(gain, sub(y, g_hat)));
  Mat ident_minus_gain = scale(gain, -1.0);
  for (std::size_t i = 0; i < n; ++i) ident_minus_gain(i, i) += 1.0;
  out.p_gg = symmetrize(mat_mul(ident_minus_gain, p_prior));
  out.gain = gain;
  return out;
}

std::vector<double> robustness_probe(const StateSpaceModel& model,
                                     const std::function<double(std::size_t)>& alpha_fn,
                                     const Mat& p0_a, const Mat& p0_b, std::size_t steps,
                                     ProbeBlock block) {
  if (model.kind == ModelKind::RmsProp) {
    throw std::invalid_argument(
        "robustness_probe: RmsProp transition is data-dependent; use Plain or Momentum");
  }
  if (steps < 10) {
    throw std::invalid_argument("robustness_probe: steps must be >= 10, got " +
                                std::to_string(steps));
  }
  const std::size_t m = model.state_dim();
  if (p0_a.rows() != m || p0_a.cols() != m || p0_b.rows() != m || p0_b.cols() != m) {
    throw std::invalid_argument("robustness_probe: initial covariances must be " +
                                std::to_string(m) + "x" + std::to_string(m));
  }

  const Mat c = observation(model);
  const Mat r = Mat::scaled_identity(model.n, model.sigma_r);
  const Mat q = Mat::scaled_identity(m, model.sigma_q);
  const Vec y(model.n);  // covariance evolution ignores measurements

  FilterState fa{Vec(m), symmetrize(p0_a), 0};
  FilterState fb{Vec(m), symmetrize(p0_b), 0};
  const std::size_t g_off = model.g_offset();
  auto diff_norm = [&](const Mat& pa, const Mat& pb) {
    if (block == ProbeBlock::FullState) return frobenius_norm(sub(pa, pb));
    double acc = 0.0;
    for (std::size_t i = g_off; i < m; ++i) {
      for (std::size_t j = g_off; j < m; ++j) {
        const double d = pa(i, j) - pb(i, j);
        acc += d * d;
      }
    }
    return std::sqrt(acc);
  };
  std::vector<double> series;
  series.reserve(steps + 1);
  series.push_back(diff_norm(fa.p, fb.p));
  for (std::size_t t = 0; t < steps; ++t) {
    const Mat a_t = build_transition(model, TransitionAux{alpha_fn(t), {}, {}});
    fa = update(predict(fa, a_t, q), c, r, y, CovUpdate::Joseph, false).state;
    fb = update(predict(fb, a_t, q), c, r, y, CovUpdate::Joseph, false).state;
    series.push_back(diff_norm(fa.p, fb.p));
  }
  return series;
}

}  // namespace kgd
