#include "kgd/models.hpp"

#include <cmath>

namespace kgd {

namespace {

void require_model(const StateSpaceModel& m) {
  if (m.n == 0) throw std::invalid_argument("StateSpaceModel: n must be positive");
  if (m.sigma_q <= 0.0 || m.sigma_r <= 0.0) {
    throw std::invalid_argument("StateSpaceModel: sigma_q and sigma_r must be positive");
  }
  if (m.kind == ModelKind::Momentum && (m.mu <= 0.0 || m.mu >= 1.0)) {
    throw std::invalid_argument("StateSpaceModel: mu must be in (0,1)");
  }
  if (m.kind == ModelKind::RmsProp) {
    if (m.gamma <= 0.0 || m.gamma >= 1.0)
      throw std::invalid_argument("StateSpaceModel: gamma must be in (0,1)");
    if (m.eps <= 0.0) throw std::invalid_argument("StateSpaceModel: eps must be positive");
  }
}

void require_aux(const StateSpaceModel& m, const TransitionAux& aux) {
  if (aux.alpha <= 0.0) {
    throw std::invalid_argument("TransitionAux: alpha must be positive, got " +
                                std::to_string(aux.alpha));
  }
  if (m.kind == ModelKind::RmsProp) {
    if (!aux.grad_sample || !aux.r) {
      throw std::invalid_argument("TransitionAux: RmsProp transition needs grad_sample and r");
    }
    if (aux.grad_sample->dim() != m.n || aux.r->dim() != m.n) {
      throw std::invalid_argument("TransitionAux: grad_sample/r dimension does not match n=" +
                                  std::to_string(m.n));
    }
    for (std::size_t i = 0; i < m.n; ++i) {
      if ((*aux.r)[i] < 0.0) {
        throw std::invalid_argument("TransitionAux: r must be elementwise nonnegative");
      }
    }
  }
}

}  // namespace

Vec rmsprop_beta(const Vec& r, const Vec& grad, double gamma, double eps) {
  Vec beta(r.dim());
  for (std::size_t i = 0; i < r.dim(); ++i) {
    const double second_moment = gamma * r[i] + (1.0 - gamma) * grad[i] * grad[i];
    beta[i] = 1.0 / (std::sqrt(second_moment) + eps);
  }
  return beta;
}

Mat build_transition(const StateSpaceModel& model, const TransitionAux& aux) {
  require_model(model);
  require_aux(model, aux);
  const std::size_t n = model.n;
  const double alpha = aux.alpha;
  Mat a(model.state_dim(), model.state_dim());

  switch (model.kind) {
    case ModelKind::Plain:
      // [ I  -alpha ]
      // [ 0    I    ]
      for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        a(i, n + i) = -alpha;
        a(n + i, n + i) = 1.0;
      }
      break;
    case ModelKind::Momentum:
      // [ I  alpha*mu  -alpha*(1-mu) ]
      // [ 0     mu        -(1-mu)    ]
      // [ 0      0           I       ]
      for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        a(i, n + i) = alpha * model.mu;
        a(i, 2 * n + i) = -alpha * (1.0 - model.mu);
        a(n + i, n + i) = model.mu;
        a(n + i, 2 * n + i) = -(1.0 - model.mu);
        a(2 * n + i, 2 * n + i) = 1.0;
      }
      break;
    case ModelKind::RmsProp: {
      // [ I    0     -alpha*diag(beta)    ]
      // [ 0  gamma  (1-gamma)*diag(g)     ]
      // [ 0    0           I              ]
      const Vec beta = rmsprop_beta(*aux.r, *aux.grad_sample, model.gamma, model.eps);
      for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        a(i, 2 * n + i) = -alpha * beta[i];
        a(n + i, n + i) = model.gamma;
        a(n + i, 2 * n + i) = (1.0 - model.gamma) * (*aux.grad_sample)[i];
        a(2 * n + i, 2 * n + i) = 1.0;
      }
      break;
    }
  }
  return a;
}

Mat observation(const StateSpaceModel& model) {
  require_model(model);
  Mat c(model.n, model.state_dim());
  const std::size_t off = model.g_offset();
  for (std::size_t i = 0; i < model.n; ++i) c(i, off + i) = 1.0;
  return c;
}

double transition_determinant_check(const StateSpaceModel& model, const TransitionAux& aux) {
  const Mat a = build_transition(model, aux);
  double det = 1.0;
  for (std::size_t i = 0; i < a.rows(); ++i) det *= a(i, i);
  return det;
}

}  // namespace kgd
