#include "kgd/problems.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace kgd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_logpdf(double u) { return -0.5 * u * u - 0.5 * kLog2Pi; }

}  // namespace

// --- sinbowl ---------------------------------------------------------------

double sinbowl_value(const Vec& x) {
  return 0.1 * (x[0] * x[0] + x[1] * x[1]) + std::sin(x[0] + 2.0 * x[1]);
}

Vec sinbowl_true_grad(const Vec& x) {
  const double c = std::cos(x[0] + 2.0 * x[1]);
  return Vec{0.2 * x[0] + c, 0.2 * x[1] + 2.0 * c};
}

Vec sinbowl_grad(const Vec& x, Rng& rng, double noise_std) {
  return add(sinbowl_true_grad(x), normal_vec(rng, 2, noise_std));
}

Problem sinbowl_problem(double noise_std) {
  Problem p;
  p.name = "sinbowl";
  p.dim = 2;
  p.objective = sinbowl_value;
  p.grad_oracle = [noise_std](const Vec& x, Rng& rng) {
    return sinbowl_grad(x, rng, noise_std);
  };
  p.true_grad = sinbowl_true_grad;
  p.diag_grad = sinbowl_true_grad;
  return p;
}

std::pair<double, Vec> sinbowl_grid_min(std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("sinbowl_grid_min: resolution must be >= 2");
  const double lo = -6.0;
  const double hi = 6.0;
  const double step = (hi - lo) / static_cast<double>(resolution - 1);
  double best = std::numeric_limits<double>::infinity();
  Vec best_x{0.0, 0.0};
  for (std::size_t i = 0; i < resolution; ++i) {
    const double x0 = lo + step * static_cast<double>(i);
    for (std::size_t j = 0; j < resolution; ++j) {
      const double x1 = lo + step * static_cast<double>(j);
      const double v = 0.1 * (x0 * x0 + x1 * x1) + std::sin(x0 + 2.0 * x1);
      if (v < best) {
        best = v;
        best_x = Vec{x0, x1};
      }
    }
  }
  return {best, best_x};
}

// --- quadratic ----------------------------------------------------------------

Problem quadratic_problem(std::size_t n, double cond, double noise_std) {
  if (n == 0) throw std::invalid_argument("quadratic_problem: n must be positive");
  if (cond < 1.0) throw std::invalid_argument("quadratic_problem: cond must be >= 1");
  auto h = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    (*h)[i] = (n == 1) ? 1.0
                       : std::pow(cond, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  Problem p;
  p.name = "quadratic";
  p.dim = n;
  p.objective = [h](const Vec& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) acc += 0.5 * (*h)[i] * x[i] * x[i];
    return acc;
  };
  auto grad = [h](const Vec& x) {
    Vec g(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) g[i] = (*h)[i] * x[i];
    return g;
  };
  p.true_grad = grad;
  p.diag_grad = grad;
  p.grad_oracle = [grad, noise_std, n](const Vec& x, Rng& rng) {
    return add(grad(x), normal_vec(rng, n, noise_std));
  };
  return p;
}

// --- BBVI -----------------------------------------------------------------------

double bbvi_logp(const Vec& z) {
  const double x = z[0];
  const double y = z[1];
  return normal_logpdf(y / 1.35) + normal_logpdf(x * std::exp(-y));
}

Vec bbvi_logp_grad(const Vec& z) {
  const double x = z[0];
  const double y = z[1];
  const double e2 = std::exp(-2.0 * y);
  return Vec{-x * e2, -y / 1.8225 + x * x * e2};
}

BbviTarget funnel_target() { return {bbvi_logp, bbvi_logp_grad}; }

BbviTarget gaussian_target() {
  return {[](const Vec& z) { return normal_logpdf(z[0]) + normal_logpdf(z[1]); },
          [](const Vec& z) {
            return Vec{-z[0], -z[1]};
          }};
}

std::pair<double, Vec> bbvi_elbo_grad_frozen(const BbviParams& params,
                                             const std::vector<Vec>& eps,
                                             const BbviTarget& target) {
  const std::size_t d = params.mu.dim();
  if (params.log_sigma.dim() != d) {
    throw std::invalid_argument("bbvi_elbo_grad_frozen: mu/log_sigma dimension mismatch");
  }
  if (eps.empty()) throw std::invalid_argument("bbvi_elbo_grad_frozen: need at least one sample");
  double value = 0.0;
  Vec grad(2 * d);
  for (const Vec& e : eps) {
    Vec z(d);
    double log_q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sigma = std::exp(params.log_sigma[i]);
      z[i] = params.mu[i] + sigma * e[i];
      log_q += -0.5 * kLog2Pi - params.log_sigma[i] - 0.5 * e[i] * e[i];
    }
    value += target.logp(z) - log_q;
    const Vec gp = target.grad(z);
    for (std::size_t i = 0; i < d; ++i) {
      const double sigma = std::exp(params.log_sigma[i]);
      grad[i] += gp[i];
      grad[d + i] += gp[i] * sigma * e[i] + 1.0;  // d(-log q)/d log_sigma = +1
    }
  }
  const double inv_s = 1.0 / static_cast<double>(eps.size());
  return {value * inv_s, scale(grad, inv_s)};
}

std::pair<double, Vec> bbvi_elbo_grad(const BbviParams& params, Rng& rng, std::size_t samples,
                                      const BbviTarget& target) {
  if (samples == 0) throw std::invalid_argument("bbvi_elbo_grad: samples must be >= 1");
  std::vector<Vec> eps;
  eps.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) eps.push_back(normal_vec(rng, params.mu.dim(), 1.0));
  return bbvi_elbo_grad_frozen(params, eps, target);
}

BbviParams unpack_bbvi(const Vec& lambda) {
  if (lambda.dim() != 4) {
    throw std::invalid_argument("unpack_bbvi: expected 4 parameters, got " +
                                std::to_string(lambda.dim()));
  }
  return {Vec{lambda[0], lambda[1]}, Vec{lambda[2], lambda[3]}};
}

Problem bbvi_problem(std::size_t samples) {
  if (samples == 0) throw std::invalid_argument("bbvi_problem: samples must be >= 1");
  Problem p;
  p.name = "bbvi";
  p.dim = 4;
  // Deterministic negative-ELBO surrogate: a frozen-seed moderate-S estimate.
  p.objective = [](const Vec& lambda) {
    Rng rng(0x2e1b0 /* fixed */);
    auto [elbo, grad] = bbvi_elbo_grad(unpack_bbvi(lambda), rng, 64);
    (void)grad;
    return -elbo;
  };
  p.grad_oracle = [samples](const Vec& lambda, Rng& rng) {
    auto [elbo, grad] = bbvi_elbo_grad(unpack_bbvi(lambda), rng, samples);
    (void)elbo;
    return scale(grad, -1.0);
  };
  p.diag_grad = [](const Vec& lambda) {
    Rng rng(0x5eed5 /* fixed */);
    auto [elbo, grad] = bbvi_elbo_grad(unpack_bbvi(lambda), rng, 128);
    (void)elbo;
    return scale(grad, -1.0);
  };
  return p;
}

// --- MLP ------------------------------------------------------------------------

std::size_t param_count(const std::vector<std::size_t>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("param_count: need at least two layer sizes");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return total;
}

MlpDataset make_mlp_dataset(std::uint64_t data_seed) {
  Rng rng(data_seed);
  MlpDataset data;
  data.x.reserve(80);
  data.y.reserve(80);
  for (int i = 0; i < 40; ++i) data.x.push_back(2.0 * rng.uniform());
  for (int i = 0; i < 40; ++i) data.x.push_back(6.0 + 2.0 * rng.uniform());
  for (double xi : data.x) data.y.push_back(0.5 * std::cos(xi) + 0.1 * rng.normal());
  double mean = 0.0;
  for (double xi : data.x) mean += xi;
  mean /= static_cast<double>(data.x.size());
  double var = 0.0;
  for (double xi : data.x) var += (xi - mean) * (xi - mean);
  var /= static_cast<double>(data.x.size());
  const double sd = std::sqrt(var);
  for (double& xi : data.x) xi = (xi - mean) / sd;
  return data;
}

void write_dataset_csv(const MlpDataset& data, std::ostream& out) {
  out << "x,y\n";
  char buf[64];
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", data.x[i]);
    out << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", data.y[i]);
    out << buf << "\n";
  }
}

namespace {

/// Forward pass storing activations; tanh on hidden layers, identity output.
struct MlpWorkspace {
  std::vector<std::vector<double>> activations;  // activations[l], l = 0..L
};

double mlp_forward(const MlpSpec& spec, const Vec& w, double input, MlpWorkspace& ws) {
  const auto& sizes = spec.layer_sizes;
  const std::size_t layers = sizes.size() - 1;
  ws.activations.resize(sizes.size());
  ws.activations[0] = {input};
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    auto& a_out = ws.activations[l + 1];
    a_out.assign(out, 0.0);
    const auto& a_in = ws.activations[l];
    for (std::size_t i = 0; i < out; ++i) {
      double z = w[offset + in * out + i];  // bias
      for (std::size_t j = 0; j < in; ++j) z += w[offset + i * in + j] * a_in[j];
      a_out[i] = (l + 1 < layers) ? std::tanh(z) : z;
    }
    offset += (in + 1) * out;
  }
  return ws.activations.back()[0];
}

/// Accumulates d(loss)/dw for one point into grad, where
/// loss = (pred - y)^2 / (2 noise_var).
void mlp_backprop_point(const MlpSpec& spec, const Vec& w, double x, double y, Vec& grad,
                        MlpWorkspace& ws) {
  const auto& sizes = spec.layer_sizes;
  const std::size_t layers = sizes.size() - 1;
  const double pred = mlp_forward(spec, w, x, ws);

  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += (sizes[l] + 1) * sizes[l + 1];
  }

  std::vector<double> delta{(pred - y) / spec.noise_var};  // output layer is linear
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const auto& a_in = ws.activations[l];
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t j = 0; j < in; ++j) grad[offsets[l] + i * in + j] += delta[i] * a_in[j];
      grad[offsets[l] + in * out + i] += delta[i];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t j = 0; j < in; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < out; ++i) acc += w[offsets[l] + i * in + j] * delta[i];
      prev[j] = acc * (1.0 - a_in[j] * a_in[j]);  // tanh'
    }
    delta = std::move(prev);
  }
}

}  // namespace

Problem mlp_problem(const MlpSpec& spec, std::uint64_t data_seed, std::size_t batch_size) {
  const auto& sizes = spec.layer_sizes;
  if (sizes.size() < 2 || sizes.front() != 1 || sizes.back() != 1) {
    throw std::invalid_argument("mlp_problem: layer sizes must start and end with 1");
  }
  if (batch_size == 0) throw std::invalid_argument("mlp_problem: batch_size must be >= 1");
  auto data = std::make_shared<MlpDataset>(make_mlp_dataset(data_seed));
  const std::size_t n_data = data->x.size();
  const std::size_t dim = param_count(sizes);
  const auto spec_copy = spec;

  Problem p;
  p.name = "mlpreg";
  p.dim = dim;
  p.objective = [spec_copy, data, n_data, dim](const Vec& w) {
    MlpWorkspace ws;
    double nll = 0.0;
    for (std::size_t i = 0; i < n_data; ++i) {
      const double pred = mlp_forward(spec_copy, w, data->x[i], ws);
      const double r = pred - data->y[i];
      nll += 0.5 * std::log(2.0 * std::numbers::pi * spec_copy.noise_var) +
             r * r / (2.0 * spec_copy.noise_var);
    }
    double prior = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      prior += 0.5 * std::log(2.0 * std::numbers::pi * spec_copy.prior_var) +
               w[j] * w[j] / (2.0 * spec_copy.prior_var);
    }
    return (nll + prior) / static_cast<double>(n_data);
  };
  auto full_grad = [spec_copy, data, n_data, dim](const Vec& w) {
    MlpWorkspace ws;
    Vec grad(dim);
    for (std::size_t i = 0; i < n_data; ++i) {
      mlp_backprop_point(spec_copy, w, data->x[i], data->y[i], grad, ws);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      grad[j] = (grad[j] + w[j] / spec_copy.prior_var) / static_cast<double>(n_data);
    }
    return grad;
  };
  p.true_grad = full_grad;
  p.diag_grad = full_grad;
  p.grad_oracle = [spec_copy, data, n_data, dim, batch_size](const Vec& w, Rng& rng) {
    MlpWorkspace ws;
    Vec grad(dim);
    for (std::size_t b = 0; b < batch_size; ++b) {
      const std::size_t i = rng.index(n_data);
      mlp_backprop_point(spec_copy, w, data->x[i], data->y[i], grad, ws);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      grad[j] = grad[j] / static_cast<double>(batch_size) +
                w[j] / (spec_copy.prior_var * static_cast<double>(n_data));
    }
    return grad;
  };
  return p;
}

Vec mlp_init(const MlpSpec& spec, Rng& rng) {
  Vec w(param_count(spec.layer_sizes));
  for (std::size_t i = 0; i < w.dim(); ++i) w[i] = 0.1 * rng.normal();
  return w;
}

// --- finite differences -----------------------------------------------------------

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("fd_gradient: h must be positive");
  Vec grad(x.dim());
  Vec probe = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    probe[i] = xi + hi;
    const double fp = f(probe);
    probe[i] = xi - hi;
    const double fm = f(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("fd_gradient: non-finite objective at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * hi);
  }
  return grad;
}

}  // namespace kgd
