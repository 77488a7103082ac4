#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kgd/dense.hpp"

namespace kgd {

/// A minimization problem with a stochastic gradient oracle. true_grad is
/// the analytic gradient when one exists; diag_grad is a reference gradient
/// for telemetry (equal to true_grad where that exists).
struct Problem {
  std::string name;
  std::size_t dim = 0;
  std::function<double(const Vec&)> objective;
  std::function<Vec(const Vec&, Rng&)> grad_oracle;
  std::function<Vec(const Vec&)> true_grad;  // may be empty
  std::function<Vec(const Vec&)> diag_grad;  // may be empty
};

// --- 2-D sinusoidal bowl -----------------------------------------------

double sinbowl_value(const Vec& x);
Vec sinbowl_true_grad(const Vec& x);
Vec sinbowl_grad(const Vec& x, Rng& rng, double noise_std);
Problem sinbowl_problem(double noise_std);

/// Global minimum located by grid search over [-6,6]^2.
std::pair<double, Vec> sinbowl_grid_min(std::size_t resolution = 2001);

// --- diagonal quadratic ---------------------------------------------------

/// f(x) = 0.5 x^T H x with H diagonal, entries log-spaced in [1, cond];
/// the oracle adds N(0, noise_std^2 I).
Problem quadratic_problem(std::size_t n, double cond, double noise_std);

// --- black-box variational inference ---------------------------------------

/// Diagonal-Gaussian variational parameters; sigma = exp(log_sigma).
struct BbviParams {
  Vec mu;
  Vec log_sigma;
};

/// Target log-density and its gradient (up to an additive constant).
struct BbviTarget {
  std::function<double(const Vec&)> logp;
  std::function<Vec(const Vec&)> grad;
};

/// Funnel-shaped 2-D target log p(z) = phi(y/1.35) + phi(x*e^-y) with phi
/// the standard-normal log-density.
BbviTarget funnel_target();
/// Standard normal target (ELBO gradient vanishes at mu=0, log_sigma=0).
BbviTarget gaussian_target();

double bbvi_logp(const Vec& z);
Vec bbvi_logp_grad(const Vec& z);

/// S-sample reparameterized ELBO estimate and its pathwise gradient w.r.t.
/// lambda = (mu, log_sigma), holding the given noise draws fixed.
std::pair<double, Vec> bbvi_elbo_grad_frozen(const BbviParams& params,
                                             const std::vector<Vec>& eps,
                                             const BbviTarget& target = funnel_target());

std::pair<double, Vec> bbvi_elbo_grad(const BbviParams& params, Rng& rng, std::size_t samples,
                                      const BbviTarget& target = funnel_target());

/// Minimizes the negative ELBO over the flat layout (mu0, mu1, ls0, ls1).
/// The objective is a fixed-seed moderate-S estimate (deterministic map);
/// the oracle uses `samples` fresh draws per call.
Problem bbvi_problem(std::size_t samples);

BbviParams unpack_bbvi(const Vec& lambda);

// --- MLP regression ---------------------------------------------------------

struct MlpSpec {
  std::vector<std::size_t> layer_sizes{1, 4, 4, 1};
  double noise_var = 0.01;  // likelihood variance
  double prior_var = 10.0;  // weight prior variance
};

std::size_t param_count(const std::vector<std::size_t>& layer_sizes);

struct MlpDataset {
  std::vector<double> x;
  std::vector<double> y;
};

/// 80 points: 40 inputs uniform on [0,2] and 40 on [6,8], targets
/// 0.5 cos(x) + N(0, 0.1^2), inputs standardized to zero mean and unit
/// variance. A pure function of data_seed.
MlpDataset make_mlp_dataset(std::uint64_t data_seed);

void write_dataset_csv(const MlpDataset& data, std::ostream& out);

/// Negative mean log-posterior objective with minibatch backprop oracle
/// (batches sampled with replacement).
Problem mlp_problem(const MlpSpec& spec, std::uint64_t data_seed, std::size_t batch_size = 8);

/// Parameter init for the tanh MLP: all entries 0.1 * N(0, 1).
Vec mlp_init(const MlpSpec& spec, Rng& rng);

// --- finite differences ------------------------------------------------------

/// Central differences with per-coordinate step h * max(1, |x_i|).
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);

}  // namespace kgd
