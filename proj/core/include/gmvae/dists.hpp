#pragma once

#include "gmvae/tensor.hpp"

namespace gmvae {

/// Diagonal Gaussian N(mean, diag(exp(logvar))). Networks emit log-variance,
/// so positivity of the variance needs no constraint handling.
struct DiagGaussian {
    Tensor mean;
    Tensor logvar;

    DiagGaussian(Tensor mean_, Tensor logvar_);
    std::size_t dim() const { return mean.numel(); }
};

/// Elementwise Bernoulli observation model. Entries are clamped into
/// [kProbClamp, 1 - kProbClamp] at construction.
struct BernoulliParam {
    static constexpr double kProbClamp = 1e-6;

    Tensor mean;

    explicit BernoulliParam(const Tensor& probabilities);
    std::size_t dim() const { return mean.numel(); }
};

/// log N(z; mean, diag(exp(logvar))), differentiable in z, mean and logvar.
Tensor gaussian_log_pdf(const Tensor& z, const DiagGaussian& g);

/// KL(g || N(0, I)) in closed form; nonnegative, zero iff g is standard normal.
Tensor kl_to_std_normal(const DiagGaussian& g);

/// mean + exp(logvar / 2) * noise. Gradients reach mean and logvar; the noise
/// values are folded in as constants so the caller's tensor stays untouched.
Tensor sample_reparameterized(const DiagGaussian& g, const Tensor& noise);

/// sum_i x_i log p_i + (1 - x_i) log(1 - p_i). Valid for binary and for
/// relaxed x in [0,1] (the unnormalized continuous Bernoulli); entries of x
/// outside [0,1] raise a domain error.
Tensor bernoulli_log_lik(const Tensor& x, const BernoulliParam& p);

/// Per-dimension sigma u such that the d-dimensional N(mu, diag(u^2,...,u^2))
/// density stays <= delta everywhere. Defined for every delta > 0.
double flat_sigma_for_delta(double delta, std::size_t d);

} // namespace gmvae
