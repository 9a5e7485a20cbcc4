#pragma once

#include "gmvae/model.hpp"

namespace gmvae {

/// The four objective components, each a per-sample expectation estimate in
/// nats. Every field is a one-element tensor; computed under an active tape
/// the terms stay differentiable end to end.
struct ElboTerms {
    Tensor reconstruction;   // E_q[log p(x|z)]
    Tensor latent_covering;  // E_q[log q(z|x) - sum_j p(v=j|...) log p(z|w,y,v=j)]
    Tensor w_prior;          // KL(q(w|x,y) || N(0,I)), closed form
    Tensor v_prior;          // E_q[KL(p(v|z,w,y) || pi(y))]
};

enum class Objective { Full, NoVPrior, NegatedVPrior };

Objective objective_from_string(const std::string& name);
std::string to_string(Objective objective);

/// Monte-Carlo estimate of the objective components for one labeled sample.
/// Noise rows are consumed per draw: both tensors must be {mc_samples, dim}.
ElboTerms elbo_terms(const GmvaeParams& params, const Tensor& x, int label,
                     const Tensor& z_noise, const Tensor& w_noise, int mc_samples);

/// Convenience overload drawing the injected noise from `rng`.
ElboTerms elbo_terms(const GmvaeParams& params, const Tensor& x, int label, int mc_samples,
                     Rng& rng);

/// -(reconstruction - latent_covering - w_prior - v_prior).
Tensor loss_full(const ElboTerms& terms);

/// The modified objective: the v-prior term is dropped entirely.
Tensor loss_no_vprior(const ElboTerms& terms);

/// Sign-flipped v-prior variant, kept behind this switch for comparison runs.
Tensor loss_negated_vprior(const ElboTerms& terms);

Tensor loss(const ElboTerms& terms, Objective objective);

/// Mean full loss of `params_k` minus mean full loss of `params_k1` over the
/// dataset, the empirical epsilon_K for a (K, K+1) parameter pair related by
/// add_subcluster_head. Both losses are evaluated with common random numbers
/// drawn from `seed`, so the difference isolates the subcluster terms.
/// Requires C = 1 and parameter sets identical outside beta.
double epsilon_k_gap(const GmvaeParams& params_k, const GmvaeParams& params_k1,
                     const std::vector<std::vector<double>>& xs, int mc_samples,
                     std::uint64_t seed);

} // namespace gmvae
