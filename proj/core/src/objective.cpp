#include "gmvae/objective.hpp"

#include <cmath>

namespace gmvae {

Objective objective_from_string(const std::string& name) {
    if (name == "full") return Objective::Full;
    if (name == "no_vprior") return Objective::NoVPrior;
    if (name == "negated_vprior") return Objective::NegatedVPrior;
    throw ContractError("objective: unknown name '" + name + "'");
}

std::string to_string(Objective objective) {
    switch (objective) {
        case Objective::Full: return "full";
        case Objective::NoVPrior: return "no_vprior";
        case Objective::NegatedVPrior: return "negated_vprior";
    }
    throw ContractError("objective: bad enum value");
}

namespace {

Tensor noise_row(const Tensor& noise, std::size_t row, std::size_t dim) {
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = noise.at(row * dim + i);
    return Tensor({dim}, std::move(v));
}

void check_noise(const Tensor& noise, int mc_samples, std::size_t dim, const char* which) {
    if (noise.shape().size() != 2 || noise.shape()[0] != static_cast<std::size_t>(mc_samples) ||
        noise.shape()[1] != dim)
        throw DimensionError(std::string("elbo_terms: ") + which + " noise must be {" +
                             std::to_string(mc_samples) + "," + std::to_string(dim) + "}, got " +
                             shape_str(noise.shape()));
}

} // namespace

ElboTerms elbo_terms(const GmvaeParams& params, const Tensor& x, int label,
                     const Tensor& z_noise, const Tensor& w_noise, int mc_samples) {
    if (mc_samples < 1) throw ContractError("elbo_terms: mc_samples must be >= 1");
    const auto& cfg = params.config;
    check_noise(z_noise, mc_samples, cfg.dim_z, "z");
    check_noise(w_noise, mc_samples, cfg.dim_w, "w");

    const DiagGaussian q_z = encode_z(params, x);
    const DiagGaussian q_w = encode_w(params, x, label);

    const auto& prior = cfg.prior(label);
    std::vector<double> log_prior(prior.size());
    for (std::size_t j = 0; j < prior.size(); ++j) log_prior[j] = std::log(prior[j]);
    const Tensor log_prior_vec = Tensor({prior.size()}, std::move(log_prior));

    Tensor rec_acc = Tensor::scalar(0.0);
    Tensor cover_acc = Tensor::scalar(0.0);
    Tensor vprior_acc = Tensor::scalar(0.0);
    for (int s = 0; s < mc_samples; ++s) {
        const Tensor z_s = sample_reparameterized(q_z, noise_row(z_noise, s, cfg.dim_z));
        const Tensor w_s = sample_reparameterized(q_w, noise_row(w_noise, s, cfg.dim_w));

        rec_acc = add(rec_acc, bernoulli_log_lik(x, decode(params, z_s)));

        const SubclusterPosterior post = subcluster_posterior(params, z_s, w_s, label);
        const Tensor comp_log_pdfs = stack_scalars(post.component_log_pdfs);
        const Tensor covered = sum(mul(post.probs, comp_log_pdfs));
        cover_acc = add(cover_acc, sub(gaussian_log_pdf(z_s, q_z), covered));

        vprior_acc = add(vprior_acc, sum(mul(post.probs, sub(post.log_probs, log_prior_vec))));
    }

    const double inv_s = 1.0 / static_cast<double>(mc_samples);
    ElboTerms terms;
    terms.reconstruction = scale(rec_acc, inv_s);
    terms.latent_covering = scale(cover_acc, inv_s);
    terms.w_prior = kl_to_std_normal(q_w);
    terms.v_prior = scale(vprior_acc, inv_s);
    return terms;
}

ElboTerms elbo_terms(const GmvaeParams& params, const Tensor& x, int label, int mc_samples,
                     Rng& rng) {
    if (mc_samples < 1) throw ContractError("elbo_terms: mc_samples must be >= 1");
    const std::size_t s = static_cast<std::size_t>(mc_samples);
    Tensor z_noise({s, params.config.dim_z}, rng.normal_vector(s * params.config.dim_z));
    Tensor w_noise({s, params.config.dim_w}, rng.normal_vector(s * params.config.dim_w));
    return elbo_terms(params, x, label, z_noise, w_noise, mc_samples);
}

Tensor loss_full(const ElboTerms& t) {
    return negate(sub(sub(sub(t.reconstruction, t.latent_covering), t.w_prior), t.v_prior));
}

Tensor loss_no_vprior(const ElboTerms& t) {
    return negate(sub(sub(t.reconstruction, t.latent_covering), t.w_prior));
}

Tensor loss_negated_vprior(const ElboTerms& t) {
    return negate(add(sub(sub(t.reconstruction, t.latent_covering), t.w_prior), t.v_prior));
}

Tensor loss(const ElboTerms& terms, Objective objective) {
    switch (objective) {
        case Objective::Full: return loss_full(terms);
        case Objective::NoVPrior: return loss_no_vprior(terms);
        case Objective::NegatedVPrior: return loss_negated_vprior(terms);
    }
    throw ContractError("objective: bad enum value");
}

namespace {

void require_equal_values(const Tensor& a, const Tensor& b, const std::string& name) {
    if (a.shape() != b.shape())
        throw ContractError("epsilon_k_gap: parameter " + name + " changed shape");
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i)
        if (av[i] != bv[i])
            throw ContractError("epsilon_k_gap: parameter " + name + " differs outside beta");
}

void require_uniform_prior(const GmvaeParams& p, const char* which) {
    const auto& prior = p.config.v_prior[0];
    for (double v : prior)
        if (std::abs(v - prior.front()) > 1e-12)
            throw ContractError(std::string("epsilon_k_gap: ") + which +
                                " must use a uniform subcluster prior");
}

void require_k_plus_one_pair(const GmvaeParams& pk, const GmvaeParams& pk1) {
    if (pk.config.num_classes != 1 || pk1.config.num_classes != 1)
        throw ContractError("epsilon_k_gap: defined for C = 1");
    if (pk1.config.subclusters[0] != pk.config.subclusters[0] + 1)
        throw ContractError("epsilon_k_gap: second parameter set must have K+1 subclusters");
    require_uniform_prior(pk, "the K-subcluster parameters");
    require_uniform_prior(pk1, "the grown parameters");
    if (pk.config.dim_x != pk1.config.dim_x || pk.config.dim_z != pk1.config.dim_z ||
        pk.config.dim_w != pk1.config.dim_w)
        throw ContractError("epsilon_k_gap: model dimensions differ");

    auto name_k = pk.named_parameters();
    auto name_k1 = pk1.named_parameters();
    // everything except beta's heads must agree bitwise; beta's first K head
    // pairs must agree as well (the proof's construction keeps them)
    std::size_t i = 0, j = 0;
    const int k = pk.config.subclusters[0];
    const std::size_t new_head_start = 2 * static_cast<std::size_t>(k); // head index of the pair
    while (i < name_k.size() && j < name_k1.size()) {
        const std::string& n1 = name_k[i].first;
        std::string n2 = name_k1[j].first;
        if (n1 == n2) {
            require_equal_values(name_k[i].second, name_k1[j].second, n1);
            ++i;
            ++j;
            continue;
        }
        // the only allowed extras are beta heads K (mean) and K+1 (logvar)
        const std::string extra_mean = "beta.head." + std::to_string(new_head_start) + ".";
        const std::string extra_logvar = "beta.head." + std::to_string(new_head_start + 1) + ".";
        if (n2.rfind(extra_mean, 0) == 0 || n2.rfind(extra_logvar, 0) == 0) {
            ++j;
            continue;
        }
        throw ContractError("epsilon_k_gap: unexpected parameter difference at " + n2);
    }
    if (i != name_k.size())
        throw ContractError("epsilon_k_gap: first parameter set has unmatched parameters");
    while (j < name_k1.size()) {
        const std::string& n2 = name_k1[j].first;
        if (n2.rfind("beta.head.", 0) != 0)
            throw ContractError("epsilon_k_gap: unexpected trailing parameter " + n2);
        ++j;
    }
}

} // namespace

double epsilon_k_gap(const GmvaeParams& params_k, const GmvaeParams& params_k1,
                     const std::vector<std::vector<double>>& xs, int mc_samples,
                     std::uint64_t seed) {
    if (xs.empty()) throw ContractError("epsilon_k_gap: empty dataset");
    require_k_plus_one_pair(params_k, params_k1);

    Rng rng(seed);
    const std::size_t s = static_cast<std::size_t>(mc_samples);
    double loss_k_sum = 0.0;
    double loss_k1_sum = 0.0;
    for (const auto& xv : xs) {
        const Tensor x({xv.size()}, xv);
        Tensor z_noise({s, params_k.config.dim_z},
                       rng.normal_vector(s * params_k.config.dim_z));
        Tensor w_noise({s, params_k.config.dim_w},
                       rng.normal_vector(s * params_k.config.dim_w));
        loss_k_sum +=
            loss_full(elbo_terms(params_k, x, 1, z_noise, w_noise, mc_samples)).scalar_value();
        loss_k1_sum +=
            loss_full(elbo_terms(params_k1, x, 1, z_noise, w_noise, mc_samples)).scalar_value();
    }
    const double n = static_cast<double>(xs.size());
    return loss_k_sum / n - loss_k1_sum / n;
}

} // namespace gmvae
