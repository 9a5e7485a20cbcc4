#include "gmvae/props.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gmvae {

GmvaeParams make_constant_solution(const std::vector<double>& mu_x, int k,
                                   const std::vector<double>& mu_z,
                                   const std::vector<double>& logvar_z) {
    if (mu_z.size() != logvar_z.size())
        throw ContractError("make_constant_solution: mu_z and logvar_z sizes differ");
    for (double m : mu_x)
        if (!(m > 0.0 && m < 1.0))
            throw DomainError("make_constant_solution: mu_x entries must lie strictly in (0,1)");

    const ModelConfig cfg = ModelConfig::make(1, {k}, mu_x.size(), mu_z.size(), mu_z.size());
    Arch arch;
    arch.trunk_widths = {8};
    arch.reduce_dim = 4;
    GmvaeParams params = make_gmvae(cfg, arch, 0);

    set_constant_output(params.phi_z, {mu_z, logvar_z});
    const std::vector<double> zeros(cfg.dim_w, 0.0);
    set_constant_output(params.phi_w, {zeros, zeros});

    std::vector<std::vector<double>> beta_targets;
    for (int j = 0; j < k; ++j) {
        beta_targets.push_back(mu_z);
        beta_targets.push_back(logvar_z);
    }
    set_constant_output(params.beta, beta_targets);

    std::vector<double> logits(mu_x.size());
    for (std::size_t i = 0; i < mu_x.size(); ++i)
        logits[i] = std::log(mu_x[i] / (1.0 - mu_x[i]));
    set_constant_output(params.theta, {logits});
    return params;
}

Prop1Result check_proposition1(const std::vector<double>& mu_x, const std::vector<int>& k_list,
                               int n_samples, std::uint64_t seed) {
    if (mu_x.empty()) throw ContractError("check_proposition1: mu_x must be non-empty");
    if (k_list.empty()) throw ContractError("check_proposition1: k_list must be non-empty");
    if (n_samples < 1) throw ContractError("check_proposition1: n_samples must be positive");
    for (double m : mu_x)
        if (!(m > 0.0 && m < 1.0))
            throw DomainError("check_proposition1: mu_x entries must lie strictly in (0,1)");

    Rng rng(seed);
    std::vector<std::vector<double>> xs;
    xs.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        std::vector<double> x(mu_x.size());
        for (std::size_t d = 0; d < mu_x.size(); ++d)
            x[d] = rng.uniform() < mu_x[d] ? 1.0 : 0.0;
        xs.push_back(std::move(x));
    }

    // -log p_data(x) per sample, evaluated directly
    std::vector<double> per_sample_oracle;
    per_sample_oracle.reserve(xs.size());
    double oracle = 0.0;
    for (const auto& x : xs) {
        double lp = 0.0;
        for (std::size_t d = 0; d < mu_x.size(); ++d)
            lp += x[d] * std::log(mu_x[d]) + (1.0 - x[d]) * std::log(1.0 - mu_x[d]);
        per_sample_oracle.push_back(-lp);
        oracle -= lp;
    }
    oracle /= static_cast<double>(n_samples);

    // any fixed constants work for the shared latent Gaussian
    std::vector<double> mu_z = {0.3, -0.2};
    std::vector<double> logvar_z = {0.1, -0.1};

    Prop1Result result;
    result.dim_x = mu_x.size();
    result.k_list = k_list;
    result.oracle = oracle;

    for (int k : k_list) {
        const GmvaeParams params = make_constant_solution(mu_x, k, mu_z, logvar_z);
        Rng noise_rng(rng.fork(static_cast<std::uint64_t>(k)).next_u64());
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const Tensor x({xs[i].size()}, xs[i]);
            const ElboTerms terms = elbo_terms(params, x, 1, 1, noise_rng);
            const double loss = loss_full(terms).scalar_value();
            total += loss;
            result.max_abs_deviation =
                std::max(result.max_abs_deviation, std::abs(loss - per_sample_oracle[i]));
        }
        result.losses.push_back(total / static_cast<double>(n_samples));
    }
    for (std::size_t i = 0; i < result.losses.size(); ++i)
        for (std::size_t j = i + 1; j < result.losses.size(); ++j)
            result.max_cross_k_deviation = std::max(
                result.max_cross_k_deviation, std::abs(result.losses[i] - result.losses[j]));
    result.pass = result.max_abs_deviation <= result.tolerance &&
                  result.max_cross_k_deviation <= result.tolerance;
    return result;
}

Prop2Result check_proposition2(const GmvaeParams& params,
                               const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& delta_list, int mc_samples,
                               std::uint64_t seed) {
    if (params.config.num_classes != 1)
        throw ContractError("check_proposition2: stated for C = 1");
    const auto& prior = params.config.prior(1);
    for (double p : prior)
        if (std::abs(p - prior.front()) > 1e-12)
            throw ContractError("check_proposition2: requires a uniform subcluster prior");
    if (delta_list.empty()) throw ContractError("check_proposition2: empty delta list");
    for (double delta : delta_list)
        if (!(delta > 0.0 && delta < 1.0 / std::numbers::e))
            throw DomainError("check_proposition2: delta must lie in (0, 1/e), got " +
                              std::to_string(delta));
    if (xs.empty()) throw ContractError("check_proposition2: empty dataset");

    const int k = params.config.subclusters[0];
    const double bound = std::log(static_cast<double>(k) / static_cast<double>(k + 1));
    const std::size_t dim_z = params.config.dim_z;

    Prop2Result result;
    result.k = k;
    for (double delta : delta_list) {
        const double u = flat_sigma_for_delta(delta, dim_z);
        const std::vector<double> mean_target(dim_z, 0.0);
        const std::vector<double> logvar_target(dim_z, 2.0 * std::log(u));
        const GmvaeParams grown = add_subcluster_head(params, 1, mean_target, logvar_target);

        Prop2Entry entry;
        entry.k = k;
        entry.delta = delta;
        entry.bound = bound;
        entry.tolerance = std::max(0.05, 10.0 * delta * std::abs(std::log(delta)));
        entry.epsilon = epsilon_k_gap(params, grown, xs, mc_samples, seed);
        entry.pass = entry.epsilon >= bound - entry.tolerance;
        result.entries.push_back(entry);
    }

    // deviations must shrink as delta drops; compare in descending delta order
    std::vector<Prop2Entry> sorted = result.entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const Prop2Entry& a, const Prop2Entry& b) { return a.delta > b.delta; });
    result.sweep_shrinks = true;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const double prev = std::abs(sorted[i - 1].epsilon - bound);
        const double curr = std::abs(sorted[i].epsilon - bound);
        if (curr > prev + 1e-12) result.sweep_shrinks = false;
    }
    result.pass = result.sweep_shrinks &&
                  std::all_of(result.entries.begin(), result.entries.end(),
                              [](const Prop2Entry& e) { return e.pass; });
    return result;
}

} // namespace gmvae
