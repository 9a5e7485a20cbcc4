#pragma once

#include <vector>

#include "gmvae/dists.hpp"
#include "gmvae/network.hpp"

namespace gmvae {

/// Model configuration. Class labels are 1-based throughout the library:
/// known classes are 1..C, and C+1 denotes the unknown label in open-set
/// evaluation.
struct ModelConfig {
    int num_classes = 1;                      // C
    std::vector<int> subclusters;             // K_c per class, each >= 1
    std::size_t dim_x = 0;
    std::size_t dim_z = 0;
    std::size_t dim_w = 0;
    std::vector<std::vector<double>> v_prior; // pi(y=c), one simplex per class

    static ModelConfig make(int num_classes, std::vector<int> subclusters, std::size_t dim_x,
                            std::size_t dim_z, std::size_t dim_w);

    void validate() const;
    int subcluster_count(int label) const;
    const std::vector<double>& prior(int label) const;
    /// Heads of beta preceding class `label`: 2 * sum_{c < label} K_c.
    std::size_t beta_head_offset(int label) const;
    int total_subclusters() const;
};

/// Network sizes for the fully connected desk-scale architecture.
struct Arch {
    std::vector<std::size_t> trunk_widths = {64, 64};
    std::size_t reduce_dim = 16; // x is reduced to this before y is appended
};

/// The full parameter set: recognition networks phi_z and phi_w, the
/// per-(class, subcluster) generative network beta, and the decoder theta.
///
/// phi_w sees the input x reduced by its own dense reduction layer with the
/// one-hot label appended. beta holds 2 * sum_c K_c heads ordered
/// class-major, mean before logvar. theta's single head emits logits; the
/// logistic squash lives in decode() so every head keeps its identity
/// activation.
struct GmvaeParams {
    ModelConfig config;
    Arch arch;
    HeadedNetwork phi_z;  // 2 heads: z-mean, z-logvar
    Layer phi_w_reduce;   // dim_x -> reduce_dim, relu
    HeadedNetwork phi_w;  // input reduce_dim + C, 2 heads: w-mean, w-logvar
    HeadedNetwork beta;   // input dim_w, 2 * sum_c K_c heads of dim_z
    HeadedNetwork theta;  // input dim_z, 1 head of dim_x (logits)

    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    std::vector<Tensor> parameters() const;
    /// Group name ("phi_z", "phi_w", "beta", "theta") for a named parameter.
    static std::string group_of(const std::string& name);

    GmvaeParams clone() const;
};

GmvaeParams make_gmvae(const ModelConfig& config, const Arch& arch, std::uint64_t seed);

/// q(z|x): runs phi_z.
DiagGaussian encode_z(const GmvaeParams& params, const Tensor& x);

/// q(w|x,y): runs phi_w on the reduced x with the one-hot label appended.
DiagGaussian encode_w(const GmvaeParams& params, const Tensor& x, int label);
DiagGaussian encode_w(const GmvaeParams& params, const Tensor& x, const Tensor& one_hot);

/// The K_c subcluster distributions p(z|w,y=label,v) read from beta's heads.
std::vector<DiagGaussian> subcluster_components(const GmvaeParams& params, const Tensor& w,
                                                int label);

/// Subcluster posterior p(v|z,w,y) with the pieces the objective needs.
struct SubclusterPosterior {
    Tensor log_probs; // {K_c}
    Tensor probs;     // {K_c}, sums to 1
    std::vector<DiagGaussian> components;
    std::vector<Tensor> component_log_pdfs; // log p(z|w,y,v=j) at the given z
};

SubclusterPosterior subcluster_posterior(const GmvaeParams& params, const Tensor& z,
                                         const Tensor& w, int label);

/// Probability vector over the K_c subclusters, computed by Bayes' rule
/// through log_sum_exp; sums to 1 and is differentiable.
Tensor v_posterior(const GmvaeParams& params, const Tensor& z, const Tensor& w, int label);

/// p(x|z): theta's logits through the logistic squash, clamped.
BernoulliParam decode(const GmvaeParams& params, const Tensor& z);

/// New parameter set with one more subcluster for `label`: beta gains a
/// constant-output (mean, logvar) head pair initialized at the given targets;
/// every pre-existing head's output is unchanged for all inputs.
GmvaeParams add_subcluster_head(const GmvaeParams& params, int label,
                                const std::vector<double>& mean_target,
                                const std::vector<double>& logvar_target);

struct GeneratedSample {
    Tensor x;    // Bernoulli mean, or a binarized draw from it
    Tensor z;
    Tensor w;
    int subcluster; // 1-based index of the sampled v
};

/// Ancestral sample from the generative process for one class.
GeneratedSample generate_sample(const GmvaeParams& params, int label, Rng& rng,
                                bool binarize = false);

/// One-hot encoding of a 1-based label over C classes.
Tensor one_hot(int label, int num_classes);

} // namespace gmvae
