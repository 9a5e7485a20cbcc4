#include "gmvae/model.hpp"

#include <cmath>
#include <numeric>

namespace gmvae {

ModelConfig ModelConfig::make(int num_classes, std::vector<int> subclusters, std::size_t dim_x,
                              std::size_t dim_z, std::size_t dim_w) {
    ModelConfig cfg;
    cfg.num_classes = num_classes;
    cfg.subclusters = std::move(subclusters);
    cfg.dim_x = dim_x;
    cfg.dim_z = dim_z;
    cfg.dim_w = dim_w;
    cfg.v_prior.reserve(cfg.subclusters.size());
    for (int k : cfg.subclusters)
        cfg.v_prior.emplace_back(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    cfg.validate();
    return cfg;
}

void ModelConfig::validate() const {
    if (num_classes < 1) throw ContractError("model config: need at least one class");
    if (subclusters.size() != static_cast<std::size_t>(num_classes))
        throw ContractError("model config: subcluster list must have one entry per class");
    if (dim_x == 0 || dim_z == 0 || dim_w == 0)
        throw ContractError("model config: dimensions must be positive");
    if (v_prior.size() != subclusters.size())
        throw ContractError("model config: v_prior must have one simplex per class");
    for (std::size_t c = 0; c < subclusters.size(); ++c) {
        if (subclusters[c] < 1) throw ContractError("model config: each K_c must be >= 1");
        const auto& pi = v_prior[c];
        if (pi.size() != static_cast<std::size_t>(subclusters[c]))
            throw ContractError("model config: v_prior size does not match K_c");
        double total = 0.0;
        for (double p : pi) {
            if (!(p > 0.0)) throw ContractError("model config: v_prior entries must be positive");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ContractError("model config: v_prior for class " + std::to_string(c + 1) +
                                " sums to " + std::to_string(total));
    }
}

int ModelConfig::subcluster_count(int label) const {
    if (label < 1 || label > num_classes)
        throw ContractError("model config: class label " + std::to_string(label) +
                            " outside [1.." + std::to_string(num_classes) + "]");
    return subclusters[static_cast<std::size_t>(label - 1)];
}

const std::vector<double>& ModelConfig::prior(int label) const {
    subcluster_count(label); // range check
    return v_prior[static_cast<std::size_t>(label - 1)];
}

std::size_t ModelConfig::beta_head_offset(int label) const {
    subcluster_count(label);
    std::size_t offset = 0;
    for (int c = 1; c < label; ++c)
        offset += static_cast<std::size_t>(subclusters[static_cast<std::size_t>(c - 1)]);
    return 2 * offset;
}

int ModelConfig::total_subclusters() const {
    return std::accumulate(subclusters.begin(), subclusters.end(), 0);
}

std::vector<std::pair<std::string, Tensor>> GmvaeParams::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    phi_z.collect_parameters("phi_z", out);
    out.emplace_back("phi_w.reduce.weight", phi_w_reduce.weight);
    out.emplace_back("phi_w.reduce.bias", phi_w_reduce.bias);
    phi_w.collect_parameters("phi_w", out);
    beta.collect_parameters("beta", out);
    theta.collect_parameters("theta", out);
    return out;
}

std::vector<Tensor> GmvaeParams::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::string GmvaeParams::group_of(const std::string& name) {
    return name.substr(0, name.find('.'));
}

GmvaeParams GmvaeParams::clone() const {
    GmvaeParams copy;
    copy.config = config;
    copy.arch = arch;
    copy.phi_z = phi_z.clone();
    copy.phi_w_reduce = phi_w_reduce.clone();
    copy.phi_w = phi_w.clone();
    copy.beta = beta.clone();
    copy.theta = theta.clone();
    return copy;
}

GmvaeParams make_gmvae(const ModelConfig& config, const Arch& arch, std::uint64_t seed) {
    config.validate();
    if (arch.trunk_widths.empty() || arch.reduce_dim == 0)
        throw ContractError("make_gmvae: architecture must have a trunk and a reduce layer");
    Rng rng(seed);
    GmvaeParams p;
    p.config = config;
    p.arch = arch;
    p.phi_z = make_mlp(config.dim_x, arch.trunk_widths, {config.dim_z, config.dim_z}, rng);
    p.phi_w_reduce = make_layer(config.dim_x, arch.reduce_dim, Activation::Relu, rng);
    p.phi_w = make_mlp(arch.reduce_dim + static_cast<std::size_t>(config.num_classes),
                       arch.trunk_widths, {config.dim_w, config.dim_w}, rng);
    const std::size_t beta_heads = 2 * static_cast<std::size_t>(config.total_subclusters());
    p.beta = make_mlp(config.dim_w, arch.trunk_widths,
                      std::vector<std::size_t>(beta_heads, config.dim_z), rng);
    p.theta = make_mlp(config.dim_z, arch.trunk_widths, {config.dim_x}, rng);
    return p;
}

Tensor one_hot(int label, int num_classes) {
    if (label < 1 || label > num_classes)
        throw ContractError("one_hot: label " + std::to_string(label) + " outside [1.." +
                            std::to_string(num_classes) + "]");
    std::vector<double> v(static_cast<std::size_t>(num_classes), 0.0);
    v[static_cast<std::size_t>(label - 1)] = 1.0;
    return Tensor({static_cast<std::size_t>(num_classes)}, std::move(v));
}

namespace {

int label_of_one_hot(const Tensor& y, int num_classes) {
    if (y.shape().size() != 1 || y.numel() != static_cast<std::size_t>(num_classes))
        throw ContractError("encode_w: one-hot must have length C");
    int label = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) {
        const double v = y.at(i);
        if (v == 1.0) {
            if (label != 0) throw ContractError("encode_w: one-hot has multiple set entries");
            label = static_cast<int>(i) + 1;
        } else if (v != 0.0) {
            throw ContractError("encode_w: one-hot entries must be 0 or 1");
        }
    }
    if (label == 0) throw ContractError("encode_w: one-hot has no set entry");
    return label;
}

} // namespace

DiagGaussian encode_z(const GmvaeParams& params, const Tensor& x) {
    auto out = params.phi_z.forward(x);
    return DiagGaussian(out[0], out[1]);
}

DiagGaussian encode_w(const GmvaeParams& params, const Tensor& x, int label) {
    return encode_w(params, x, one_hot(label, params.config.num_classes));
}

DiagGaussian encode_w(const GmvaeParams& params, const Tensor& x, const Tensor& y) {
    label_of_one_hot(y, params.config.num_classes);
    const Tensor reduced = params.phi_w_reduce.forward(x);
    auto out = params.phi_w.forward(concat(reduced, y));
    return DiagGaussian(out[0], out[1]);
}

std::vector<DiagGaussian> subcluster_components(const GmvaeParams& params, const Tensor& w,
                                                int label) {
    const int k_c = params.config.subcluster_count(label);
    const std::size_t offset = params.config.beta_head_offset(label);
    auto heads = params.beta.forward(w);
    std::vector<DiagGaussian> components;
    components.reserve(static_cast<std::size_t>(k_c));
    for (int j = 0; j < k_c; ++j) {
        const std::size_t base = offset + 2 * static_cast<std::size_t>(j);
        components.emplace_back(heads[base], heads[base + 1]);
    }
    return components;
}

SubclusterPosterior subcluster_posterior(const GmvaeParams& params, const Tensor& z,
                                         const Tensor& w, int label) {
    SubclusterPosterior post;
    post.components = subcluster_components(params, w, label);
    const auto& prior = params.config.prior(label);
    std::vector<Tensor> logits;
    logits.reserve(post.components.size());
    for (std::size_t j = 0; j < post.components.size(); ++j) {
        Tensor lp = gaussian_log_pdf(z, post.components[j]);
        post.component_log_pdfs.push_back(lp);
        logits.push_back(add(lp, Tensor::scalar(std::log(prior[j]))));
    }
    const Tensor stacked = stack_scalars(logits);
    post.log_probs = sub(stacked, log_sum_exp(stacked));
    post.probs = exp(post.log_probs);
    return post;
}

Tensor v_posterior(const GmvaeParams& params, const Tensor& z, const Tensor& w, int label) {
    return subcluster_posterior(params, z, w, label).probs;
}

BernoulliParam decode(const GmvaeParams& params, const Tensor& z) {
    auto out = params.theta.forward(z);
    return BernoulliParam(sigmoid(out[0]));
}

GmvaeParams add_subcluster_head(const GmvaeParams& params, int label,
                                const std::vector<double>& mean_target,
                                const std::vector<double>& logvar_target) {
    const std::size_t dim_z = params.config.dim_z;
    if (mean_target.size() != dim_z || logvar_target.size() != dim_z)
        throw ContractError("add_subcluster_head: init targets must have dimension dim_z");
    const int k_c = params.config.subcluster_count(label);

    GmvaeParams out = params.clone();
    // position just past class `label`'s existing head pairs, class-major order
    const std::size_t position =
        params.config.beta_head_offset(label) + 2 * static_cast<std::size_t>(k_c);
    const std::size_t trunk_out = out.beta.trunk().back().out_dim();

    Layer mean_head = zero_layer(trunk_out, dim_z, Activation::Identity);
    {
        Tensor b = mean_head.bias;
        b.set_data(mean_target);
    }
    Layer logvar_head = zero_layer(trunk_out, dim_z, Activation::Identity);
    {
        Tensor b = logvar_head.bias;
        b.set_data(logvar_target);
    }
    out.beta.insert_head(position, {std::move(mean_head)});
    out.beta.insert_head(position + 1, {std::move(logvar_head)});

    auto& k = out.config.subclusters[static_cast<std::size_t>(label - 1)];
    k += 1;
    out.config.v_prior[static_cast<std::size_t>(label - 1)] =
        std::vector<double>(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    out.config.validate();
    return out;
}

GeneratedSample generate_sample(const GmvaeParams& params, int label, Rng& rng, bool binarize) {
    const auto& prior = params.config.prior(label);
    GeneratedSample s;
    s.w = Tensor({params.config.dim_w}, rng.normal_vector(params.config.dim_w));
    s.subcluster = static_cast<int>(rng.multinomial(prior)) + 1;
    auto components = subcluster_components(params, s.w, label);
    const DiagGaussian& comp = components[static_cast<std::size_t>(s.subcluster - 1)];
    const Tensor z_noise = Tensor({params.config.dim_z}, rng.normal_vector(params.config.dim_z));
    s.z = sample_reparameterized(comp, z_noise);
    const BernoulliParam px = decode(params, s.z);
    if (binarize) {
        std::vector<double> bits(px.dim());
        for (std::size_t i = 0; i < px.dim(); ++i)
            bits[i] = rng.uniform() < px.mean.at(i) ? 1.0 : 0.0;
        s.x = Tensor({px.dim()}, std::move(bits));
    } else {
        s.x = px.mean;
    }
    return s;
}

} // namespace gmvae
