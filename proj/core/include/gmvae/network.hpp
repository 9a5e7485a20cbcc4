#pragma once

#include <string>
#include <vector>

#include "gmvae/rng.hpp"
#include "gmvae/tensor.hpp"

namespace gmvae {

enum class Activation { Identity, Relu };

/// Single dense layer: act(W x + b).
struct Layer {
    Tensor weight; // {out, in}
    Tensor bias;   // {out}
    Activation act = Activation::Identity;

    Layer() = default;
    Layer(Tensor weight_, Tensor bias_, Activation act_);

    std::size_t in_dim() const { return weight.shape()[1]; }
    std::size_t out_dim() const { return weight.shape()[0]; }

    Tensor forward(const Tensor& x) const;
    Layer clone() const;
};

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng);
Layer zero_layer(std::size_t in, std::size_t out, Activation act);

/// Shared trunk followed by per-head tails. The final layer of every head
/// must use the identity activation; construction rejects anything else.
class HeadedNetwork {
public:
    HeadedNetwork() = default;
    HeadedNetwork(std::vector<Layer> trunk, std::vector<std::vector<Layer>> heads);

    std::size_t input_dim() const;
    std::size_t head_count() const { return heads_.size(); }
    std::size_t head_dim(std::size_t i) const;
    std::size_t trunk_depth() const { return trunk_.size(); }

    /// All head outputs from one pass over the trunk.
    std::vector<Tensor> forward(const Tensor& x) const;

    const std::vector<Layer>& trunk() const { return trunk_; }
    const std::vector<std::vector<Layer>>& heads() const { return heads_; }

    /// Insert a head (tail layers) at the given position.
    void insert_head(std::size_t position, std::vector<Layer> head);

    void collect_parameters(const std::string& prefix,
                            std::vector<std::pair<std::string, Tensor>>& out) const;

    HeadedNetwork clone() const;

private:
    void validate() const;

    std::vector<Layer> trunk_;
    std::vector<std::vector<Layer>> heads_;
};

/// Zero every weight and bias, then set the final bias of head i to
/// targets[i]: the network afterwards returns targets for every input and
/// all of its input-gradients vanish.
void set_constant_output(HeadedNetwork& net, const std::vector<std::vector<double>>& targets);

/// Fully connected network: relu trunk of the given widths, one identity
/// layer per head. Weights uniform in +-1/sqrt(fan_in), biases zero.
HeadedNetwork make_mlp(std::size_t input_dim, const std::vector<std::size_t>& trunk_widths,
                       const std::vector<std::size_t>& head_dims, Rng& rng);

} // namespace gmvae
