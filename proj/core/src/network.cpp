#include "gmvae/network.hpp"

#include <cmath>

namespace gmvae {

Layer::Layer(Tensor weight_, Tensor bias_, Activation act_)
    : weight(std::move(weight_)), bias(std::move(bias_)), act(act_) {
    if (weight.shape().size() != 2)
        throw DimensionError("layer: weight must be rank 2, got " + shape_str(weight.shape()));
    if (bias.shape().size() != 1 || bias.numel() != weight.shape()[0])
        throw DimensionError("layer: bias shape " + shape_str(bias.shape()) +
                             " does not match weight " + shape_str(weight.shape()));
}

Tensor Layer::forward(const Tensor& x) const {
    Tensor pre = add(matmul(weight, x), bias);
    return act == Activation::Relu ? relu(pre) : pre;
}

Layer Layer::clone() const { return Layer(weight.detached(), bias.detached(), act); }

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(out * in);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    return Layer(Tensor({out, in}, std::move(w)), Tensor::zeros({out}), act);
}

Layer zero_layer(std::size_t in, std::size_t out, Activation act) {
    return Layer(Tensor::zeros({out, in}), Tensor::zeros({out}), act);
}

HeadedNetwork::HeadedNetwork(std::vector<Layer> trunk, std::vector<std::vector<Layer>> heads)
    : trunk_(std::move(trunk)), heads_(std::move(heads)) {
    validate();
}

void HeadedNetwork::validate() const {
    if (trunk_.empty()) throw ContractError("headed network: trunk must not be empty");
    if (heads_.empty()) throw ContractError("headed network: at least one head required");
    for (std::size_t i = 1; i < trunk_.size(); ++i)
        if (trunk_[i].in_dim() != trunk_[i - 1].out_dim())
            throw DimensionError("headed network: trunk layer " + std::to_string(i) +
                                 " input does not chain");
    const std::size_t trunk_out = trunk_.back().out_dim();
    for (std::size_t h = 0; h < heads_.size(); ++h) {
        const auto& head = heads_[h];
        if (head.empty())
            throw ContractError("headed network: head " + std::to_string(h) + " has no layers");
        if (head.front().in_dim() != trunk_out)
            throw DimensionError("headed network: head " + std::to_string(h) +
                                 " does not chain from trunk");
        for (std::size_t i = 1; i < head.size(); ++i)
            if (head[i].in_dim() != head[i - 1].out_dim())
                throw DimensionError("headed network: head " + std::to_string(h) + " layer " +
                                     std::to_string(i) + " does not chain");
        if (head.back().act != Activation::Identity)
            throw ContractError("headed network: head " + std::to_string(h) +
                                " must end in an identity activation");
    }
}

std::size_t HeadedNetwork::input_dim() const { return trunk_.front().in_dim(); }

std::size_t HeadedNetwork::head_dim(std::size_t i) const { return heads_.at(i).back().out_dim(); }

std::vector<Tensor> HeadedNetwork::forward(const Tensor& x) const {
    if (x.shape().size() != 1 || x.numel() != input_dim())
        throw DimensionError("headed network: input shape " + shape_str(x.shape()) +
                             " does not match input dimension " + std::to_string(input_dim()));
    Tensor h = x;
    for (const auto& layer : trunk_) h = layer.forward(h);
    std::vector<Tensor> out;
    out.reserve(heads_.size());
    for (const auto& head : heads_) {
        Tensor a = h;
        for (const auto& layer : head) a = layer.forward(a);
        out.push_back(std::move(a));
    }
    return out;
}

void HeadedNetwork::insert_head(std::size_t position, std::vector<Layer> head) {
    if (position > heads_.size())
        throw ContractError("headed network: head position out of range");
    heads_.insert(heads_.begin() + static_cast<std::ptrdiff_t>(position), std::move(head));
    validate();
}

void HeadedNetwork::collect_parameters(
    const std::string& prefix, std::vector<std::pair<std::string, Tensor>>& out) const {
    for (std::size_t i = 0; i < trunk_.size(); ++i) {
        out.emplace_back(prefix + ".trunk." + std::to_string(i) + ".weight", trunk_[i].weight);
        out.emplace_back(prefix + ".trunk." + std::to_string(i) + ".bias", trunk_[i].bias);
    }
    for (std::size_t h = 0; h < heads_.size(); ++h)
        for (std::size_t i = 0; i < heads_[h].size(); ++i) {
            const std::string base =
                prefix + ".head." + std::to_string(h) + "." + std::to_string(i);
            out.emplace_back(base + ".weight", heads_[h][i].weight);
            out.emplace_back(base + ".bias", heads_[h][i].bias);
        }
}

HeadedNetwork HeadedNetwork::clone() const {
    std::vector<Layer> trunk;
    trunk.reserve(trunk_.size());
    for (const auto& l : trunk_) trunk.push_back(l.clone());
    std::vector<std::vector<Layer>> heads;
    heads.reserve(heads_.size());
    for (const auto& head : heads_) {
        std::vector<Layer> copy;
        copy.reserve(head.size());
        for (const auto& l : head) copy.push_back(l.clone());
        heads.push_back(std::move(copy));
    }
    return HeadedNetwork(std::move(trunk), std::move(heads));
}

void set_constant_output(HeadedNetwork& net, const std::vector<std::vector<double>>& targets) {
    if (targets.size() != net.head_count())
        throw ContractError("set_constant_output: " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(net.head_count()) + " heads");
    for (std::size_t h = 0; h < net.head_count(); ++h)
        if (targets[h].size() != net.head_dim(h))
            throw ContractError("set_constant_output: target " + std::to_string(h) +
                                " has dimension " + std::to_string(targets[h].size()) +
                                ", head expects " + std::to_string(net.head_dim(h)));

    // Tensor handles share storage, so mutating a copy updates the network.
    auto zero_out = [](const Layer& layer) {
        Tensor w = layer.weight;
        Tensor b = layer.bias;
        w.set_data(std::vector<double>(w.numel(), 0.0));
        b.set_data(std::vector<double>(b.numel(), 0.0));
    };
    for (const auto& layer : net.trunk()) zero_out(layer);
    for (std::size_t h = 0; h < net.head_count(); ++h) {
        const auto& head = net.heads()[h];
        for (const auto& layer : head) zero_out(layer);
        Tensor final_bias = head.back().bias;
        final_bias.set_data(targets[h]);
    }
}

HeadedNetwork make_mlp(std::size_t input_dim, const std::vector<std::size_t>& trunk_widths,
                       const std::vector<std::size_t>& head_dims, Rng& rng) {
    if (trunk_widths.empty()) throw ContractError("make_mlp: trunk_widths must not be empty");
    std::vector<Layer> trunk;
    std::size_t in = input_dim;
    for (std::size_t w : trunk_widths) {
        trunk.push_back(make_layer(in, w, Activation::Relu, rng));
        in = w;
    }
    std::vector<std::vector<Layer>> heads;
    heads.reserve(head_dims.size());
    for (std::size_t d : head_dims)
        heads.push_back({make_layer(in, d, Activation::Identity, rng)});
    return HeadedNetwork(std::move(trunk), std::move(heads));
}

} // namespace gmvae
