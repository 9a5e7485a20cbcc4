#include <doctest.h>

#include "gmvae/network.hpp"
#include "test_helpers.hpp"

using namespace gmvae;
using test::to_vector;

TEST_SUITE_BEGIN("network");

TEST_CASE("make_mlp chains layer shapes from input to heads") {
    Rng rng(1);
    const HeadedNetwork net = make_mlp(5, {8, 6}, {3, 2}, rng);
    CHECK(net.input_dim() == 5);
    CHECK(net.trunk_depth() == 2);
    CHECK(net.head_count() == 2);
    CHECK(net.head_dim(0) == 3);
    CHECK(net.head_dim(1) == 2);
    const auto out = net.forward(Tensor({5}, {1, 2, 3, 4, 5}));
    CHECK(out.size() == 2);
    CHECK(out[0].shape() == Shape{3});
    CHECK(out[1].shape() == Shape{2});
}

TEST_CASE("a head whose final layer is not identity is rejected") {
    Rng rng(2);
    std::vector<Layer> trunk;
    trunk.push_back(make_layer(4, 6, Activation::Relu, rng));
    std::vector<std::vector<Layer>> heads;
    heads.push_back({make_layer(6, 2, Activation::Relu, rng)});
    CHECK_THROWS_AS(HeadedNetwork(std::move(trunk), std::move(heads)), ContractError);
}

TEST_CASE("mismatched chaining is rejected") {
    Rng rng(3);
    std::vector<Layer> trunk;
    trunk.push_back(make_layer(4, 6, Activation::Relu, rng));
    trunk.push_back(make_layer(5, 6, Activation::Relu, rng)); // expects 6 inputs
    std::vector<std::vector<Layer>> heads;
    heads.push_back({make_layer(6, 2, Activation::Identity, rng)});
    CHECK_THROWS_AS(HeadedNetwork(std::move(trunk), std::move(heads)), DimensionError);
}

TEST_CASE("set_constant_output returns the targets for every input") {
    Rng rng(4);
    HeadedNetwork net = make_mlp(3, {7}, {2, 2}, rng);
    set_constant_output(net, {{1.5, -2.0}, {0.25, 0.75}});
    for (const auto& x : {std::vector<double>{0, 0, 0}, std::vector<double>{3, -1, 9}}) {
        const auto out = net.forward(Tensor({3}, x));
        CHECK(to_vector(out[0]) == std::vector<double>{1.5, -2.0});
        CHECK(to_vector(out[1]) == std::vector<double>{0.25, 0.75});
    }
}

TEST_CASE("set_constant_output with zero targets gives the zero network") {
    Rng rng(5);
    HeadedNetwork net = make_mlp(2, {4}, {3}, rng);
    set_constant_output(net, {{0, 0, 0}});
    CHECK(to_vector(net.forward(Tensor({2}, {5, -5}))[0]) == std::vector<double>{0, 0, 0});
}

TEST_CASE("set_constant_output kills every input gradient") {
    Rng rng(6);
    HeadedNetwork net = make_mlp(3, {5, 5}, {2}, rng);
    set_constant_output(net, {{0.4, -0.4}});
    Tensor x({3}, {0.3, 0.1, -0.7});
    x.zero_grad();
    Tape tape;
    tape.backward(sum(square(net.forward(x)[0])));
    for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad_at(i) == 0.0);
}

TEST_CASE("set_constant_output validates target dimensions") {
    Rng rng(7);
    HeadedNetwork net = make_mlp(3, {4}, {2}, rng);
    CHECK_THROWS_AS(set_constant_output(net, {{1.0}}), ContractError);
    CHECK_THROWS_AS(set_constant_output(net, {{1.0, 2.0}, {3.0, 4.0}}), ContractError);
}

TEST_CASE("forward is deterministic and pure") {
    Rng rng(8);
    const HeadedNetwork net = make_mlp(4, {6}, {3}, rng);
    const Tensor x({4}, {0.1, -0.2, 0.3, -0.4});
    const auto a = to_vector(net.forward(x)[0]);
    const auto b = to_vector(net.forward(x)[0]);
    CHECK(a == b);
}

TEST_CASE("initialization is seeded and bounded by fan-in") {
    Rng rng_a(9);
    Rng rng_b(9);
    const Layer la = make_layer(16, 8, Activation::Relu, rng_a);
    const Layer lb = make_layer(16, 8, Activation::Relu, rng_b);
    CHECK(to_vector(la.weight) == to_vector(lb.weight));
    for (double w : la.weight.data()) CHECK(std::abs(w) <= 0.25); // 1/sqrt(16)
    for (double b : la.bias.data()) CHECK(b == 0.0);
}

TEST_SUITE_END();
