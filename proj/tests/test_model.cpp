#include <doctest.h>

#include <cmath>

#include "gmvae/model.hpp"
#include "test_helpers.hpp"

using namespace gmvae;
using test::to_vector;

namespace {

GmvaeParams tiny_model(int num_classes, std::vector<int> subclusters, std::uint64_t seed = 7) {
    const ModelConfig cfg = ModelConfig::make(num_classes, std::move(subclusters), 6, 2, 2);
    Arch arch;
    arch.trunk_widths = {8};
    arch.reduce_dim = 4;
    return make_gmvae(cfg, arch, seed);
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("encode_z returns the constant after set_constant_output") {
    GmvaeParams params = tiny_model(1, {2});
    set_constant_output(params.phi_z, {{0.7, -0.3}, {0.1, 0.2}});
    for (const auto& x : {std::vector<double>(6, 0.0), std::vector<double>{1, 0, 1, 1, 0, 1}}) {
        const DiagGaussian g = encode_z(params, Tensor({6}, x));
        CHECK(to_vector(g.mean) == std::vector<double>{0.7, -0.3});
        CHECK(to_vector(g.logvar) == std::vector<double>{0.1, 0.2});
    }
}

TEST_CASE("encode_z output shapes and determinism") {
    const GmvaeParams params = tiny_model(2, {1, 1});
    const Tensor x({6}, {0.2, 0.4, 0.6, 0.8, 1.0, 0.0});
    const DiagGaussian a = encode_z(params, x);
    const DiagGaussian b = encode_z(params, x);
    CHECK(a.mean.numel() == 2);
    CHECK(a.logvar.numel() == 2);
    CHECK(to_vector(a.mean) == to_vector(b.mean));
    CHECK(to_vector(a.logvar) == to_vector(b.logvar));
}

TEST_CASE("encode_w constant output realizes the standard normal") {
    GmvaeParams params = tiny_model(2, {1, 1});
    const std::vector<double> zeros(2, 0.0);
    set_constant_output(params.phi_w, {zeros, zeros});
    const Tensor x({6}, {1, 1, 0, 0, 1, 0});
    const DiagGaussian a = encode_w(params, x, 1);
    const DiagGaussian b = encode_w(params, x, 2);
    CHECK(to_vector(a.mean) == std::vector<double>{0, 0});
    CHECK(to_vector(a.logvar) == std::vector<double>{0, 0});
    // changing y leaves the constant-output network unchanged
    CHECK(to_vector(a.mean) == to_vector(b.mean));
    CHECK(to_vector(a.logvar) == to_vector(b.logvar));
}

TEST_CASE("encode_w validates the one-hot label") {
    const GmvaeParams params = tiny_model(2, {1, 1});
    const Tensor x({6}, std::vector<double>(6, 0.5));
    CHECK_THROWS_AS(encode_w(params, x, Tensor({2}, {1, 1})), ContractError);
    CHECK_THROWS_AS(encode_w(params, x, Tensor({2}, {0, 0})), ContractError);
    CHECK_THROWS_AS(encode_w(params, x, Tensor({2}, {0.5, 0.5})), ContractError);
    CHECK_THROWS_AS(encode_w(params, x, 3), ContractError);
    CHECK(encode_w(params, x, Tensor({2}, {0, 1})).mean.numel() == 2);
}

TEST_CASE("subcluster_components counts and degenerate K") {
    const GmvaeParams params = tiny_model(2, {1, 3});
    const Tensor w({2}, {0.1, -0.1});
    CHECK(subcluster_components(params, w, 1).size() == 1);
    CHECK(subcluster_components(params, w, 2).size() == 3);
    CHECK_THROWS_AS(subcluster_components(params, w, 0), ContractError);
    CHECK_THROWS_AS(subcluster_components(params, w, 3), ContractError);
}

TEST_CASE("head-to-(class, subcluster) indexing round-trips for K = (2,3)") {
    GmvaeParams params = tiny_model(2, {2, 3});
    // head h gets a recognizable constant: mean heads h.0, logvar heads h.0 too
    std::vector<std::vector<double>> targets;
    for (std::size_t h = 0; h < params.beta.head_count(); ++h)
        targets.push_back({static_cast<double>(h), 0.0});
    set_constant_output(params.beta, targets);

    const Tensor w({2}, {0.4, 0.9});
    const std::vector<int> k_of_class = {2, 3};
    std::size_t offset = 0; // subclusters preceding the class
    for (int c = 1; c <= 2; ++c) {
        const auto components = subcluster_components(params, w, c);
        for (std::size_t k = 0; k < components.size(); ++k) {
            const double expected_mean_head = static_cast<double>(2 * (offset + k));
            const double expected_logvar_head = expected_mean_head + 1.0;
            CHECK(components[k].mean.at(0) == expected_mean_head);
            CHECK(components[k].logvar.at(0) == expected_logvar_head);
        }
        offset += static_cast<std::size_t>(k_of_class[static_cast<std::size_t>(c - 1)]);
    }
}

TEST_CASE("v_posterior is uniform over identical components") {
    GmvaeParams params = tiny_model(1, {3});
    std::vector<std::vector<double>> targets(6, std::vector<double>{0.2, -0.2});
    set_constant_output(params.beta, targets);
    const Tensor probs =
        v_posterior(params, Tensor({2}, {0.5, 0.5}), Tensor({2}, {0.1, 0.1}), 1);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(probs.at(j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("v_posterior for a single component is one") {
    const GmvaeParams params = tiny_model(1, {1});
    const Tensor probs =
        v_posterior(params, Tensor({2}, {0.3, -0.6}), Tensor({2}, {0.2, 0.0}), 1);
    CHECK(probs.numel() == 1);
    CHECK(probs.at(0) == 1.0);
}

TEST_CASE("two-component posterior is the logistic of the log-density gap") {
    GmvaeParams params = tiny_model(1, {2});
    // component 1 at the origin, component 2 shifted: the gap at z = 0 is a^2/2
    const double a = 1.3;
    set_constant_output(params.beta, {{0.0, 0.0}, {0.0, 0.0}, {a, 0.0}, {0.0, 0.0}});
    const Tensor probs =
        v_posterior(params, Tensor({2}, {0.0, 0.0}), Tensor({2}, {0.0, 0.0}), 1);
    const double gap = a * a / 2.0; // log p1 - log p2
    const double expected = 1.0 / (1.0 + std::exp(-gap));
    CHECK(probs.at(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(probs.at(1) == doctest::Approx(1.0 - expected).epsilon(1e-12));
}

TEST_CASE("v_posterior sums to one and survives huge log-density gaps") {
    GmvaeParams params = tiny_model(1, {2});
    // (z - mu)^2 / 2 of about 1e4 between the two components
    set_constant_output(params.beta, {{0.0, 0.0}, {0.0, 0.0}, {141.5, 0.0}, {0.0, 0.0}});
    const Tensor probs =
        v_posterior(params, Tensor({2}, {0.0, 0.0}), Tensor({2}, {0.0, 0.0}), 1);
    double total = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(std::isfinite(probs.at(j)));
        CHECK(probs.at(j) >= 0.0);
        total += probs.at(j);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("decode squashes the constant head to the target mean") {
    GmvaeParams params = tiny_model(1, {1});
    const std::vector<double> mu_x = {0.9, 0.1, 0.5, 0.25, 0.75, 0.6};
    std::vector<double> logits(6);
    for (std::size_t i = 0; i < 6; ++i) logits[i] = std::log(mu_x[i] / (1.0 - mu_x[i]));
    set_constant_output(params.theta, {logits});
    for (const auto& z : {std::vector<double>{0, 0}, std::vector<double>{4, -4}}) {
        const BernoulliParam p = decode(params, Tensor({2}, z));
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(p.mean.at(i) == doctest::Approx(mu_x[i]).epsilon(1e-12));
    }
}

TEST_CASE("decode output always lies strictly inside (0,1)") {
    const GmvaeParams params = tiny_model(1, {1});
    for (const auto& z : {std::vector<double>{50, 50}, std::vector<double>{-50, -50}}) {
        const BernoulliParam p = decode(params, Tensor({2}, z));
        for (std::size_t i = 0; i < p.dim(); ++i) {
            CHECK(p.mean.at(i) > 0.0);
            CHECK(p.mean.at(i) < 1.0);
        }
    }
}

TEST_CASE("decode gradient with respect to z vanishes under a constant theta") {
    GmvaeParams params = tiny_model(1, {1});
    set_constant_output(params.theta, {std::vector<double>(6, 0.3)});
    Tensor z({2}, {0.4, -0.2});
    auto build = [&] { return sum(decode(params, z).mean); };
    // finite differences and the recorded gradient must both vanish
    test::check_gradients({z}, build);
    z.zero_grad();
    Tape tape;
    tape.backward(build());
    CHECK(z.grad_at(0) == 0.0);
    CHECK(z.grad_at(1) == 0.0);
}

TEST_CASE("add_subcluster_head preserves existing heads bitwise") {
    const GmvaeParams params = tiny_model(1, {2}, 11);
    const GmvaeParams grown =
        add_subcluster_head(params, 1, {0.0, 0.0}, {1.0, 1.0});
    CHECK(grown.config.subclusters == std::vector<int>{3});
    CHECK(params.config.subclusters == std::vector<int>{2}); // input untouched

    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor w({2}, rng.normal_vector(2));
        const auto before = subcluster_components(params, w, 1);
        const auto after = subcluster_components(grown, w, 1);
        REQUIRE(after.size() == 3);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(to_vector(before[k].mean) == to_vector(after[k].mean));
            CHECK(to_vector(before[k].logvar) == to_vector(after[k].logvar));
        }
    }
}

TEST_CASE("add_subcluster_head with the flat init stays below delta everywhere") {
    const GmvaeParams params = tiny_model(1, {1}, 13);
    const double delta = 1e-3;
    const double u = flat_sigma_for_delta(delta, 2);
    const GmvaeParams grown = add_subcluster_head(
        params, 1, {0.0, 0.0}, {2.0 * std::log(u), 2.0 * std::log(u)});

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor w({2}, rng.normal_vector(2));
        const auto components = subcluster_components(grown, w, 1);
        const DiagGaussian& flat = components.back();
        const Tensor z({2}, {rng.uniform(-10.0 * u, 10.0 * u), rng.uniform(-10.0 * u, 10.0 * u)});
        const double density = std::exp(gaussian_log_pdf(z, flat).scalar_value());
        CHECK(density <= delta * (1.0 + 1e-12));
    }
}

TEST_CASE("add_subcluster_head inserts between classes in class-major order") {
    GmvaeParams params = tiny_model(2, {1, 1}, 17);
    std::vector<std::vector<double>> targets;
    for (std::size_t h = 0; h < 4; ++h)
        targets.push_back({static_cast<double>(h), static_cast<double>(h)});
    set_constant_output(params.beta, targets);

    const GmvaeParams grown = add_subcluster_head(params, 1, {9.0, 9.0}, {8.0, 8.0});
    CHECK(grown.config.subclusters == std::vector<int>{2, 1});
    const Tensor w({2}, {0.0, 0.0});
    const auto class1 = subcluster_components(grown, w, 1);
    const auto class2 = subcluster_components(grown, w, 2);
    REQUIRE(class1.size() == 2);
    CHECK(class1[0].mean.at(0) == 0.0);
    CHECK(class1[1].mean.at(0) == 9.0); // the new head pair
    CHECK(class2[0].mean.at(0) == 2.0); // class 2 untouched
}

TEST_CASE("generate_sample under the constant decoder returns mu_x every draw") {
    GmvaeParams params = tiny_model(1, {2});
    const std::vector<double> mu_x = {0.8, 0.2, 0.4, 0.6, 0.5, 0.3};
    std::vector<double> logits(6);
    for (std::size_t i = 0; i < 6; ++i) logits[i] = std::log(mu_x[i] / (1.0 - mu_x[i]));
    set_constant_output(params.theta, {logits});
    Rng rng(21);
    for (int draw = 0; draw < 20; ++draw) {
        const GeneratedSample s = generate_sample(params, 1, rng);
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(s.x.at(i) == doctest::Approx(mu_x[i]).epsilon(1e-12));
    }
}

TEST_CASE("generate_sample can binarize by sampling the likelihood") {
    GmvaeParams params = tiny_model(1, {1});
    set_constant_output(params.theta, {std::vector<double>(6, 0.0)}); // mean one half
    Rng rng(8);
    int ones = 0, total = 0;
    for (int draw = 0; draw < 200; ++draw) {
        const GeneratedSample s = generate_sample(params, 1, rng, true);
        for (std::size_t i = 0; i < 6; ++i) {
            const double v = s.x.at(i);
            CHECK((v == 0.0 || v == 1.0));
            ones += v == 1.0;
            ++total;
        }
    }
    // mean one half: roughly balanced bits
    CHECK(ones > total / 3);
    CHECK(ones < 2 * total / 3);
}

TEST_CASE("generate_sample is deterministic per seed") {
    const GmvaeParams params = tiny_model(2, {2, 1});
    Rng rng_a(123);
    Rng rng_b(123);
    const GeneratedSample a = generate_sample(params, 2, rng_a);
    const GeneratedSample b = generate_sample(params, 2, rng_b);
    CHECK(to_vector(a.x) == to_vector(b.x));
    CHECK(a.subcluster == b.subcluster);
}

TEST_CASE("generate_sample subcluster frequencies match the prior") {
    const GmvaeParams params = tiny_model(1, {3});
    Rng rng(31);
    const int n = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i)
        ++counts[static_cast<std::size_t>(generate_sample(params, 1, rng).subcluster - 1)];
    const double p = 1.0 / 3.0;
    const double se = std::sqrt(p * (1.0 - p) / n);
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(static_cast<double>(counts[static_cast<std::size_t>(c)]) / n - p) <
              4.0 * se);
}

TEST_CASE("model config validation") {
    CHECK_THROWS_AS(ModelConfig::make(0, {}, 4, 2, 2), ContractError);
    CHECK_THROWS_AS(ModelConfig::make(2, {1}, 4, 2, 2), ContractError);
    CHECK_THROWS_AS(ModelConfig::make(1, {0}, 4, 2, 2), ContractError);
    ModelConfig bad = ModelConfig::make(1, {2}, 4, 2, 2);
    bad.v_prior[0] = {0.9, 0.2};
    CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_SUITE_END();
