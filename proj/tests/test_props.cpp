#include <doctest.h>

#include <cmath>

#include "gmvae/props.hpp"

using namespace gmvae;

TEST_SUITE_BEGIN("props");

TEST_CASE("proposition 1 checker: half-probability data costs dim_x ln 2 per sample") {
    const std::vector<double> mu_x(4, 0.5);
    const Prop1Result result = check_proposition1(mu_x, {1, 2, 3}, 64, 11);
    CHECK(result.pass);
    for (double loss : result.losses)
        CHECK(loss == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(result.oracle == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("proposition 1 checker: losses are constant across K for skewed mu") {
    const std::vector<double> mu_x = {0.85, 0.25, 0.6};
    const Prop1Result result = check_proposition1(mu_x, {1, 2, 3}, 128, 5);
    CHECK(result.pass);
    CHECK(result.max_abs_deviation <= 1e-9);
    CHECK(result.max_cross_k_deviation <= 1e-9);
}

TEST_CASE("proposition 1 checker rejects boundary mu") {
    CHECK_THROWS_AS(check_proposition1({0.5, 1.0}, {1}, 8, 1), DomainError);
    CHECK_THROWS_AS(check_proposition1({0.0}, {1}, 8, 1), DomainError);
}

TEST_CASE("proposition 2 checker passes on a small arbitrary model") {
    const ModelConfig cfg = ModelConfig::make(1, {2}, 6, 2, 2);
    Arch arch;
    arch.trunk_widths = {8};
    arch.reduce_dim = 4;
    const GmvaeParams params = make_gmvae(cfg, arch, 3);

    Rng rng(8);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        xs.push_back(std::move(x));
    }
    const Prop2Result result = check_proposition2(params, xs, {1e-2, 1e-3, 1e-4}, 32, 4);
    CHECK(result.pass);
    CHECK(result.sweep_shrinks);
    REQUIRE(result.entries.size() == 3);
    const double bound = std::log(2.0 / 3.0);
    for (const auto& e : result.entries) {
        CHECK(e.bound == doctest::Approx(bound));
        CHECK(e.epsilon >= bound - e.tolerance);
    }
}

TEST_CASE("proposition 2 gap estimates are stable when mc_samples doubles") {
    const ModelConfig cfg = ModelConfig::make(1, {2}, 6, 2, 2);
    Arch arch;
    arch.trunk_widths = {8};
    arch.reduce_dim = 4;
    const GmvaeParams params = make_gmvae(cfg, arch, 13);
    const double u = flat_sigma_for_delta(1e-3, 2);
    const GmvaeParams grown =
        add_subcluster_head(params, 1, {0.0, 0.0}, {2.0 * std::log(u), 2.0 * std::log(u)});

    Rng rng(14);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        xs.push_back(std::move(x));
    }
    // common random numbers leave only the tiny flat-component term to vary
    const double eps_32 = epsilon_k_gap(params, grown, xs, 32, 101);
    const double eps_64 = epsilon_k_gap(params, grown, xs, 64, 101);
    CHECK(std::abs(eps_32 - eps_64) < 1e-2);
}

TEST_CASE("proposition 2 checker contracts") {
    const ModelConfig cfg2 = ModelConfig::make(2, {1, 1}, 4, 2, 2);
    Arch arch;
    arch.trunk_widths = {6};
    arch.reduce_dim = 3;
    const GmvaeParams two_classes = make_gmvae(cfg2, arch, 1);
    const std::vector<std::vector<double>> xs = {{1, 0, 1, 0}};
    CHECK_THROWS_AS(check_proposition2(two_classes, xs, {1e-3}, 4, 1), ContractError);

    ModelConfig cfg = ModelConfig::make(1, {2}, 4, 2, 2);
    cfg.v_prior[0] = {0.7, 0.3};
    const GmvaeParams skewed = make_gmvae(cfg, arch, 1);
    CHECK_THROWS_AS(check_proposition2(skewed, xs, {1e-3}, 4, 1), ContractError);

    const GmvaeParams ok = make_gmvae(ModelConfig::make(1, {1}, 4, 2, 2), arch, 1);
    CHECK_THROWS_AS(check_proposition2(ok, xs, {0.5}, 4, 1), DomainError);
}

TEST_SUITE_END();
