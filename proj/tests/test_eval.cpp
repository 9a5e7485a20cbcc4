#include <doctest.h>

#include <cmath>

#include "gmvae/data.hpp"
#include "gmvae/eval.hpp"

using namespace gmvae;

namespace {

/// Model whose embedding is the identity on nonnegative inputs: the trunk is
/// a relu identity layer, the mean head is the identity, logvar is zero.
GmvaeParams identity_embedding_model(int num_classes, std::size_t dim) {
    const ModelConfig cfg = ModelConfig::make(num_classes, std::vector<int>(num_classes, 1),
                                              dim, dim, 2);
    Arch arch;
    arch.trunk_widths = {dim};
    arch.reduce_dim = 2;
    GmvaeParams params = make_gmvae(cfg, arch, 3);

    std::vector<double> eye(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
    Tensor tw = params.phi_z.trunk().front().weight;
    tw.set_data(eye);
    Tensor tb = params.phi_z.trunk().front().bias;
    tb.set_data(std::vector<double>(dim, 0.0));
    Tensor hw = params.phi_z.heads()[0].back().weight;
    hw.set_data(eye);
    Tensor hb = params.phi_z.heads()[0].back().bias;
    hb.set_data(std::vector<double>(dim, 0.0));
    Tensor lw = params.phi_z.heads()[1].back().weight;
    lw.set_data(std::vector<double>(dim * dim, 0.0));
    Tensor lb = params.phi_z.heads()[1].back().bias;
    lb.set_data(std::vector<double>(dim, 0.0));
    return params;
}

Sample make_sample(std::vector<double> x, int label, int source) {
    Sample s;
    s.x = std::move(x);
    s.label = label;
    s.source = source;
    return s;
}

} // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("recommend_k reproduces the reported difference-pair conclusions") {
    CHECK(recommend_k({0.86, 0.22}) == 2);
    CHECK(recommend_k({1.23, -0.09}) == 2);
    CHECK(recommend_k({1.31, -1.47}) == 2);
    CHECK(recommend_k({0.82, 0.5}) == 2);
    CHECK(recommend_k({0.0, 0.0}) == 1);
}

TEST_CASE("recommend_k general behavior") {
    CHECK(recommend_k({}) == 1);
    CHECK(recommend_k({5.0, 4.0, 3.0}) == 4);          // each clears 0.65x previous
    CHECK(recommend_k({5.0, 1.0}) == 2);               // 1.0 < 0.65 * 5.0
    CHECK(recommend_k({0.2}) == 1);                    // below the absolute floor
    CHECK(recommend_k({0.2, 0.4}) == 3);               // later K can still qualify
    ScanRule strict;
    strict.abs_floor = 1.0;
    CHECK(recommend_k({0.86, 0.22}, strict) == 1);
}

TEST_CASE("identity embedding: NC-U separates unknowns at the simplex center") {
    const std::size_t dim = 3;
    const GmvaeParams params = identity_embedding_model(3, dim);

    DatasetSplit split;
    split.num_known = 3;
    split.num_unknown = 1;
    split.dim = dim;
    // knowns sit exactly on the one-hot corners, unknowns at the center
    for (int c = 1; c <= 3; ++c) {
        std::vector<double> corner(dim, 0.0);
        corner[static_cast<std::size_t>(c - 1)] = 1.0;
        for (int i = 0; i < 8; ++i) {
            split.train.push_back(make_sample(corner, c, c));
            split.validation.push_back(make_sample(corner, c, c));
            split.test.push_back(make_sample(corner, c, c));
        }
    }
    const std::vector<double> center(dim, 1.0 / 3.0);
    for (int i = 0; i < 8; ++i) {
        split.validation.push_back(make_sample(center, 4, 4));
        split.test.push_back(make_sample(center, 4, 4));
    }

    const EvalReport report =
        run_openset_eval(params, split, {"ncu", "ncd"}, {1}, {1, 1, 1}, 5);
    CHECK(report.cell("ncu", 1, "optimal").macro_f1 == 1.0);
    CHECK(report.cell("ncd", 1, "optimal").macro_f1 == 1.0);
    // the unknown embeddings are exactly equidistant, so U = 1 there
    const auto& cell = report.cell("ncu", 1, "optimal");
    CHECK(cell.tau <= 1.0);
    CHECK(cell.confusion[3][3] == 8); // every unknown rejected
}

TEST_CASE("Q = 0 is closed-set evaluation") {
    const std::size_t dim = 3;
    const GmvaeParams params = identity_embedding_model(2, dim);
    DatasetSplit split;
    split.num_known = 2;
    split.num_unknown = 1;
    split.dim = dim;
    for (int c = 1; c <= 2; ++c) {
        std::vector<double> corner(dim, 0.0);
        corner[static_cast<std::size_t>(c - 1)] = 1.0;
        for (int i = 0; i < 6; ++i) {
            split.train.push_back(make_sample(corner, c, c));
            split.validation.push_back(make_sample(corner, c, c));
            split.test.push_back(make_sample(corner, c, c));
        }
    }
    split.validation.push_back(make_sample({0.5, 0.5, 0.0}, 3, 3));
    split.test.push_back(make_sample({0.5, 0.5, 0.0}, 3, 3));

    const EvalReport report = run_openset_eval(params, split, {"ncd"}, {0}, {1, 1}, 2);
    const auto& cell = report.cell("ncd", 0, "optimal");
    CHECK(cell.macro_f1 == 1.0);
    // the unknown label never appears in the Q = 0 truth
    for (int pred = 0; pred < 3; ++pred) CHECK(cell.confusion[2][static_cast<std::size_t>(pred)] == 0);
}

TEST_CASE("report bookkeeping: cells per threshold mode equal algorithms times Q values") {
    const std::size_t dim = 3;
    const GmvaeParams params = identity_embedding_model(2, dim);
    GenSpec spec;
    spec.classes = 2;
    spec.subclusters = 1;
    spec.dim = dim;
    spec.separation = 2.0; // frequent bit flips give EVT positive distances
    spec.train_per_class = 20;
    spec.val_per_class = 10;
    spec.test_per_class = 10;
    spec.unknown_classes = 2;
    spec.unknown_val_per_class = 5;
    spec.unknown_test_per_class = 5;
    spec.seed = 4;
    const DatasetSplit split = gen_synthetic(spec);

    const EvalReport report =
        run_openset_eval(params, split, {"ncd", "ncu", "evt"}, {1, 2}, {1, 1}, 6);
    CHECK(report.cells.size() == 3 * 2 * 2);
    int optimal_cells = 0;
    for (const auto& c : report.cells) optimal_cells += c.threshold_mode == "optimal";
    CHECK(optimal_cells == 3 * 2);

    CHECK_THROWS_AS(run_openset_eval(params, split, {"ncd"}, {3}, {1, 1}, 6), ContractError);
    CHECK_THROWS_AS(run_openset_eval(params, split, {"ncd"}, {2, 1}, {1, 1}, 6), ContractError);
}

TEST_CASE("optimal-threshold validation F1 is attained at its own Q") {
    // the optimal tau maximizes validation F1 by construction; spot-check that
    // the mean threshold never beats it on validation data re-used as test
    const std::size_t dim = 4;
    const GmvaeParams params = identity_embedding_model(2, dim);
    GenSpec spec;
    spec.classes = 2;
    spec.subclusters = 1;
    spec.dim = dim;
    spec.separation = 7.0;
    spec.train_per_class = 25;
    spec.val_per_class = 15;
    spec.test_per_class = 0;
    spec.unknown_classes = 2;
    spec.unknown_val_per_class = 10;
    spec.unknown_test_per_class = 0;
    spec.seed = 12;
    DatasetSplit split = gen_synthetic(spec);
    split.test = split.validation;

    const EvalReport report = run_openset_eval(params, split, {"ncu"}, {1, 2}, {1, 1}, 3);
    for (int q : {1, 2}) {
        CHECK(report.cell("ncu", q, "optimal").macro_f1 >=
              report.cell("ncu", q, "mean").macro_f1 - 1e-12);
    }
}

TEST_CASE("subcluster_scan contracts") {
    const Dataset empty;
    const Dataset one = {make_sample({0.0, 1.0}, 1, 1)};
    ScanModel model;
    TrainConfig config;
    CHECK_THROWS_AS(subcluster_scan(one, one, 0, model, config), ContractError);
    CHECK_THROWS_AS(subcluster_scan(empty, one, 2, model, config), ContractError);
}

TEST_CASE("subcluster_scan keeps at least one point per curve under heavy truncation") {
    GenSpec spec;
    spec.classes = 1;
    spec.subclusters = 1;
    spec.dim = 6;
    spec.train_per_class = 20;
    spec.val_per_class = 10;
    spec.test_per_class = 0;
    spec.seed = 31;
    const DatasetSplit data = gen_synthetic(spec);
    ScanModel model;
    model.arch.trunk_widths = {6};
    model.arch.reduce_dim = 3;
    TrainConfig config;
    config.max_epochs = 1;
    config.patience = 1;
    config.seed = 1;
    ScanRule rule;
    rule.truncate_fraction = 0.9; // would round to dropping the whole one-epoch curve
    const CoveringCurve curve = subcluster_scan(data.train, data.validation, 2, model, config, rule);
    for (const auto& points : curve.curves) CHECK(points.size() == 1);
    CHECK(std::isfinite(curve.mean_differences.at(0)));
}

TEST_CASE("run_openset_eval rejects unknown algorithm names") {
    const GmvaeParams params = identity_embedding_model(2, 3);
    DatasetSplit split;
    split.num_known = 2;
    split.num_unknown = 0;
    split.dim = 3;
    for (int c = 1; c <= 2; ++c) {
        std::vector<double> corner(3, 0.0);
        corner[static_cast<std::size_t>(c - 1)] = 1.0;
        for (int i = 0; i < 4; ++i) {
            split.train.push_back(make_sample(corner, c, c));
            split.validation.push_back(make_sample(corner, c, c));
            split.test.push_back(make_sample(corner, c, c));
        }
    }
    CHECK_THROWS_AS(run_openset_eval(params, split, {"nearest-vibes"}, {0}, {1, 1}, 1),
                    ContractError);
    CHECK_THROWS_AS(run_openset_eval(params, split, {}, {0}, {1, 1}, 1), ContractError);
}

TEST_SUITE_END();
