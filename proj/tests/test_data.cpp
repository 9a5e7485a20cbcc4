#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "gmvae/data.hpp"
#include "gmvae/metrics.hpp"
#include "gmvae/openset.hpp"

using namespace gmvae;
namespace fs = std::filesystem;

namespace {

GenSpec default_spec() {
    GenSpec spec;
    spec.classes = 3;
    spec.subclusters = 1;
    spec.dim = 16;
    spec.separation = 8.0;
    spec.train_per_class = 50;
    spec.val_per_class = 20;
    spec.test_per_class = 20;
    spec.unknown_classes = 2;
    spec.unknown_val_per_class = 15;
    spec.unknown_test_per_class = 15;
    spec.seed = 9;
    return spec;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<std::uint8_t>& bytes, std::uint32_t v) {
    bytes.push_back(static_cast<std::uint8_t>(v >> 24));
    bytes.push_back(static_cast<std::uint8_t>(v >> 16));
    bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    bytes.push_back(static_cast<std::uint8_t>(v));
}

struct IdxFixture {
    fs::path dir = fs::temp_directory_path() / "gmvae_idx_test";
    fs::path images = dir / "images.idx";
    fs::path labels = dir / "labels.idx";

    IdxFixture() { fs::create_directories(dir); }

    void write_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels, std::uint32_t magic = 0x803) {
        std::vector<std::uint8_t> bytes;
        push_u32_be(bytes, magic);
        push_u32_be(bytes, count);
        push_u32_be(bytes, rows);
        push_u32_be(bytes, cols);
        bytes.insert(bytes.end(), pixels.begin(), pixels.end());
        write_bytes(images, bytes);
    }

    void write_labels(std::uint32_t count, const std::vector<std::uint8_t>& raw,
                      std::uint32_t magic = 0x801) {
        std::vector<std::uint8_t> bytes;
        push_u32_be(bytes, magic);
        push_u32_be(bytes, count);
        bytes.insert(bytes.end(), raw.begin(), raw.end());
        write_bytes(labels, bytes);
    }
};

} // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("gen_synthetic sample counts match the requested sizes exactly") {
    const GenSpec spec = default_spec();
    const DatasetSplit split = gen_synthetic(spec);
    CHECK(split.train.size() == 3 * 50);
    CHECK(split.validation.size() == 3 * 20 + 2 * 15);
    CHECK(split.test.size() == 3 * 20 + 2 * 15);
    CHECK(split.num_known == 3);
    CHECK(split.num_unknown == 2);
    for (const auto& s : split.train) {
        CHECK(s.label >= 1);
        CHECK(s.label <= 3);
        CHECK(s.x.size() == 16);
    }
    int unknowns = 0;
    for (const auto& s : split.validation)
        if (s.label == 4) {
            ++unknowns;
            CHECK(s.source >= 4);
            CHECK(s.source <= 5);
        }
    CHECK(unknowns == 30);
}

TEST_CASE("gen_synthetic is deterministic per seed") {
    const GenSpec spec = default_spec();
    const DatasetSplit a = gen_synthetic(spec);
    const DatasetSplit b = gen_synthetic(spec);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].x == b.train[i].x);
        CHECK(a.train[i].label == b.train[i].label);
    }
    GenSpec other = spec;
    other.seed = 10;
    const DatasetSplit c = gen_synthetic(other);
    CHECK(a.train.front().x != c.train.front().x);
}

TEST_CASE("large separation makes the data nearest-class-mean classifiable") {
    GenSpec spec = default_spec();
    spec.subclusters = 1;
    spec.separation = 8.0;
    const DatasetSplit split = gen_synthetic(spec);

    std::vector<std::vector<double>> means(3, std::vector<double>(16, 0.0));
    std::vector<int> counts(3, 0);
    for (const auto& s : split.train) {
        for (std::size_t d = 0; d < 16; ++d)
            means[static_cast<std::size_t>(s.label - 1)][d] += s.x[d];
        ++counts[static_cast<std::size_t>(s.label - 1)];
    }
    for (int c = 0; c < 3; ++c)
        for (auto& v : means[static_cast<std::size_t>(c)])
            v /= counts[static_cast<std::size_t>(c)];

    int correct = 0, total = 0;
    for (const auto& s : split.test) {
        if (s.label > 3) continue;
        int best = 0;
        double best_d = 1e300;
        for (int c = 0; c < 3; ++c) {
            const double d = euclidean(s.x, means[static_cast<std::size_t>(c)]);
            if (d < best_d) {
                best_d = d;
                best = c + 1;
            }
        }
        correct += best == s.label;
        ++total;
    }
    CHECK(static_cast<double>(correct) / total > 0.99);
}

TEST_CASE("gen_synthetic validates its spec") {
    GenSpec bad = default_spec();
    bad.classes = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ContractError);
    bad = default_spec();
    bad.train_per_class = 0;
    CHECK_THROWS_AS(gen_synthetic(bad), ContractError);
}

TEST_CASE("load_idx parses a hand-built two-image file") {
    IdxFixture fx;
    // two 2x2 images
    fx.write_images(2, 2, 2, {0, 51, 102, 255, 255, 204, 153, 0});
    fx.write_labels(2, {3, 7});
    const Dataset data = load_idx(fx.images, fx.labels);
    REQUIRE(data.size() == 2);
    CHECK(data[0].x == std::vector<double>{0.0, 51.0 / 255.0, 102.0 / 255.0, 1.0});
    CHECK(data[1].x == std::vector<double>{1.0, 204.0 / 255.0, 153.0 / 255.0, 0.0});
    // raw bytes become 1-based labels
    CHECK(data[0].label == 4);
    CHECK(data[1].label == 8);
}

TEST_CASE("load_idx rejects bad magic numbers") {
    IdxFixture fx;
    fx.write_images(1, 2, 2, {1, 2, 3, 4}, 0x807);
    fx.write_labels(1, {0});
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), FormatError);

    fx.write_images(1, 2, 2, {1, 2, 3, 4});
    fx.write_labels(1, {0}, 0x803);
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), FormatError);
}

TEST_CASE("load_idx rejects count mismatches and truncation") {
    IdxFixture fx;
    fx.write_images(2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
    fx.write_labels(3, {0, 1, 2});
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), FormatError);

    fx.write_images(2, 2, 2, {1, 2, 3, 4, 5}); // 3 bytes short
    fx.write_labels(2, {0, 1});
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), FormatError);
}

TEST_CASE("load_idx rejects empty files") {
    IdxFixture fx;
    write_bytes(fx.images, {});
    write_bytes(fx.labels, {});
    CHECK_THROWS_AS(load_idx(fx.images, fx.labels), FormatError);
}

namespace {

Dataset labeled_pool(int per_label, const std::vector<int>& labels, std::uint64_t seed) {
    Dataset pool;
    Rng rng(seed);
    for (int label : labels)
        for (int i = 0; i < per_label; ++i) {
            Sample s;
            s.x = {rng.uniform(), rng.uniform(), static_cast<double>(label) / 10.0};
            s.label = label;
            s.source = label;
            pool.push_back(std::move(s));
        }
    return pool;
}

} // namespace

TEST_CASE("split_for_open_set merges groups and relabels unknowns") {
    const Dataset pool = labeled_pool(40, {1, 2, 3, 4, 5, 6}, 3);
    OpenSetSplitSpec spec;
    spec.known_groups = {{1, 3}, {2, 4}}; // two merged known classes
    spec.unknown_groups = {{5}, {6}};
    spec.val_fraction = 0.25;
    spec.test_fraction = 0.25;
    spec.seed = 7;
    const DatasetSplit split = split_for_open_set(pool, spec);

    CHECK(split.num_known == 2);
    CHECK(split.num_unknown == 2);
    CHECK(split.train.size() == 2 * 40); // half of each 80-sample known class
    CHECK(split.validation.size() == 2 * 20 + 2 * 20);
    CHECK(split.test.size() == 2 * 20 + 2 * 20);
    for (const auto& s : split.train) {
        CHECK(s.label >= 1);
        CHECK(s.label <= 2);
    }
    int unknown_sources = 0;
    for (const auto& s : split.test)
        if (s.label == 3) {
            CHECK(s.source >= 3);
            CHECK(s.source <= 4);
            ++unknown_sources;
        }
    CHECK(unknown_sources == 40);
}

TEST_CASE("split_for_open_set is deterministic and drops unlisted labels") {
    const Dataset pool = labeled_pool(30, {1, 2, 9}, 5);
    OpenSetSplitSpec spec;
    spec.known_groups = {{1}, {2}};
    spec.seed = 11;
    const DatasetSplit a = split_for_open_set(pool, spec);
    const DatasetSplit b = split_for_open_set(pool, spec);
    CHECK(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].x == b.train[i].x);
    // label 9 was in no group
    CHECK(a.train.size() + a.validation.size() + a.test.size() == 60);
}

TEST_CASE("split_for_open_set validates its spec") {
    const Dataset pool = labeled_pool(20, {1, 2}, 1);
    OpenSetSplitSpec spec;
    spec.known_groups = {{1}, {1}}; // duplicated label
    CHECK_THROWS_AS(split_for_open_set(pool, spec), ContractError);
    spec.known_groups = {{1}};
    spec.val_fraction = 0.6;
    spec.test_fraction = 0.5; // no room for training
    CHECK_THROWS_AS(split_for_open_set(pool, spec), ContractError);
    spec.val_fraction = 0.2;
    spec.test_fraction = 0.2;
    spec.known_groups = {{7}}; // label absent from the pool
    CHECK_THROWS_AS(split_for_open_set(pool, spec), ContractError);
}

TEST_CASE("macro_f1 basics") {
    CHECK(macro_f1({1, 2, 3}, {1, 2, 3}, 3) == 1.0);
    // truths [1,1,2] vs predictions [1,2,2]: both labels score 2/3
    CHECK(macro_f1({1, 2, 2}, {1, 1, 2}, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // collapsing onto one label over balanced truth: F1 = (2/3 + 0) / 2
    CHECK(macro_f1({1, 1, 1, 1}, {1, 1, 2, 2}, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("macro_f1 excludes labels absent from both sides") {
    // label 3 never appears: mean over labels 1 and 2 only
    CHECK(macro_f1({1, 2}, {1, 2}, 3) == 1.0);
    // label 2 predicted but never true: counted with zero F1
    CHECK(macro_f1({1, 2}, {1, 1}, 3) ==
          doctest::Approx((2.0 / 3.0 + 0.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("macro_f1 contracts") {
    CHECK_THROWS_AS(macro_f1({1, 2}, {1}, 2), ContractError);
    CHECK_THROWS_AS(macro_f1({1, 4}, {1, 1}, 3), ContractError);
    CHECK_THROWS_AS(macro_f1({1, 0}, {1, 1}, 3), ContractError);
}

TEST_CASE("macro_f1 is invariant under consistent relabeling") {
    Rng rng(71);
    std::vector<int> predictions, truths;
    for (int i = 0; i < 200; ++i) {
        predictions.push_back(1 + static_cast<int>(rng.uniform_index(4)));
        truths.push_back(1 + static_cast<int>(rng.uniform_index(4)));
    }
    const double base = macro_f1(predictions, truths, 4);
    const std::vector<int> perm = {3, 1, 4, 2};
    std::vector<int> rp, rt;
    for (int v : predictions) rp.push_back(perm[static_cast<std::size_t>(v - 1)]);
    for (int v : truths) rt.push_back(perm[static_cast<std::size_t>(v - 1)]);
    CHECK(macro_f1(rp, rt, 4) == doctest::Approx(base).epsilon(1e-15));
}

TEST_SUITE_END();
