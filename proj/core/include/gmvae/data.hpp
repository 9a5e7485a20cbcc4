#pragma once

#include <filesystem>

#include "gmvae/dataset.hpp"
#include "gmvae/rng.hpp"

namespace gmvae {

/// Where the held-out unknown-class modes are placed relative to the known
/// ones: fresh random patterns, or per-coordinate mixtures of two known-class
/// patterns so their embeddings land between class clusters.
enum class UnknownPlacement { HeldOut, Between };

/// Synthetic binarized-blob dataset description. Each known class is a
/// mixture of `subclusters` sign-pattern modes in {0,1}^dim; a sample flips
/// each bit of its mode with probability Phi(-separation/2).
struct GenSpec {
    int classes = 2;
    int subclusters = 1;
    std::size_t dim = 16;
    double separation = 6.0;
    int train_per_class = 200;
    int val_per_class = 100;
    int test_per_class = 100;
    int unknown_classes = 0;            // one held-out mode per unknown class
    int unknown_val_per_class = 100;
    int unknown_test_per_class = 100;
    UnknownPlacement placement = UnknownPlacement::HeldOut;
    std::uint64_t seed = 0;

    void validate() const;
};

DatasetSplit gen_synthetic(const GenSpec& spec);

/// Parse an IDX image/label file pair (the MNIST container format): big-endian
/// magic and dimension sizes, unsigned byte payload. Pixels are scaled to
/// [0,1]; raw label bytes b become 1-based labels b+1.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// How a labeled pool becomes an open-set split. Each known group merges one
/// or more original labels into a single known class (class c is the c-th
/// group); each unknown group becomes one unknown source class, relabeled
/// C+1 with source ids C+1, C+2, ... in the given order. Samples whose label
/// appears in no group are dropped. Knowns are shuffled per seed and split
/// train/validation/test; unknowns never reach the train split and are
/// divided between validation and test in proportion to the two fractions.
struct OpenSetSplitSpec {
    std::vector<std::vector<int>> known_groups;
    std::vector<std::vector<int>> unknown_groups;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

DatasetSplit split_for_open_set(const Dataset& pool, const OpenSetSplitSpec& spec);

} // namespace gmvae
