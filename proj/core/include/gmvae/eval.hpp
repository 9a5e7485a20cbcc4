#pragma once

#include "gmvae/dataset.hpp"
#include "gmvae/metrics.hpp"
#include "gmvae/openset.hpp"
#include "gmvae/trainer.hpp"

namespace gmvae {

/// Latent embedding used for classification: the mean of q(z|x).
std::vector<double> embed(const GmvaeParams& params, const std::vector<double>& x);

/// Per-class k-means centroids of the training embeddings, class-major.
CentroidSet build_centroids(const GmvaeParams& params, const Dataset& train,
                            const std::vector<int>& k_per_class, std::uint64_t seed);

struct EvalCell {
    std::string algorithm;      // "ncd", "ncu", "evt"
    int q = 0;                  // number of unknown source classes mixed in
    std::string threshold_mode; // "optimal" or "mean"
    double tau = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<int>> confusion; // (C+1) x (C+1), truth-major
};

struct EvalReport {
    int num_known = 0;
    std::vector<std::string> algorithms;
    std::vector<int> q_list;
    std::vector<EvalCell> cells;

    const EvalCell& cell(const std::string& algorithm, int q,
                         const std::string& threshold_mode) const;
};

/// The open-set evaluation protocol: per algorithm and per Q (unknown source
/// classes added in increasing source order), calibrate tau on validation,
/// score test macro-F1 over the C+1 labels, then rescore each Q with the
/// mean of the per-Q optimal thresholds.
EvalReport run_openset_eval(const GmvaeParams& params, const DatasetSplit& split,
                            const std::vector<std::string>& algorithms,
                            const std::vector<int>& q_list, const std::vector<int>& k_per_class,
                            std::uint64_t seed);

/// Decision rule for the subcluster count: the largest K whose incoming mean
/// covering-loss difference clears max(abs_floor, rel_ratio * previous
/// difference); K = 1 when none does.
struct ScanRule {
    double abs_floor = 0.3;
    double rel_ratio = 0.65;
    double truncate_fraction = 0.2; // early epochs dropped from each curve
};

int recommend_k(const std::vector<double>& mean_differences, const ScanRule& rule = {});

struct CoveringPoint {
    int epoch = 0;
    double reconstruction_loss = 0.0;  // -reconstruction term
    double latent_covering_loss = 0.0; // +latent covering term
};

struct CoveringCurve {
    std::vector<int> k_values;
    std::vector<std::vector<CoveringPoint>> curves; // per K, early epochs dropped
    std::vector<double> mean_differences;           // D(K -> K+1), size K_max - 1
    int recommended_k = 1;
    ScanRule rule;
};

/// Model sizes for the per-K scan runs.
struct ScanModel {
    std::size_t dim_z = 2;
    std::size_t dim_w = 2;
    Arch arch;
};

/// Train one single-class model per K in 1..k_max under identical seeds and
/// configuration, then compare latent covering losses at matched
/// reconstruction levels (nearest-reconstruction pairing of the K+1 curve
/// against the K curve).
CoveringCurve subcluster_scan(const Dataset& class_train, const Dataset& class_val, int k_max,
                              const ScanModel& model, const TrainConfig& config,
                              const ScanRule& rule = {});

} // namespace gmvae
