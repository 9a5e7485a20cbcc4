#pragma once

#include <set>
#include <string>

#include "gmvae/dataset.hpp"
#include "gmvae/objective.hpp"

namespace gmvae {

/// Adam with bias correction over a fixed list of parameter tensors.
class Adam {
public:
    struct Config {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam(std::vector<Tensor> params, Config config);

    /// Apply one bias-corrected update from the gradients currently stored on
    /// the parameters. Every parameter must carry a gradient buffer.
    void step();
    void zero_grad();

    std::size_t step_count() const { return step_; }

private:
    std::vector<Tensor> params_;
    Config config_;
    std::size_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 10;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    Objective objective = Objective::NoVPrior;
    int mc_samples = 1;
    /// Parameter groups excluded from updates ("phi_z", "phi_w", "beta", "theta").
    std::set<std::string> freeze_groups;

    void validate() const;
};

/// Validation loss must improve by more than this to reset the plateau count.
inline constexpr double kPlateauTol = 1e-4;

struct EpochStats {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    // epoch means of the objective components over the training set
    double reconstruction = 0.0;
    double latent_covering = 0.0;
    double w_prior = 0.0;
    double v_prior = 0.0;
};

struct History {
    std::vector<EpochStats> epochs;
    int best_epoch = 0; // 1-based; epoch whose parameters were restored
    double best_val_loss = 0.0;
};

/// Minibatch gradient training of `params` in place. Stops once the
/// validation loss has failed to improve for `patience` consecutive epochs
/// (or at max_epochs) and restores the best-validation-epoch parameters.
/// Deterministic for a fixed seed.
History fit(GmvaeParams& params, const Dataset& train, const Dataset& validation,
            const TrainConfig& config);

/// Mean loss of the dataset under fixed noise drawn from `noise_seed`.
double evaluate_loss(const GmvaeParams& params, const Dataset& data, Objective objective,
                     int mc_samples, std::uint64_t noise_seed);

void write_history_csv(const History& history, const std::string& path);

} // namespace gmvae
