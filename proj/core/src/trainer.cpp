#include "gmvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gmvae/io.hpp"

namespace gmvae {

Adam::Adam(std::vector<Tensor> params, Config config)
    : params_(std::move(params)), config_(config) {
    if (params_.empty()) throw ContractError("adam: empty parameter list");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const auto g = p.grad();
        if (g.empty())
            throw ContractError("adam: parameter " + std::to_string(i) + " has no gradient");
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
            m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
            v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p.set_at(j, p.at(j) - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void TrainConfig::validate() const {
    if (batch_size < 1 || max_epochs < 1 || patience < 0 || mc_samples < 1 || !(lr > 0.0))
        throw ContractError("train config: all sizes must be positive and patience >= 0");
    for (const auto& g : freeze_groups)
        if (g != "phi_z" && g != "phi_w" && g != "beta" && g != "theta")
            throw ContractError("train config: unknown freeze group '" + g + "'");
}

namespace {

struct TermValues {
    double reconstruction = 0.0;
    double latent_covering = 0.0;
    double w_prior = 0.0;
    double v_prior = 0.0;
};

TermValues values_of(const ElboTerms& t) {
    return {t.reconstruction.scalar_value(), t.latent_covering.scalar_value(),
            t.w_prior.scalar_value(), t.v_prior.scalar_value()};
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (const auto& p : params) out.emplace_back(p.data().begin(), p.data().end());
    return out;
}

void restore(std::vector<Tensor>& params, const std::vector<std::vector<double>>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].set_data(values[i]);
}

constexpr std::uint64_t kValNoiseSalt = 0x76616C6E;

} // namespace

double evaluate_loss(const GmvaeParams& params, const Dataset& data, Objective objective,
                     int mc_samples, std::uint64_t noise_seed) {
    if (data.empty()) throw ContractError("evaluate_loss: empty dataset");
    Rng rng(noise_seed);
    double total = 0.0;
    for (const auto& sample : data) {
        const Tensor x({sample.x.size()}, sample.x);
        const ElboTerms terms = elbo_terms(params, x, sample.label, mc_samples, rng);
        total += loss(terms, objective).scalar_value();
    }
    return total / static_cast<double>(data.size());
}

History fit(GmvaeParams& params, const Dataset& train, const Dataset& validation,
            const TrainConfig& config) {
    config.validate();
    if (train.empty() || validation.empty())
        throw ContractError("fit: train and validation sets must be non-empty");
    for (const auto& s : train)
        if (s.label < 1 || s.label > params.config.num_classes)
            throw ContractError("fit: train label " + std::to_string(s.label) +
                                " outside [1..C]");
    for (const auto& s : validation)
        if (s.label < 1 || s.label > params.config.num_classes)
            throw ContractError("fit: validation label " + std::to_string(s.label) +
                                " outside [1..C]");

    std::vector<Tensor> all_params = params.parameters();
    std::vector<Tensor> trainable;
    for (const auto& [name, t] : params.named_parameters())
        if (!config.freeze_groups.contains(GmvaeParams::group_of(name))) trainable.push_back(t);
    if (trainable.empty()) throw ContractError("fit: every parameter group is frozen");

    Adam adam(trainable, {.lr = config.lr});
    Rng rng(config.seed);
    const std::uint64_t val_noise_seed = Rng(config.seed).fork(kValNoiseSalt).next_u64();

    History history;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_values = snapshot(all_params);
    int plateau = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        TermValues epoch_terms;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            Tape tape;
            Tensor batch_loss = Tensor::scalar(0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const Sample& sample = train[order[i]];
                const Tensor x({sample.x.size()}, sample.x);
                const ElboTerms terms = elbo_terms(params, x, sample.label, config.mc_samples, rng);
                batch_loss = add(batch_loss, loss(terms, config.objective));
                const TermValues tv = values_of(terms);
                epoch_terms.reconstruction += tv.reconstruction;
                epoch_terms.latent_covering += tv.latent_covering;
                epoch_terms.w_prior += tv.w_prior;
                epoch_terms.v_prior += tv.v_prior;
            }
            batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - start));
            const double loss_value = batch_loss.scalar_value();
            if (!std::isfinite(loss_value)) {
                std::ostringstream os;
                os << "fit: non-finite loss " << loss_value << " at epoch " << epoch << ", batch "
                   << (start / static_cast<std::size_t>(config.batch_size));
                throw DivergenceError(os.str());
            }
            epoch_loss += loss_value * static_cast<double>(stop - start);
            adam.zero_grad();
            tape.backward(batch_loss);
            adam.step();
        }

        const double n = static_cast<double>(train.size());
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / n;
        stats.reconstruction = epoch_terms.reconstruction / n;
        stats.latent_covering = epoch_terms.latent_covering / n;
        stats.w_prior = epoch_terms.w_prior / n;
        stats.v_prior = epoch_terms.v_prior / n;
        stats.val_loss = evaluate_loss(params, validation, config.objective, config.mc_samples,
                                       val_noise_seed);
        history.epochs.push_back(stats);

        if (!std::isfinite(stats.val_loss))
            throw DivergenceError("fit: non-finite validation loss at epoch " +
                                  std::to_string(epoch));

        if (stats.val_loss < best_val - kPlateauTol) {
            best_val = stats.val_loss;
            history.best_epoch = epoch;
            best_values = snapshot(all_params);
            plateau = 0;
        } else {
            ++plateau;
        }
        if (plateau >= config.patience) break;
    }

    // the first finite epoch always improves on infinity, so best_epoch is set
    restore(all_params, best_values);
    history.best_val_loss = best_val;
    return history;
}

void write_history_csv(const History& history, const std::string& path) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,reconstruction,latent_covering,w_prior,v_prior\n";
    for (const auto& e : history.epochs) {
        os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
           << ',' << format_double(e.reconstruction) << ',' << format_double(e.latent_covering)
           << ',' << format_double(e.w_prior) << ',' << format_double(e.v_prior) << '\n';
    }
    atomic_write_text(path, os.str());
}

} // namespace gmvae
