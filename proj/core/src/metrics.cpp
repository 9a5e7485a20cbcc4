#include "gmvae/metrics.hpp"

#include <string>

#include "gmvae/errors.hpp"

namespace gmvae {

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& truths,
                int num_labels) {
    if (predictions.size() != truths.size())
        throw ContractError("macro_f1: " + std::to_string(predictions.size()) +
                            " predictions vs " + std::to_string(truths.size()) + " truths");
    if (num_labels < 1) throw ContractError("macro_f1: num_labels must be positive");
    auto check = [&](int label) {
        if (label < 1 || label > num_labels)
            throw ContractError("macro_f1: label " + std::to_string(label) + " outside [1.." +
                                std::to_string(num_labels) + "]");
    };
    std::vector<std::size_t> tp(static_cast<std::size_t>(num_labels) + 1, 0);
    std::vector<std::size_t> fp(tp.size(), 0);
    std::vector<std::size_t> fn(tp.size(), 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        check(predictions[i]);
        check(truths[i]);
        if (predictions[i] == truths[i])
            ++tp[static_cast<std::size_t>(predictions[i])];
        else {
            ++fp[static_cast<std::size_t>(predictions[i])];
            ++fn[static_cast<std::size_t>(truths[i])];
        }
    }
    double total = 0.0;
    int counted = 0;
    for (int label = 1; label <= num_labels; ++label) {
        const std::size_t l = static_cast<std::size_t>(label);
        if (tp[l] + fp[l] + fn[l] == 0) continue;
        total += 2.0 * static_cast<double>(tp[l]) / static_cast<double>(2 * tp[l] + fp[l] + fn[l]);
        ++counted;
    }
    return counted > 0 ? total / counted : 0.0;
}

} // namespace gmvae
