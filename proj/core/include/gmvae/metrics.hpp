#pragma once

#include <vector>

namespace gmvae {

/// Unweighted mean of per-label F1 over labels 1..num_labels. A label absent
/// from both predictions and truths is left out of the mean; a label present
/// on either side with no true positives contributes 0.
double macro_f1(const std::vector<int>& predictions, const std::vector<int>& truths,
                int num_labels);

} // namespace gmvae
