#pragma once

#include <vector>

namespace gmvae {

/// One labeled sample. `label` is 1-based: known classes are 1..C and C+1
/// marks an unknown in validation/test splits. `source` keeps the class the
/// sample was actually generated from (equals `label` for knowns, the
/// held-out class id for unknowns) so evaluations can grow the unknown pool
/// one source class at a time.
struct Sample {
    std::vector<double> x;
    int label = 0;
    int source = 0;
};

using Dataset = std::vector<Sample>;

/// Train split never contains unknowns; validation and test share a
/// composition of knowns plus unknowns relabeled C+1.
struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
    int num_known = 0;    // C
    int num_unknown = 0;  // distinct unknown source classes available
    std::size_t dim = 0;
};

} // namespace gmvae
