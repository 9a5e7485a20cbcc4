#pragma once

#include <vector>

#include "gmvae/rng.hpp"

namespace gmvae {

/// One per-(class, subcluster) centroid in embedding space.
struct Centroid {
    int label = 0;      // class, 1-based
    int subcluster = 0; // 1-based within the class
    std::vector<double> z;
};

struct CentroidSet {
    std::vector<Centroid> centroids;

    std::size_t size() const { return centroids.size(); }
    void validate() const;
};

/// Classification outcome: a known class in 1..C, or C+1 with `unknown` set.
/// `score` is the thresholded quantity (distance, uncertainty ratio, or EVT
/// survival probability depending on the rule).
struct Prediction {
    int label = 0;
    bool unknown = false;
    double score = 0.0;
    int nearest_label = 0;      // c* even when rejected
    int nearest_subcluster = 0; // k*
};

/// Lloyd k-means with k-means++ seeding. Deterministic per seed; clusters
/// that empty out are re-seeded to the point farthest from its centroid.
std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iters = 100);

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

/// Index of the nearest centroid (ties broken by lowest index, which is
/// lowest (class, subcluster) for a class-major ordered set) and its distance.
std::pair<std::size_t, double> nearest_centroid(const std::vector<double>& embedding,
                                                const CentroidSet& cs);

/// Nearest-centroid thresholding on the distance d: predict c* when d < tau,
/// otherwise unknown.
Prediction classify_ncd(const std::vector<double>& embedding, const CentroidSet& cs, double tau);

/// Uncertainty ratio U in [0,1]: distance to the nearest centroid over the
/// mean distance to the remaining N-1 centroids. 0 exactly at a centroid,
/// 1 when equidistant from all centroids. Requires N >= 2.
double uncertainty(const std::vector<double>& embedding, const CentroidSet& cs);

/// Nearest-centroid thresholding on U: predict c* when U < tau, else unknown.
Prediction classify_ncu(const std::vector<double>& embedding, const CentroidSet& cs, double tau);

/// Two-parameter Weibull (shape m, scale eta) fitted to distances.
struct WeibullModel {
    double shape = 0.0;
    double scale = 0.0;
    std::size_t tail_count = 0;
};

/// Survival probability exp(-(d/eta)^m), a proxy for class inclusion.
double evt_score(double d, const WeibullModel& wm);

/// Maximum-likelihood fit over the largest ceil(tail_fraction * n) distances,
/// via Newton iteration on the shape profile equation. Needs >= 10 distances.
WeibullModel fit_weibull(const std::vector<double>& distances, double tail_fraction = 1.0);

/// A validation sample reduced to what threshold calibration needs.
struct ScoredSample {
    int true_label = 0;    // 1..C+1
    int nearest_label = 0; // c*
    double score = 0.0;    // d, U, or EVT survival
};

enum class ThresholdRule {
    RejectAbove, // known iff score < tau   (NC-D, NC-U)
    RejectBelow, // known iff score > tau   (EVT survival)
};

struct CalibratedThreshold {
    double tau = 0.0;
    double macro_f1 = 0.0;
};

/// Sweep tau over the midpoints of sorted unique scores (plus flanking
/// endpoints) and return the smallest tau maximizing macro-F1 over the C+1
/// labels.
CalibratedThreshold calibrate_threshold(const std::vector<ScoredSample>& validation,
                                        int num_known, ThresholdRule rule);

/// Arithmetic mean of per-Q optimal thresholds.
double mean_threshold(const std::vector<double>& taus);

int predict_with_threshold(const ScoredSample& s, double tau, int num_known, ThresholdRule rule);

} // namespace gmvae
