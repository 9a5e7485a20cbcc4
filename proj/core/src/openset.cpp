#include "gmvae/openset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gmvae/errors.hpp"
#include "gmvae/metrics.hpp"

namespace gmvae {

void CentroidSet::validate() const {
    if (centroids.empty()) throw ContractError("centroid set: empty");
    const std::size_t dim = centroids.front().z.size();
    for (const auto& c : centroids) {
        if (c.z.size() != dim) throw ContractError("centroid set: mixed dimensions");
        for (double v : c.z)
            if (!std::isfinite(v)) throw ContractError("centroid set: non-finite centroid");
    }
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("euclidean: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::vector<std::vector<double>> kmeans(const std::vector<std::vector<double>>& points,
                                        std::size_t k, std::uint64_t seed,
                                        std::size_t max_iters) {
    if (k < 1) throw ContractError("kmeans: k must be >= 1");
    if (points.size() < k)
        throw ContractError("kmeans: " + std::to_string(points.size()) + " points for k = " +
                            std::to_string(k));
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw DimensionError("kmeans: mixed point dimensions");

    Rng rng(seed);
    std::vector<std::vector<double>> centers;
    centers.reserve(k);

    // k-means++ seeding
    centers.push_back(points[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) {
                const double d = euclidean(points[i], c);
                best = std::min(best, d * d);
            }
            d2[i] = best;
            total += best;
        }
        if (total == 0.0) {
            // all remaining mass collapsed; any point works
            centers.push_back(points[rng.uniform_index(n)]);
            continue;
        }
        double u = rng.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            u -= d2[i];
            if (u < 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(points[pick]);
    }

    std::vector<std::size_t> assign(n, 0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best_j = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double d = euclidean(points[i], centers[j]);
                if (d < best_d) {
                    best_d = d;
                    best_j = j;
                }
            }
            if (assign[i] != best_j) {
                assign[i] = best_j;
                changed = true;
            }
        }

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
            ++counts[assign[i]];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                // re-seed to the point farthest from its assigned centroid
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = euclidean(points[i], centers[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centers[j] = points[far_i];
                assign[far_i] = j;
                changed = true;
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d)
                centers[j][d] = sums[j][d] / static_cast<double>(counts[j]);
        }
        if (!changed && iter > 0) break;
    }
    return centers;
}

std::pair<std::size_t, double> nearest_centroid(const std::vector<double>& embedding,
                                                const CentroidSet& cs) {
    cs.validate();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cs.centroids.size(); ++i) {
        const double d = euclidean(embedding, cs.centroids[i].z);
        if (d < best_d) { // strict: ties keep the lowest index
            best_d = d;
            best = i;
        }
    }
    return {best, best_d};
}

namespace {

int unknown_label_of(const CentroidSet& cs) {
    int max_label = 0;
    for (const auto& c : cs.centroids) max_label = std::max(max_label, c.label);
    return max_label + 1;
}

} // namespace

Prediction classify_ncd(const std::vector<double>& embedding, const CentroidSet& cs, double tau) {
    if (tau < 0.0) throw ContractError("classify_ncd: tau must be >= 0");
    const auto [idx, d] = nearest_centroid(embedding, cs);
    Prediction p;
    p.nearest_label = cs.centroids[idx].label;
    p.nearest_subcluster = cs.centroids[idx].subcluster;
    p.score = d;
    p.unknown = !(d < tau);
    p.label = p.unknown ? unknown_label_of(cs) : p.nearest_label;
    return p;
}

double uncertainty(const std::vector<double>& embedding, const CentroidSet& cs) {
    cs.validate();
    const std::size_t n = cs.size();
    if (n < 2) throw ContractError("uncertainty: needs at least 2 centroids");
    const auto [idx, d_min] = nearest_centroid(embedding, cs);
    double rest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == idx) continue;
        rest += euclidean(embedding, cs.centroids[i].z);
    }
    const double denom = rest / static_cast<double>(n - 1);
    if (denom == 0.0) return 0.0; // every centroid coincides with the query
    return d_min / denom;
}

Prediction classify_ncu(const std::vector<double>& embedding, const CentroidSet& cs, double tau) {
    if (tau < 0.0 || tau > 1.0) throw ContractError("classify_ncu: tau must lie in [0,1]");
    const auto [idx, d] = nearest_centroid(embedding, cs);
    Prediction p;
    p.nearest_label = cs.centroids[idx].label;
    p.nearest_subcluster = cs.centroids[idx].subcluster;
    p.score = uncertainty(embedding, cs);
    p.unknown = !(p.score < tau);
    p.label = p.unknown ? unknown_label_of(cs) : p.nearest_label;
    return p;
}

double evt_score(double d, const WeibullModel& wm) {
    if (d < 0.0) throw ContractError("evt_score: distance must be >= 0");
    if (!(wm.shape > 0.0 && wm.scale > 0.0))
        throw ContractError("evt_score: model parameters must be positive");
    return std::exp(-std::pow(d / wm.scale, wm.shape));
}

WeibullModel fit_weibull(const std::vector<double>& distances, double tail_fraction) {
    if (distances.size() < 10)
        throw ContractError("fit_weibull: needs at least 10 distances, got " +
                            std::to_string(distances.size()));
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw ContractError("fit_weibull: tail_fraction must lie in (0,1]");

    std::vector<double> tail = distances;
    std::sort(tail.begin(), tail.end(), std::greater<>());
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil(tail_fraction * static_cast<double>(tail.size())));
    tail.resize(std::max<std::size_t>(keep, 1));

    // strictly positive support; zero distances carry no likelihood information
    std::erase_if(tail, [](double d) { return d <= 0.0; });
    if (tail.size() < 2) throw FitError("fit_weibull: not enough positive distances");
    if (std::all_of(tail.begin(), tail.end(), [&](double d) { return d == tail.front(); }))
        throw FitError("fit_weibull: degenerate data, all distances equal");

    const std::size_t n = tail.size();
    // the shape is scale invariant; normalizing by the largest distance keeps
    // pow() bounded however concentrated the data is
    const double d_max = tail.front();
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = tail[i] / d_max;
    double mean_log = 0.0;
    for (double y : scaled) mean_log += std::log(y);
    mean_log /= static_cast<double>(n);

    // profile likelihood: g(m) = sum y^m log y / sum y^m - 1/m - mean_log = 0;
    // g increases in m, so a bracket plus Newton with bisection fallback is safe
    auto profile = [&](double m, double& g, double& dg) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (double y : scaled) {
            const double ym = std::pow(y, m);
            const double ly = std::log(y);
            s0 += ym;
            s1 += ym * ly;
            s2 += ym * ly * ly;
        }
        g = s1 / s0 - 1.0 / m - mean_log;
        dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (m * m);
    };

    double lo = 1e-8;
    double hi = 1.0;
    double g, dg;
    profile(hi, g, dg);
    int expand = 0;
    while (g < 0.0 && expand++ < 200) {
        hi *= 2.0;
        profile(hi, g, dg);
    }
    if (g < 0.0) throw FitError("fit_weibull: no root bracket for the shape parameter");

    double m = std::min(1.0, 0.5 * (lo + hi));
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
        profile(m, g, dg);
        if (std::abs(g) < 1e-12) {
            converged = true;
            break;
        }
        if (g > 0.0)
            hi = m;
        else
            lo = m;
        double next = m - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - m) < 1e-14 * std::max(1.0, m)) {
            m = next;
            converged = true;
            break;
        }
        m = next;
    }
    if (!converged || !(m > 0.0) || !std::isfinite(m))
        throw FitError("fit_weibull: Newton iteration did not converge");

    double s0 = 0.0;
    for (double y : scaled) s0 += std::pow(y, m);
    const double eta = d_max * std::pow(s0 / static_cast<double>(n), 1.0 / m);

    WeibullModel wm;
    wm.shape = m;
    wm.scale = eta;
    wm.tail_count = n;
    return wm;
}

int predict_with_threshold(const ScoredSample& s, double tau, int num_known, ThresholdRule rule) {
    const bool known =
        rule == ThresholdRule::RejectAbove ? (s.score < tau) : (s.score > tau);
    return known ? s.nearest_label : num_known + 1;
}

CalibratedThreshold calibrate_threshold(const std::vector<ScoredSample>& validation,
                                        int num_known, ThresholdRule rule) {
    if (validation.empty()) throw ContractError("calibrate_threshold: empty validation set");

    std::vector<double> scores;
    scores.reserve(validation.size());
    for (const auto& s : validation) scores.push_back(s.score);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

    std::vector<double> candidates;
    candidates.reserve(scores.size() + 1);
    candidates.push_back(scores.front() - 1.0);
    for (std::size_t i = 0; i + 1 < scores.size(); ++i)
        candidates.push_back(0.5 * (scores[i] + scores[i + 1]));
    candidates.push_back(scores.back() + 1.0);

    std::vector<int> truths;
    truths.reserve(validation.size());
    for (const auto& s : validation) truths.push_back(s.true_label);

    // candidates are scanned in increasing order, so keeping only strict
    // improvements returns the smallest tau among the maximizers
    CalibratedThreshold best;
    bool first = true;
    std::vector<int> predictions(validation.size());
    for (double tau : candidates) {
        for (std::size_t i = 0; i < validation.size(); ++i)
            predictions[i] = predict_with_threshold(validation[i], tau, num_known, rule);
        const double f1 = macro_f1(predictions, truths, num_known + 1);
        if (first || f1 > best.macro_f1) {
            best.tau = tau;
            best.macro_f1 = f1;
            first = false;
        }
    }
    return best;
}

double mean_threshold(const std::vector<double>& taus) {
    if (taus.empty()) throw ContractError("mean_threshold: empty list");
    double total = 0.0;
    for (double t : taus) total += t;
    return total / static_cast<double>(taus.size());
}

} // namespace gmvae
