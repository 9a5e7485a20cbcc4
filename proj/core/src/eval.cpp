#include "gmvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace gmvae {

std::vector<double> embed(const GmvaeParams& params, const std::vector<double>& x) {
    const Tensor xt({x.size()}, x);
    const DiagGaussian q = encode_z(params, xt);
    return {q.mean.data().begin(), q.mean.data().end()};
}

CentroidSet build_centroids(const GmvaeParams& params, const Dataset& train,
                            const std::vector<int>& k_per_class, std::uint64_t seed) {
    if (train.empty()) throw ContractError("build_centroids: empty training set");
    const int num_classes = params.config.num_classes;
    if (k_per_class.size() != static_cast<std::size_t>(num_classes))
        throw ContractError("build_centroids: k_per_class must have one entry per class");

    CentroidSet cs;
    Rng rng(seed);
    for (int c = 1; c <= num_classes; ++c) {
        std::vector<std::vector<double>> points;
        for (const auto& s : train)
            if (s.label == c) points.push_back(embed(params, s.x));
        const std::size_t k = static_cast<std::size_t>(k_per_class[static_cast<std::size_t>(c - 1)]);
        if (points.size() < k)
            throw ContractError("build_centroids: class " + std::to_string(c) + " has " +
                                std::to_string(points.size()) + " samples for k = " +
                                std::to_string(k));
        auto centers = kmeans(points, k, rng.fork(static_cast<std::uint64_t>(c)).next_u64());
        for (std::size_t j = 0; j < centers.size(); ++j)
            cs.centroids.push_back({c, static_cast<int>(j) + 1, std::move(centers[j])});
    }
    cs.validate();
    return cs;
}

const EvalCell& EvalReport::cell(const std::string& algorithm, int q,
                                 const std::string& threshold_mode) const {
    for (const auto& c : cells)
        if (c.algorithm == algorithm && c.q == q && c.threshold_mode == threshold_mode) return c;
    throw ContractError("eval report: no cell (" + algorithm + ", " + std::to_string(q) + ", " +
                        threshold_mode + ")");
}

namespace {

ThresholdRule rule_of(const std::string& algorithm) {
    return algorithm == "evt" ? ThresholdRule::RejectBelow : ThresholdRule::RejectAbove;
}

/// Per-class Weibull models on training distances to the class's own
/// nearest centroid.
std::map<int, WeibullModel> fit_evt_models(const GmvaeParams& params, const Dataset& train,
                                           const CentroidSet& cs) {
    std::map<int, std::vector<double>> distances;
    for (const auto& s : train) {
        double best = std::numeric_limits<double>::infinity();
        const auto e = embed(params, s.x);
        for (const auto& c : cs.centroids) {
            if (c.label != s.label) continue;
            best = std::min(best, euclidean(e, c.z));
        }
        distances[s.label].push_back(best);
    }
    std::map<int, WeibullModel> models;
    for (auto& [label, d] : distances) models[label] = fit_weibull(d, 1.0);
    return models;
}

ScoredSample score_sample(const GmvaeParams& params, const Sample& s, const CentroidSet& cs,
                          const std::string& algorithm,
                          const std::map<int, WeibullModel>& evt_models) {
    const auto e = embed(params, s.x);
    const auto [idx, d] = nearest_centroid(e, cs);
    ScoredSample out;
    out.true_label = s.label;
    out.nearest_label = cs.centroids[idx].label;
    if (algorithm == "ncd") {
        out.score = d;
    } else if (algorithm == "ncu") {
        out.score = uncertainty(e, cs);
    } else if (algorithm == "evt") {
        out.score = evt_score(d, evt_models.at(out.nearest_label));
    } else {
        throw ContractError("run_openset_eval: unknown algorithm '" + algorithm + "'");
    }
    return out;
}

std::vector<std::vector<int>> confusion_of(const std::vector<int>& predictions,
                                           const std::vector<int>& truths, int num_labels) {
    std::vector<std::vector<int>> m(static_cast<std::size_t>(num_labels),
                                    std::vector<int>(static_cast<std::size_t>(num_labels), 0));
    for (std::size_t i = 0; i < predictions.size(); ++i)
        ++m[static_cast<std::size_t>(truths[i] - 1)][static_cast<std::size_t>(predictions[i] - 1)];
    return m;
}

} // namespace

EvalReport run_openset_eval(const GmvaeParams& params, const DatasetSplit& split,
                            const std::vector<std::string>& algorithms,
                            const std::vector<int>& q_list, const std::vector<int>& k_per_class,
                            std::uint64_t seed) {
    if (algorithms.empty()) throw ContractError("run_openset_eval: no algorithms given");
    for (int q : q_list)
        if (q < 0 || q > split.num_unknown)
            throw ContractError("run_openset_eval: Q = " + std::to_string(q) + " but only " +
                                std::to_string(split.num_unknown) + " unknown classes exist");
    for (std::size_t i = 1; i < q_list.size(); ++i)
        if (q_list[i] <= q_list[i - 1])
            throw ContractError("run_openset_eval: q_list must be strictly increasing");

    const int c = split.num_known;
    const CentroidSet cs = build_centroids(params, split.train, k_per_class, seed);

    const bool wants_evt =
        std::find(algorithms.begin(), algorithms.end(), "evt") != algorithms.end();
    std::map<int, WeibullModel> evt_models;
    if (wants_evt) evt_models = fit_evt_models(params, split.train, cs);

    // unknowns enter in increasing source order: Q covers sources C+1..C+Q
    auto subset = [&](const Dataset& data, int q) {
        Dataset out;
        for (const auto& s : data)
            if (s.label <= c || s.source <= c + q) out.push_back(s);
        return out;
    };

    EvalReport report;
    report.num_known = c;
    report.algorithms = algorithms;
    report.q_list = q_list;

    for (const auto& algorithm : algorithms) {
        const ThresholdRule rule = rule_of(algorithm);
        struct PerQ {
            double tau = 0.0;
            std::vector<ScoredSample> test_scores;
            std::vector<int> truths;
        };
        std::vector<PerQ> per_q;
        std::vector<double> taus;

        for (int q : q_list) {
            PerQ entry;
            std::vector<ScoredSample> val_scores;
            for (const auto& s : subset(split.validation, q))
                val_scores.push_back(score_sample(params, s, cs, algorithm, evt_models));
            const CalibratedThreshold cal = calibrate_threshold(val_scores, c, rule);
            entry.tau = cal.tau;
            for (const auto& s : subset(split.test, q)) {
                entry.test_scores.push_back(score_sample(params, s, cs, algorithm, evt_models));
                entry.truths.push_back(s.label);
            }
            taus.push_back(cal.tau);
            per_q.push_back(std::move(entry));
        }
        const double tau_mean = mean_threshold(taus);

        for (std::size_t qi = 0; qi < q_list.size(); ++qi) {
            const PerQ& entry = per_q[qi];
            for (const char* mode : {"optimal", "mean"}) {
                const double tau = std::string_view(mode) == "optimal" ? entry.tau : tau_mean;
                std::vector<int> predictions;
                predictions.reserve(entry.test_scores.size());
                for (const auto& s : entry.test_scores)
                    predictions.push_back(predict_with_threshold(s, tau, c, rule));
                EvalCell cell;
                cell.algorithm = algorithm;
                cell.q = q_list[qi];
                cell.threshold_mode = mode;
                cell.tau = tau;
                cell.macro_f1 = macro_f1(predictions, entry.truths, c + 1);
                cell.confusion = confusion_of(predictions, entry.truths, c + 1);
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

int recommend_k(const std::vector<double>& mean_differences, const ScanRule& rule) {
    int recommended = 1;
    for (std::size_t i = 0; i < mean_differences.size(); ++i) {
        const int k = static_cast<int>(i) + 2; // difference i is D(K-1 -> K) for K = i+2
        double threshold = rule.abs_floor;
        if (i > 0) threshold = std::max(threshold, rule.rel_ratio * mean_differences[i - 1]);
        if (mean_differences[i] >= threshold) recommended = k;
    }
    return recommended;
}

CoveringCurve subcluster_scan(const Dataset& class_train, const Dataset& class_val, int k_max,
                              const ScanModel& model, const TrainConfig& config,
                              const ScanRule& rule) {
    if (k_max < 1) throw ContractError("subcluster_scan: k_max must be >= 1");
    if (class_train.empty() || class_val.empty())
        throw ContractError("subcluster_scan: empty class data");
    const std::size_t dim = class_train.front().x.size();
    auto relabel = [&](const Dataset& in) {
        Dataset out = in;
        for (auto& s : out) {
            if (s.x.size() != dim)
                throw ContractError("subcluster_scan: mixed sample dimensions");
            s.label = 1;
        }
        return out;
    };
    const Dataset train = relabel(class_train);
    const Dataset val = relabel(class_val);

    CoveringCurve curve;
    curve.rule = rule;
    for (int k = 1; k <= k_max; ++k) {
        const ModelConfig cfg = ModelConfig::make(1, {k}, dim, model.dim_z, model.dim_w);
        GmvaeParams params = make_gmvae(cfg, model.arch, config.seed);
        const History history = fit(params, train, val, config);

        const std::size_t total = history.epochs.size();
        std::size_t drop =
            static_cast<std::size_t>(rule.truncate_fraction * static_cast<double>(total));
        if (drop >= total) drop = total - 1; // keep at least one point per curve
        std::vector<CoveringPoint> points;
        for (std::size_t e = drop; e < total; ++e) {
            const auto& st = history.epochs[e];
            points.push_back({st.epoch, -st.reconstruction, st.latent_covering});
        }
        curve.k_values.push_back(k);
        curve.curves.push_back(std::move(points));
    }

    for (int k = 1; k < k_max; ++k) {
        const auto& lower = curve.curves[static_cast<std::size_t>(k - 1)];
        const auto& upper = curve.curves[static_cast<std::size_t>(k)];
        double acc = 0.0;
        for (const auto& p : upper) {
            // nearest reconstruction level on the K curve
            double best_d = std::numeric_limits<double>::infinity();
            double matched = 0.0;
            for (const auto& q : lower) {
                const double d = std::abs(q.reconstruction_loss - p.reconstruction_loss);
                if (d < best_d) {
                    best_d = d;
                    matched = q.latent_covering_loss;
                }
            }
            acc += matched - p.latent_covering_loss;
        }
        curve.mean_differences.push_back(acc / static_cast<double>(upper.size()));
    }
    curve.recommended_k = recommend_k(curve.mean_differences, rule);
    return curve;
}

} // namespace gmvae
