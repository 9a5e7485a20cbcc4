#pragma once

#include <filesystem>

#include "gmvae/dataset.hpp"
#include "gmvae/model.hpp"
#include "gmvae/openset.hpp"

namespace gmvae {

/// Checkpoint directory layout: manifest.json naming every parameter array
/// and its shape, plus one little-endian float64 blob per array. Round-trips
/// are bit-exact.
void save_checkpoint(const GmvaeParams& params, const std::filesystem::path& dir);
GmvaeParams load_checkpoint(const std::filesystem::path& dir);

/// Dataset bundle: manifest.json plus float64 blobs per split (samples,
/// labels, sources).
void save_dataset(const DatasetSplit& split, const std::filesystem::path& dir);
DatasetSplit load_dataset(const std::filesystem::path& dir);

/// Centroids share the manifest + blob format.
void save_centroids(const CentroidSet& cs, const std::filesystem::path& dir);
CentroidSet load_centroids(const std::filesystem::path& dir);

/// One calibrated threshold value per (algorithm, Q, threshold_mode).
struct ThresholdEntry {
    std::string algorithm;
    int q = 0;
    std::string threshold_mode; // "optimal" or "mean"
    double tau = 0.0;
};

/// Thresholds share the manifest + blob format as well.
void save_thresholds(const std::vector<ThresholdEntry>& entries,
                     const std::filesystem::path& dir);
std::vector<ThresholdEntry> load_thresholds(const std::filesystem::path& dir);

} // namespace gmvae
