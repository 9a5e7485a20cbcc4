#include "gmvae/serialize.hpp"

#include <map>

#include <json.hpp>

#include "gmvae/io.hpp"

namespace gmvae {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& cfg) {
    return json{{"num_classes", cfg.num_classes}, {"subclusters", cfg.subclusters},
                {"dim_x", cfg.dim_x},             {"dim_z", cfg.dim_z},
                {"dim_w", cfg.dim_w},             {"v_prior", cfg.v_prior}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.subclusters = j.at("subclusters").get<std::vector<int>>();
    cfg.dim_x = j.at("dim_x").get<std::size_t>();
    cfg.dim_z = j.at("dim_z").get<std::size_t>();
    cfg.dim_w = j.at("dim_w").get<std::size_t>();
    cfg.v_prior = j.at("v_prior").get<std::vector<std::vector<double>>>();
    cfg.validate();
    return cfg;
}

json arch_to_json(const Arch& arch) {
    return json{{"trunk_widths", arch.trunk_widths}, {"reduce_dim", arch.reduce_dim}};
}

Arch arch_from_json(const json& j) {
    Arch arch;
    arch.trunk_widths = j.at("trunk_widths").get<std::vector<std::size_t>>();
    arch.reduce_dim = j.at("reduce_dim").get<std::size_t>();
    return arch;
}

json parse_manifest(const fs::path& dir, const std::string& expected_format) {
    const fs::path manifest = dir / "manifest.json";
    json j;
    try {
        j = json::parse(read_text(manifest));
    } catch (const json::exception& e) {
        throw FormatError(manifest.string() + ": " + e.what());
    }
    if (j.value("format", "") != expected_format)
        throw FormatError(manifest.string() + ": expected format '" + expected_format +
                          "', found '" + j.value("format", "") + "'");
    return j;
}

std::string blob_name(const std::string& array_name) { return array_name + ".bin"; }

} // namespace

void save_checkpoint(const GmvaeParams& params, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "gmvae-checkpoint";
    manifest["version"] = 1;
    manifest["config"] = config_to_json(params.config);
    manifest["arch"] = arch_to_json(params.arch);
    json arrays = json::array();
    for (const auto& [name, tensor] : params.named_parameters()) {
        arrays.push_back(json{{"name", name}, {"shape", tensor.shape()}, {"file", blob_name(name)}});
        write_f64_blob(dir / blob_name(name),
                       std::vector<double>(tensor.data().begin(), tensor.data().end()));
    }
    manifest["arrays"] = std::move(arrays);
    atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

GmvaeParams load_checkpoint(const fs::path& dir) {
    const json manifest = parse_manifest(dir, "gmvae-checkpoint");
    const ModelConfig cfg = config_from_json(manifest.at("config"));
    const Arch arch = arch_from_json(manifest.at("arch"));
    GmvaeParams params = make_gmvae(cfg, arch, 0);

    std::map<std::string, Tensor> by_name;
    for (auto& [name, tensor] : params.named_parameters()) by_name.emplace(name, tensor);

    std::size_t restored = 0;
    for (const auto& entry : manifest.at("arrays")) {
        const std::string name = entry.at("name").get<std::string>();
        const Shape shape = entry.at("shape").get<Shape>();
        const auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError(dir.string() + ": manifest names unknown array '" + name + "'");
        if (it->second.shape() != shape)
            throw FormatError(dir.string() + ": array '" + name + "' has shape " +
                              shape_str(shape) + ", model expects " +
                              shape_str(it->second.shape()));
        const auto values =
            read_f64_blob(dir / entry.at("file").get<std::string>(), shape_numel(shape));
        it->second.set_data(values);
        ++restored;
    }
    if (restored != by_name.size())
        throw FormatError(dir.string() + ": manifest restores " + std::to_string(restored) +
                          " of " + std::to_string(by_name.size()) + " parameter arrays");
    return params;
}

namespace {

void save_split_part(const fs::path& dir, const std::string& name, const Dataset& data,
                     std::size_t dim, json& manifest) {
    std::vector<double> xs;
    std::vector<double> labels;
    std::vector<double> sources;
    xs.reserve(data.size() * dim);
    for (const auto& s : data) {
        if (s.x.size() != dim)
            throw ContractError("save_dataset: sample dimension mismatch in split " + name);
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        labels.push_back(static_cast<double>(s.label));
        sources.push_back(static_cast<double>(s.source));
    }
    write_f64_blob(dir / (name + ".x.bin"), xs);
    write_f64_blob(dir / (name + ".labels.bin"), labels);
    write_f64_blob(dir / (name + ".sources.bin"), sources);
    manifest["splits"][name] = json{{"count", data.size()}};
}

Dataset load_split_part(const fs::path& dir, const std::string& name, std::size_t count,
                        std::size_t dim) {
    const auto xs = read_f64_blob(dir / (name + ".x.bin"), count * dim);
    const auto labels = read_f64_blob(dir / (name + ".labels.bin"), count);
    const auto sources = read_f64_blob(dir / (name + ".sources.bin"), count);
    Dataset out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.x.assign(xs.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   xs.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        s.label = static_cast<int>(labels[i]);
        s.source = static_cast<int>(sources[i]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace

void save_dataset(const DatasetSplit& split, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "gmvae-dataset";
    manifest["version"] = 1;
    manifest["num_known"] = split.num_known;
    manifest["num_unknown"] = split.num_unknown;
    manifest["dim"] = split.dim;
    save_split_part(dir, "train", split.train, split.dim, manifest);
    save_split_part(dir, "validation", split.validation, split.dim, manifest);
    save_split_part(dir, "test", split.test, split.dim, manifest);
    atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetSplit load_dataset(const fs::path& dir) {
    const json manifest = parse_manifest(dir, "gmvae-dataset");
    DatasetSplit split;
    split.num_known = manifest.at("num_known").get<int>();
    split.num_unknown = manifest.at("num_unknown").get<int>();
    split.dim = manifest.at("dim").get<std::size_t>();
    const auto& splits = manifest.at("splits");
    split.train =
        load_split_part(dir, "train", splits.at("train").at("count").get<std::size_t>(), split.dim);
    split.validation = load_split_part(
        dir, "validation", splits.at("validation").at("count").get<std::size_t>(), split.dim);
    split.test =
        load_split_part(dir, "test", splits.at("test").at("count").get<std::size_t>(), split.dim);
    return split;
}

void save_centroids(const CentroidSet& cs, const fs::path& dir) {
    cs.validate();
    fs::create_directories(dir);
    const std::size_t dim = cs.centroids.front().z.size();
    json manifest;
    manifest["format"] = "gmvae-centroids";
    manifest["version"] = 1;
    manifest["dim"] = dim;
    json entries = json::array();
    std::vector<double> blob;
    blob.reserve(cs.size() * dim);
    for (const auto& c : cs.centroids) {
        entries.push_back(json{{"label", c.label}, {"subcluster", c.subcluster}});
        blob.insert(blob.end(), c.z.begin(), c.z.end());
    }
    manifest["entries"] = std::move(entries);
    write_f64_blob(dir / "centroids.bin", blob);
    atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

void save_thresholds(const std::vector<ThresholdEntry>& entries, const fs::path& dir) {
    if (entries.empty()) throw ContractError("save_thresholds: no entries");
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "gmvae-thresholds";
    manifest["version"] = 1;
    json names = json::array();
    std::vector<double> blob;
    blob.reserve(entries.size());
    for (const auto& e : entries) {
        names.push_back(json{{"algorithm", e.algorithm},
                             {"q", e.q},
                             {"threshold_mode", e.threshold_mode}});
        blob.push_back(e.tau);
    }
    manifest["entries"] = std::move(names);
    write_f64_blob(dir / "thresholds.bin", blob);
    atomic_write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<ThresholdEntry> load_thresholds(const fs::path& dir) {
    const json manifest = parse_manifest(dir, "gmvae-thresholds");
    const auto& names = manifest.at("entries");
    const auto blob = read_f64_blob(dir / "thresholds.bin", names.size());
    std::vector<ThresholdEntry> entries;
    std::size_t i = 0;
    for (const auto& entry : names) {
        ThresholdEntry e;
        e.algorithm = entry.at("algorithm").get<std::string>();
        e.q = entry.at("q").get<int>();
        e.threshold_mode = entry.at("threshold_mode").get<std::string>();
        e.tau = blob[i++];
        entries.push_back(std::move(e));
    }
    return entries;
}

CentroidSet load_centroids(const fs::path& dir) {
    const json manifest = parse_manifest(dir, "gmvae-centroids");
    const std::size_t dim = manifest.at("dim").get<std::size_t>();
    const auto& entries = manifest.at("entries");
    const auto blob = read_f64_blob(dir / "centroids.bin", entries.size() * dim);
    CentroidSet cs;
    std::size_t i = 0;
    for (const auto& entry : entries) {
        Centroid c;
        c.label = entry.at("label").get<int>();
        c.subcluster = entry.at("subcluster").get<int>();
        c.z.assign(blob.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   blob.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        cs.centroids.push_back(std::move(c));
        ++i;
    }
    cs.validate();
    return cs;
}

} // namespace gmvae
