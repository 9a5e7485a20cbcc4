#include "gmvae/data.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "gmvae/errors.hpp"

namespace gmvae {

void GenSpec::validate() const {
    if (classes < 1 || subclusters < 1 || dim == 0)
        throw ContractError("gen spec: classes, subclusters and dim must be positive");
    if (train_per_class < 1 || val_per_class < 0 || test_per_class < 0)
        throw ContractError("gen spec: sample counts must be nonnegative (train positive)");
    if (unknown_classes < 0) throw ContractError("gen spec: unknown_classes must be >= 0");
    if (!(separation > 0.0)) throw ContractError("gen spec: separation must be positive");
}

namespace {

using Pattern = std::vector<int>; // entries +-1

bool same_pattern(const Pattern& a, const Pattern& b) { return a == b; }

std::size_t hamming(const Pattern& a, const Pattern& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

/// Fresh mode patterns must disagree with every existing one on at least a
/// quarter of the coordinates; two modes a couple of bits apart would not be
/// the well-separated mixture the generator promises.
Pattern draw_distinct_pattern(Rng& rng, std::size_t dim, const std::vector<Pattern>& existing) {
    const std::size_t min_distance = std::max<std::size_t>(1, dim / 4);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Pattern p(dim);
        for (auto& v : p) v = rng.uniform() < 0.5 ? -1 : 1;
        const bool clash = std::any_of(existing.begin(), existing.end(), [&](const Pattern& q) {
            return hamming(p, q) < min_distance;
        });
        if (!clash) return p;
    }
    throw ContractError("gen_synthetic: could not draw a distinct mode pattern; dim too small");
}

Pattern mix_patterns(Rng& rng, const Pattern& a, const Pattern& b,
                     const std::vector<Pattern>& existing) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Pattern p(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) p[i] = rng.uniform() < 0.5 ? a[i] : b[i];
        const bool clash = std::any_of(existing.begin(), existing.end(),
                                       [&](const Pattern& q) { return same_pattern(p, q); });
        if (!clash) return p;
    }
    throw ContractError("gen_synthetic: could not mix a distinct unknown pattern");
}

Sample draw_sample(Rng& rng, const Pattern& pattern, double separation, int label, int source) {
    Sample s;
    s.label = label;
    s.source = source;
    s.x.resize(pattern.size());
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const double v = static_cast<double>(pattern[i]) * separation / 2.0 + rng.normal();
        s.x[i] = v > 0.0 ? 1.0 : 0.0;
    }
    return s;
}

} // namespace

DatasetSplit gen_synthetic(const GenSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // one pattern per (class, subcluster), class-major; then unknown modes
    std::vector<Pattern> patterns;
    for (int c = 0; c < spec.classes; ++c)
        for (int k = 0; k < spec.subclusters; ++k)
            patterns.push_back(draw_distinct_pattern(rng, spec.dim, patterns));

    std::vector<Pattern> unknown_patterns;
    for (int u = 0; u < spec.unknown_classes; ++u) {
        if (spec.placement == UnknownPlacement::HeldOut) {
            unknown_patterns.push_back(draw_distinct_pattern(rng, spec.dim, patterns));
        } else {
            // mix one mode of class (u mod C) with one of the next class
            const int c1 = u % spec.classes;
            const int c2 = (u + 1) % spec.classes;
            const int k1 = (u / spec.classes) % spec.subclusters;
            const auto& a = patterns[static_cast<std::size_t>(c1 * spec.subclusters + k1)];
            const auto& b = patterns[static_cast<std::size_t>(c2 * spec.subclusters + k1)];
            unknown_patterns.push_back(mix_patterns(rng, a, b, patterns));
        }
        patterns.push_back(unknown_patterns.back());
    }

    auto known_block = [&](int per_class, Dataset& out) {
        for (int c = 0; c < spec.classes; ++c)
            for (int i = 0; i < per_class; ++i) {
                const int k = i % spec.subclusters;
                const auto& pattern =
                    patterns[static_cast<std::size_t>(c * spec.subclusters + k)];
                out.push_back(draw_sample(rng, pattern, spec.separation, c + 1, c + 1));
            }
    };
    auto unknown_block = [&](int per_class, Dataset& out) {
        for (int u = 0; u < spec.unknown_classes; ++u)
            for (int i = 0; i < per_class; ++i)
                out.push_back(draw_sample(rng, unknown_patterns[static_cast<std::size_t>(u)],
                                          spec.separation, spec.classes + 1,
                                          spec.classes + 1 + u));
    };

    DatasetSplit split;
    split.num_known = spec.classes;
    split.num_unknown = spec.unknown_classes;
    split.dim = spec.dim;
    known_block(spec.train_per_class, split.train);
    known_block(spec.val_per_class, split.validation);
    unknown_block(spec.unknown_val_per_class, split.validation);
    known_block(spec.test_per_class, split.test);
    unknown_block(spec.unknown_test_per_class, split.test);
    return split;
}

void OpenSetSplitSpec::validate() const {
    if (known_groups.empty()) throw ContractError("open-set split: need at least one known group");
    if (!(val_fraction > 0.0 && test_fraction > 0.0 &&
          val_fraction + test_fraction < 1.0))
        throw ContractError(
            "open-set split: fractions must be positive with room left for training");
    std::set<int> seen;
    auto check_group = [&](const std::vector<int>& group) {
        if (group.empty()) throw ContractError("open-set split: empty label group");
        for (int label : group)
            if (!seen.insert(label).second)
                throw ContractError("open-set split: label " + std::to_string(label) +
                                    " appears in more than one group");
    };
    for (const auto& g : known_groups) check_group(g);
    for (const auto& g : unknown_groups) check_group(g);
}

DatasetSplit split_for_open_set(const Dataset& pool, const OpenSetSplitSpec& spec) {
    spec.validate();
    if (pool.empty()) throw ContractError("open-set split: empty sample pool");

    const int c = static_cast<int>(spec.known_groups.size());
    std::map<int, int> known_of, unknown_of; // original label -> class / source offset
    for (int g = 0; g < c; ++g)
        for (int label : spec.known_groups[static_cast<std::size_t>(g)])
            known_of[label] = g + 1;
    for (int g = 0; g < static_cast<int>(spec.unknown_groups.size()); ++g)
        for (int label : spec.unknown_groups[static_cast<std::size_t>(g)])
            unknown_of[label] = c + 1 + g;

    DatasetSplit split;
    split.num_known = c;
    split.num_unknown = static_cast<int>(spec.unknown_groups.size());
    split.dim = pool.front().x.size();

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(spec.seed);
    rng.shuffle(order);

    // shares are decided per class so small classes still land in every split
    std::map<int, std::vector<const Sample*>> known_pool;
    std::map<int, std::vector<const Sample*>> unknown_pool;
    for (std::size_t i : order) {
        const Sample& s = pool[i];
        if (auto it = known_of.find(s.label); it != known_of.end())
            known_pool[it->second].push_back(&s);
        else if (auto it2 = unknown_of.find(s.label); it2 != unknown_of.end())
            unknown_pool[it2->second].push_back(&s);
    }
    for (int g = 1; g <= c; ++g)
        if (known_pool[g].empty())
            throw ContractError("open-set split: known class " + std::to_string(g) +
                                " has no samples");

    for (const auto& [label, members] : known_pool) {
        const std::size_t n = members.size();
        const auto n_test = static_cast<std::size_t>(spec.test_fraction * n);
        const auto n_val = static_cast<std::size_t>(spec.val_fraction * n);
        for (std::size_t i = 0; i < n; ++i) {
            Sample s = *members[i];
            s.label = label;
            s.source = label;
            if (i < n_test)
                split.test.push_back(std::move(s));
            else if (i < n_test + n_val)
                split.validation.push_back(std::move(s));
            else
                split.train.push_back(std::move(s));
        }
    }
    const double val_share = spec.val_fraction / (spec.val_fraction + spec.test_fraction);
    for (const auto& [source, members] : unknown_pool) {
        const std::size_t n = members.size();
        const auto n_val = static_cast<std::size_t>(val_share * n);
        for (std::size_t i = 0; i < n; ++i) {
            Sample s = *members[i];
            s.label = c + 1;
            s.source = source;
            (i < n_val ? split.validation : split.test).push_back(std::move(s));
        }
    }
    return split;
}

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError(path.string() + ": truncated header");
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

} // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw FormatError("cannot open " + images_path.string());
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw FormatError("cannot open " + labels_path.string());

    const std::uint32_t images_magic = read_u32_be(images, images_path);
    if (images_magic != kImagesMagic)
        throw FormatError(images_path.string() + ": bad magic " + std::to_string(images_magic) +
                          ", expected IDX image container");
    const std::uint32_t n_images = read_u32_be(images, images_path);
    const std::uint32_t rows = read_u32_be(images, images_path);
    const std::uint32_t cols = read_u32_be(images, images_path);

    const std::uint32_t labels_magic = read_u32_be(labels, labels_path);
    if (labels_magic != kLabelsMagic)
        throw FormatError(labels_path.string() + ": bad magic " + std::to_string(labels_magic) +
                          ", expected IDX label container");
    const std::uint32_t n_labels = read_u32_be(labels, labels_path);
    if (n_labels != n_images)
        throw FormatError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                          std::to_string(n_labels) + " labels");

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    Dataset out;
    out.reserve(n_images);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!images)
            throw FormatError(images_path.string() + ": truncated payload at image " +
                              std::to_string(i));
        unsigned char raw_label;
        labels.read(reinterpret_cast<char*>(&raw_label), 1);
        if (!labels)
            throw FormatError(labels_path.string() + ": truncated payload at label " +
                              std::to_string(i));
        Sample s;
        s.x.resize(pixels);
        for (std::size_t p = 0; p < pixels; ++p) s.x[p] = static_cast<double>(buf[p]) / 255.0;
        s.label = static_cast<int>(raw_label) + 1;
        s.source = s.label;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace gmvae
