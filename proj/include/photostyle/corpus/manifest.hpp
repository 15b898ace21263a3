#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "photostyle/core/error.hpp"
#include "photostyle/core/rng.hpp"
#include "photostyle/corpus/image_io.hpp"

namespace photostyle {

struct StyleLabel {
    int id = 0;
    std::string name;
};

enum class Split { train, val, test, unassigned };
enum class Source { disk, synthetic };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unassigned: return "unassigned";
    }
    throw ValidationError("unknown split");
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    throw ValidationError("unknown split name: " + s);
}

inline std::string to_string(Source s) {
    return s == Source::disk ? "disk" : "synthetic";
}

inline Source source_from_string(const std::string& s) {
    if (s == "disk") return Source::disk;
    if (s == "synthetic") return Source::synthetic;
    throw ValidationError("unknown source name: " + s);
}

struct ImageRecord {
    std::string path;
    int label = 0;
    Split split = Split::unassigned;
    Source source = Source::disk;
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
    std::vector<StyleLabel> labels;
    std::uint64_t seed = 0;
    std::string provenance;

    int num_labels() const { return static_cast<int>(labels.size()); }

    const StyleLabel& label_of(int id) const {
        if (id < 0 || id >= num_labels())
            throw ValidationError("label id " + std::to_string(id) + " not in manifest");
        return labels[static_cast<std::size_t>(id)];
    }

    std::vector<int> count_per_label() const {
        std::vector<int> counts(labels.size(), 0);
        for (const auto& r : records) {
            if (r.label < 0 || r.label >= num_labels())
                throw ValidationError("record label " + std::to_string(r.label) +
                                      " not in manifest label set");
            ++counts[static_cast<std::size_t>(r.label)];
        }
        return counts;
    }

    void validate() const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i].id != static_cast<int>(i))
                throw ValidationError("manifest labels must be indexed 0..K-1 contiguously");
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (labels[i].name == labels[j].name)
                    throw ValidationError("duplicate label name: " + labels[i].name);
        (void)count_per_label();
    }
};

// Immutable filtered view over a manifest: holds record indices, never copies
// records. Views are what trainers and evaluators consume.
class ManifestView {
public:
    ManifestView() = default;

    ManifestView(const DatasetManifest& m, std::vector<int> indices)
        : manifest_(&m), indices_(std::move(indices)) {}

    static ManifestView whole(const DatasetManifest& m) {
        std::vector<int> idx(m.records.size());
        std::iota(idx.begin(), idx.end(), 0);
        return ManifestView(m, std::move(idx));
    }

    static ManifestView of_split(const DatasetManifest& m, Split s) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < m.records.size(); ++i)
            if (m.records[i].split == s) idx.push_back(static_cast<int>(i));
        return ManifestView(m, std::move(idx));
    }

    const DatasetManifest& manifest() const { return *manifest_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    int record_index(std::size_t i) const { return indices_[i]; }
    const ImageRecord& record(std::size_t i) const {
        return manifest_->records[static_cast<std::size_t>(indices_[i])];
    }
    const std::vector<int>& indices() const { return indices_; }

    int num_labels() const { return manifest_->num_labels(); }

    // View positions grouped by label id.
    std::vector<std::vector<int>> positions_per_label() const {
        std::vector<std::vector<int>> groups(manifest_->labels.size());
        for (std::size_t i = 0; i < indices_.size(); ++i)
            groups[static_cast<std::size_t>(record(i).label)].push_back(static_cast<int>(i));
        return groups;
    }

private:
    const DatasetManifest* manifest_ = nullptr;
    std::vector<int> indices_;
};

// ---------------------------------------------------------------------------
// Ingestion: folder-per-class layout, labels lexicographic by folder name.

struct IngestResult {
    DatasetManifest manifest;
    std::vector<std::string> skipped;  // unreadable files
};

inline IngestResult ingest_manifest(const std::string& root_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root_dir))
        throw ValidationError("ingest: root directory does not exist: " + root_dir);

    std::vector<std::string> class_dirs;
    for (const auto& entry : fs::directory_iterator(root_dir))
        if (entry.is_directory()) class_dirs.push_back(entry.path().filename().string());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw ValidationError("ingest: no classes found in " + root_dir);

    IngestResult result;
    for (std::size_t k = 0; k < class_dirs.size(); ++k)
        result.manifest.labels.push_back({static_cast<int>(k), class_dirs[k]});

    for (std::size_t k = 0; k < class_dirs.size(); ++k) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(fs::path(root_dir) / class_dirs[k]))
            if (entry.is_regular_file()) files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        int readable = 0;
        for (const auto& f : files) {
            try {
                (void)read_ppm(f);
            } catch (const RuntimeError&) {
                result.skipped.push_back(f);
                continue;
            }
            result.manifest.records.push_back(
                {f, static_cast<int>(k), Split::unassigned, Source::disk});
            ++readable;
        }
        if (readable == 0)
            throw ValidationError("ingest: class '" + class_dirs[k] +
                                  "' has no readable images");
    }
    result.manifest.provenance = "ingest:" + root_dir;
    result.manifest.validate();
    return result;
}

// ---------------------------------------------------------------------------
// Stratified splitting. Two modes: fractional ratios (largest-remainder
// apportionment per class, so each split deviates from the exact fraction by
// less than one record) and absolute per-split counts (leftover records stay
// unassigned).

struct SplitFractions {
    double train = 0.7;
    double val = 0.0;
    double test = 0.3;
};

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;
};

using SplitSpec = std::variant<SplitFractions, SplitCounts>;

namespace detail {

inline std::array<int, 3> apportion(int n, const SplitFractions& f, const std::string& cls) {
    const std::array<double, 3> frac{f.train, f.val, f.test};
    std::array<int, 3> alloc{};
    std::array<double, 3> rem{};
    int used = 0;
    for (int s = 0; s < 3; ++s) {
        const double exact = frac[s] * n;
        alloc[s] = static_cast<int>(std::floor(exact));
        rem[s] = exact - alloc[s];
        used += alloc[s];
    }
    int leftover = n - used;
    // Hand leftovers to the largest remainders; ties resolve in split order.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int i = 0; i < 3 && leftover > 0; ++i, --leftover) ++alloc[order[static_cast<std::size_t>(i)]];
    for (int s = 0; s < 3; ++s)
        if (frac[s] > 0.0 && alloc[s] == 0)
            throw ValidationError("split: class '" + cls +
                                  "' too small for requested split fractions");
    return alloc;
}

}  // namespace detail

inline DatasetManifest split_manifest(const DatasetManifest& manifest, const SplitSpec& spec,
                                      std::uint64_t seed) {
    manifest.validate();
    if (const auto* f = std::get_if<SplitFractions>(&spec)) {
        if (f->train < 0 || f->val < 0 || f->test < 0)
            throw ValidationError("split: fractions must be nonnegative");
        if (std::abs(f->train + f->val + f->test - 1.0) > 1e-9)
            throw ValidationError("split: fractions must sum to 1");
    } else {
        const auto& c = std::get<SplitCounts>(spec);
        if (c.train < 0 || c.val < 0 || c.test < 0)
            throw ValidationError("split: counts must be nonnegative");
    }

    DatasetManifest out = manifest;
    out.seed = seed;

    std::vector<std::vector<int>> by_label(manifest.labels.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
        by_label[static_cast<std::size_t>(manifest.records[i].label)].push_back(
            static_cast<int>(i));

    for (std::size_t k = 0; k < by_label.size(); ++k) {
        auto& members = by_label[k];
        const std::string& cls = manifest.labels[k].name;
        Rng rng(derive_seed(seed, "split", k));
        std::shuffle(members.begin(), members.end(), rng);

        std::array<int, 3> alloc{};
        if (const auto* f = std::get_if<SplitFractions>(&spec)) {
            alloc = detail::apportion(static_cast<int>(members.size()), *f, cls);
        } else {
            const auto& c = std::get<SplitCounts>(spec);
            if (c.train + c.val + c.test > static_cast<int>(members.size()))
                throw ValidationError("split: class '" + cls + "' has " +
                                      std::to_string(members.size()) +
                                      " records, fewer than requested counts");
            alloc = {c.train, c.val, c.test};
        }

        std::size_t pos = 0;
        const std::array<Split, 3> splits{Split::train, Split::val, Split::test};
        for (int s = 0; s < 3; ++s)
            for (int i = 0; i < alloc[s]; ++i)
                out.records[static_cast<std::size_t>(members[pos++])].split =
                    splits[static_cast<std::size_t>(s)];
        for (; pos < members.size(); ++pos)
            out.records[static_cast<std::size_t>(members[pos])].split = Split::unassigned;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Image loading against a record.

inline ImageTensor load_image(const ImageRecord& record, int target_h, int target_w,
                              const Normalization& norm) {
    RgbImage img = read_ppm(record.path);
    img = resize_bilinear(img, target_h, target_w);
    ImageTensor t = to_tensor(img, norm, record.label);
    if (!t.data.all_finite())
        throw RuntimeError("load_image: non-finite values from " + record.path);
    return t;
}

// Decode-once cache for repeated epochs over the same manifest.
class ImageCache {
public:
    ImageCache(const DatasetManifest& manifest, int target_h, int target_w, Normalization norm)
        : manifest_(&manifest), target_h_(target_h), target_w_(target_w), norm_(norm),
          cache_(manifest.records.size()) {}

    const ImageTensor& get(int record_index) {
        auto& slot = cache_.at(static_cast<std::size_t>(record_index));
        if (!slot)
            slot = load_image(manifest_->records[static_cast<std::size_t>(record_index)],
                              target_h_, target_w_, norm_);
        return *slot;
    }

    int height() const { return target_h_; }
    int width() const { return target_w_; }
    const Normalization& normalization() const { return norm_; }

private:
    const DatasetManifest* manifest_;
    int target_h_, target_w_;
    Normalization norm_;
    std::vector<std::optional<ImageTensor>> cache_;
};

// ---------------------------------------------------------------------------
// Manifest file format: one JSON object per line; the first line is a header
// with seed, labels, and provenance. Rewriting a loaded manifest reproduces
// the file byte for byte.

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("manifest: cannot write " + path);
    nlohmann::json header;
    header["type"] = "photostyle.manifest.v1";
    header["seed"] = m.seed;
    header["provenance"] = m.provenance;
    auto labels = nlohmann::json::array();
    for (const auto& l : m.labels) labels.push_back({{"id", l.id}, {"name", l.name}});
    header["labels"] = labels;
    out << header.dump() << '\n';
    for (const auto& r : m.records) {
        nlohmann::json line;
        line["path"] = r.path;
        line["label_id"] = r.label;
        line["label_name"] = m.labels[static_cast<std::size_t>(r.label)].name;
        line["split"] = to_string(r.split);
        line["source"] = to_string(r.source);
        out << line.dump() << '\n';
    }
    if (!out) throw RuntimeError("manifest: short write to " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("manifest: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw RuntimeError("manifest: empty file " + path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, true);
    if (header.value("type", "") != "photostyle.manifest.v1")
        throw ValidationError("manifest: unrecognized header in " + path);
    DatasetManifest m;
    m.seed = header.at("seed").get<std::uint64_t>();
    m.provenance = header.at("provenance").get<std::string>();
    for (const auto& l : header.at("labels"))
        m.labels.push_back({l.at("id").get<int>(), l.at("name").get<std::string>()});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ImageRecord r;
        r.path = j.at("path").get<std::string>();
        r.label = j.at("label_id").get<int>();
        r.split = split_from_string(j.at("split").get<std::string>());
        r.source = source_from_string(j.at("source").get<std::string>());
        const std::string name = j.at("label_name").get<std::string>();
        if (r.label < 0 || r.label >= m.num_labels() ||
            m.labels[static_cast<std::size_t>(r.label)].name != name)
            throw ValidationError("manifest: record label mismatch in " + path);
        m.records.push_back(std::move(r));
    }
    m.validate();
    return m;
}

}  // namespace photostyle
