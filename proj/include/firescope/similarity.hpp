#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/domain.hpp"
#include "firescope/errors.hpp"

namespace firescope {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    double norm() const {
        double acc = 0.0;
        for (double v : values) acc += v * v;
        return std::sqrt(acc);
    }
};

/// Cosine similarity dot(x,y) / (|x| |y|). Scale-invariant and symmetric.
inline double cosine(const EmbeddingVector& x, const EmbeddingVector& y) {
    if (x.dim() != y.dim()) throw DimensionMismatch(x.dim(), y.dim());
    double dot = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        if (!std::isfinite(x.values[i]) || !std::isfinite(y.values[i])) {
            throw Error("embedding entries must be finite");
        }
        dot += x.values[i] * y.values[i];
    }
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) throw ZeroVector();
    return dot / (nx * ny);
}

/// Precomputed image embeddings, uri-keyed, uniform dimension.
class EmbeddingStore {
public:
    void insert(const std::string& uri, EmbeddingVector vec) {
        if (!vectors_.empty() && vec.dim() != dim_) {
            throw DimensionMismatch(dim_, vec.dim());
        }
        dim_ = vec.dim();
        vectors_[uri] = std::move(vec);
    }

    const EmbeddingVector& at(const std::string& uri) const {
        const auto it = vectors_.find(uri);
        if (it == vectors_.end()) throw MissingEmbedding(uri);
        return it->second;
    }

    bool contains(const std::string& uri) const { return vectors_.count(uri) > 0; }
    std::size_t size() const { return vectors_.size(); }
    std::size_t dim() const { return dim_; }

    /// JSON-lines file, one {"uri": str, "vector": [floats]} per line.
    static EmbeddingStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open embedding store: " + path);
        EmbeddingStore store;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                EmbeddingVector vec;
                vec.values = j.at("vector").get<std::vector<double>>();
                store.insert(j.at("uri").get<std::string>(), std::move(vec));
            } catch (const nlohmann::json::exception& e) {
                throw Error("embedding store line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        return store;
    }

private:
    std::map<std::string, EmbeddingVector> vectors_;
    std::size_t dim_ = 0;
};

struct CategoryPairSimilarity {
    RawDamageCategory category_a;
    RawDamageCategory category_b;
    double mean_cosine = 0.0;
    std::size_t n_pairs = 0;
};

struct SimilarityReport {
    std::vector<CategoryPairSimilarity> pairs;

    const CategoryPairSimilarity* find(RawDamageCategory a, RawDamageCategory b) const {
        for (const auto& row : pairs) {
            if ((row.category_a == a && row.category_b == b) ||
                (row.category_a == b && row.category_b == a)) {
                return &row;
            }
        }
        return nullptr;
    }
};

/// Mean pairwise cosine between two categories' image sets: all cross pairs
/// for distinct categories, all unordered distinct pairs within a category.
/// Accumulation runs in fixed index order so results are bit-stable.
inline CategoryPairSimilarity category_similarity(
    const EmbeddingStore& store,
    const std::map<RawDamageCategory, std::vector<std::string>>& groups, RawDamageCategory a,
    RawDamageCategory b) {
    const auto ga = groups.find(a);
    const auto gb = groups.find(b);
    if (ga == groups.end() || ga->second.empty()) throw EmptyGroup(to_token(a));
    if (gb == groups.end() || gb->second.empty()) throw EmptyGroup(to_token(b));

    CategoryPairSimilarity out;
    out.category_a = a;
    out.category_b = b;
    double acc = 0.0;
    std::size_t n = 0;
    if (a == b) {
        const auto& uris = ga->second;
        if (uris.size() < 2) throw EmptyGroup(to_token(a) + " (needs >= 2 images)");
        for (std::size_t i = 0; i < uris.size(); ++i) {
            for (std::size_t j = i + 1; j < uris.size(); ++j) {
                acc += cosine(store.at(uris[i]), store.at(uris[j]));
                ++n;
            }
        }
    } else {
        for (const auto& ua : ga->second) {
            for (const auto& ub : gb->second) {
                acc += cosine(store.at(ua), store.at(ub));
                ++n;
            }
        }
    }
    out.mean_cosine = acc / static_cast<double>(n);
    out.n_pairs = n;
    return out;
}

struct CategoryMerge {
    RawDamageCategory from;
    RawDamageCategory into;

    bool operator==(const CategoryMerge&) const = default;
};

/// Advisory: merge minor and major into affected when both cross-category
/// means clear the threshold. Empty result means keep the categories apart.
inline std::vector<CategoryMerge> aggregation_recommendation(const SimilarityReport& report,
                                                             double threshold) {
    const auto* am = report.find(RawDamageCategory::Affected, RawDamageCategory::Minor);
    const auto* aj = report.find(RawDamageCategory::Affected, RawDamageCategory::Major);
    if (!am || !aj) {
        throw Error("report lacks the affected-vs-minor / affected-vs-major rows");
    }
    if (am->mean_cosine >= threshold && aj->mean_cosine >= threshold) {
        return {{RawDamageCategory::Minor, RawDamageCategory::Affected},
                {RawDamageCategory::Major, RawDamageCategory::Affected}};
    }
    return {};
}

}  // namespace firescope
