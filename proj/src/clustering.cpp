#include "routemodes/analysis.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace routemodes::analysis {

Linkage parse_linkage(std::string_view raw)
{
    const auto t = text::to_lower(text::trim(raw));
    if (t == "average") {
        return Linkage::Average;
    }
    if (t == "single") {
        return Linkage::Single;
    }
    throw ConfigError("unknown linkage '" + std::string(raw) + "' (expected average or single)");
}

std::string_view linkage_name(Linkage linkage)
{
    return linkage == Linkage::Average ? "average" : "single";
}

QualifyRule parse_qualify_rule(std::string_view raw)
{
    const auto t = text::to_lower(text::trim(raw));
    if (t == "largest") {
        return QualifyRule::LargestCluster;
    }
    if (t == "every") {
        return QualifyRule::EveryCluster;
    }
    throw ConfigError("unknown qualifying rule '" + std::string(raw) + "' (expected largest or every)");
}

std::string_view qualify_rule_name(QualifyRule rule)
{
    return rule == QualifyRule::LargestCluster ? "largest" : "every";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1)
    {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns the size of the merged set.
    std::size_t unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b) {
            return size_[a];
        }
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        return size_[a];
    }

    std::size_t size_of(std::size_t x) { return size_[find(x)]; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

/// Labels clusters 0, 1, ... in order of their earliest member.
std::vector<ClusterId> label_by_first_member(UnionFind& uf, std::size_t n)
{
    std::vector<ClusterId> out(n);
    std::vector<ClusterId> id_of_root(n, std::numeric_limits<ClusterId>::max());
    ClusterId next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = uf.find(i);
        if (id_of_root[root] == std::numeric_limits<ClusterId>::max()) {
            id_of_root[root] = next++;
        }
        out[i] = id_of_root[root];
    }
    return out;
}

bool within(double distance, double threshold)
{
    return distance <= threshold + kThresholdTolerance;
}

} // namespace

Dendrogram::Dendrogram(const SimilarityMatrix& matrix, Linkage linkage) : leaves_(matrix.size())
{
    const auto n = leaves_;
    if (n < 2) {
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (matrix.at(i, j) != matrix.at(j, i)) {
                throw ConfigError("similarity matrix is not symmetric");
            }
        }
    }

    std::vector<double> dist(n * n, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                dist[i * n + j] = 1.0 - matrix.at(i, j);
            }
        }
    }
    const auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * n + j]; };

    std::vector<bool> active(n, true);
    std::vector<std::size_t> size(n, 1);
    std::vector<std::size_t> nn(n, 0);
    std::vector<double> nn_dist(n, kInf);

    // nearest active neighbour of i, ties to the lowest index
    const auto rescan = [&](std::size_t i) {
        nn_dist[i] = kInf;
        nn[i] = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && active[j] && d(i, j) < nn_dist[i]) {
                nn_dist[i] = d(i, j);
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        rescan(i);
    }

    merges_.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (active[i] && (best == n || nn_dist[i] < nn_dist[best])) {
                best = i;
            }
        }
        const std::size_t a = std::min(best, nn[best]);
        const std::size_t b = std::max(best, nn[best]);
        merges_.push_back({a, b, nn_dist[best]});

        const double sa = static_cast<double>(size[a]);
        const double sb = static_cast<double>(size[b]);
        active[b] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) {
                continue;
            }
            double merged = 0.0;
            if (linkage == Linkage::Average) {
                merged = (sa * d(a, k) + sb * d(b, k)) / (sa + sb);
            } else {
                merged = std::min(d(a, k), d(b, k));
            }
            d(a, k) = merged;
            d(k, a) = merged;
        }
        size[a] += size[b];

        rescan(a);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) {
                continue;
            }
            if (nn[k] == a || nn[k] == b) {
                rescan(k);
            } else if (d(k, a) < nn_dist[k] || (d(k, a) == nn_dist[k] && a < nn[k])) {
                nn_dist[k] = d(k, a);
                nn[k] = a;
            }
        }
    }
}

ModeAssignment Dendrogram::cut(const std::vector<Timestamp>& times, double threshold) const
{
    if (times.size() != leaves_) {
        throw ConfigError("cut needs one timestamp per leaf");
    }
    UnionFind uf(leaves_);
    for (const auto& m : merges_) {
        if (!within(m.distance, threshold)) {
            break;
        }
        uf.unite(m.first, m.second);
    }
    ModeAssignment out;
    out.times = times;
    out.threshold = threshold;
    out.cluster_of = label_by_first_member(uf, leaves_);
    std::vector<std::size_t> counts(out.cluster_count(), 0);
    for (const auto c : out.cluster_of) {
        ++counts[c];
    }
    for (ClusterId c = 0; c < counts.size(); ++c) {
        if (counts[c] >= 2) {
            out.mode_ids.push_back(c);
        }
    }
    return out;
}

ModeAssignment hac_cluster(const SimilarityMatrix& matrix, double threshold, Linkage linkage)
{
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("threshold must be in [0, 1]");
    }
    return Dendrogram(matrix, linkage).cut(matrix.times(), threshold);
}

double adaptive_threshold(const SimilarityMatrix& matrix, const AdaptiveOptions& options)
{
    const auto n = matrix.size();
    if (n < 2) {
        throw DomainError("adaptive threshold needs at least two snapshots");
    }
    if (!(options.step > 0.0)) {
        throw ConfigError("threshold step must be positive");
    }
    const Dendrogram dendrogram(matrix, options.linkage);
    const auto& merges = dendrogram.merges();

    UnionFind uf(n);
    std::size_t clusters = n;
    std::size_t largest = 1;
    std::size_t below_min = options.min_size > 1 ? n : 0; // clusters smaller than min_size
    std::size_t applied = 0;

    const auto qualifies = [&] {
        if (clusters >= options.max_modes) {
            return false;
        }
        if (options.rule == QualifyRule::LargestCluster) {
            return largest >= options.min_size;
        }
        return below_min == 0;
    };

    const auto steps = static_cast<std::size_t>(std::floor(1.0 / options.step + 1e-9));
    for (std::size_t k = 0; k <= steps + 1; ++k) {
        // k*step rounded to the step's precision; the final pass is always 1.0
        double threshold = k > steps ? 1.0 : std::round(static_cast<double>(k) * options.step * 1e9) / 1e9;
        threshold = std::min(threshold, 1.0);
        while (applied < merges.size() && within(merges[applied].distance, threshold)) {
            const auto& m = merges[applied++];
            const auto sa = uf.size_of(m.first);
            const auto sb = uf.size_of(m.second);
            const auto merged = uf.unite(m.first, m.second);
            --clusters;
            largest = std::max(largest, merged);
            below_min -= (sa < options.min_size) + (sb < options.min_size);
            below_min += merged < options.min_size;
        }
        if (qualifies()) {
            return threshold;
        }
    }
    return 1.0;
}

std::pair<double, double> mode_phi_range(const SimilarityMatrix& matrix, const ModeAssignment& assignment,
                                         ClusterId mode_a, ClusterId mode_b)
{
    if (assignment.cluster_of.size() != matrix.size()) {
        throw ConfigError("assignment does not match the matrix");
    }
    const auto a = assignment.members(mode_a);
    const auto b = assignment.members(mode_b);
    if (a.empty() || b.empty()) {
        throw DomainError("cluster id does not exist");
    }
    double lo = kInf;
    double hi = -kInf;
    for (const auto i : a) {
        for (const auto j : b) {
            if (mode_a == mode_b && j <= i) {
                continue;
            }
            lo = std::min(lo, matrix.at(i, j));
            hi = std::max(hi, matrix.at(i, j));
        }
    }
    if (lo == kInf) {
        throw DomainError("a single-member cluster has no internal similarity range");
    }
    return {lo, hi};
}

} // namespace routemodes::analysis
