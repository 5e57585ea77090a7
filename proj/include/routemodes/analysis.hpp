#pragma once

// Similarity between routing vectors, routing-mode discovery by
// agglomerative clustering, and change detection over consecutive vectors.

#include "routemodes/core.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace routemodes::analysis {

/// Weighted fraction of networks with the same known catchment in `a` and
/// `b`, over the union of their keys. UNKNOWN never matches, so the
/// self-similarity of a partially observed vector is below 1. Throws
/// DomainError when the union weighs nothing.
double similarity(const Snapshot& a, const Snapshot& b, const WeightVector& weights);

/// Same quantity for two members of a series; the universe is the series'.
double similarity(const SnapshotSeries& series, std::size_t i, std::size_t j, std::span<const double> weights);

struct MatrixOptions {
    /// 0 means std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Networks per block; results do not depend on it when weights sum
    /// exactly.
    std::size_t block = 16384;
};

/// All-pairs similarity over the series universe. Each unordered pair is
/// computed once. Deterministic for any thread count.
SimilarityMatrix similarity_matrix(const SnapshotSeries& series, const WeightVector& weights,
                                   const MatrixOptions& options = {});

// ---------------------------------------------------------------------------
// Clustering

enum class Linkage { Average, Single };

Linkage parse_linkage(std::string_view text);
std::string_view linkage_name(Linkage linkage);

struct Merge {
    std::size_t first = 0;  // surviving representative (lower index)
    std::size_t second = 0; // absorbed representative
    double distance = 0.0;
};

/// Full agglomeration on distance 1 - similarity. Merges are listed in the
/// order the greedy procedure performs them (closest pair first, ties to the
/// lowest indexes), so cutting at any threshold replays a prefix.
class Dendrogram {
public:
    Dendrogram(const SimilarityMatrix& matrix, Linkage linkage = Linkage::Average);

    std::size_t leaves() const noexcept { return leaves_; }
    const std::vector<Merge>& merges() const noexcept { return merges_; }

    /// Replays merges while their distance does not exceed `threshold`.
    /// Distances within 1e-9 of the threshold count as not exceeding it.
    ModeAssignment cut(const std::vector<Timestamp>& times, double threshold) const;

private:
    std::size_t leaves_ = 0;
    std::vector<Merge> merges_;
};

inline constexpr double kThresholdTolerance = 1e-9;

ModeAssignment hac_cluster(const SimilarityMatrix& matrix, double threshold, Linkage linkage = Linkage::Average);

enum class QualifyRule {
    /// fewer than max_modes clusters and the largest has >= min_size members
    LargestCluster,
    /// fewer than max_modes clusters and every cluster has >= min_size members
    EveryCluster
};

QualifyRule parse_qualify_rule(std::string_view text);
std::string_view qualify_rule_name(QualifyRule rule);

struct AdaptiveOptions {
    std::size_t max_modes = 15;
    std::size_t min_size = 2;
    double step = 0.01;
    Linkage linkage = Linkage::Average;
    QualifyRule rule = QualifyRule::EveryCluster;
};

/// Sweeps thresholds 0, step, 2*step, ... 1 and returns the first whose
/// clustering qualifies; 1.0 when none does earlier. Throws DomainError for
/// fewer than two snapshots and ConfigError for a nonpositive step.
double adaptive_threshold(const SimilarityMatrix& matrix, const AdaptiveOptions& options = {});

/// Min and max similarity between members of two clusters, or between
/// distinct members of one cluster when `mode_a == mode_b`.
std::pair<double, double> mode_phi_range(const SimilarityMatrix& matrix, const ModeAssignment& assignment,
                                         ClusterId mode_a, ClusterId mode_b);

// ---------------------------------------------------------------------------
// Change detection

struct DetectOptions {
    std::size_t window = 15;
    double delta = 0.05;
};

struct BoundaryScore {
    Timestamp time = 0; // time of the later snapshot
    double phi = 0.0;
    double baseline = 0.0;
    double score = 0.0;
};

struct ChangeEvent {
    Timestamp time = 0;
    double score = 0.0;

    friend bool operator==(const ChangeEvent&, const ChangeEvent&) = default;
};

/// Scores every consecutive boundary: baseline median of the previous
/// `window` boundary similarities (the first boundary is its own baseline)
/// minus the boundary's similarity.
std::vector<BoundaryScore> boundary_scores(std::span<const Timestamp> times, std::span<const double> consecutive_phi,
                                           std::size_t window);

/// Boundaries whose score exceeds `delta`. Throws DomainError for fewer than
/// two snapshots.
std::vector<ChangeEvent> detect_changes(const SnapshotSeries& series, const WeightVector& weights,
                                        const DetectOptions& options = {});
std::vector<ChangeEvent> detect_changes(const SimilarityMatrix& matrix, const DetectOptions& options = {});

} // namespace routemodes::analysis
