#pragma once

// SVG figures, text tables and canonical data files.

#include "routemodes/core.hpp"

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <utility>

namespace routemodes::report {

/// 0 (black) at `hi` to 255 (white) at `lo`; `lo == hi` gives 0.
int heatmap_gray(double phi, double lo, double hi);

/// Square grid of Φ cells shaded by heatmap_gray over the matrix's own
/// range, with date axes and a legend recording the range. When `modes` is
/// given, cluster changes along the time axis get tick marks.
std::string render_heatmap(const SimilarityMatrix& matrix, const ModeAssignment* modes = nullptr);

/// Band order for a stack plot: labels from `preferred` first, then the
/// remaining sites by descending mean count (ties by name), then ERROR,
/// OTHER, UNKNOWN. Labels with zero count everywhere are dropped.
std::vector<CatchmentLabel> stack_order(std::span<const AggregateVector> series,
                                        std::span<const CatchmentLabel> preferred = {});

/// Stacked areas over time, one `<polygon data-label="...">` per band.
std::string render_stackplot(std::span<const AggregateVector> series,
                             std::span<const CatchmentLabel> preferred = {});

struct SankeyLink {
    std::string source;
    std::string target;
    double value = 0.0;

    friend bool operator==(const SankeyLink&, const SankeyLink&) = default;
};

using HopSnapshot = std::pair<int, Snapshot>;

/// Links between consecutive hop levels; nodes are named `label_hop`. Hop
/// indices must increase and every level must cover the same networks
/// (ConfigError otherwise). Zero links are omitted.
std::vector<SankeyLink> sankey_links(std::span<const HopSnapshot> hops, const WeightVector& weights);
/// `source_node,target_node,value` rows.
void write_sankey(std::ostream& out, std::span<const SankeyLink> links);

/// Canonical `time,network,label` rows ordered by time, then network key.
/// The series form writes every universe network, UNKNOWN included.
void write_snapshots(std::ostream& out, const SnapshotSeries& series);
void write_snapshots(std::ostream& out, std::span<const Snapshot> snapshots);
void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series);

/// Aligned text table with a totals row and column. Off-diagonal cells at
/// or above `highlight` are flagged with `*`; zero cells never are.
std::string render_transition_table(const TransitionMatrix& matrix, double highlight);

/// `time,<t0>,<t1>,...` header, then one row per time. Negative `decimals`
/// writes exact values that read back bit for bit.
void write_matrix(std::ostream& out, const SimilarityMatrix& matrix, int decimals = 4);
SimilarityMatrix read_matrix(std::istream& in);

} // namespace routemodes::report
