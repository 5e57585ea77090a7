#pragma once

// Cleaning passes over a snapshot series and weight-vector construction.
// Every pass keeps the set of timestamps and the network universe; only
// labels change.

#include "routemodes/core.hpp"
#include "routemodes/net.hpp"

#include <filesystem>
#include <functional>
#include <istream>
#include <set>

namespace routemodes::prep {

using RejectPredicate = std::function<bool(const NetworkId&, const CatchmentLabel&)>;

/// Observations accepted by `reject` become UNKNOWN.
SnapshotSeries remove_incorrect(const SnapshotSeries& series, const RejectPredicate& reject);

/// Relabels to OTHER every site whose largest weighted share in any single
/// snapshot is below `min_share`. Throws ConfigError unless 0 <= min_share < 1.
SnapshotSeries drop_micro_catchments(const SnapshotSeries& series, const WeightVector& weights, double min_share);

/// Nearest-neighbour fill of UNKNOWN runs that sit strictly between two known
/// observations of the same network. The first half of a run copies the left
/// neighbour and the second half the right one (an odd middle goes left). A
/// run is filled only when every position is within `max_gap` observations
/// of its neighbour; longer runs stay UNKNOWN so the pass is idempotent.
SnapshotSeries interpolate_missing(const SnapshotSeries& series, int max_gap = 3);

/// Per-network form of interpolate_missing over raw codes (kUnknownCode is
/// missing). Exposed for testing.
void interpolate_row(std::span<LabelCode> row, int max_gap);

/// Splits each coverage prefix's /24 count evenly among the observed keys it
/// contains; other keys weigh 1. Throws ConfigError on overlapping coverage.
WeightVector expand_prefix_weights(const std::set<NetworkId>& observed, std::span<const Ipv4Prefix> coverage);

/// `network,weight` rows. Throws ParseError on malformed or negative weights.
WeightVector load_traffic_weights(const std::filesystem::path& path);
WeightVector read_traffic_weights(std::istream& in);

} // namespace routemodes::prep
