#pragma once

// Catchment sizes, transition matrices and latency summaries.

#include "routemodes/core.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <utility>

namespace routemodes::quantify {

/// Weighted count per label. The UNKNOWN bucket is always present.
AggregateVector aggregate(const Snapshot& snapshot, const WeightVector& weights);
/// Same over the series universe: networks absent at time i are UNKNOWN.
AggregateVector aggregate(const SnapshotSeries& series, std::size_t i, const WeightVector& weights);
std::vector<AggregateVector> aggregate_all(const SnapshotSeries& series, const WeightVector& weights);

/// Weight moving between labels from `a` to `b` over the union of their
/// keys. The label axis holds every label seen in either snapshot, in
/// display order.
TransitionMatrix transition_matrix(const Snapshot& a, const Snapshot& b, const WeightVector& weights);
TransitionMatrix transition_matrix(const SnapshotSeries& series, std::size_t i, std::size_t j,
                                   const WeightVector& weights);

/// Weighted mean RTT over the sampled networks. A network sampled twice
/// keeps its later sample. Throws DomainError for no samples or zero weight.
double weighted_mean_latency(std::span<const LatencySample> samples, const WeightVector& weights);

using PercentileTable = std::map<std::pair<Timestamp, CatchmentLabel>, double>;

/// Nearest-rank percentile of RTT per (time, catchment). Throws ConfigError
/// unless 0 < percentile <= 100.
PercentileTable per_catchment_percentile(std::span<const LatencySample> samples, double percentile = 90.0);

/// `time,network,rtt_ms,label` rows.
std::vector<LatencySample> read_latency_samples(std::istream& in);
std::vector<LatencySample> load_latency_samples(const std::filesystem::path& path);

} // namespace routemodes::quantify
