#pragma once

// Ground-truth comparison and synthetic scenarios with planted routing
// changes.

#include "routemodes/core.hpp"

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace routemodes::eval {

struct EventGroup {
    Timestamp start = 0;
    Timestamp end = 0;
    std::string op;
    Visibility visibility = Visibility::Internal;
    std::vector<GroundTruthEvent> members;

    bool external() const { return is_external(visibility); }
};

/// Chains each operator's time-sorted events while consecutive gaps are at
/// most `window_minutes`. Groups are ordered by start time, then operator.
/// A group is external when any member is (drain outranks traffic
/// engineering).
std::vector<EventGroup> group_events(std::span<const GroundTruthEvent> log, int window_minutes = 10);

struct ScoreOptions {
    int match_window_minutes = 10;
    /// Count detections that match no group as false positives.
    bool strict = false;
};

struct ConfusionReport {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t extra = 0; // detections matching no group
    double accuracy = 1.0;
    double recall = 1.0;
    double precision = 1.0;

    /// `tp=.. fn=.. tn=.. fp=.. extra=.. recall=.. accuracy=.. precision=..`
    std::string summary() const;
};

/// Fills the three rates from the counts; a zero denominator gives 1.0.
void compute_rates(ConfusionReport& report);

/// A group is detected when a detection falls within the match window of
/// [start, end]. External groups score TP/FN, internal ones FP/TN.
ConfusionReport score_detections(std::span<const Timestamp> detections, std::span<const EventGroup> groups,
                                 const ScoreOptions& options = {});

/// `time,operator,visibility` rows.
std::vector<GroundTruthEvent> read_ground_truth(std::istream& in);
std::vector<GroundTruthEvent> load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(std::ostream& out, std::span<const GroundTruthEvent> events);

// ---------------------------------------------------------------------------
// Scenario generation

struct SegmentSpec {
    std::size_t length = 1; // snapshots
    /// Fraction of networks moved to a different site when this segment
    /// starts (ignored for the first segment).
    double reassign = 1.0;
};

struct DrainSpec {
    std::size_t at = 0; // snapshot index where the drain starts
    std::string site;
    std::vector<std::pair<std::string, double>> to; // destination sites and relative shares
    std::size_t duration = 0;                       // snapshots; 0 lasts to the end
};

/// Scenario document, schema version 1 (JSON):
///
///   { "version": 1, "networks": 10000, "sites": ["LAX", "MIA"],
///     "site_shares": [0.7, 0.3], "start": 1700000000, "interval": 240,
///     "segments": [{"length": 20}, {"length": 20, "reassign": 0.6}],
///     "churn": 0.01, "unknown": 0.1, "unknown_persistence": 0.0,
///     "drains": [{"at": 5, "site": "LAX", "to": {"MIA": 1.0}, "duration": 3}],
///     "operator": "synthetic" }
///
/// `churn` is the expected fraction of networks whose label changes across a
/// boundary inside a segment: each snapshot shows a network at a random other
/// site with probability churn/2, independently, so the mode itself does
/// not drift. `unknown` is the per-snapshot UNKNOWN fraction;
/// `unknown_persistence` is the probability a network keeps its previous
/// observed/unobserved state (1 gives a fixed non-responsive population).
struct ScenarioSpec {
    int version = 1;
    std::size_t networks = 0;
    std::vector<std::string> sites;
    std::vector<double> site_shares; // empty = uniform
    Timestamp start = 1'700'000'000;
    Timestamp interval = 240;
    std::vector<SegmentSpec> segments;
    double churn = 0.0;
    double unknown = 0.0;
    double unknown_persistence = 0.0;
    std::vector<DrainSpec> drains;
    std::string op = "synthetic";

    std::size_t snapshot_count() const;
    /// Throws ConfigError when any field is out of range.
    void validate() const;
};

ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario(const std::filesystem::path& path);
std::string scenario_json(const ScenarioSpec& spec);

struct Scenario {
    SnapshotSeries series;
    std::vector<GroundTruthEvent> events;
    /// Segment index per snapshot, the planted mode labels.
    std::vector<std::size_t> segment_of;
};

/// Network keys are consecutive /24 prefixes starting at 1.0.0.0/24.
NetworkId scenario_network_key(std::size_t index);

/// Deterministic for a given (spec, seed).
Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed);

} // namespace routemodes::eval
