#pragma once

// Domain types shared by every routemodes module.
//
// A routing vector ("snapshot") maps each observed network to the catchment
// it reached at one instant. Series of snapshots are stored densely: the
// network universe is interned once and every snapshot is a vector of label
// codes indexed by network position, which keeps multi-million network
// studies within a few hundred megabytes.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace routemodes {

/// UTC epoch seconds.
using Timestamp = std::int64_t;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateEntryError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// Invalid rules, prefixes, parameters or study configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation has no defined result for its input (zero total weight,
/// empty sample set, undefined range).
class DomainError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Labels and keys

enum class LabelKind : std::uint8_t { Site, Unknown, Error, Other };

class CatchmentLabel {
public:
    CatchmentLabel() = default; // UNKNOWN

    static CatchmentLabel site(std::string_view name);
    static CatchmentLabel unknown() { return {}; }
    static CatchmentLabel error() { return CatchmentLabel(LabelKind::Error, {}); }
    static CatchmentLabel other() { return CatchmentLabel(LabelKind::Other, {}); }

    /// Parses label text: "unknown", "error" and "other" (any case) are the
    /// reserved states, anything else is a site name. Empty text is UNKNOWN.
    static CatchmentLabel parse(std::string_view text);

    LabelKind kind() const noexcept { return kind_; }
    /// Normalized site name; empty for reserved labels.
    const std::string& name() const noexcept { return name_; }
    bool is_site() const noexcept { return kind_ == LabelKind::Site; }
    bool is_unknown() const noexcept { return kind_ == LabelKind::Unknown; }
    bool is_reserved() const noexcept { return kind_ != LabelKind::Site; }

    /// Inverse of parse(): the site name or the reserved word.
    std::string text() const;

    friend bool operator==(const CatchmentLabel&, const CatchmentLabel&) = default;
    friend std::strong_ordering operator<=>(const CatchmentLabel&, const CatchmentLabel&) = default;

private:
    CatchmentLabel(LabelKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

    LabelKind kind_ = LabelKind::Unknown;
    std::string name_;
};

/// Trims surrounding whitespace and upper-cases ASCII letters.
std::string normalize_site_name(std::string_view name);

/// Display order for label axes: sites by name, then ERROR, OTHER, UNKNOWN.
bool display_order_less(const CatchmentLabel& a, const CatchmentLabel& b);

struct NetworkId {
    std::string key;

    NetworkId() = default;
    NetworkId(std::string k) : key(std::move(k)) {}
    NetworkId(const char* k) : key(k) {}

    friend bool operator==(const NetworkId&, const NetworkId&) = default;
    friend std::strong_ordering operator<=>(const NetworkId&, const NetworkId&) = default;
};

struct NetworkIdHash {
    std::size_t operator()(const NetworkId& id) const noexcept { return std::hash<std::string>{}(id.key); }
};

// ---------------------------------------------------------------------------
// Snapshot (keyed form)

/// One routing vector. Networks absent from `entries` are UNKNOWN.
struct Snapshot {
    Timestamp time = 0;
    std::map<NetworkId, CatchmentLabel> entries;

    CatchmentLabel label_of(const NetworkId& id) const;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// ---------------------------------------------------------------------------
// Weights

/// Per-network importance; networks without an entry weigh 1.0.
class WeightVector {
public:
    WeightVector() = default;

    /// Throws DomainError for negative or non-finite weights.
    void set(const NetworkId& id, double weight);
    double weight(const NetworkId& id) const;
    bool contains(const NetworkId& id) const { return weights_.contains(id); }
    std::size_t size() const noexcept { return weights_.size(); }
    bool empty() const noexcept { return weights_.empty(); }

    /// Entries sorted by key, for stable serialization.
    std::vector<std::pair<NetworkId, double>> sorted_entries() const;

    WeightVector scaled(double factor) const;

private:
    std::unordered_map<NetworkId, double, NetworkIdHash> weights_;
};

// ---------------------------------------------------------------------------
// Dense series

using LabelCode = std::uint32_t;
/// Code 0 is always UNKNOWN in every LabelTable.
inline constexpr LabelCode kUnknownCode = 0;

/// Interning table for catchment labels.
class LabelTable {
public:
    LabelTable();

    LabelCode intern(const CatchmentLabel& label);
    std::optional<LabelCode> find(const CatchmentLabel& label) const;
    const CatchmentLabel& label(LabelCode code) const { return labels_.at(code); }
    std::size_t size() const noexcept { return labels_.size(); }

private:
    std::vector<CatchmentLabel> labels_;
    std::map<CatchmentLabel, LabelCode> codes_;
};

/// Interned set of network keys; position order is insertion order.
class NetworkUniverse {
public:
    std::size_t intern(const NetworkId& id);
    std::optional<std::size_t> find(const NetworkId& id) const;
    const NetworkId& at(std::size_t index) const { return keys_.at(index); }
    std::size_t size() const noexcept { return keys_.size(); }
    void reserve(std::size_t n);

private:
    std::vector<NetworkId> keys_;
    std::unordered_map<NetworkId, std::size_t, NetworkIdHash> index_;
};

/// Time-ordered snapshots over a shared network universe.
///
/// Invariants: times strictly increasing; every code row has one code per
/// universe network; every code is valid in `labels()`. Immutable once
/// built; transformations return new series sharing the universe.
class SnapshotSeries {
public:
    SnapshotSeries() : universe_(std::make_shared<NetworkUniverse>()) {}
    SnapshotSeries(std::shared_ptr<const NetworkUniverse> universe, LabelTable labels,
                   std::vector<Timestamp> times, std::vector<std::vector<LabelCode>> codes);

    /// Encodes keyed snapshots; the universe is the union of their keys.
    /// Throws DuplicateEntryError when two snapshots share a timestamp.
    static SnapshotSeries from_snapshots(std::span<const Snapshot> snapshots);

    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    std::size_t network_count() const noexcept { return universe_->size(); }

    Timestamp time(std::size_t i) const { return times_.at(i); }
    const std::vector<Timestamp>& times() const noexcept { return times_; }
    std::span<const LabelCode> codes(std::size_t i) const { return codes_.at(i); }
    const std::vector<std::vector<LabelCode>>& all_codes() const noexcept { return codes_; }

    const NetworkUniverse& universe() const noexcept { return *universe_; }
    const std::shared_ptr<const NetworkUniverse>& shared_universe() const noexcept { return universe_; }
    const LabelTable& labels() const noexcept { return labels_; }

    const CatchmentLabel& label_at(std::size_t snapshot, std::size_t network) const {
        return labels_.label(codes_.at(snapshot).at(network));
    }

    /// Keyed view of one snapshot; UNKNOWN networks are omitted.
    Snapshot snapshot(std::size_t i) const;
    std::vector<Snapshot> to_snapshots() const;

    /// Weight per universe position.
    std::vector<double> dense_weights(const WeightVector& weights) const;

    friend bool operator==(const SnapshotSeries& a, const SnapshotSeries& b);

private:
    std::shared_ptr<const NetworkUniverse> universe_;
    LabelTable labels_;
    std::vector<Timestamp> times_;
    std::vector<std::vector<LabelCode>> codes_;
};

/// Incremental construction of a SnapshotSeries from (time, network, label)
/// observations in any order.
class SeriesBuilder {
public:
    /// Repeated (time, network) pairs are reported by build().
    void add(Timestamp time, const NetworkId& network, const CatchmentLabel& label);
    /// Registers a network without observing it (it stays UNKNOWN everywhere
    /// unless observed).
    void add_network(const NetworkId& network);
    /// Registers an observation time with no entries.
    void add_time(Timestamp time);
    void reserve_networks(std::size_t n);

    /// Throws DuplicateEntryError when a (time, network) pair was added twice.
    SnapshotSeries build() &&;

private:
    std::shared_ptr<NetworkUniverse> universe_ = std::make_shared<NetworkUniverse>();
    LabelTable labels_;
    std::map<Timestamp, std::vector<std::pair<std::size_t, LabelCode>>> rows_;
};

// ---------------------------------------------------------------------------
// Derived quantities

/// A(t, s): total weight per label at one time.
struct AggregateVector {
    Timestamp time = 0;
    std::map<CatchmentLabel, double> counts;

    double count(const CatchmentLabel& label) const;
    double total() const;
};

/// Symmetric all-pairs similarity matrix over a series.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::vector<Timestamp> times, std::vector<double> values);

    std::size_t size() const noexcept { return times_.size(); }
    const std::vector<Timestamp>& times() const noexcept { return times_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * times_.size() + j]; }
    const std::vector<double>& values() const noexcept { return values_; }

    double min_value() const;
    double max_value() const;

    friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;

private:
    std::vector<Timestamp> times_;
    std::vector<double> values_; // row-major, size()*size()
};

/// T(t, t', s, s'): weight moving from label s at `from_time` to s' at `to_time`.
struct TransitionMatrix {
    Timestamp from_time = 0;
    Timestamp to_time = 0;
    std::vector<CatchmentLabel> labels;
    std::vector<std::vector<double>> cells; // [from][to]

    /// Index of `label` on the axis, or nullopt.
    std::optional<std::size_t> index_of(const CatchmentLabel& label) const;
    double cell(const CatchmentLabel& from, const CatchmentLabel& to) const;
    double row_sum(std::size_t i) const;
    double column_sum(std::size_t j) const;
    double total() const;
};

using ClusterId = std::size_t;

/// Result of clustering a similarity matrix into routing modes.
struct ModeAssignment {
    std::vector<Timestamp> times;
    std::vector<ClusterId> cluster_of; // parallel to `times`
    double threshold = 0.0;
    std::vector<ClusterId> mode_ids; // clusters with >= 2 members, ascending

    std::size_t cluster_count() const;
    std::vector<std::size_t> members(ClusterId id) const;
    bool is_mode(ClusterId id) const;
};

struct LatencySample {
    NetworkId network;
    Timestamp time = 0;
    double rtt_ms = 0.0;
    CatchmentLabel catchment;
};

enum class Visibility : std::uint8_t { Internal, Drain, TrafficEngineering };

bool is_external(Visibility v);
std::string_view visibility_text(Visibility v);
/// Accepts "internal", "drain", "te" (case-insensitive).
Visibility parse_visibility(std::string_view text);

struct GroundTruthEvent {
    Timestamp time = 0;
    std::string op; // operator identifier
    Visibility visibility = Visibility::Internal;

    friend bool operator==(const GroundTruthEvent&, const GroundTruthEvent&) = default;
};

} // namespace routemodes
