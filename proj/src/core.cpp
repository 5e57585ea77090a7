#include "routemodes/core.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace routemodes {

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

// ---------------------------------------------------------------------------

std::string normalize_site_name(std::string_view name)
{
    std::string out(text::trim(name));
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') {
            c = static_cast<char>(c - 'a' + 'A');
        }
    }
    return out;
}

CatchmentLabel CatchmentLabel::site(std::string_view name)
{
    auto normalized = normalize_site_name(name);
    if (normalized.empty()) {
        throw ConfigError("site label needs a nonempty name");
    }
    return CatchmentLabel(LabelKind::Site, std::move(normalized));
}

CatchmentLabel CatchmentLabel::parse(std::string_view raw)
{
    const auto t = text::trim(raw);
    if (t.empty()) {
        return unknown();
    }
    const auto lower = text::to_lower(t);
    if (lower == "unknown") {
        return unknown();
    }
    if (lower == "error") {
        return error();
    }
    if (lower == "other") {
        return other();
    }
    return site(t);
}

std::string CatchmentLabel::text() const
{
    switch (kind_) {
    case LabelKind::Site:
        return name_;
    case LabelKind::Unknown:
        return "unknown";
    case LabelKind::Error:
        return "error";
    case LabelKind::Other:
        return "other";
    }
    return "unknown";
}

bool display_order_less(const CatchmentLabel& a, const CatchmentLabel& b)
{
    const auto rank = [](LabelKind k) {
        switch (k) {
        case LabelKind::Site:
            return 0;
        case LabelKind::Error:
            return 1;
        case LabelKind::Other:
            return 2;
        case LabelKind::Unknown:
            return 3;
        }
        return 3;
    };
    if (rank(a.kind()) != rank(b.kind())) {
        return rank(a.kind()) < rank(b.kind());
    }
    return a.name() < b.name();
}

CatchmentLabel Snapshot::label_of(const NetworkId& id) const
{
    const auto it = entries.find(id);
    return it == entries.end() ? CatchmentLabel::unknown() : it->second;
}

// ---------------------------------------------------------------------------

void WeightVector::set(const NetworkId& id, double weight)
{
    if (!std::isfinite(weight) || weight < 0.0) {
        throw DomainError("weight for '" + id.key + "' must be finite and nonnegative");
    }
    weights_[id] = weight;
}

double WeightVector::weight(const NetworkId& id) const
{
    const auto it = weights_.find(id);
    return it == weights_.end() ? 1.0 : it->second;
}

std::vector<std::pair<NetworkId, double>> WeightVector::sorted_entries() const
{
    std::vector<std::pair<NetworkId, double>> out(weights_.begin(), weights_.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

WeightVector WeightVector::scaled(double factor) const
{
    WeightVector out;
    for (const auto& [id, w] : weights_) {
        out.set(id, w * factor);
    }
    return out;
}

// ---------------------------------------------------------------------------

LabelTable::LabelTable()
{
    labels_.push_back(CatchmentLabel::unknown());
    codes_.emplace(CatchmentLabel::unknown(), kUnknownCode);
}

LabelCode LabelTable::intern(const CatchmentLabel& label)
{
    const auto it = codes_.find(label);
    if (it != codes_.end()) {
        return it->second;
    }
    const auto code = static_cast<LabelCode>(labels_.size());
    labels_.push_back(label);
    codes_.emplace(label, code);
    return code;
}

std::optional<LabelCode> LabelTable::find(const CatchmentLabel& label) const
{
    const auto it = codes_.find(label);
    if (it == codes_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t NetworkUniverse::intern(const NetworkId& id)
{
    const auto [it, inserted] = index_.try_emplace(id, keys_.size());
    if (inserted) {
        keys_.push_back(id);
    }
    return it->second;
}

std::optional<std::size_t> NetworkUniverse::find(const NetworkId& id) const
{
    const auto it = index_.find(id);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void NetworkUniverse::reserve(std::size_t n)
{
    keys_.reserve(n);
    index_.reserve(n);
}

// ---------------------------------------------------------------------------

SnapshotSeries::SnapshotSeries(std::shared_ptr<const NetworkUniverse> universe, LabelTable labels,
                               std::vector<Timestamp> times, std::vector<std::vector<LabelCode>> codes)
    : universe_(std::move(universe)), labels_(std::move(labels)), times_(std::move(times)), codes_(std::move(codes))
{
    if (!universe_) {
        throw ConfigError("series needs a network universe");
    }
    if (times_.size() != codes_.size()) {
        throw ConfigError("series has " + std::to_string(times_.size()) + " times but " +
                          std::to_string(codes_.size()) + " code rows");
    }
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (times_[i] <= times_[i - 1]) {
            throw ConfigError("series times must be strictly increasing");
        }
    }
    const auto n = universe_->size();
    const auto label_count = labels_.size();
    for (const auto& row : codes_) {
        if (row.size() != n) {
            throw ConfigError("code row length does not match the network universe");
        }
        for (const auto code : row) {
            if (code >= label_count) {
                throw ConfigError("label code out of range");
            }
        }
    }
}

SnapshotSeries SnapshotSeries::from_snapshots(std::span<const Snapshot> snapshots)
{
    SeriesBuilder builder;
    for (const auto& s : snapshots) {
        builder.add_time(s.time);
    }
    std::map<Timestamp, int> seen;
    for (const auto& s : snapshots) {
        if (++seen[s.time] > 1) {
            throw DuplicateEntryError("two snapshots at time " + std::to_string(s.time));
        }
        for (const auto& [id, label] : s.entries) {
            builder.add(s.time, id, label);
        }
    }
    return std::move(builder).build();
}

Snapshot SnapshotSeries::snapshot(std::size_t i) const
{
    Snapshot out;
    out.time = times_.at(i);
    const auto& row = codes_.at(i);
    for (std::size_t n = 0; n < row.size(); ++n) {
        if (row[n] != kUnknownCode) {
            out.entries.emplace(universe_->at(n), labels_.label(row[n]));
        }
    }
    return out;
}

std::vector<Snapshot> SnapshotSeries::to_snapshots() const
{
    std::vector<Snapshot> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out.push_back(snapshot(i));
    }
    return out;
}

std::vector<double> SnapshotSeries::dense_weights(const WeightVector& weights) const
{
    std::vector<double> out(universe_->size(), 1.0);
    if (weights.empty()) {
        return out;
    }
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = weights.weight(universe_->at(n));
    }
    return out;
}

bool operator==(const SnapshotSeries& a, const SnapshotSeries& b)
{
    if (a.times_ != b.times_ || a.network_count() != b.network_count()) {
        return false;
    }
    for (std::size_t n = 0; n < a.network_count(); ++n) {
        if (!b.universe_->find(a.universe_->at(n))) {
            return false;
        }
    }
    // Compare by content: universes and label tables may differ in order.
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.snapshot(i) != b.snapshot(i)) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------

void SeriesBuilder::add(Timestamp time, const NetworkId& network, const CatchmentLabel& label)
{
    const auto n = universe_->intern(network);
    const auto code = labels_.intern(label);
    rows_[time].emplace_back(n, code);
}

void SeriesBuilder::add_network(const NetworkId& network)
{
    universe_->intern(network);
}

void SeriesBuilder::add_time(Timestamp time)
{
    rows_[time];
}

void SeriesBuilder::reserve_networks(std::size_t n)
{
    universe_->reserve(n);
}

SnapshotSeries SeriesBuilder::build() &&
{
    const auto n = universe_->size();
    std::vector<Timestamp> times;
    std::vector<std::vector<LabelCode>> codes;
    times.reserve(rows_.size());
    codes.reserve(rows_.size());
    std::vector<std::uint8_t> seen(n);
    for (auto& [time, row] : rows_) {
        std::vector<LabelCode> dense(n, kUnknownCode);
        std::fill(seen.begin(), seen.end(), 0);
        for (const auto& [index, code] : row) {
            if (seen[index]) {
                throw DuplicateEntryError("network '" + universe_->at(index).key + "' observed twice at time " +
                                          std::to_string(time));
            }
            seen[index] = 1;
            dense[index] = code;
        }
        times.push_back(time);
        codes.push_back(std::move(dense));
        row.clear();
        row.shrink_to_fit();
    }
    return SnapshotSeries(std::move(universe_), std::move(labels_), std::move(times), std::move(codes));
}

// ---------------------------------------------------------------------------

double AggregateVector::count(const CatchmentLabel& label) const
{
    const auto it = counts.find(label);
    return it == counts.end() ? 0.0 : it->second;
}

double AggregateVector::total() const
{
    double sum = 0.0;
    for (const auto& [label, c] : counts) {
        sum += c;
    }
    return sum;
}

SimilarityMatrix::SimilarityMatrix(std::vector<Timestamp> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values))
{
    if (values_.size() != times_.size() * times_.size()) {
        throw ConfigError("similarity matrix values do not match its size");
    }
}

double SimilarityMatrix::min_value() const
{
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double SimilarityMatrix::max_value() const
{
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

std::optional<std::size_t> TransitionMatrix::index_of(const CatchmentLabel& label) const
{
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - labels.begin());
}

double TransitionMatrix::cell(const CatchmentLabel& from, const CatchmentLabel& to) const
{
    const auto i = index_of(from);
    const auto j = index_of(to);
    if (!i || !j) {
        return 0.0;
    }
    return cells[*i][*j];
}

double TransitionMatrix::row_sum(std::size_t i) const
{
    return std::accumulate(cells.at(i).begin(), cells.at(i).end(), 0.0);
}

double TransitionMatrix::column_sum(std::size_t j) const
{
    double sum = 0.0;
    for (const auto& row : cells) {
        sum += row.at(j);
    }
    return sum;
}

double TransitionMatrix::total() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        sum += row_sum(i);
    }
    return sum;
}

std::size_t ModeAssignment::cluster_count() const
{
    if (cluster_of.empty()) {
        return 0;
    }
    return *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
}

std::vector<std::size_t> ModeAssignment::members(ClusterId id) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cluster_of.size(); ++i) {
        if (cluster_of[i] == id) {
            out.push_back(i);
        }
    }
    return out;
}

bool ModeAssignment::is_mode(ClusterId id) const
{
    return std::binary_search(mode_ids.begin(), mode_ids.end(), id);
}

bool is_external(Visibility v)
{
    return v != Visibility::Internal;
}

std::string_view visibility_text(Visibility v)
{
    switch (v) {
    case Visibility::Internal:
        return "internal";
    case Visibility::Drain:
        return "drain";
    case Visibility::TrafficEngineering:
        return "te";
    }
    return "internal";
}

Visibility parse_visibility(std::string_view raw)
{
    const auto t = text::to_lower(text::trim(raw));
    if (t == "internal") {
        return Visibility::Internal;
    }
    if (t == "drain") {
        return Visibility::Drain;
    }
    if (t == "te") {
        return Visibility::TrafficEngineering;
    }
    throw ParseError("unknown visibility '" + std::string(raw) + "' (expected internal, drain or te)");
}

} // namespace routemodes
