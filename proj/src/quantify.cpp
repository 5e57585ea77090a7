#include "routemodes/quantify.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace routemodes::quantify {

AggregateVector aggregate(const Snapshot& snapshot, const WeightVector& weights)
{
    AggregateVector out;
    out.time = snapshot.time;
    out.counts[CatchmentLabel::unknown()] = 0.0;
    for (const auto& [id, label] : snapshot.entries) {
        out.counts[label] += weights.weight(id);
    }
    return out;
}

AggregateVector aggregate(const SnapshotSeries& series, std::size_t i, const WeightVector& weights)
{
    const auto w = series.dense_weights(weights);
    std::vector<double> mass(series.labels().size(), 0.0);
    const auto row = series.codes(i);
    for (std::size_t n = 0; n < row.size(); ++n) {
        mass[row[n]] += w[n];
    }
    AggregateVector out;
    out.time = series.time(i);
    out.counts[CatchmentLabel::unknown()] = mass[kUnknownCode];
    // only labels that occur at this time get a bucket
    std::vector<bool> present(mass.size(), false);
    for (const auto code : row) {
        present[code] = true;
    }
    for (LabelCode c = 1; c < mass.size(); ++c) {
        if (present[c]) {
            out.counts[series.labels().label(c)] = mass[c];
        }
    }
    return out;
}

std::vector<AggregateVector> aggregate_all(const SnapshotSeries& series, const WeightVector& weights)
{
    std::vector<AggregateVector> out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        out.push_back(aggregate(series, i, weights));
    }
    return out;
}

namespace {

TransitionMatrix empty_matrix(Timestamp from, Timestamp to, std::set<CatchmentLabel> labels)
{
    TransitionMatrix m;
    m.from_time = from;
    m.to_time = to;
    m.labels.assign(labels.begin(), labels.end());
    std::sort(m.labels.begin(), m.labels.end(), display_order_less);
    m.cells.assign(m.labels.size(), std::vector<double>(m.labels.size(), 0.0));
    return m;
}

} // namespace

TransitionMatrix transition_matrix(const Snapshot& a, const Snapshot& b, const WeightVector& weights)
{
    std::set<CatchmentLabel> labels;
    std::set<NetworkId> keys;
    for (const auto& [id, label] : a.entries) {
        labels.insert(label);
        keys.insert(id);
    }
    for (const auto& [id, label] : b.entries) {
        labels.insert(label);
        keys.insert(id);
    }
    for (const auto& id : keys) {
        if (!a.entries.contains(id) || !b.entries.contains(id)) {
            labels.insert(CatchmentLabel::unknown());
            break;
        }
    }
    auto m = empty_matrix(a.time, b.time, std::move(labels));
    std::map<CatchmentLabel, std::size_t> index;
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        index[m.labels[k]] = k;
    }
    for (const auto& id : keys) {
        m.cells[index.at(a.label_of(id))][index.at(b.label_of(id))] += weights.weight(id);
    }
    return m;
}

TransitionMatrix transition_matrix(const SnapshotSeries& series, std::size_t i, std::size_t j,
                                   const WeightVector& weights)
{
    const auto w = series.dense_weights(weights);
    const auto ra = series.codes(i);
    const auto rb = series.codes(j);
    const auto label_count = series.labels().size();
    std::vector<bool> present(label_count, false);
    for (std::size_t n = 0; n < ra.size(); ++n) {
        present[ra[n]] = true;
        present[rb[n]] = true;
    }
    std::set<CatchmentLabel> labels;
    for (LabelCode c = 0; c < label_count; ++c) {
        if (present[c]) {
            labels.insert(series.labels().label(c));
        }
    }
    auto m = empty_matrix(series.time(i), series.time(j), std::move(labels));
    std::vector<std::size_t> axis(label_count, 0);
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        axis[*series.labels().find(m.labels[k])] = k;
    }
    for (std::size_t n = 0; n < ra.size(); ++n) {
        m.cells[axis[ra[n]]][axis[rb[n]]] += w[n];
    }
    return m;
}

double weighted_mean_latency(std::span<const LatencySample> samples, const WeightVector& weights)
{
    if (samples.empty()) {
        throw DomainError("no latency samples");
    }
    std::unordered_map<NetworkId, const LatencySample*, NetworkIdHash> latest;
    std::vector<const LatencySample*> order;
    for (const auto& s : samples) {
        auto [it, inserted] = latest.try_emplace(s.network, &s);
        if (inserted) {
            order.push_back(&s);
        } else {
            it->second = &s;
        }
    }
    double sum = 0.0;
    double total = 0.0;
    for (const auto* first : order) {
        const auto* s = latest.at(first->network);
        const double w = weights.weight(s->network);
        sum += s->rtt_ms * w;
        total += w;
    }
    if (!(total > 0.0)) {
        throw DomainError("latency samples carry no weight");
    }
    return sum / total;
}

PercentileTable per_catchment_percentile(std::span<const LatencySample> samples, double percentile)
{
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw ConfigError("percentile must be in (0, 100]");
    }
    std::map<std::pair<Timestamp, CatchmentLabel>, std::vector<double>> groups;
    for (const auto& s : samples) {
        groups[{s.time, s.catchment}].push_back(s.rtt_ms);
    }
    PercentileTable out;
    for (auto& [key, rtts] : groups) {
        std::sort(rtts.begin(), rtts.end());
        // nearest rank: ceil(p/100 * count), 1-based
        auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(rtts.size()) - 1e-9));
        rank = std::clamp<std::size_t>(rank, 1, rtts.size());
        out[key] = rtts[rank - 1];
    }
    return out;
}

std::vector<LatencySample> read_latency_samples(std::istream& in)
{
    text::CsvReader reader(in, {"time", "network", "rtt_ms", "label"});
    std::vector<std::string_view> fields;
    std::vector<LatencySample> out;
    while (reader.next(fields)) {
        const auto time = text::parse_int(fields[0]);
        const auto rtt = text::parse_double(fields[2]);
        if (!time) {
            throw ParseError("time '" + std::string(fields[0]) + "' is not an integer", reader.line());
        }
        if (!rtt || *rtt <= 0.0) {
            throw ParseError("rtt '" + std::string(fields[2]) + "' is not a positive number", reader.line());
        }
        try {
            out.push_back({NetworkId(std::string(fields[1])), *time, *rtt, CatchmentLabel::parse(fields[3])});
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), reader.line());
        }
    }
    return out;
}

std::vector<LatencySample> load_latency_samples(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return read_latency_samples(in);
}

} // namespace routemodes::quantify
