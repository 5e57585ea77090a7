#include "routemodes/prep.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <fstream>

namespace routemodes::prep {

namespace {

SnapshotSeries with_codes(const SnapshotSeries& series, LabelTable labels, std::vector<std::vector<LabelCode>> codes)
{
    return SnapshotSeries(series.shared_universe(), std::move(labels), series.times(), std::move(codes));
}

} // namespace

SnapshotSeries remove_incorrect(const SnapshotSeries& series, const RejectPredicate& reject)
{
    auto codes = series.all_codes();
    const auto& universe = series.universe();
    for (auto& row : codes) {
        for (std::size_t n = 0; n < row.size(); ++n) {
            if (row[n] != kUnknownCode && reject(universe.at(n), series.labels().label(row[n]))) {
                row[n] = kUnknownCode;
            }
        }
    }
    return with_codes(series, series.labels(), std::move(codes));
}

SnapshotSeries drop_micro_catchments(const SnapshotSeries& series, const WeightVector& weights, double min_share)
{
    if (!(min_share >= 0.0 && min_share < 1.0)) {
        throw ConfigError("min_share must be in [0, 1)");
    }
    const auto w = series.dense_weights(weights);
    double total = 0.0;
    for (const double x : w) {
        total += x;
    }
    const auto label_count = series.labels().size();
    std::vector<double> max_share(label_count, 0.0);
    std::vector<double> mass(label_count);
    for (const auto& row : series.all_codes()) {
        std::fill(mass.begin(), mass.end(), 0.0);
        for (std::size_t n = 0; n < row.size(); ++n) {
            mass[row[n]] += w[n];
        }
        for (std::size_t c = 0; c < label_count; ++c) {
            const double share = total > 0.0 ? mass[c] / total : 0.0;
            max_share[c] = std::max(max_share[c], share);
        }
    }

    auto labels = series.labels();
    const auto other = labels.intern(CatchmentLabel::other());
    std::vector<LabelCode> remap(label_count);
    bool changed = false;
    for (std::size_t c = 0; c < label_count; ++c) {
        remap[c] = static_cast<LabelCode>(c);
        if (series.labels().label(static_cast<LabelCode>(c)).is_site() && max_share[c] < min_share) {
            remap[c] = other;
            changed = true;
        }
    }
    if (!changed) {
        return series;
    }
    auto codes = series.all_codes();
    for (auto& row : codes) {
        for (auto& code : row) {
            code = remap[code];
        }
    }
    return with_codes(series, std::move(labels), std::move(codes));
}

void interpolate_row(std::span<LabelCode> row, int max_gap)
{
    const auto size = row.size();
    std::size_t i = 0;
    // skip the leading run: it has no left neighbour
    while (i < size && row[i] == kUnknownCode) {
        ++i;
    }
    while (i < size) {
        if (row[i] != kUnknownCode) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < size && row[i] == kUnknownCode) {
            ++i;
        }
        if (i == size) {
            return; // trailing run
        }
        const std::size_t length = i - start;
        const std::size_t left_count = (length + 1) / 2;
        if (max_gap < 0 || left_count > static_cast<std::size_t>(max_gap)) {
            continue;
        }
        const LabelCode left = row[start - 1];
        const LabelCode right = row[i];
        for (std::size_t k = 0; k < length; ++k) {
            row[start + k] = k < left_count ? left : right;
        }
    }
}

SnapshotSeries interpolate_missing(const SnapshotSeries& series, int max_gap)
{
    if (max_gap < 0) {
        throw ConfigError("max_gap must be nonnegative");
    }
    const auto steps = series.size();
    const auto networks = series.network_count();
    auto codes = series.all_codes();
    std::vector<LabelCode> column(steps);
    for (std::size_t n = 0; n < networks; ++n) {
        for (std::size_t t = 0; t < steps; ++t) {
            column[t] = codes[t][n];
        }
        interpolate_row(column, max_gap);
        for (std::size_t t = 0; t < steps; ++t) {
            codes[t][n] = column[t];
        }
    }
    return with_codes(series, series.labels(), std::move(codes));
}

WeightVector expand_prefix_weights(const std::set<NetworkId>& observed, std::span<const Ipv4Prefix> coverage)
{
    for (std::size_t i = 0; i < coverage.size(); ++i) {
        for (std::size_t j = i + 1; j < coverage.size(); ++j) {
            if (coverage[i].overlaps(coverage[j])) {
                throw ConfigError("coverage prefixes " + coverage[i].text() + " and " + coverage[j].text() +
                                  " overlap");
            }
        }
    }
    std::vector<std::vector<const NetworkId*>> members(coverage.size());
    WeightVector out;
    for (const auto& id : observed) {
        const auto prefix = Ipv4Prefix::parse(id.key);
        bool placed = false;
        if (prefix) {
            for (std::size_t c = 0; c < coverage.size(); ++c) {
                if (coverage[c].contains(*prefix)) {
                    members[c].push_back(&id);
                    placed = true;
                    break;
                }
            }
        }
        if (!placed) {
            out.set(id, 1.0);
        }
    }
    for (std::size_t c = 0; c < coverage.size(); ++c) {
        if (members[c].empty()) {
            continue;
        }
        const double share = coverage[c].block24_count() / static_cast<double>(members[c].size());
        for (const auto* id : members[c]) {
            out.set(*id, share);
        }
    }
    return out;
}

WeightVector read_traffic_weights(std::istream& in)
{
    text::CsvReader reader(in, {"network", "weight"});
    std::vector<std::string_view> fields;
    WeightVector out;
    while (reader.next(fields)) {
        const auto w = text::parse_double(fields[1]);
        if (!w || *w < 0.0) {
            throw ParseError("weight '" + std::string(fields[1]) + "' is not a nonnegative number", reader.line());
        }
        if (fields[0].empty()) {
            throw ParseError("empty network key", reader.line());
        }
        NetworkId id{std::string(fields[0])};
        if (out.contains(id)) {
            throw DuplicateEntryError("line " + std::to_string(reader.line()) + ": network '" + id.key +
                                      "' listed twice");
        }
        out.set(id, *w);
    }
    return out;
}

WeightVector load_traffic_weights(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return read_traffic_weights(in);
}

} // namespace routemodes::prep
