#include "routemodes/ingest.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace routemodes::ingest {

InputFormat parse_format(std::string_view raw)
{
    const auto t = text::to_lower(text::trim(raw));
    if (t == "canonical" || t == "canonical_rows") {
        return InputFormat::CanonicalRows;
    }
    if (t == "verfploeter" || t == "verfploeter_table") {
        return InputFormat::VerfploeterTable;
    }
    throw ConfigError("unknown input format '" + std::string(raw) + "'");
}

std::string_view format_name(InputFormat format)
{
    return format == InputFormat::CanonicalRows ? "canonical" : "verfploeter";
}

namespace {

std::vector<std::string> header_for(InputFormat format)
{
    if (format == InputFormat::CanonicalRows) {
        return {"time", "network", "label"};
    }
    return {"time", "prefix", "site"};
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return in;
}

} // namespace

std::size_t append_snapshots(SeriesBuilder& builder, std::istream& in, InputFormat format)
{
    text::CsvReader reader(in, header_for(format));
    std::vector<std::string_view> fields;
    std::size_t rows = 0;
    while (reader.next(fields)) {
        const auto time = text::parse_int(fields[0]);
        if (!time) {
            throw ParseError("time '" + std::string(fields[0]) + "' is not an integer", reader.line());
        }
        if (fields[1].empty()) {
            throw ParseError("empty network key", reader.line());
        }
        try {
            builder.add(*time, NetworkId(std::string(fields[1])), CatchmentLabel::parse(fields[2]));
        } catch (const ConfigError& e) {
            throw ParseError(e.what(), reader.line());
        }
        ++rows;
    }
    if (!reader.saw_header()) {
        throw EmptyInputError("input is empty");
    }
    return rows;
}

SnapshotSeries read_snapshots(std::istream& in, InputFormat format)
{
    SeriesBuilder builder;
    if (append_snapshots(builder, in, format) == 0) {
        throw EmptyInputError("input has a header but no rows");
    }
    return std::move(builder).build();
}

SnapshotSeries load_snapshots(const std::filesystem::path& path, InputFormat format)
{
    auto in = open_input(path);
    try {
        return read_snapshots(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

// ---------------------------------------------------------------------------

NsidRules::NsidRules(std::vector<NsidRule> rules)
{
    if (rules.empty()) {
        throw ConfigError("NSID rule set is empty");
    }
    std::stable_sort(rules.begin(), rules.end(),
                     [](const NsidRule& a, const NsidRule& b) { return a.priority < b.priority; });
    for (auto& rule : rules) {
        if (normalize_site_name(rule.site).empty()) {
            throw ConfigError("NSID rule '" + rule.pattern + "' has an empty site");
        }
        try {
            std::regex re(rule.pattern, std::regex::ECMAScript | std::regex::icase);
            compiled_.push_back({std::move(rule), std::move(re)});
        } catch (const std::regex_error& e) {
            throw ConfigError("NSID pattern '" + rule.pattern + "' does not compile: " + e.what());
        }
    }
}

std::optional<CatchmentLabel> NsidRules::try_map(std::string_view identifier) const
{
    const std::string id(text::trim(identifier));
    if (id.empty()) {
        return std::nullopt;
    }
    std::smatch match;
    for (const auto& c : compiled_) {
        if (!std::regex_search(id, match, c.regex)) {
            continue;
        }
        std::string site;
        const auto& tmpl = c.rule.site;
        for (std::size_t i = 0; i < tmpl.size(); ++i) {
            if (tmpl[i] == '$' && i + 1 < tmpl.size() && tmpl[i + 1] >= '1' && tmpl[i + 1] <= '9') {
                const auto group = static_cast<std::size_t>(tmpl[i + 1] - '0');
                if (group < match.size()) {
                    site += match[group].str();
                }
                ++i;
            } else {
                site += tmpl[i];
            }
        }
        if (normalize_site_name(site).empty()) {
            continue;
        }
        return CatchmentLabel::parse(site);
    }
    return std::nullopt;
}

CatchmentLabel NsidRules::map(std::string_view identifier) const
{
    auto label = try_map(identifier);
    if (!label || label->is_unknown()) {
        return CatchmentLabel::other();
    }
    return *label;
}

CatchmentLabel map_nsid(std::string_view identifier, const NsidRules& rules)
{
    return rules.map(identifier);
}

NsidRules read_nsid_rules(std::istream& in)
{
    text::CsvReader reader(in, {"priority", "pattern", "site"});
    std::vector<std::string_view> fields;
    std::vector<NsidRule> rules;
    while (reader.next(fields)) {
        const auto priority = text::parse_int(fields[0]);
        if (!priority) {
            throw ParseError("priority '" + std::string(fields[0]) + "' is not an integer", reader.line());
        }
        rules.push_back({static_cast<int>(*priority), std::string(fields[1]), std::string(fields[2])});
    }
    return NsidRules(std::move(rules));
}

NsidRules load_nsid_rules(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_nsid_rules(in);
}

// ---------------------------------------------------------------------------

TracerouteRecord parse_traceroute_line(std::string_view line, std::size_t line_number)
{
    const auto parts = text::split(text::trim(line), '|');
    TracerouteRecord record;
    record.target = NetworkId(std::string(text::trim(parts[0])));
    if (record.target.key.empty()) {
        throw ParseError("traceroute record has no target", line_number);
    }
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const auto field = text::trim(parts[p]);
        if (field.empty()) {
            continue;
        }
        const auto cols = text::split(field, ',');
        if (cols.size() < 2 || cols.size() > 3) {
            throw ParseError("hop '" + std::string(field) + "' is not hop,responder[,label]", line_number);
        }
        const auto index = text::parse_int(cols[0]);
        if (!index || *index < 1 || *index > kMaxHops) {
            throw ParseError("hop index '" + std::string(cols[0]) + "' outside 1..10", line_number);
        }
        if (!record.hops.empty() && record.hops.back().index >= *index) {
            throw ParseError("hop indexes must increase", line_number);
        }
        TracerouteHop hop;
        hop.index = static_cast<int>(*index);
        const auto responder = text::trim(cols[1]);
        if (responder != "*") {
            hop.responder = std::string(responder);
        }
        if (cols.size() == 3) {
            try {
                hop.label = CatchmentLabel::parse(cols[2]);
            } catch (const ConfigError& e) {
                throw ParseError(e.what(), line_number);
            }
        }
        record.hops.push_back(std::move(hop));
    }
    return record;
}

std::vector<TracerouteRecord> read_traceroutes(std::istream& in)
{
    std::vector<TracerouteRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        out.push_back(parse_traceroute_line(t, number));
    }
    return out;
}

std::vector<TracerouteRecord> load_traceroutes(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_traceroutes(in);
}

CatchmentLabel extract_hop_catchment(const TracerouteRecord& record, int focus_hop)
{
    if (focus_hop < 1 || focus_hop > kMaxHops) {
        throw ConfigError("focus hop " + std::to_string(focus_hop) + " outside 1..10");
    }
    const TracerouteHop* best = nullptr;
    int best_distance = kMaxHops + 1;
    // hops are sorted ascending, so on equal distance the earlier one is kept
    for (const auto& hop : record.hops) {
        if (!hop.viable()) {
            continue;
        }
        const int distance = std::abs(hop.index - focus_hop);
        if (distance < best_distance) {
            best = &hop;
            best_distance = distance;
        }
    }
    return best ? best->label : CatchmentLabel::unknown();
}

Snapshot traceroute_snapshot(std::span<const TracerouteRecord> records, Timestamp time, int focus_hop)
{
    Snapshot snapshot;
    snapshot.time = time;
    for (const auto& record : records) {
        const auto [it, inserted] = snapshot.entries.emplace(record.target, extract_hop_catchment(record, focus_hop));
        if (!inserted) {
            throw DuplicateEntryError("traceroute target '" + record.target.key + "' appears twice");
        }
    }
    return snapshot;
}

} // namespace routemodes::ingest
