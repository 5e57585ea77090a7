#include "routemodes/eval.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace routemodes::eval {

namespace {

using nlohmann::json;

// keys run 1.0.0.0/24 .. 223.255.255.0/24
constexpr std::size_t kMaxNetworks = std::size_t{223} * 65536;

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seeded stream with sampling helpers that do not depend on the standard
/// library's distribution implementations.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t purpose) : engine_(splitmix(seed ^ splitmix(purpose))) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::size_t below(std::size_t n)
    {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    /// Index drawn from cumulative shares ending at 1.
    std::size_t pick(const std::vector<double>& cumulative)
    {
        const double u = uniform();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    }

    std::size_t other_than(std::size_t current, std::size_t count)
    {
        const auto j = below(count - 1);
        return j >= current ? j + 1 : j;
    }

private:
    std::mt19937_64 engine_;
};

std::vector<double> cumulative(const std::vector<double>& shares)
{
    double total = 0.0;
    for (const auto s : shares) {
        total += s;
    }
    std::vector<double> out;
    double running = 0.0;
    for (const auto s : shares) {
        running += s;
        out.push_back(running / total);
    }
    out.back() = 1.0;
    return out;
}

bool fraction(double v)
{
    return v >= 0.0 && v <= 1.0;
}

std::size_t site_index(const ScenarioSpec& spec, const std::string& name)
{
    const auto normalized = normalize_site_name(name);
    const auto it = std::find(spec.sites.begin(), spec.sites.end(), normalized);
    if (it == spec.sites.end()) {
        throw ConfigError("site '" + name + "' is not in the scenario site list");
    }
    return static_cast<std::size_t>(it - spec.sites.begin());
}

template <typename T>
T field(const json& doc, const char* key, T fallback)
{
    const auto it = doc.find(key);
    if (it == doc.end()) {
        return fallback;
    }
    return it->get<T>();
}

} // namespace

std::size_t ScenarioSpec::snapshot_count() const
{
    std::size_t n = 0;
    for (const auto& s : segments) {
        n += s.length;
    }
    return n;
}

void ScenarioSpec::validate() const
{
    if (version != 1) {
        throw ConfigError("unsupported scenario version " + std::to_string(version));
    }
    if (networks == 0 || networks > kMaxNetworks) {
        throw ConfigError("scenario network count must be in 1.." + std::to_string(kMaxNetworks));
    }
    if (sites.empty()) {
        throw ConfigError("scenario needs at least one site");
    }
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (sites[i].empty() || CatchmentLabel::parse(sites[i]).is_reserved()) {
            throw ConfigError("invalid scenario site '" + sites[i] + "'");
        }
        if (std::find(sites.begin(), sites.begin() + static_cast<std::ptrdiff_t>(i), sites[i]) !=
            sites.begin() + static_cast<std::ptrdiff_t>(i)) {
            throw ConfigError("duplicate scenario site '" + sites[i] + "'");
        }
    }
    if (!site_shares.empty()) {
        if (site_shares.size() != sites.size()) {
            throw ConfigError("site_shares needs one share per site");
        }
        double total = 0.0;
        for (const auto s : site_shares) {
            if (!(s >= 0.0)) {
                throw ConfigError("site shares must not be negative");
            }
            total += s;
        }
        if (!(total > 0.0)) {
            throw ConfigError("site shares sum to zero");
        }
    }
    if (interval <= 0) {
        throw ConfigError("scenario interval must be positive");
    }
    if (segments.empty()) {
        throw ConfigError("scenario needs at least one segment");
    }
    for (std::size_t k = 0; k < segments.size(); ++k) {
        if (segments[k].length == 0) {
            throw ConfigError("segment length must be positive");
        }
        if (!fraction(segments[k].reassign)) {
            throw ConfigError("segment reassign fraction must be in [0, 1]");
        }
        if (k > 0 && segments[k].reassign > 0.0 && sites.size() < 2) {
            throw ConfigError("reassignment needs at least two sites");
        }
    }
    if (!fraction(churn) || !fraction(unknown) || !fraction(unknown_persistence)) {
        throw ConfigError("churn, unknown and unknown_persistence must be in [0, 1]");
    }
    if (churn > 0.0 && sites.size() < 2) {
        throw ConfigError("churn needs at least two sites");
    }
    for (const auto& d : drains) {
        site_index(*this, d.site);
        if (d.at >= snapshot_count()) {
            throw ConfigError("drain starts after the last snapshot");
        }
        if (d.to.empty()) {
            throw ConfigError("drain of " + d.site + " has no destinations");
        }
        double total = 0.0;
        for (const auto& [site, share] : d.to) {
            site_index(*this, site);
            if (!(share >= 0.0)) {
                throw ConfigError("drain shares must not be negative");
            }
            total += share;
        }
        if (!(total > 0.0)) {
            throw ConfigError("drain shares sum to zero");
        }
    }
    if (op.empty()) {
        throw ConfigError("scenario operator must not be empty");
    }
}

ScenarioSpec parse_scenario(const std::string& json_text)
{
    ScenarioSpec spec;
    try {
        const auto doc = json::parse(json_text);
        if (!doc.is_object()) {
            throw ConfigError("scenario must be a JSON object");
        }
        spec.version = field<int>(doc, "version", 0);
        spec.networks = doc.at("networks").get<std::size_t>();
        for (const auto& s : doc.at("sites")) {
            spec.sites.push_back(normalize_site_name(s.get<std::string>()));
        }
        spec.site_shares = field<std::vector<double>>(doc, "site_shares", {});
        spec.start = field<Timestamp>(doc, "start", spec.start);
        spec.interval = field<Timestamp>(doc, "interval", spec.interval);
        for (const auto& s : doc.at("segments")) {
            SegmentSpec seg;
            seg.length = s.at("length").get<std::size_t>();
            seg.reassign = field<double>(s, "reassign", seg.reassign);
            spec.segments.push_back(seg);
        }
        spec.churn = field<double>(doc, "churn", 0.0);
        spec.unknown = field<double>(doc, "unknown", 0.0);
        spec.unknown_persistence = field<double>(doc, "unknown_persistence", 0.0);
        if (const auto it = doc.find("drains"); it != doc.end()) {
            for (const auto& d : *it) {
                DrainSpec drain;
                drain.at = d.at("at").get<std::size_t>();
                drain.site = normalize_site_name(d.at("site").get<std::string>());
                for (const auto& [site, share] : d.at("to").items()) {
                    drain.to.emplace_back(normalize_site_name(site), share.get<double>());
                }
                drain.duration = field<std::size_t>(d, "duration", 0);
                spec.drains.push_back(std::move(drain));
            }
        }
        spec.op = field<std::string>(doc, "operator", spec.op);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_json(const ScenarioSpec& spec)
{
    json doc;
    doc["version"] = spec.version;
    doc["networks"] = spec.networks;
    doc["sites"] = spec.sites;
    if (!spec.site_shares.empty()) {
        doc["site_shares"] = spec.site_shares;
    }
    doc["start"] = spec.start;
    doc["interval"] = spec.interval;
    doc["segments"] = json::array();
    for (const auto& s : spec.segments) {
        doc["segments"].push_back({{"length", s.length}, {"reassign", s.reassign}});
    }
    doc["churn"] = spec.churn;
    doc["unknown"] = spec.unknown;
    doc["unknown_persistence"] = spec.unknown_persistence;
    doc["drains"] = json::array();
    for (const auto& d : spec.drains) {
        json to = json::object();
        for (const auto& [site, share] : d.to) {
            to[site] = share;
        }
        doc["drains"].push_back({{"at", d.at}, {"site", d.site}, {"to", to}, {"duration", d.duration}});
    }
    doc["operator"] = spec.op;
    return doc.dump(2) + "\n";
}

NetworkId scenario_network_key(std::size_t index)
{
    const auto a = 1 + index / 65536;
    const auto b = (index / 256) % 256;
    const auto c = index % 256;
    return NetworkId(std::to_string(a) + "." + std::to_string(b) + "." + std::to_string(c) + ".0/24");
}

Scenario generate_scenario(const ScenarioSpec& spec, std::uint64_t seed)
{
    spec.validate();
    const auto n = spec.networks;
    const auto sites = spec.sites.size();
    const auto total = spec.snapshot_count();

    auto universe = std::make_shared<NetworkUniverse>();
    universe->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        universe->intern(scenario_network_key(i));
    }
    LabelTable labels;
    for (const auto& s : spec.sites) {
        labels.intern(CatchmentLabel::site(s)); // site index i gets code i + 1
    }

    Stream assign(seed, 1);
    Stream churn(seed, 2);
    Stream unknown(seed, 3);

    const auto shares = spec.site_shares.empty() ? std::vector<double>(sites, 1.0) : spec.site_shares;
    const auto base_cdf = cumulative(shares);
    std::vector<std::uint32_t> base(n);
    for (auto& b : base) {
        b = static_cast<std::uint32_t>(assign.pick(base_cdf));
    }

    struct ActiveDrain {
        std::size_t site;
        std::size_t end; // exclusive snapshot index
        std::vector<std::uint32_t> target;
    };
    std::vector<std::size_t> segment_start;
    for (std::size_t k = 0, at = 0; k < spec.segments.size(); at += spec.segments[k].length, ++k) {
        segment_start.push_back(at);
    }

    Scenario out;
    out.segment_of.reserve(total);
    std::vector<Timestamp> times;
    std::vector<std::vector<LabelCode>> codes;
    times.reserve(total);
    codes.reserve(total);
    std::vector<ActiveDrain> drains;
    std::vector<char> hidden(n, 0);
    const double deviate = spec.churn / 2.0;

    for (std::size_t t = 0, segment = 0; t < total; ++t) {
        const Timestamp now = spec.start + static_cast<Timestamp>(t) * spec.interval;
        if (segment + 1 < segment_start.size() && segment_start[segment + 1] == t) {
            ++segment;
            const double reassign = spec.segments[segment].reassign;
            for (auto& b : base) {
                if (assign.uniform() < reassign) {
                    b = static_cast<std::uint32_t>(assign.other_than(b, sites));
                }
            }
            out.events.push_back({now, spec.op, Visibility::TrafficEngineering});
        }
        std::erase_if(drains, [&](const ActiveDrain& d) {
            if (d.end == t) {
                out.events.push_back({now, spec.op, Visibility::Drain});
                return true;
            }
            return false;
        });
        for (const auto& d : spec.drains) {
            if (d.at != t) {
                continue;
            }
            ActiveDrain active;
            active.site = site_index(spec, d.site);
            active.end = d.duration == 0 ? total : d.at + d.duration;
            std::vector<double> to_shares;
            std::vector<std::uint32_t> to_sites;
            for (const auto& [site, share] : d.to) {
                to_sites.push_back(static_cast<std::uint32_t>(site_index(spec, site)));
                to_shares.push_back(share);
            }
            const auto cdf = cumulative(to_shares);
            active.target.resize(n);
            for (auto& target : active.target) {
                target = to_sites[assign.pick(cdf)];
            }
            drains.push_back(std::move(active));
            out.events.push_back({now, spec.op, Visibility::Drain});
        }

        std::vector<LabelCode> row(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t site = base[i];
            for (const auto& d : drains) {
                if (site == d.site) {
                    site = d.target[i];
                }
            }
            if (deviate > 0.0 && churn.uniform() < deviate) {
                site = static_cast<std::uint32_t>(churn.other_than(site, sites));
            }
            if (t == 0 || unknown.uniform() >= spec.unknown_persistence) {
                hidden[i] = unknown.uniform() < spec.unknown;
            }
            row[i] = hidden[i] ? kUnknownCode : site + 1;
        }
        times.push_back(now);
        codes.push_back(std::move(row));
        out.segment_of.push_back(segment);
    }

    std::stable_sort(out.events.begin(), out.events.end(),
                     [](const GroundTruthEvent& a, const GroundTruthEvent& b) { return a.time < b.time; });
    out.series = SnapshotSeries(std::move(universe), std::move(labels), std::move(times), std::move(codes));
    return out;
}

} // namespace routemodes::eval
