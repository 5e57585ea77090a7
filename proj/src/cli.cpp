#include "routemodes/cli.hpp"

#include "routemodes/analysis.hpp"
#include "routemodes/dns.hpp"
#include "routemodes/eval.hpp"
#include "routemodes/ingest.hpp"
#include "routemodes/prep.hpp"
#include "routemodes/quantify.hpp"
#include "routemodes/report.hpp"
#include "routemodes/study.hpp"
#include "routemodes/text.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace routemodes::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad invocation or missing prerequisite; exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::string config;
    std::string store;
    std::uint64_t seed = 1;
};

study::StudyConfig load_config(const Globals& g)
{
    return g.config.empty() ? study::StudyConfig{} : study::load_study(g.config);
}

study::Store require_store(const Globals& g)
{
    if (g.store.empty()) {
        throw UsageError("--store is required for this command");
    }
    return study::Store(g.store);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Rethrows parse failures with the file name in front.
template <typename F>
auto in_file(const fs::path& path, F&& body)
{
    try {
        return body();
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ":" + std::to_string(e.line()) + ": " + e.what(), e.line());
    } catch (const DuplicateEntryError& e) {
        throw DuplicateEntryError(path.string() + ": " + e.what());
    } catch (const EmptyInputError& e) {
        throw EmptyInputError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Shared pipeline steps

SnapshotSeries load_store_series(const study::Store& store)
{
    if (!fs::exists(store.snapshots())) {
        throw UsageError("store '" + store.root().string() + "' has no snapshots; run `routemodes ingest` first");
    }
    return in_file(store.snapshots(),
                   [&] { return ingest::load_snapshots(store.snapshots(), ingest::InputFormat::CanonicalRows); });
}

WeightVector build_weights(const study::StudyConfig& cfg, const SnapshotSeries& series)
{
    switch (cfg.weights.mode) {
    case study::WeightMode::Uniform:
        return {};
    case study::WeightMode::Traffic:
        return in_file(cfg.weights.path, [&] { return prep::load_traffic_weights(cfg.weights.path); });
    case study::WeightMode::Prefix: {
        std::set<NetworkId> observed;
        for (std::size_t n = 0; n < series.network_count(); ++n) {
            observed.insert(series.universe().at(n));
        }
        return prep::expand_prefix_weights(observed, cfg.weights.coverage);
    }
    }
    return {};
}

SnapshotSeries clean(const study::StudyConfig& cfg, const SnapshotSeries& series, const WeightVector& weights)
{
    auto out = series;
    const auto& c = cfg.cleaning;
    if (!c.reject_labels.empty() || !c.reject_networks.empty()) {
        out = prep::remove_incorrect(out, [&](const NetworkId& id, const CatchmentLabel& label) {
            if (std::find(c.reject_labels.begin(), c.reject_labels.end(), label) != c.reject_labels.end()) {
                return true;
            }
            const auto p = Ipv4Prefix::parse(id.key);
            return p && std::any_of(c.reject_networks.begin(), c.reject_networks.end(),
                                    [&](const Ipv4Prefix& r) { return r.contains(*p); });
        });
    }
    if (c.min_share > 0.0) {
        out = prep::drop_micro_catchments(out, weights, c.min_share);
    }
    if (c.max_gap > 0) {
        out = prep::interpolate_missing(out, c.max_gap);
    }
    return out;
}

std::string weight_fingerprint(const study::StudyConfig& cfg, const WeightVector& weights)
{
    std::string s = std::to_string(static_cast<int>(cfg.weights.mode)) + "\n";
    for (const auto& [id, w] : weights.sorted_entries()) {
        s += id.key + "," + text::exact(w) + "\n";
    }
    return study::sha256_hex(s);
}

ModeAssignment read_modes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path.string() + "'");
    }
    return in_file(path, [&] {
        text::CsvReader reader(in, {"time", "cluster", "is_mode"});
        std::vector<std::string_view> f;
        ModeAssignment m;
        std::set<ClusterId> modes;
        while (reader.next(f)) {
            const auto t = text::parse_int(f[0]);
            const auto c = text::parse_int(f[1]);
            if (!t || !c || *c < 0 || (f[2] != "0" && f[2] != "1")) {
                throw ParseError("malformed mode row", reader.line());
            }
            m.times.push_back(*t);
            m.cluster_of.push_back(static_cast<ClusterId>(*c));
            if (f[2] == "1") {
                modes.insert(static_cast<ClusterId>(*c));
            }
        }
        m.mode_ids.assign(modes.begin(), modes.end());
        return m;
    });
}

std::vector<analysis::ChangeEvent> read_changes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path.string() + "'");
    }
    return in_file(path, [&] {
        text::CsvReader reader(in, {"time", "score"});
        std::vector<std::string_view> f;
        std::vector<analysis::ChangeEvent> out;
        while (reader.next(f)) {
            const auto t = text::parse_int(f[0]);
            const auto s = text::parse_double(f[1]);
            if (!t || !s) {
                throw ParseError("malformed change row", reader.line());
            }
            out.push_back({*t, *s});
        }
        return out;
    });
}

std::size_t index_of_time(const SnapshotSeries& series, Timestamp t)
{
    const auto& times = series.times();
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || *it != t) {
        throw UsageError("no snapshot at time " + std::to_string(t));
    }
    return static_cast<std::size_t>(it - times.begin());
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::vector<std::string> files;
    std::string format = "canonical";
    std::optional<Timestamp> time;
    std::optional<int> focus_hop;
    std::string rules;
};

struct HopRow {
    Timestamp time;
    int hop;
    NetworkId network;
    CatchmentLabel label;
};

void ingest_one(const study::InputSpec& in, int default_focus, SeriesBuilder& builder, std::vector<HopRow>& hops)
{
    in_file(in.path, [&] {
        switch (in.format) {
        case study::SourceFormat::Canonical:
        case study::SourceFormat::Verfploeter: {
            std::ifstream stream(in.path, std::ios::binary);
            if (!stream) {
                throw UsageError("cannot open '" + in.path.string() + "'");
            }
            const auto rows = ingest::append_snapshots(builder, stream,
                                                       in.format == study::SourceFormat::Canonical
                                                           ? ingest::InputFormat::CanonicalRows
                                                           : ingest::InputFormat::VerfploeterTable);
            if (rows == 0) {
                throw EmptyInputError("no observation rows");
            }
            break;
        }
        case study::SourceFormat::Traceroute: {
            const auto records = ingest::load_traceroutes(in.path);
            if (records.empty()) {
                throw EmptyInputError("no traceroute records");
            }
            const int focus = in.focus_hop.value_or(default_focus);
            int deepest = 0;
            for (const auto& r : records) {
                if (!r.hops.empty()) {
                    deepest = std::max(deepest, r.hops.back().index);
                }
            }
            builder.add_time(*in.time);
            for (const auto& r : records) {
                builder.add(*in.time, r.target, ingest::extract_hop_catchment(r, focus));
                for (int h = 1; h <= deepest; ++h) {
                    hops.push_back({*in.time, h, r.target, ingest::extract_hop_catchment(r, h)});
                }
            }
            break;
        }
        case study::SourceFormat::Nsid: {
            const auto rules = ingest::load_nsid_rules(in.rules);
            std::ifstream stream(in.path, std::ios::binary);
            if (!stream) {
                throw UsageError("cannot open '" + in.path.string() + "'");
            }
            text::CsvReader reader(stream, {"time", "network", "identifier"});
            std::vector<std::string_view> f;
            std::size_t rows = 0;
            while (reader.next(f)) {
                const auto t = text::parse_int(f[0]);
                if (!t) {
                    throw ParseError("time '" + std::string(f[0]) + "' is not an integer", reader.line());
                }
                try {
                    builder.add(*t, NetworkId(std::string(f[1])), ingest::map_nsid(f[2], rules));
                } catch (const DuplicateEntryError& e) {
                    throw ParseError(e.what(), reader.line());
                }
                ++rows;
            }
            if (rows == 0) {
                throw EmptyInputError("no observation rows");
            }
            break;
        }
        }
        return 0;
    });
}

json manifest_entry(const study::InputSpec& in)
{
    if (!fs::exists(in.path)) {
        throw UsageError("input '" + in.path.string() + "' does not exist");
    }
    json e;
    e["path"] = fs::weakly_canonical(in.path).string();
    e["format"] = std::string(study::source_format_name(in.format));
    e["sha256"] = study::sha256_file(in.path);
    if (in.time) {
        e["time"] = *in.time;
    }
    if (in.focus_hop) {
        e["focus_hop"] = *in.focus_hop;
    }
    if (!in.rules.empty()) {
        e["rules_sha256"] = study::sha256_file(in.rules);
    }
    return e;
}

int cmd_ingest(const Globals& g, const IngestArgs& a, std::ostream& out)
{
    const auto store = require_store(g);
    auto cfg = load_config(g);
    for (const auto& f : a.files) {
        study::InputSpec in;
        in.path = f;
        in.format = study::parse_source_format(a.format);
        in.time = a.time;
        in.focus_hop = a.focus_hop;
        in.rules = a.rules;
        if (in.format == study::SourceFormat::Traceroute && !in.time) {
            throw UsageError("traceroute inputs need --time");
        }
        if (in.format == study::SourceFormat::Nsid && in.rules.empty()) {
            throw UsageError("nsid inputs need --rules");
        }
        cfg.inputs.push_back(std::move(in));
    }
    if (cfg.inputs.empty()) {
        throw UsageError("no inputs: pass files or list them in the study configuration");
    }

    json entries = json::array();
    for (const auto& in : cfg.inputs) {
        entries.push_back(manifest_entry(in));
    }
    entries.push_back({{"focus_hop", cfg.focus_hop}});

    if (fs::exists(store.manifest()) && fs::exists(store.snapshots())) {
        const auto previous = json::parse(read_file(store.manifest()), nullptr, false);
        if (!previous.is_discarded() && previous.value("inputs", json()) == entries &&
            previous.value("snapshots_sha256", std::string()) == study::sha256_file(store.snapshots())) {
            for (const auto& in : cfg.inputs) {
                out << "skipped " << in.path.string() << " (unchanged)\n";
            }
            return kExitOk;
        }
    }

    SeriesBuilder builder;
    std::vector<HopRow> hops;
    for (const auto& in : cfg.inputs) {
        ingest_one(in, cfg.focus_hop, builder, hops);
    }
    const auto series = std::move(builder).build();
    if (series.empty() || series.network_count() == 0) {
        throw EmptyInputError("inputs contain no observations");
    }

    // everything parsed; only now touch the store
    study::atomic_write(store.snapshots(), [&](std::ostream& o) { report::write_snapshots(o, series); });
    if (!hops.empty()) {
        std::sort(hops.begin(), hops.end(), [](const HopRow& x, const HopRow& y) {
            return std::tie(x.time, x.hop, x.network) < std::tie(y.time, y.hop, y.network);
        });
        study::atomic_write(store.hops(), [&](std::ostream& o) {
            o << "time,hop,network,label\n";
            for (const auto& h : hops) {
                o << h.time << ',' << h.hop << ',' << h.network.key << ',' << h.label.text() << '\n';
            }
        });
    } else {
        fs::remove(store.hops());
    }
    json manifest;
    manifest["version"] = 1;
    manifest["inputs"] = entries;
    manifest["snapshots_sha256"] = study::sha256_file(store.snapshots());
    manifest["networks"] = series.network_count();
    manifest["snapshots"] = series.size();
    study::atomic_write(store.manifest(), manifest.dump(2) + "\n");

    for (const auto& in : cfg.inputs) {
        out << "ingested " << in.path.string() << '\n';
    }
    out << "store: " << series.network_count() << " networks x " << series.size() << " snapshots\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::optional<double> threshold;
    unsigned threads = 0;
};

int cmd_analyze(const Globals& g, const AnalyzeArgs& a, std::ostream& out)
{
    const auto store = require_store(g);
    const auto cfg = load_config(g);
    const auto raw = load_store_series(store);
    const auto weights = build_weights(cfg, raw);
    const auto series = clean(cfg, raw, weights);

    const auto store_hash = study::sha256_file(store.snapshots());
    const auto key = study::sha256_hex(store_hash + "\n" + weight_fingerprint(cfg, weights) + "\n" +
                                       cfg.cleaning_fingerprint());
    const auto cached = store.cache_dir() / (key + ".csv");
    SimilarityMatrix matrix;
    bool hit = false;
    if (fs::exists(cached)) {
        std::ifstream in(cached, std::ios::binary);
        try {
            matrix = report::read_matrix(in);
            hit = matrix.times() == series.times();
        } catch (const Error&) {
            hit = false; // unreadable cache entries are recomputed
        }
    }
    if (!hit) {
        analysis::MatrixOptions opts;
        opts.threads = a.threads;
        matrix = analysis::similarity_matrix(series, weights, opts);
        study::atomic_write(cached, [&](std::ostream& o) { report::write_matrix(o, matrix, -1); });
    }

    double threshold = 0.0;
    if (a.threshold) {
        threshold = *a.threshold;
    } else if (cfg.clustering.threshold) {
        threshold = *cfg.clustering.threshold;
    } else if (matrix.size() >= 2) {
        analysis::AdaptiveOptions opts;
        opts.max_modes = cfg.clustering.max_modes;
        opts.min_size = cfg.clustering.min_size;
        opts.step = cfg.clustering.step;
        opts.linkage = cfg.clustering.linkage;
        opts.rule = cfg.clustering.rule;
        threshold = analysis::adaptive_threshold(matrix, opts);
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw UsageError("threshold must be in [0, 1]");
    }
    const auto modes = analysis::hac_cluster(matrix, threshold, cfg.clustering.linkage);
    const auto events = matrix.size() >= 2 ? analysis::detect_changes(matrix, cfg.detection)
                                           : std::vector<analysis::ChangeEvent>{};

    const auto dir = store.analysis_dir();
    study::atomic_write(dir / "matrix.csv", [&](std::ostream& o) { report::write_matrix(o, matrix); });
    study::atomic_write(dir / "modes.csv", [&](std::ostream& o) {
        o << "time,cluster,is_mode\n";
        for (std::size_t i = 0; i < modes.times.size(); ++i) {
            o << modes.times[i] << ',' << modes.cluster_of[i] << ',' << (modes.is_mode(modes.cluster_of[i]) ? 1 : 0)
              << '\n';
        }
    });
    study::atomic_write(dir / "changes.csv", [&](std::ostream& o) {
        o << "time,score\n";
        for (const auto& e : events) {
            o << e.time << ',' << text::fixed(e.score, 6) << '\n';
        }
    });
    json summary;
    summary["version"] = 1;
    summary["store_sha256"] = store_hash;
    summary["matrix_key"] = key;
    summary["snapshots"] = series.size();
    summary["networks"] = series.network_count();
    summary["threshold"] = text::exact(threshold);
    summary["linkage"] = std::string(analysis::linkage_name(cfg.clustering.linkage));
    summary["clusters"] = modes.cluster_count();
    summary["modes"] = modes.mode_ids.size();
    summary["events"] = events.size();
    study::atomic_write(dir / "summary.json", summary.dump(2) + "\n");

    out << "threshold=" << text::fixed(threshold, 4) << " clusters=" << modes.cluster_count()
        << " modes=" << modes.mode_ids.size() << " events=" << events.size() << " matrix=" << (hit ? "cached" : "computed")
        << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::vector<std::string> pairs; // "from:to"
    std::optional<double> highlight;
};

std::vector<report::HopSnapshot> read_hops(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return in_file(path, [&] {
        text::CsvReader reader(in, {"time", "hop", "network", "label"});
        std::vector<std::string_view> f;
        std::map<Timestamp, std::map<int, Snapshot>> by_time;
        while (reader.next(f)) {
            const auto t = text::parse_int(f[0]);
            const auto h = text::parse_int(f[1]);
            if (!t || !h) {
                throw ParseError("malformed hop row", reader.line());
            }
            auto& snap = by_time[*t][static_cast<int>(*h)];
            snap.time = *t;
            snap.entries[NetworkId(std::string(f[2]))] = CatchmentLabel::parse(f[3]);
        }
        std::vector<report::HopSnapshot> out;
        if (!by_time.empty()) {
            for (auto& [hop, snap] : by_time.rbegin()->second) {
                out.emplace_back(hop, std::move(snap));
            }
        }
        return out;
    });
}

int cmd_report(const Globals& g, const ReportArgs& a, std::ostream& out)
{
    const auto store = require_store(g);
    const auto cfg = load_config(g);
    const auto dir = store.analysis_dir();
    for (const char* name : {"summary.json", "matrix.csv", "modes.csv", "changes.csv"}) {
        if (!fs::exists(dir / name)) {
            throw UsageError("analysis artifacts are missing; run `routemodes analyze` first");
        }
    }
    const auto summary = json::parse(read_file(dir / "summary.json"), nullptr, false);
    if (summary.is_discarded() || !fs::exists(store.snapshots()) ||
        summary.value("store_sha256", std::string()) != study::sha256_file(store.snapshots())) {
        throw UsageError("analysis does not match the current snapshots; rerun `routemodes analyze`");
    }

    std::ifstream matrix_in(dir / "matrix.csv", std::ios::binary);
    const auto matrix = in_file(dir / "matrix.csv", [&] { return report::read_matrix(matrix_in); });
    const auto modes = read_modes(dir / "modes.csv");
    const auto events = read_changes(dir / "changes.csv");
    if (modes.times != matrix.times()) {
        throw UsageError("analysis artifacts disagree; rerun `routemodes analyze`");
    }

    const auto raw = load_store_series(store);
    const auto weights = build_weights(cfg, raw);
    const auto series = clean(cfg, raw, weights);
    const auto aggregates = quantify::aggregate_all(series, weights);

    const auto rdir = store.report_dir();
    study::atomic_write(rdir / "heatmap.svg", report::render_heatmap(matrix, &modes));
    study::atomic_write(rdir / "stackplot.svg", report::render_stackplot(aggregates, cfg.report.site_order));
    study::atomic_write(rdir / "aggregates.csv", [&](std::ostream& o) {
        o << "time,label,count\n";
        for (const auto& agg : aggregates) {
            for (const auto& [label, count] : agg.counts) {
                o << agg.time << ',' << label.text() << ',' << text::exact(count) << '\n';
            }
        }
    });

    std::vector<std::pair<Timestamp, Timestamp>> pairs = cfg.report.pairs;
    for (const auto& p : a.pairs) {
        const auto parts = text::split(p, ':');
        const auto from = parts.size() == 2 ? text::parse_int(parts[0]) : std::nullopt;
        const auto to = parts.size() == 2 ? text::parse_int(parts[1]) : std::nullopt;
        if (!from || !to) {
            throw UsageError("--pair expects FROM:TO epoch seconds, got '" + p + "'");
        }
        pairs.emplace_back(*from, *to);
    }
    if (pairs.empty()) {
        for (const auto& e : events) {
            const auto i = index_of_time(series, e.time);
            if (i > 0) {
                pairs.emplace_back(series.time(i - 1), e.time);
            }
        }
    }
    const auto highlight = a.highlight ? a.highlight : cfg.report.highlight;
    std::string tables;
    for (const auto& [from, to] : pairs) {
        const auto m = quantify::transition_matrix(series, index_of_time(series, from), index_of_time(series, to),
                                                   weights);
        const double limit = highlight.value_or(0.05 * m.total());
        tables += "# " + text::utc_minute(from) + " -> " + text::utc_minute(to) + " (* marks moves >= " +
                  text::count(limit) + ")\n";
        tables += report::render_transition_table(m, limit) + "\n";
    }
    if (pairs.empty()) {
        tables = "# no transitions requested and no change events\n";
    }
    study::atomic_write(rdir / "transitions.txt", tables);

    study::atomic_write(rdir / "mode_ranges.csv", [&](std::ostream& o) {
        o << "mode_a,mode_b,min,max\n";
        for (const auto ma : modes.mode_ids) {
            for (const auto mb : modes.mode_ids) {
                if (mb < ma) {
                    continue;
                }
                const auto [lo, hi] = analysis::mode_phi_range(matrix, modes, ma, mb);
                o << ma << ',' << mb << ',' << text::fixed(lo, 4) << ',' << text::fixed(hi, 4) << '\n';
            }
        }
    });

    std::size_t outputs = 5;
    if (fs::exists(store.hops())) {
        const auto hops = read_hops(store.hops());
        if (hops.size() >= 2) {
            const auto links = report::sankey_links(hops, weights);
            study::atomic_write(rdir / "sankey.csv", [&](std::ostream& o) { report::write_sankey(o, links); });
            ++outputs;
        }
    }
    out << "wrote " << outputs << " report files to " << rdir.string() << " (" << pairs.size()
        << " transition tables)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    std::string truth;
    std::string detections;
    std::string output;
    int window = 10;
    std::optional<int> match_window;
    bool strict = false;
};

int cmd_validate(const Globals& g, const ValidateArgs& a, std::ostream& out)
{
    if (!fs::exists(a.truth)) {
        throw UsageError("ground-truth log '" + a.truth + "' does not exist");
    }
    fs::path detections = a.detections;
    if (detections.empty()) {
        if (g.store.empty()) {
            throw UsageError("pass --detections or --store with an analysis");
        }
        detections = study::Store(g.store).analysis_dir() / "changes.csv";
        if (!fs::exists(detections)) {
            throw UsageError("no change events in the store; run `routemodes analyze` first");
        }
    } else if (!fs::exists(detections)) {
        throw UsageError("detections file '" + detections.string() + "' does not exist");
    }
    const auto log = in_file(a.truth, [&] { return eval::load_ground_truth(a.truth); });
    std::vector<Timestamp> times;
    for (const auto& e : read_changes(detections)) {
        times.push_back(e.time);
    }
    const auto groups = eval::group_events(log, a.window);
    eval::ScoreOptions opts;
    opts.match_window_minutes = a.match_window.value_or(a.window);
    opts.strict = a.strict;
    const auto result = eval::score_detections(times, groups, opts);

    fs::path output = a.output;
    if (output.empty() && !g.store.empty()) {
        output = study::Store(g.store).report_dir() / "validation.txt";
    }
    if (!output.empty()) {
        study::atomic_write(output, [&](std::ostream& o) {
            o << result.summary() << '\n';
            o << "start,end,operator,visibility,members,detected\n";
            const Timestamp w = static_cast<Timestamp>(opts.match_window_minutes) * 60;
            for (const auto& grp : groups) {
                const bool hit = std::any_of(times.begin(), times.end(),
                                             [&](Timestamp t) { return t >= grp.start - w && t <= grp.end + w; });
                o << grp.start << ',' << grp.end << ',' << grp.op << ',' << visibility_text(grp.visibility) << ','
                  << grp.members.size() << ',' << (hit ? 1 : 0) << '\n';
            }
        });
    }
    out << result.summary() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string scenario;
    std::string output;
    std::string truth;
};

int cmd_synth(const Globals& g, const SynthArgs& a, std::ostream& out)
{
    const auto spec = eval::parse_scenario(read_file(a.scenario));
    const auto scenario = eval::generate_scenario(spec, g.seed);
    study::atomic_write(a.output, [&](std::ostream& o) { report::write_snapshots(o, scenario.series); });
    if (!a.truth.empty()) {
        study::atomic_write(a.truth, [&](std::ostream& o) { eval::write_ground_truth(o, scenario.events); });
    }
    out << "wrote " << scenario.series.size() << " snapshots x " << scenario.series.network_count()
        << " networks, " << scenario.events.size() << " ground-truth events (seed " << g.seed << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// collect

struct CollectArgs {
    std::string hostname;
    std::string resolver;
    std::string prefixes;
    std::string output;
    std::string rules;
    Timestamp time = 0;
    std::size_t concurrency = 16;
    int timeout_ms = 2000;
};

int cmd_collect(const CollectArgs& a, std::ostream& out)
{
    const auto resolver = dns::Resolver::parse(a.resolver);
    std::vector<std::string> prefixes;
    {
        std::istringstream in(read_file(a.prefixes));
        std::string line;
        while (std::getline(in, line)) {
            const auto t = text::trim(line);
            if (!t.empty() && t.front() != '#') {
                prefixes.emplace_back(dns::client_prefix(t).text());
            }
        }
    }
    if (prefixes.empty()) {
        throw EmptyInputError("prefix list '" + a.prefixes + "' is empty");
    }
    std::optional<ingest::NsidRules> rules;
    if (!a.rules.empty()) {
        rules = in_file(a.rules, [&] { return ingest::load_nsid_rules(a.rules); });
    }
    dns::LookupOptions opts;
    opts.timeout = std::chrono::milliseconds(a.timeout_ms);
    opts.rules = rules ? &*rules : nullptr;
    const auto labels = dns::edns_cs_lookup_many(a.hostname, prefixes, resolver, opts, std::max<std::size_t>(1, a.concurrency));

    Snapshot snap;
    snap.time = a.time;
    std::size_t unknown = 0;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
        snap.entries[NetworkId(prefixes[i])] = labels[i];
        unknown += labels[i].is_unknown();
    }
    const std::vector<Snapshot> snaps{snap};
    study::atomic_write(a.output, [&](std::ostream& o) { report::write_snapshots(o, std::span<const Snapshot>(snaps)); });
    out << "looked up " << prefixes.size() << " prefixes (" << unknown << " unanswered)\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Routing-mode analysis for anycast catchment observations", "routemodes"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "Study configuration (JSON)");
    app.add_option("--store", g.store, "Store directory");
    app.add_option("--seed", g.seed, "Seed for scenario generation");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Parse observation files into the store");
    ingest->add_option("files", ingest_args.files, "Observation files (in addition to the configured inputs)");
    ingest->add_option("--format", ingest_args.format, "canonical, verfploeter, traceroute or nsid")
        ->capture_default_str();
    ingest->add_option("--time", ingest_args.time, "Observation time for traceroute files");
    ingest->add_option("--focus-hop", ingest_args.focus_hop, "Hop that defines the catchment (1-10)");
    ingest->add_option("--rules", ingest_args.rules, "Identifier rules for nsid files");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Similarity matrix, routing modes and change events");
    analyze->add_option("--threshold", analyze_args.threshold, "Fixed clustering distance threshold");
    analyze->add_option("--threads", analyze_args.threads, "Worker threads (0 = all cores)");

    ReportArgs report_args;
    auto* rep = app.add_subcommand("report", "Figures and tables from an analysis");
    rep->add_option("--pair", report_args.pairs, "Transition table for FROM:TO (repeatable)");
    rep->add_option("--highlight", report_args.highlight, "Flag off-diagonal moves at or above this weight");

    ValidateArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Score change events against a ground-truth log");
    validate->add_option("--truth", validate_args.truth, "Ground-truth log (time,operator,visibility)")->required();
    validate->add_option("--detections", validate_args.detections, "Change events (time,score); default from the store");
    validate->add_option("--out", validate_args.output, "Report file");
    validate->add_option("--window", validate_args.window, "Grouping window in minutes")->capture_default_str();
    validate->add_option("--match-window", validate_args.match_window, "Detection match window in minutes");
    validate->add_flag("--strict", validate_args.strict, "Count unmatched detections as false positives");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario with ground truth");
    synth->add_option("--scenario", synth_args.scenario, "Scenario document (JSON)")->required();
    synth->add_option("--out", synth_args.output, "Observation file to write")->required();
    synth->add_option("--truth", synth_args.truth, "Ground-truth log to write");

    CollectArgs collect_args;
    auto* collect = app.add_subcommand("collect", "EDNS client-subnet lookups for a prefix list");
    collect->add_option("--hostname", collect_args.hostname, "Name to resolve")->required();
    collect->add_option("--resolver", collect_args.resolver, "Resolver address[:port]")->required();
    collect->add_option("--prefixes", collect_args.prefixes, "File with one client prefix per line")->required();
    collect->add_option("--time", collect_args.time, "Observation time (epoch seconds)")->required();
    collect->add_option("--out", collect_args.output, "Observation file to write")->required();
    collect->add_option("--rules", collect_args.rules, "Identifier rules mapping CNAMEs to sites");
    collect->add_option("--concurrency", collect_args.concurrency, "Queries in flight")->capture_default_str();
    collect->add_option("--timeout-ms", collect_args.timeout_ms, "Per-query timeout")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) {
            return cmd_ingest(g, ingest_args, out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(g, analyze_args, out);
        }
        if (rep->parsed()) {
            return cmd_report(g, report_args, out);
        }
        if (validate->parsed()) {
            return cmd_validate(g, validate_args, out);
        }
        if (synth->parsed()) {
            return cmd_synth(g, synth_args, out);
        }
        if (collect->parsed()) {
            return cmd_collect(collect_args, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}

} // namespace routemodes::cli
