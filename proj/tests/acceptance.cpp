// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   acceptance [--only N]...

#include "routemodes/analysis.hpp"
#include "routemodes/cli.hpp"
#include "routemodes/eval.hpp"
#include "routemodes/prep.hpp"
#include "routemodes/quantify.hpp"

#include "fixtures.hpp"
#include "support.hpp"

#include "CLI11.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace routemodes;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects failed checks; the first few are kept for the report line.
class Checker {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            ++failures_;
            if (failures_ <= 3) {
                notes_ += (notes_.empty() ? "" : "; ") + what;
            }
        }
    }
    std::size_t failures() const { return failures_; }
    Outcome outcome(const std::string& summary) const
    {
        if (failures_ == 0) {
            return {true, summary};
        }
        return {false, summary + "; " + std::to_string(failures_) + " failed checks: " + notes_};
    }

private:
    std::size_t failures_ = 0;
    std::string notes_;
};

std::string fmt(double v, int decimals = 3)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << v;
    return s.str();
}

double peak_rss_gb()
{
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return static_cast<double>(u.ru_maxrss) / (1024.0 * 1024.0); // ru_maxrss is KiB on Linux
}

// ---------------------------------------------------------------------------

Outcome confusion_regression()
{
    const auto f = fixtures::maintenance_validation();
    const auto r = eval::score_detections(f.detections, eval::group_events(f.log));
    Checker c;
    c.expect(r.tp == 19, "tp=" + std::to_string(r.tp));
    c.expect(r.fn == 0, "fn=" + std::to_string(r.fn));
    c.expect(r.tn == 29, "tn=" + std::to_string(r.tn));
    c.expect(r.fp == 8, "fp=" + std::to_string(r.fp));
    c.expect(r.extra == 10, "extra=" + std::to_string(r.extra));
    c.expect(r.recall == 1.0, "recall");
    c.expect(std::abs(r.accuracy - 0.857) <= 0.001, "accuracy");
    c.expect(std::abs(r.precision - 0.704) <= 0.001, "precision");
    return c.outcome(r.summary());
}

Outcome transition_regression()
{
    const auto [before, after] = fixtures::drain_transition();
    const auto m = quantify::transition_matrix(before, after, {});
    const auto a = quantify::aggregate(before, {});
    const auto b = quantify::aggregate(after, {});
    const auto STR = CatchmentLabel::parse("STR");
    Checker c;
    c.expect(m.cell(STR, CatchmentLabel::parse("NAP")) == 3097, "STR>NAP");
    c.expect(m.cell(STR, CatchmentLabel::error()) == 1542, "STR>err");
    c.expect(m.cell(STR, STR) == 625, "STR>STR");
    double grand = 0.0;
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        c.expect(m.row_sum(k) == a.count(m.labels[k]), "row " + m.labels[k].text());
        c.expect(m.column_sum(k) == b.count(m.labels[k]), "column " + m.labels[k].text());
        grand += m.row_sum(k);
    }
    c.expect(m.total() == grand && grand == static_cast<double>(before.entries.size()), "grand total");
    return c.outcome("STR>NAP=" + fmt(m.cell(STR, CatchmentLabel::parse("NAP")), 0) + " STR>err=" +
                     fmt(m.cell(STR, CatchmentLabel::error()), 0) + " STR>STR=" + fmt(m.cell(STR, STR), 0) +
                     " total=" + fmt(m.total(), 0));
}

Outcome aggregate_regression()
{
    const auto a = quantify::aggregate(fixtures::aggregate_snapshot(), {});
    Checker c;
    std::string got;
    for (std::size_t i = 0; i < 8; ++i) {
        const double v = a.count(fixtures::site_label(i));
        c.expect(v == fixtures::aggregate_counts()[i], fixtures::site_axis()[i]);
        got += (i ? "," : "") + fmt(v, 0);
    }
    return c.outcome("A=[" + got + "]");
}

/// Consecutive Φ over a stable scenario with 45% of networks unknown.
std::vector<double> unknown_coverage_phis(double persistence, std::uint64_t seed)
{
    eval::ScenarioSpec spec;
    spec.networks = 10000;
    spec.sites = {"LAX", "MIA", "AMS", "NRT"};
    spec.segments = {{40, 1.0}};
    spec.unknown = 0.45;
    spec.unknown_persistence = persistence;
    const auto s = eval::generate_scenario(spec, seed);
    const std::vector<double> w(s.series.network_count(), 1.0);
    std::vector<double> out;
    for (std::size_t t = 1; t < s.series.size(); ++t) {
        out.push_back(analysis::similarity(s.series, t - 1, t, w));
    }
    return out;
}

Outcome unknown_coverage()
{
    const auto phis = unknown_coverage_phis(1.0, 45);
    const auto again = unknown_coverage_phis(1.0, 45);
    const auto in_band = std::count_if(phis.begin(), phis.end(), [](double p) { return p >= 0.50 && p <= 0.60; });
    const double share = static_cast<double>(in_band) / static_cast<double>(phis.size());
    Checker c;
    c.expect(share >= 0.95, "only " + fmt(share) + " of boundaries in [0.50, 0.60]");
    c.expect(phis == again, "not seed-deterministic");
    const auto [lo, hi] = std::minmax_element(phis.begin(), phis.end());
    return c.outcome("persistent unknowns: Φ in [" + fmt(*lo) + ", " + fmt(*hi) + "], " + fmt(100 * share, 1) +
                     "% of boundaries in band");
}

/// Adjusted Rand index of two labelings of the same items.
double adjusted_rand(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y)
{
    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::map<std::size_t, double> rows;
    std::map<std::size_t, double> cols;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++cells[{x[i], y[i]}];
        ++rows[x[i]];
        ++cols[y[i]];
    }
    const auto pairs = [](double n) { return n * (n - 1) / 2; };
    double index = 0;
    double a = 0;
    double b = 0;
    for (const auto& [k, n] : cells) {
        index += pairs(n);
    }
    for (const auto& [k, n] : rows) {
        a += pairs(n);
    }
    for (const auto& [k, n] : cols) {
        b += pairs(n);
    }
    const double expected = a * b / pairs(static_cast<double>(x.size()));
    const double max = (a + b) / 2;
    return max == expected ? 1.0 : (index - expected) / (max - expected);
}

Outcome mode_recovery()
{
    eval::ScenarioSpec spec;
    spec.networks = 10000;
    spec.sites = {"LAX", "MIA", "AMS", "NRT"};
    spec.segments = {{20, 1.0}, {20, 0.6}, {20, 0.6}};
    spec.churn = 0.01;
    spec.unknown = 0.1;
    const auto s = eval::generate_scenario(spec, 7);
    const auto matrix = analysis::similarity_matrix(s.series, {});
    const double threshold = analysis::adaptive_threshold(matrix);
    const auto modes = analysis::hac_cluster(matrix, threshold);
    const auto events = analysis::detect_changes(matrix);

    std::vector<std::size_t> found(modes.cluster_of.begin(), modes.cluster_of.end());
    const double ari = adjusted_rand(found, s.segment_of);
    std::set<Timestamp> planted;
    for (const auto& e : s.events) {
        planted.insert(e.time);
    }
    std::set<Timestamp> detected;
    for (const auto& e : events) {
        detected.insert(e.time);
    }
    Checker c;
    c.expect(modes.mode_ids.size() == 3, std::to_string(modes.mode_ids.size()) + " modes");
    c.expect(ari == 1.0, "ARI " + fmt(ari, 4));
    c.expect(planted.size() == 2 && detected == planted && events.size() == 2, "events do not match the boundaries");
    return c.outcome("threshold=" + fmt(threshold, 2) + " modes=" + std::to_string(modes.mode_ids.size()) +
                     " ARI=" + fmt(ari, 4) + " events=" + std::to_string(events.size()));
}

std::vector<Snapshot> padded(const std::vector<Snapshot>& snaps)
{
    std::set<NetworkId> universe;
    for (const auto& s : snaps) {
        for (const auto& [k, l] : s.entries) {
            universe.insert(k);
        }
    }
    auto out = snaps;
    for (auto& s : out) {
        for (const auto& k : universe) {
            s.entries.try_emplace(k, CatchmentLabel::unknown());
        }
    }
    return out;
}

Outcome oracle_equivalence()
{
    std::mt19937_64 rng(6);
    Checker c;
    std::size_t cells = 0;
    for (int round = 0; round < 200; ++round) {
        const auto rc = support::random_case(rng);
        const auto series = SnapshotSeries::from_snapshots(rc.snapshots);
        const auto full = padded(rc.snapshots);
        const auto m = analysis::similarity_matrix(series, rc.weights);
        for (std::size_t i = 0; i < full.size(); ++i) {
            for (std::size_t j = 0; j < full.size(); ++j) {
                c.expect(m.at(i, j) == support::reference_phi(full[i], full[j], rc.weights),
                         "Φ case " + std::to_string(round));
                const auto t = quantify::transition_matrix(rc.snapshots[i], rc.snapshots[j], rc.weights);
                for (const auto& from : t.labels) {
                    for (const auto& to : t.labels) {
                        c.expect(t.cell(from, to) ==
                                     support::reference_cell(rc.snapshots[i], rc.snapshots[j], rc.weights, from, to),
                                 "T case " + std::to_string(round));
                        ++cells;
                    }
                }
            }
        }
    }
    return c.outcome("200 instances, " + std::to_string(cells) + " transition cells");
}

WeightVector scaled(const WeightVector& w, double k)
{
    WeightVector out;
    for (const auto& [id, v] : w.sorted_entries()) {
        out.set(id, v * k);
    }
    return out;
}

/// Index of the largest value; ties within `tol` accept any of the tied indexes.
bool same_argmax(const std::vector<double>& a, const std::vector<double>& b, double tol)
{
    const auto ia = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
    const auto ib = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
    return std::abs(a[ib] - a[ia]) <= tol;
}

Outcome property_suite()
{
    constexpr int kCases = 1000;
    std::mt19937_64 rng(7);
    std::map<std::string, Checker> props;

    for (int round = 0; round < kCases; ++round) {
        const auto rc = support::random_case(rng);
        const auto& snaps = rc.snapshots;
        const auto series = SnapshotSeries::from_snapshots(snaps);
        const auto m = analysis::similarity_matrix(series, rc.weights);
        const auto n = snaps.size();

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double ab = analysis::similarity(snaps[i], snaps[j], rc.weights);
                const double ba = analysis::similarity(snaps[j], snaps[i], rc.weights);
                props["symmetry"].expect(ab == ba && m.at(i, j) == m.at(j, i), "case " + std::to_string(round));
                const double aa = analysis::similarity(snaps[i], snaps[i], rc.weights);
                const double bb = analysis::similarity(snaps[j], snaps[j], rc.weights);
                props["self bound"].expect(ab <= std::min(aa, bb) && m.at(i, j) <= std::min(m.at(i, i), m.at(j, j)),
                                           "case " + std::to_string(round));
            }
        }

        const std::array<double, 4> factors{3.0, 0.25, 1000.0, 1.0 / 1024.0};
        const double k = factors[static_cast<std::size_t>(round) % factors.size()];
        const auto w2 = scaled(rc.weights, k);
        const auto m2 = analysis::similarity_matrix(series, w2);
        auto& scale = props["scale invariance"];
        for (std::size_t v = 0; v < m.values().size(); ++v) {
            scale.expect(std::abs(m.values()[v] - m2.values()[v]) <= 1e-12, "Φ");
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> r1(m.values().begin() + static_cast<long>(i * n),
                                   m.values().begin() + static_cast<long>((i + 1) * n));
            std::vector<double> r2(m2.values().begin() + static_cast<long>(i * n),
                                   m2.values().begin() + static_cast<long>((i + 1) * n));
            scale.expect(same_argmax(r1, r2, 1e-12), "Φ argmax");
            for (auto& x : r1) {
                x = -x;
            }
            for (auto& x : r2) {
                x = -x;
            }
            scale.expect(same_argmax(r1, r2, 1e-12), "Φ argmin");
        }
        const auto i = rng() % n;
        const auto j = rng() % n;
        const auto t1 = quantify::transition_matrix(snaps[i], snaps[j], rc.weights);
        const auto t2 = quantify::transition_matrix(snaps[i], snaps[j], w2);
        std::vector<double> c1;
        std::vector<double> c2;
        for (std::size_t x = 0; x < t1.labels.size(); ++x) {
            c1.insert(c1.end(), t1.cells[x].begin(), t1.cells[x].end());
            c2.insert(c2.end(), t2.cells[x].begin(), t2.cells[x].end());
        }
        const double tol = 1e-9 * std::max(1.0, t1.total());
        for (auto& x : c2) {
            x /= k;
        }
        scale.expect(same_argmax(c1, c2, tol), "transition argmax");
        const auto a1 = quantify::aggregate(snaps[i], rc.weights);
        const auto a2 = quantify::aggregate(snaps[i], w2);
        std::vector<double> g1;
        std::vector<double> g2;
        for (const auto& [label, count] : a1.counts) {
            g1.push_back(count);
            g2.push_back(a2.count(label) / k);
        }
        scale.expect(same_argmax(g1, g2, tol), "aggregate argmax");

        // coarsening: every cluster at a lower threshold sits inside one cluster at a higher one
        if (n >= 2) {
            double lo = static_cast<double>(rng() % 101) / 100.0;
            double hi = static_cast<double>(rng() % 101) / 100.0;
            if (lo > hi) {
                std::swap(lo, hi);
            }
            const auto fine = analysis::hac_cluster(m, lo);
            const auto coarse = analysis::hac_cluster(m, hi);
            std::map<ClusterId, ClusterId> parent;
            bool nested = true;
            for (std::size_t x = 0; x < n; ++x) {
                const auto [it, fresh] = parent.emplace(fine.cluster_of[x], coarse.cluster_of[x]);
                nested = nested && (fresh || it->second == coarse.cluster_of[x]);
            }
            props["monotone coarsening"].expect(nested && coarse.cluster_count() <= fine.cluster_count(),
                                                "case " + std::to_string(round));
        }

        // interpolation over the series of this case
        const int gap = static_cast<int>(rng() % 5);
        const auto once = prep::interpolate_missing(series, gap);
        const auto twice = prep::interpolate_missing(once, gap);
        props["interpolation idempotent"].expect(once == twice, "case " + std::to_string(round));
        bool kept = true;
        for (std::size_t t = 0; t < series.size(); ++t) {
            for (std::size_t x = 0; x < series.network_count(); ++x) {
                const auto& l = series.label_at(t, x);
                kept = kept && (l.is_unknown() || once.label_at(t, x) == l);
            }
        }
        props["interpolation keeps known labels"].expect(kept, "case " + std::to_string(round));

        // prefix weights: disjoint coverage prefixes, observed /24s inside them
        std::vector<Ipv4Prefix> coverage;
        for (std::uint32_t p = 0; p < 1 + rng() % 4; ++p) {
            Ipv4Prefix cp;
            cp.length = 8 + static_cast<int>(rng() % 17);
            cp.network = ((p + 1) << 24 | (static_cast<std::uint32_t>(rng()) & 0x00FFFFFFu)) & cp.mask();
            coverage.push_back(cp);
        }
        std::set<NetworkId> observed;
        for (std::size_t x = 0; x < 1 + rng() % 20; ++x) {
            const auto& cp = coverage[rng() % coverage.size()];
            Ipv4Prefix inner;
            inner.length = 24;
            inner.network = (cp.network | (static_cast<std::uint32_t>(rng()) & ~cp.mask())) & inner.mask();
            observed.insert(NetworkId(inner.text()));
        }
        const auto pw = prep::expand_prefix_weights(observed, coverage);
        bool conserved = true;
        for (const auto& cp : coverage) {
            double sum = 0.0;
            bool any = false;
            for (const auto& id : observed) {
                if (cp.contains(*Ipv4Prefix::parse(id.key))) {
                    sum += pw.weight(id);
                    any = true;
                }
            }
            conserved = conserved && (!any || std::abs(sum - cp.block24_count()) <= 1e-9 * cp.block24_count());
        }
        props["prefix-weight conservation"].expect(conserved, "case " + std::to_string(round));
    }

    Checker all;
    std::string names;
    for (const auto& [name, c] : props) {
        all.expect(c.failures() == 0, name + " (" + std::to_string(c.failures()) + ")");
        names += (names.empty() ? "" : ", ") + name;
    }
    return all.outcome(std::to_string(props.size()) + " properties x " + std::to_string(kCases) + " cases: " + names);
}

Outcome full_scale()
{
    eval::ScenarioSpec spec;
    spec.networks = 5'000'000;
    spec.sites = {"LAX", "MIA", "AMS", "NRT", "SIN", "GRU", "JNB", "SYD"};
    spec.segments = {{10, 1.0}, {10, 0.3}, {10, 0.3}};
    spec.churn = 0.01;
    spec.unknown = 0.45;
    const auto g0 = std::chrono::steady_clock::now();
    const auto s = eval::generate_scenario(spec, 8);
    const auto g1 = std::chrono::steady_clock::now();
    const auto m = analysis::similarity_matrix(s.series, {});
    const auto g2 = std::chrono::steady_clock::now();
    const double build = std::chrono::duration<double>(g1 - g0).count();
    const double matrix = std::chrono::duration<double>(g2 - g1).count();
    const double rss = peak_rss_gb();
    Checker c;
    c.expect(m.size() == 30, "matrix size");
    c.expect(matrix < 300.0, "matrix took " + fmt(matrix, 1) + " s");
    c.expect(rss < 8.0, "peak memory " + fmt(rss, 2) + " GB");
    return c.outcome("5M x 30: matrix " + fmt(matrix, 1) + " s (series build " + fmt(build, 1) + " s), peak RSS " +
                     fmt(rss, 2) + " GB, " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) +
                     " threads");
}

std::map<std::string, std::string> tree_contents(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = support::read_text(e.path());
        }
    }
    return out;
}

Outcome determinism()
{
    const auto dir = support::temp_dir("acceptance-determinism");
    eval::ScenarioSpec spec;
    spec.networks = 4000;
    spec.sites = {"LAX", "MIA", "AMS", "NRT"};
    spec.segments = {{15, 1.0}, {15, 0.6}};
    spec.churn = 0.01;
    spec.unknown = 0.1;
    spec.drains = {{20, "AMS", {{"LAX", 0.5}, {"NRT", 0.5}}, 3}};
    support::write_text(dir / "scenario.json", eval::scenario_json(spec));
    support::write_text(dir / "study.json", R"({"version": 1, "cleaning": {"min_share": 0.001, "max_gap": 2}})");
    const auto store = (dir / "store").string();
    const auto config = (dir / "study.json").string();
    const auto run = [&](std::vector<std::string> args) {
        std::ostringstream out;
        std::ostringstream err;
        args.insert(args.begin(), {"--config", config, "--store", store});
        return cli::run(args, out, err);
    };
    Checker c;
    std::ostringstream ignore;
    c.expect(cli::run({"synth", "--scenario", (dir / "scenario.json").string(), "--out", (dir / "obs.csv").string()},
                      ignore, ignore) == 0,
             "synth");
    c.expect(run({"ingest", (dir / "obs.csv").string()}) == 0, "ingest");

    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 3; ++k) {
        if (k == 2) {
            fs::remove_all(fs::path(store) / "cache"); // third run recomputes the matrix
        }
        c.expect(run({"analyze"}) == 0, "analyze");
        c.expect(run({"report"}) == 0, "report");
        auto files = tree_contents(fs::path(store) / "analysis");
        for (auto& [name, body] : tree_contents(fs::path(store) / "report")) {
            files["report/" + name] = std::move(body);
        }
        runs.push_back(std::move(files));
    }
    c.expect(!runs[0].empty() && runs[0] == runs[1], "second run differs");
    c.expect(runs[0] == runs[2], "run with a cold cache differs");
    return c.outcome(std::to_string(runs[0].size()) + " analyze/report files identical across 2 runs and a cold-cache run");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        const char* name;
        double budget_s; // 0 = no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "confusion-metric regression", 1.0, confusion_regression},
        {2, "transition-matrix regression", 0.0, transition_regression},
        {3, "aggregate regression", 0.0, aggregate_regression},
        {4, "unknown-coverage property", 5.0, unknown_coverage},
        {5, "mode recovery", 10.0, mode_recovery},
        {6, "oracle equivalence", 0.0, oracle_equivalence},
        {7, "property suite", 0.0, property_suite},
        {8, "full-scale feasibility", 0.0, full_scale},
        {9, "determinism", 0.0, determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s, 0) + " s budget";
        }
        failed += !o.pass;
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail
                  << " [" << fmt(secs, 2) << " s]" << std::endl;

        if (c.id == 4) {
            // the independent-per-snapshot reading, for reference only
            const auto phis = unknown_coverage_phis(0.0, 45);
            const auto [lo, hi] = std::minmax_element(phis.begin(), phis.end());
            std::cout << "  note: with unknowns redrawn independently every snapshot, Φ is in [" << fmt(*lo) << ", "
                      << fmt(*hi) << "], outside [0.50, 0.60]; both known needs 0.55^2 of the networks" << std::endl;
        }
    }
    return failed == 0 ? 0 : 1;
}
