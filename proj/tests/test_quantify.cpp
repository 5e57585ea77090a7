#include "doctest.h"

#include "routemodes/quantify.hpp"

#include "fixtures.hpp"
#include "support.hpp"

#include <random>
#include <set>
#include <sstream>

using namespace routemodes;
using namespace routemodes::quantify;
using support::S;

namespace {

LatencySample sample(const char* network, double rtt, Timestamp t = 0, CatchmentLabel c = S("LAX"))
{
    return {NetworkId(network), t, rtt, std::move(c)};
}

} // namespace

TEST_CASE("aggregate of the published example snapshot")
{
    const auto a = aggregate(fixtures::aggregate_snapshot(), {});
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(a.count(fixtures::site_label(i)) == fixtures::aggregate_counts()[i]);
    }
    CHECK(a.count(CatchmentLabel::unknown()) == 0.0);
    CHECK(a.total() == 10850.0);
}

TEST_CASE("aggregate examples")
{
    const auto empty = aggregate(Snapshot{}, {});
    CHECK(empty.total() == 0.0);
    CHECK(empty.counts.contains(CatchmentLabel::unknown()));

    WeightVector w;
    w.set("n1", 256);
    const auto one = aggregate(support::snap(0, {{"n1", S("LAX")}}), w);
    CHECK(one.count(S("LAX")) == 256.0);
    CHECK(one.count(S("MIA")) == 0.0);

    // networks absent at one time fall into the UNKNOWN bucket of the series form
    const auto series = support::series_from_rows({"AB", "A?", "??"});
    const auto at1 = aggregate(series, 1, {});
    CHECK(at1.count(S("B")) == 1.0);
    CHECK(at1.count(CatchmentLabel::unknown()) == 2.0);
    CHECK(aggregate_all(series, {}).size() == 2);
}

TEST_CASE("transition matrix of the published drain")
{
    const auto [before, after] = fixtures::drain_transition();
    const auto m = transition_matrix(before, after, {});
    const auto STR = S("STR");
    CHECK(m.cell(STR, S("NAP")) == 3097);
    CHECK(m.cell(STR, CatchmentLabel::error()) == 1542);
    CHECK(m.cell(STR, STR) == 625);
    for (std::size_t from = 0; from < 8; ++from) {
        for (std::size_t to = 0; to < 8; ++to) {
            CHECK(m.cell(fixtures::site_label(from), fixtures::site_label(to)) == fixtures::drain_table()[from][to]);
        }
    }
    const auto a = aggregate(before, {});
    const auto b = aggregate(after, {});
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        CHECK(m.row_sum(k) == a.count(m.labels[k]));
        CHECK(m.column_sum(k) == b.count(m.labels[k]));
    }
    CHECK(m.total() == static_cast<double>(before.entries.size()));
    CHECK(m.from_time == before.time);
    CHECK(m.to_time == after.time);
}

TEST_CASE("transition matrix examples")
{
    const auto a = support::snap(0, {{"n1", S("A")}, {"n2", S("B")}, {"n3", CatchmentLabel::error()}});
    const auto same = transition_matrix(a, a, {});
    const auto agg = aggregate(a, {});
    for (std::size_t i = 0; i < same.labels.size(); ++i) {
        for (std::size_t j = 0; j < same.labels.size(); ++j) {
            if (i != j) {
                CHECK(same.cells[i][j] == 0.0);
            }
        }
        CHECK(same.cells[i][i] == agg.count(same.labels[i]));
    }

    const auto swapped = support::snap(1, {{"n1", S("B")}, {"n2", S("A")}, {"n3", CatchmentLabel::error()}});
    const auto m = transition_matrix(a, swapped, {});
    CHECK(m.cell(S("A"), S("B")) == 1);
    CHECK(m.cell(S("B"), S("A")) == 1);
    CHECK(m.cell(S("A"), S("A")) == 0);
    // sites first, reserved labels last
    CHECK(m.labels.back() == CatchmentLabel::error());

    // a network missing from one side moves to or from UNKNOWN
    const auto partial = transition_matrix(a, support::snap(1, {{"n1", S("A")}}), {});
    CHECK(partial.cell(S("B"), CatchmentLabel::unknown()) == 1);
}

TEST_CASE("transition matrices match the reference and keep their sums")
{
    std::mt19937_64 rng(211);
    for (int round = 0; round < 1000; ++round) {
        const auto c = support::random_case(rng);
        const auto series = SnapshotSeries::from_snapshots(c.snapshots);
        const auto i = rng() % series.size();
        const auto j = rng() % series.size();
        const auto& a = c.snapshots[i];
        const auto& b = c.snapshots[j];

        const auto keyed = transition_matrix(a, b, c.weights);
        std::set<CatchmentLabel> axis(keyed.labels.begin(), keyed.labels.end());
        for (const auto& from : axis) {
            for (const auto& to : axis) {
                CHECK(keyed.cell(from, to) == support::reference_cell(a, b, c.weights, from, to));
            }
        }

        // the series form covers the whole universe
        const auto dense = transition_matrix(series, i, j, c.weights);
        double total = 0.0;
        for (std::size_t n = 0; n < series.network_count(); ++n) {
            total += c.weights.weight(series.universe().at(n));
        }
        CHECK(dense.total() == total);
        const auto ai = aggregate(series, i, c.weights);
        const auto aj = aggregate(series, j, c.weights);
        for (std::size_t k = 0; k < dense.labels.size(); ++k) {
            CHECK(dense.row_sum(k) == ai.count(dense.labels[k]));
            CHECK(dense.column_sum(k) == aj.count(dense.labels[k]));
        }
        CHECK(ai.total() == total);

        const auto self = transition_matrix(series, i, i, c.weights);
        for (std::size_t x = 0; x < self.labels.size(); ++x) {
            for (std::size_t y = 0; y < self.labels.size(); ++y) {
                if (x != y) {
                    CHECK(self.cells[x][y] == 0.0);
                }
            }
        }
    }
}

TEST_CASE("weighted mean latency")
{
    WeightVector w;
    w.set("n2", 3);
    const std::vector<LatencySample> two{sample("n1", 10), sample("n2", 30)};
    CHECK(weighted_mean_latency(two, w) == 25.0);
    const std::vector<LatencySample> single{sample("n1", 42.5)};
    CHECK(weighted_mean_latency(single, {}) == 42.5);
    const std::vector<LatencySample> three{sample("a", 10), sample("b", 20), sample("c", 30)};
    CHECK(weighted_mean_latency(three, {}) == 20.0);
    // a later sample for the same network replaces the earlier one
    const std::vector<LatencySample> repeat{sample("a", 10), sample("b", 20), sample("a", 40)};
    CHECK(weighted_mean_latency(repeat, {}) == 30.0);

    CHECK_THROWS_AS(weighted_mean_latency(std::vector<LatencySample>{}, {}), DomainError);
    WeightVector zero;
    zero.set("a", 0);
    const std::vector<LatencySample> weightless{sample("a", 1)};
    CHECK_THROWS_AS(weighted_mean_latency(weightless, zero), DomainError);
}

TEST_CASE("nearest-rank percentiles")
{
    std::vector<LatencySample> s;
    for (int v = 10; v >= 1; --v) {
        s.push_back(sample("n", v));
    }
    const auto p90 = per_catchment_percentile(s, 90);
    CHECK(p90.at({0, S("LAX")}) == 9.0);
    CHECK(per_catchment_percentile(s, 100).at({0, S("LAX")}) == 10.0);
    CHECK(per_catchment_percentile(s, 50).at({0, S("LAX")}) == 5.0);
    CHECK(per_catchment_percentile(s, 0.1).at({0, S("LAX")}) == 1.0);

    const std::vector<LatencySample> one{sample("n", 7)};
    for (const double p : {1.0, 50.0, 90.0, 100.0}) {
        CHECK(per_catchment_percentile(one, p).at({0, S("LAX")}) == 7.0);
    }

    // groups are (time, catchment)
    const std::vector<LatencySample> mixed{sample("a", 5, 0, S("LAX")), sample("b", 50, 0, S("MIA")),
                                           sample("c", 7, 60, S("LAX"))};
    const auto table = per_catchment_percentile(mixed);
    CHECK(table.size() == 3);
    CHECK(table.at({0, S("MIA")}) == 50.0);
    CHECK_FALSE(table.contains({60, S("MIA")}));

    CHECK_THROWS_AS(per_catchment_percentile(s, 0), ConfigError);
    CHECK_THROWS_AS(per_catchment_percentile(s, 101), ConfigError);
}

TEST_CASE("percentiles are monotone in p")
{
    std::mt19937_64 rng(223);
    std::uniform_real_distribution<double> rtt(1.0, 300.0);
    for (int round = 0; round < 1000; ++round) {
        std::vector<LatencySample> s;
        const auto n = 1 + rng() % 40;
        for (std::size_t k = 0; k < n; ++k) {
            s.push_back(sample("n", rtt(rng), static_cast<Timestamp>(rng() % 2), rng() % 2 ? S("A") : S("B")));
        }
        double prev_p = 1.0 + static_cast<double>(rng() % 50);
        auto prev = per_catchment_percentile(s, prev_p);
        for (double p = prev_p + 7.5; p <= 100.0; p += 7.5) {
            const auto cur = per_catchment_percentile(s, p);
            for (const auto& [key, v] : cur) {
                CHECK(v >= prev.at(key));
            }
            prev = cur;
        }
    }
}

TEST_CASE("latency sample files")
{
    std::istringstream in("time,network,rtt_ms,label\n0,a,12.5,LAX\n60,b,3,error\n");
    const auto s = read_latency_samples(in);
    REQUIRE(s.size() == 2);
    CHECK(s[0].rtt_ms == 12.5);
    CHECK(s[1].catchment == CatchmentLabel::error());
    std::istringstream bad("time,network,rtt_ms,label\n0,a,-1,LAX\n");
    CHECK_THROWS_AS(read_latency_samples(bad), ParseError);
}
