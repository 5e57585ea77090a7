#pragma once

// Regression fixtures from published measurements: a snapshot pair whose
// transition matrix is a large drain of the STR site, a snapshot with known
// per-site counts, and a maintenance log with detections that reproduce a
// known confusion table.

#include "routemodes/core.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace fixtures {

using namespace routemodes;

inline const std::vector<std::string>& site_axis()
{
    static const std::vector<std::string> axis{"CMH", "NAP", "STR", "NRT", "SAT", "HNL", "error", "other"};
    return axis;
}

inline CatchmentLabel site_label(std::size_t i)
{
    return CatchmentLabel::parse(site_axis()[i]);
}

/// 2024-03-04 21:56 -> 22:00 UTC. Rows are the initial state.
inline const std::array<std::array<int, 8>, 8>& drain_table()
{
    static const std::array<std::array<int, 8>, 8> table{{
        {1352, 0, 0, 1, 0, 0, 16, 0},
        {0, 1939, 0, 1, 0, 0, 272, 0},
        {0, 3097, 625, 4, 0, 0, 1542, 0},
        {1, 2, 0, 985, 0, 0, 30, 0},
        {1, 0, 0, 1, 472, 0, 2, 0},
        {0, 0, 0, 0, 0, 12, 1, 0},
        {17, 45, 15, 14, 7, 0, 309, 0},
        {0, 0, 0, 0, 0, 0, 1, 46},
    }};
    return table;
}

/// One network per table unit, so uniform weights reproduce every cell.
inline std::pair<Snapshot, Snapshot> drain_transition()
{
    Snapshot before;
    Snapshot after;
    before.time = 1709589360; // 21:56 UTC
    after.time = 1709589600;  // 22:00 UTC
    const auto& table = drain_table();
    std::size_t next = 0;
    for (std::size_t from = 0; from < 8; ++from) {
        for (std::size_t to = 0; to < 8; ++to) {
            for (int k = 0; k < table[from][to]; ++k) {
                const NetworkId id("vp" + std::to_string(next++));
                before.entries[id] = site_label(from);
                after.entries[id] = site_label(to);
            }
        }
    }
    return {before, after};
}

/// Per-site counts on 2020-03-01, in axis order.
inline const std::array<double, 8>& aggregate_counts()
{
    static const std::array<double, 8> counts{1350, 2200, 5200, 1000, 480, 10, 560, 50};
    return counts;
}

inline Snapshot aggregate_snapshot()
{
    Snapshot s;
    s.time = 1583020800; // 2020-03-01
    std::size_t next = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        for (int k = 0; k < static_cast<int>(aggregate_counts()[i]); ++k) {
            s.entries[NetworkId("vp" + std::to_string(next++))] = site_label(i);
        }
    }
    return s;
}

/// Four months of maintenance log: 98 entries that group into 56 groups
/// (17 drain, 2 traffic engineering, 37 internal only), plus detections of
/// every external group, 8 internal groups, and 10 changes with no logged
/// cause.
struct ValidationFixture {
    std::vector<GroundTruthEvent> log;
    std::vector<Timestamp> detections;
};

inline ValidationFixture maintenance_validation()
{
    constexpr Timestamp start = 1677628800; // 2023-03-01
    constexpr Timestamp day = 86400;
    ValidationFixture f;
    std::size_t extra_members = 98 - 56;
    for (int g = 0; g < 56; ++g) {
        const Timestamp t = start + g * 2 * day + (g % 7) * 3600;
        const std::string op = g % 3 == 0 ? "ops-b" : "ops-a";
        Visibility v = Visibility::Internal;
        if (g < 17) {
            v = Visibility::Drain;
        } else if (g < 19) {
            v = Visibility::TrafficEngineering;
        }
        // external groups open with an internal step, as a drain usually
        // follows preparation on the servers
        if (is_external(v) && extra_members > 0) {
            f.log.push_back({t, op, Visibility::Internal});
            f.log.push_back({t + 5 * 60, op, v});
            --extra_members;
        } else {
            f.log.push_back({t, op, v});
        }
        // chain further entries 8 minutes apart
        for (int k = 1; k <= 2 && extra_members > 0 && g >= 19 && g % 2 == 0; ++k) {
            f.log.push_back({t + k * 8 * 60, op, Visibility::Internal});
            --extra_members;
        }
        if (g < 19 + 8) {
            f.detections.push_back(t + 6 * 60);
        }
    }
    // third-party changes on the days between groups
    for (int k = 0; k < 10; ++k) {
        f.detections.push_back(start + (2 * k + 1) * day + 11 * 3600);
    }
    return f;
}

} // namespace fixtures
