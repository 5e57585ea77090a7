#pragma once

// Fixtures and brute-force reference implementations shared by the tests.

#include "routemodes/core.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace support {

using namespace routemodes;

inline CatchmentLabel S(std::string_view name)
{
    return CatchmentLabel::site(name);
}

inline Snapshot snap(Timestamp t, std::initializer_list<std::pair<const char*, CatchmentLabel>> entries)
{
    Snapshot s;
    s.time = t;
    for (const auto& [k, l] : entries) {
        s.entries[NetworkId(k)] = l;
    }
    return s;
}

/// One label sequence per network over consecutive times 0, 60, 120, ...
/// Letters are sites, '?' is UNKNOWN.
inline SnapshotSeries series_from_rows(const std::vector<std::string>& rows)
{
    SeriesBuilder b;
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const NetworkId id("n" + std::to_string(n));
        b.add_network(id);
        for (std::size_t t = 0; t < rows[n].size(); ++t) {
            b.add_time(static_cast<Timestamp>(t) * 60);
            if (rows[n][t] != '?') {
                b.add(static_cast<Timestamp>(t) * 60, id, S(std::string(1, rows[n][t])));
            }
        }
    }
    return std::move(b).build();
}

/// Labels of one network across the series, '?' for UNKNOWN.
inline std::string row_of(const SnapshotSeries& s, const NetworkId& id)
{
    const auto n = *s.universe().find(id);
    std::string out;
    for (std::size_t t = 0; t < s.size(); ++t) {
        const auto& l = s.label_at(t, n);
        out += l.is_unknown() ? '?' : l.name().front();
    }
    return out;
}

/// Phi straight from the definition over the union of keys.
inline double reference_phi(const Snapshot& a, const Snapshot& b, const WeightVector& w)
{
    std::vector<NetworkId> keys;
    for (const auto& [k, l] : a.entries) {
        keys.push_back(k);
    }
    for (const auto& [k, l] : b.entries) {
        if (!a.entries.contains(k)) {
            keys.push_back(k);
        }
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& k : keys) {
        const auto la = a.label_of(k);
        const auto lb = b.label_of(k);
        const double m = (la == lb && !la.is_unknown()) ? 1.0 : 0.0;
        num += m * w.weight(k);
        den += w.weight(k);
    }
    return num / den;
}

/// Transition cell straight from the definition.
inline double reference_cell(const Snapshot& a, const Snapshot& b, const WeightVector& w,
                             const CatchmentLabel& from, const CatchmentLabel& to)
{
    std::vector<NetworkId> keys;
    for (const auto& [k, l] : a.entries) {
        keys.push_back(k);
    }
    for (const auto& [k, l] : b.entries) {
        if (!a.entries.contains(k)) {
            keys.push_back(k);
        }
    }
    double sum = 0.0;
    for (const auto& k : keys) {
        if (a.label_of(k) == from && b.label_of(k) == to) {
            sum += w.weight(k);
        }
    }
    return sum;
}

/// Random keyed snapshots over a small universe. Some networks are missing
/// from some snapshots; labels are drawn from a few sites plus reserved
/// states.
struct RandomCase {
    std::vector<Snapshot> snapshots;
    WeightVector weights;
};

/// Weights are multiples of 1/16, so every partial sum is exact.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t max_snapshots = 6, std::size_t max_networks = 20)
{
    std::uniform_int_distribution<std::size_t> ns(1, max_snapshots);
    std::uniform_int_distribution<std::size_t> nn(1, max_networks);
    std::uniform_int_distribution<int> label(0, 6);
    std::uniform_int_distribution<int> weight(0, 64);
    const std::vector<CatchmentLabel> pool{S("A"),
                                           S("B"),
                                           S("C"),
                                           CatchmentLabel::error(),
                                           CatchmentLabel::other(),
                                           CatchmentLabel::unknown()};
    RandomCase out;
    const auto snapshots = ns(rng);
    const auto networks = nn(rng);
    for (std::size_t t = 0; t < snapshots; ++t) {
        Snapshot s;
        s.time = static_cast<Timestamp>(t) * 240;
        for (std::size_t n = 0; n < networks; ++n) {
            const int l = label(rng);
            if (l == 6) {
                continue; // absent
            }
            s.entries[NetworkId("k" + std::to_string(n))] = pool[static_cast<std::size_t>(l)];
        }
        out.snapshots.push_back(std::move(s));
    }
    for (std::size_t n = 0; n < networks; ++n) {
        out.weights.set(NetworkId("k" + std::to_string(n)), weight(rng) / 16.0);
    }
    // keep every pairwise total positive
    out.weights.set(NetworkId("k0"), 1.0);
    for (auto& s : out.snapshots) {
        s.entries.try_emplace(NetworkId("k0"), CatchmentLabel::unknown());
    }
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag)
{
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("routemodes-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace support
