#pragma once

// Readers that turn observation files into snapshot series, plus the
// identifier-to-site mapping used for DNS-based catchment measurements and
// traceroute hop extraction.

#include "routemodes/core.hpp"

#include <filesystem>
#include <istream>
#include <regex>
#include <string>
#include <vector>

namespace routemodes::ingest {

enum class InputFormat {
    CanonicalRows,   // header time,network,label
    VerfploeterTable // header time,prefix,site
};

InputFormat parse_format(std::string_view text);
std::string_view format_name(InputFormat format);

/// Reads one observation file. Throws ParseError (with line),
/// DuplicateEntryError or EmptyInputError.
SnapshotSeries load_snapshots(const std::filesystem::path& path, InputFormat format);
SnapshotSeries read_snapshots(std::istream& in, InputFormat format);

/// Adds the rows of `in` to an existing builder; returns the row count.
std::size_t append_snapshots(SeriesBuilder& builder, std::istream& in, InputFormat format);

// ---------------------------------------------------------------------------
// NSID / hostname.bind identifiers

struct NsidRule {
    int priority = 0;
    std::string pattern;
    /// Site to assign; `$1`..`$9` are replaced by the pattern's groups.
    std::string site;
};

/// Compiled, priority-ordered rule set. Lower priority wins; equal
/// priorities keep file order.
class NsidRules {
public:
    /// Throws ConfigError when `rules` is empty or a pattern does not compile.
    explicit NsidRules(std::vector<NsidRule> rules);

    /// The first matching rule's site; OTHER when nothing matches.
    CatchmentLabel map(std::string_view identifier) const;

    /// Like map() but nullopt instead of OTHER.
    std::optional<CatchmentLabel> try_map(std::string_view identifier) const;

    std::size_t size() const noexcept { return compiled_.size(); }

private:
    struct Compiled {
        NsidRule rule;
        std::regex regex;
    };
    std::vector<Compiled> compiled_;
};

CatchmentLabel map_nsid(std::string_view identifier, const NsidRules& rules);

/// Rule file rows: priority,pattern,site (header required). Patterns may not
/// contain commas.
NsidRules load_nsid_rules(const std::filesystem::path& path);
NsidRules read_nsid_rules(std::istream& in);

// ---------------------------------------------------------------------------
// Traceroute

inline constexpr int kMaxHops = 10;

struct TracerouteHop {
    int index = 0;            // 1..kMaxHops
    std::string responder;    // empty when unresponsive
    CatchmentLabel label;     // UNKNOWN when unlabeled

    bool viable() const { return !responder.empty() && !label.is_unknown(); }
};

struct TracerouteRecord {
    NetworkId target;
    std::vector<TracerouteHop> hops; // strictly increasing index
};

/// One record per line: `target|hop,responder,label|...`; `*` marks an
/// unresponsive hop. Throws ParseError on malformed lines.
std::vector<TracerouteRecord> read_traceroutes(std::istream& in);
std::vector<TracerouteRecord> load_traceroutes(const std::filesystem::path& path);
TracerouteRecord parse_traceroute_line(std::string_view line, std::size_t line_number = 0);

/// Label at `focus_hop` if viable, else the nearest viable hop (ties go to
/// the lower hop index), else UNKNOWN. Throws ConfigError when focus_hop is
/// outside 1..10.
CatchmentLabel extract_hop_catchment(const TracerouteRecord& record, int focus_hop);

/// One snapshot at `time` labeling every target by its focus hop.
Snapshot traceroute_snapshot(std::span<const TracerouteRecord> records, Timestamp time, int focus_hop);

} // namespace routemodes::ingest
