#pragma once

// Study configuration and the on-disk store used by the command-line tool.

#include "routemodes/analysis.hpp"
#include "routemodes/core.hpp"
#include "routemodes/net.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace routemodes::study {

enum class SourceFormat { Canonical, Verfploeter, Traceroute, Nsid };

SourceFormat parse_source_format(std::string_view text);
std::string_view source_format_name(SourceFormat format);

struct InputSpec {
    std::filesystem::path path;
    SourceFormat format = SourceFormat::Canonical;
    std::optional<Timestamp> time; // traceroute inputs
    std::optional<int> focus_hop;  // traceroute inputs, defaults to the study's
    std::filesystem::path rules;   // nsid inputs
};

enum class WeightMode { Uniform, Traffic, Prefix };

struct WeightSpec {
    WeightMode mode = WeightMode::Uniform;
    std::filesystem::path path;       // traffic: network,weight rows
    std::vector<Ipv4Prefix> coverage; // prefix
};

struct CleaningSpec {
    std::vector<CatchmentLabel> reject_labels;
    std::vector<Ipv4Prefix> reject_networks;
    double min_share = 0.0; // 0 disables
    int max_gap = 0;        // 0 disables interpolation
};

struct ClusteringSpec {
    std::size_t max_modes = 15;
    std::size_t min_size = 2;
    double step = 0.01;
    analysis::Linkage linkage = analysis::Linkage::Average;
    analysis::QualifyRule rule = analysis::QualifyRule::EveryCluster;
    std::optional<double> threshold; // skips the adaptive sweep
};

struct ReportSpec {
    std::vector<std::pair<Timestamp, Timestamp>> pairs; // empty: one per change event
    std::optional<double> highlight; // absolute weight; default 5% of each matrix's total
    std::vector<CatchmentLabel> site_order;
};

/// Versioned JSON study document (version 1). Relative paths resolve
/// against the document's directory.
struct StudyConfig {
    std::vector<InputSpec> inputs;
    int focus_hop = 1;
    WeightSpec weights;
    CleaningSpec cleaning;
    ClusteringSpec clustering;
    analysis::DetectOptions detection;
    ReportSpec report;

    /// Canonical JSON of the cleaning section, for cache keys.
    std::string cleaning_fingerprint() const;
};

/// Throws ConfigError on unknown versions, fields of the wrong type or
/// out-of-range values.
StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir = {});
StudyConfig load_study(const std::filesystem::path& path);

/// Hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Fixed layout under one directory.
class Store {
public:
    explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path snapshots() const { return root_ / "snapshots.csv"; }
    std::filesystem::path hops() const { return root_ / "hops.csv"; }
    std::filesystem::path manifest() const { return root_ / "manifest.json"; }
    std::filesystem::path analysis_dir() const { return root_ / "analysis"; }
    std::filesystem::path report_dir() const { return root_ / "report"; }
    std::filesystem::path cache_dir() const { return root_ / "cache"; }

private:
    std::filesystem::path root_;
};

} // namespace routemodes::study
