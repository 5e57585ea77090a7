#include "routemodes/study.hpp"

#include "routemodes/text.hpp"

#include "json.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <fstream>
#include <set>
#include <sstream>

namespace routemodes::study {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        throw ConfigError(std::string(where) + " must be an object");
    }
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback)
{
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : it->get<T>();
}

Ipv4Prefix prefix_of(const std::string& text)
{
    const auto p = Ipv4Prefix::parse(text);
    if (!p) {
        throw ConfigError("invalid prefix '" + text + "'");
    }
    return *p;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            throw Error("SHA-256 unavailable");
        }
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }

    std::string hex()
    {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, digest, &len);
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += kDigits[digest[i] >> 4];
            out += kDigits[digest[i] & 15];
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

} // namespace

SourceFormat parse_source_format(std::string_view raw)
{
    const auto t = text::to_lower(text::trim(raw));
    if (t == "canonical") {
        return SourceFormat::Canonical;
    }
    if (t == "verfploeter") {
        return SourceFormat::Verfploeter;
    }
    if (t == "traceroute") {
        return SourceFormat::Traceroute;
    }
    if (t == "nsid") {
        return SourceFormat::Nsid;
    }
    throw ConfigError("unknown input format '" + std::string(raw) +
                      "' (expected canonical, verfploeter, traceroute or nsid)");
}

std::string_view source_format_name(SourceFormat format)
{
    switch (format) {
    case SourceFormat::Canonical:
        return "canonical";
    case SourceFormat::Verfploeter:
        return "verfploeter";
    case SourceFormat::Traceroute:
        return "traceroute";
    case SourceFormat::Nsid:
        return "nsid";
    }
    return "canonical";
}

std::string StudyConfig::cleaning_fingerprint() const
{
    json doc;
    std::vector<std::string> labels;
    for (const auto& l : cleaning.reject_labels) {
        labels.push_back(l.text());
    }
    std::vector<std::string> nets;
    for (const auto& p : cleaning.reject_networks) {
        nets.push_back(p.text());
    }
    doc["reject_labels"] = labels;
    doc["reject_networks"] = nets;
    doc["min_share"] = text::exact(cleaning.min_share);
    doc["max_gap"] = cleaning.max_gap;
    return doc.dump();
}

StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir)
{
    StudyConfig cfg;
    try {
        const auto doc = json::parse(json_text);
        check_keys(doc, "study",
                   {"version", "inputs", "focus_hop", "weights", "cleaning", "clustering", "detection", "report"});
        const auto version = get_or<int>(doc, "version", 0);
        if (version != 1) {
            throw ConfigError("unsupported study version " + std::to_string(version) + " (expected 1)");
        }
        cfg.focus_hop = get_or<int>(doc, "focus_hop", cfg.focus_hop);
        if (cfg.focus_hop < 1 || cfg.focus_hop > 10) {
            throw ConfigError("focus_hop must be in 1..10");
        }

        for (const auto& in : get_or<json>(doc, "inputs", json::array())) {
            check_keys(in, "input", {"path", "format", "time", "focus_hop", "rules"});
            InputSpec spec;
            spec.path = resolve(base_dir, in.at("path").get<std::string>());
            spec.format = parse_source_format(get_or<std::string>(in, "format", "canonical"));
            if (in.contains("time")) {
                spec.time = in.at("time").get<Timestamp>();
            }
            if (in.contains("focus_hop")) {
                spec.focus_hop = in.at("focus_hop").get<int>();
            }
            if (in.contains("rules")) {
                spec.rules = resolve(base_dir, in.at("rules").get<std::string>());
            }
            if (spec.format == SourceFormat::Traceroute && !spec.time) {
                throw ConfigError("traceroute input '" + spec.path.string() + "' needs a time");
            }
            if (spec.format == SourceFormat::Nsid && spec.rules.empty()) {
                throw ConfigError("nsid input '" + spec.path.string() + "' needs a rules file");
            }
            cfg.inputs.push_back(std::move(spec));
        }

        if (const auto it = doc.find("weights"); it != doc.end()) {
            check_keys(*it, "weights", {"mode", "path", "coverage"});
            const auto mode = text::to_lower(get_or<std::string>(*it, "mode", "uniform"));
            if (mode == "uniform") {
                cfg.weights.mode = WeightMode::Uniform;
            } else if (mode == "traffic") {
                cfg.weights.mode = WeightMode::Traffic;
                cfg.weights.path = resolve(base_dir, it->at("path").get<std::string>());
            } else if (mode == "prefix") {
                cfg.weights.mode = WeightMode::Prefix;
                for (const auto& p : it->at("coverage")) {
                    cfg.weights.coverage.push_back(prefix_of(p.get<std::string>()));
                }
            } else {
                throw ConfigError("unknown weight mode '" + mode + "' (expected uniform, traffic or prefix)");
            }
        }

        if (const auto it = doc.find("cleaning"); it != doc.end()) {
            check_keys(*it, "cleaning", {"reject_labels", "reject_networks", "min_share", "max_gap"});
            for (const auto& l : get_or<json>(*it, "reject_labels", json::array())) {
                cfg.cleaning.reject_labels.push_back(CatchmentLabel::parse(l.get<std::string>()));
            }
            for (const auto& p : get_or<json>(*it, "reject_networks", json::array())) {
                cfg.cleaning.reject_networks.push_back(prefix_of(p.get<std::string>()));
            }
            cfg.cleaning.min_share = get_or<double>(*it, "min_share", 0.0);
            cfg.cleaning.max_gap = get_or<int>(*it, "max_gap", cfg.cleaning.max_gap);
            if (!(cfg.cleaning.min_share >= 0.0 && cfg.cleaning.min_share < 1.0)) {
                throw ConfigError("min_share must be in [0, 1)");
            }
            if (cfg.cleaning.max_gap < 0) {
                throw ConfigError("max_gap must not be negative");
            }
        }

        if (const auto it = doc.find("clustering"); it != doc.end()) {
            check_keys(*it, "clustering", {"max_modes", "min_size", "step", "linkage", "rule", "threshold"});
            auto& c = cfg.clustering;
            c.max_modes = get_or<std::size_t>(*it, "max_modes", c.max_modes);
            c.min_size = get_or<std::size_t>(*it, "min_size", c.min_size);
            c.step = get_or<double>(*it, "step", c.step);
            c.linkage = analysis::parse_linkage(get_or<std::string>(*it, "linkage", "average"));
            c.rule = analysis::parse_qualify_rule(get_or<std::string>(*it, "rule", "every"));
            if (it->contains("threshold") && !it->at("threshold").is_null()) {
                c.threshold = it->at("threshold").get<double>();
                if (!(*c.threshold >= 0.0 && *c.threshold <= 1.0)) {
                    throw ConfigError("threshold must be in [0, 1]");
                }
            }
            if (c.max_modes < 1 || c.min_size < 1 || !(c.step > 0.0 && c.step <= 1.0)) {
                throw ConfigError("clustering needs max_modes >= 1, min_size >= 1 and 0 < step <= 1");
            }
        }

        if (const auto it = doc.find("detection"); it != doc.end()) {
            check_keys(*it, "detection", {"window", "delta"});
            cfg.detection.window = get_or<std::size_t>(*it, "window", cfg.detection.window);
            cfg.detection.delta = get_or<double>(*it, "delta", cfg.detection.delta);
            if (cfg.detection.window == 0) {
                throw ConfigError("detection window must be positive");
            }
        }

        if (const auto it = doc.find("report"); it != doc.end()) {
            check_keys(*it, "report", {"pairs", "highlight", "site_order"});
            for (const auto& p : get_or<json>(*it, "pairs", json::array())) {
                if (!p.is_array() || p.size() != 2) {
                    throw ConfigError("report pairs are [from_time, to_time]");
                }
                cfg.report.pairs.emplace_back(p[0].get<Timestamp>(), p[1].get<Timestamp>());
            }
            if (it->contains("highlight")) {
                cfg.report.highlight = it->at("highlight").get<double>();
            }
            for (const auto& l : get_or<json>(*it, "site_order", json::array())) {
                cfg.report.site_order.push_back(CatchmentLabel::parse(l.get<std::string>()));
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid study configuration: ") + e.what());
    }
    return cfg;
}

StudyConfig load_study(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open study configuration '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_study(buf.str(), path.parent_path());
}

std::string sha256_hex(std::string_view data)
{
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    try {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + tmp.string() + "'");
        }
        writer(out);
        out.flush();
        if (!out) {
            throw Error("write to '" + tmp.string() + "' failed");
        }
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
    std::filesystem::rename(tmp, path);
}

void atomic_write(const std::filesystem::path& path, std::string_view content)
{
    atomic_write(path, [&](std::ostream& out) { out << content; });
}

} // namespace routemodes::study
