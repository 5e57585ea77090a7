#include "routemodes/eval.hpp"

#include "routemodes/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace routemodes::eval {

namespace {

int strength(Visibility v)
{
    switch (v) {
    case Visibility::Drain:
        return 2;
    case Visibility::TrafficEngineering:
        return 1;
    case Visibility::Internal:
        break;
    }
    return 0;
}

double rate(std::size_t num, std::size_t den)
{
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

std::vector<EventGroup> group_events(std::span<const GroundTruthEvent> log, int window_minutes)
{
    if (window_minutes < 0) {
        throw ConfigError("grouping window must not be negative");
    }
    const Timestamp window = static_cast<Timestamp>(window_minutes) * 60;
    std::map<std::string, std::vector<GroundTruthEvent>> by_operator;
    for (const auto& e : log) {
        by_operator[e.op].push_back(e);
    }
    std::vector<EventGroup> groups;
    for (auto& [op, events] : by_operator) {
        std::stable_sort(events.begin(), events.end(),
                         [](const GroundTruthEvent& a, const GroundTruthEvent& b) { return a.time < b.time; });
        for (const auto& e : events) {
            if (groups.empty() || groups.back().op != op || e.time - groups.back().end > window) {
                EventGroup g;
                g.start = e.time;
                g.end = e.time;
                g.op = op;
                g.visibility = e.visibility;
                groups.push_back(std::move(g));
            }
            auto& g = groups.back();
            g.end = e.time;
            if (strength(e.visibility) > strength(g.visibility)) {
                g.visibility = e.visibility;
            }
            g.members.push_back(e);
        }
    }
    std::stable_sort(groups.begin(), groups.end(), [](const EventGroup& a, const EventGroup& b) {
        return a.start != b.start ? a.start < b.start : a.op < b.op;
    });
    return groups;
}

void compute_rates(ConfusionReport& r)
{
    r.accuracy = rate(r.tp + r.tn, r.tp + r.tn + r.fp + r.fn);
    r.recall = rate(r.tp, r.tp + r.fn);
    r.precision = rate(r.tp, r.tp + r.fp);
}

std::string ConfusionReport::summary() const
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "tp=%zu fn=%zu tn=%zu fp=%zu extra=%zu recall=%.3f accuracy=%.3f precision=%.3f", tp,
                  fn, tn, fp, extra, recall, accuracy, precision);
    return buf;
}

ConfusionReport score_detections(std::span<const Timestamp> detections, std::span<const EventGroup> groups,
                                 const ScoreOptions& options)
{
    if (options.match_window_minutes < 0) {
        throw ConfigError("match window must not be negative");
    }
    const Timestamp window = static_cast<Timestamp>(options.match_window_minutes) * 60;
    const auto matches = [window](Timestamp t, const EventGroup& g) {
        return t >= g.start - window && t <= g.end + window;
    };

    ConfusionReport r;
    for (const auto& g : groups) {
        const bool detected =
            std::any_of(detections.begin(), detections.end(), [&](Timestamp t) { return matches(t, g); });
        if (g.external()) {
            ++(detected ? r.tp : r.fn);
        } else {
            ++(detected ? r.fp : r.tn);
        }
    }
    for (const auto t : detections) {
        if (std::none_of(groups.begin(), groups.end(), [&](const EventGroup& g) { return matches(t, g); })) {
            ++r.extra;
        }
    }
    if (options.strict) {
        r.fp += r.extra;
    }
    compute_rates(r);
    return r;
}

std::vector<GroundTruthEvent> read_ground_truth(std::istream& in)
{
    text::CsvReader reader(in, {"time", "operator", "visibility"});
    std::vector<std::string_view> fields;
    std::vector<GroundTruthEvent> out;
    while (reader.next(fields)) {
        const auto time = text::parse_int(fields[0]);
        if (!time) {
            throw ParseError("time '" + std::string(fields[0]) + "' is not an integer", reader.line());
        }
        const auto op = text::trim(fields[1]);
        if (op.empty()) {
            throw ParseError("empty operator", reader.line());
        }
        try {
            out.push_back({*time, std::string(op), parse_visibility(fields[2])});
        } catch (const ParseError& e) {
            throw ParseError(e.what(), reader.line());
        }
    }
    return out;
}

std::vector<GroundTruthEvent> load_ground_truth(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return read_ground_truth(in);
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthEvent> events)
{
    out << "time,operator,visibility\n";
    for (const auto& e : events) {
        out << e.time << ',' << e.op << ',' << visibility_text(e.visibility) << '\n';
    }
}

} // namespace routemodes::eval
