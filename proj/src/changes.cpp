#include "routemodes/analysis.hpp"

#include <algorithm>

namespace routemodes::analysis {

namespace {

double median(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return (values[mid - 1] + values[mid]) / 2.0;
}

std::vector<ChangeEvent> events_from(const std::vector<BoundaryScore>& scores, double delta)
{
    std::vector<ChangeEvent> out;
    for (const auto& s : scores) {
        if (s.score > delta) {
            out.push_back({s.time, s.score});
        }
    }
    return out;
}

} // namespace

std::vector<BoundaryScore> boundary_scores(std::span<const Timestamp> times, std::span<const double> consecutive_phi,
                                           std::size_t window)
{
    if (times.size() != consecutive_phi.size() + 1) {
        throw ConfigError("need one similarity per consecutive pair of times");
    }
    if (window == 0) {
        throw ConfigError("detection window must be positive");
    }
    std::vector<BoundaryScore> out;
    out.reserve(consecutive_phi.size());
    for (std::size_t i = 0; i < consecutive_phi.size(); ++i) {
        const std::size_t first = i > window ? i - window : 0;
        std::vector<double> history(consecutive_phi.begin() + static_cast<std::ptrdiff_t>(first),
                                    consecutive_phi.begin() + static_cast<std::ptrdiff_t>(i));
        if (history.empty()) {
            history.push_back(consecutive_phi[i]);
        }
        BoundaryScore s;
        s.time = times[i + 1];
        s.phi = consecutive_phi[i];
        s.baseline = median(std::move(history));
        s.score = s.baseline - s.phi;
        out.push_back(s);
    }
    return out;
}

std::vector<ChangeEvent> detect_changes(const SnapshotSeries& series, const WeightVector& weights,
                                        const DetectOptions& options)
{
    if (series.size() < 2) {
        throw DomainError("change detection needs at least two snapshots");
    }
    const auto w = series.dense_weights(weights);
    std::vector<double> phi;
    phi.reserve(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        phi.push_back(similarity(series, i, i + 1, w));
    }
    return events_from(boundary_scores(series.times(), phi, options.window), options.delta);
}

std::vector<ChangeEvent> detect_changes(const SimilarityMatrix& matrix, const DetectOptions& options)
{
    if (matrix.size() < 2) {
        throw DomainError("change detection needs at least two snapshots");
    }
    std::vector<double> phi;
    for (std::size_t i = 0; i + 1 < matrix.size(); ++i) {
        phi.push_back(matrix.at(i, i + 1));
    }
    return events_from(boundary_scores(matrix.times(), phi, options.window), options.delta);
}

} // namespace routemodes::analysis
