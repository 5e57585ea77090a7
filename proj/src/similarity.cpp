#include "routemodes/analysis.hpp"

#include <algorithm>
#include <thread>

namespace routemodes::analysis {

double similarity(const Snapshot& a, const Snapshot& b, const WeightVector& weights)
{
    double matched = 0.0;
    double total = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    // merge walk over the sorted key union
    while (ia != a.entries.end() || ib != b.entries.end()) {
        if (ib == b.entries.end() || (ia != a.entries.end() && ia->first < ib->first)) {
            total += weights.weight(ia->first);
            ++ia;
        } else if (ia == a.entries.end() || ib->first < ia->first) {
            total += weights.weight(ib->first);
            ++ib;
        } else {
            const double w = weights.weight(ia->first);
            total += w;
            if (ia->second == ib->second && !ia->second.is_unknown()) {
                matched += w;
            }
            ++ia;
            ++ib;
        }
    }
    if (!(total > 0.0)) {
        throw DomainError("similarity needs a positive total weight");
    }
    return matched / total;
}

double similarity(const SnapshotSeries& series, std::size_t i, std::size_t j, std::span<const double> weights)
{
    const auto a = series.codes(i);
    const auto b = series.codes(j);
    double matched = 0.0;
    double total = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        total += weights[n];
        if (a[n] == b[n] && a[n] != kUnknownCode) {
            matched += weights[n];
        }
    }
    if (!(total > 0.0)) {
        throw DomainError("similarity needs a positive total weight");
    }
    return matched / total;
}

namespace {

constexpr std::size_t kAccumulatorGroups = 16;

// Matched weight of every unordered pair (i <= j) over networks [begin, end).
void block_sums(const SnapshotSeries& series, std::span<const double> w, std::size_t begin, std::size_t end,
                std::span<double> out)
{
    const auto steps = series.size();
    std::size_t cell = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        const LabelCode* a = series.codes(i).data();
        for (std::size_t j = i; j < steps; ++j) {
            const LabelCode* b = series.codes(j).data();
            double sum = 0.0;
            for (std::size_t n = begin; n < end; ++n) {
                const bool match = (a[n] == b[n]) & (a[n] != kUnknownCode);
                sum += match ? w[n] : 0.0;
            }
            out[cell++] = sum;
        }
    }
}

} // namespace

SimilarityMatrix similarity_matrix(const SnapshotSeries& series, const WeightVector& weights,
                                   const MatrixOptions& options)
{
    const auto steps = series.size();
    if (steps == 0) {
        throw DomainError("similarity matrix needs at least one snapshot");
    }
    const auto w = series.dense_weights(weights);
    double total = 0.0;
    for (const double x : w) {
        total += x;
    }
    if (!(total > 0.0)) {
        throw DomainError("similarity needs a positive total weight");
    }

    const auto networks = series.network_count();
    const auto block = std::max<std::size_t>(options.block, 1);
    const auto blocks = std::max<std::size_t>((networks + block - 1) / block, 1);
    const auto pairs = steps * (steps + 1) / 2;
    // Blocks are split into a fixed number of contiguous groups, each with its
    // own accumulator; the thread count only decides who runs a group.
    const auto groups = std::min<std::size_t>(blocks, kAccumulatorGroups);
    std::vector<double> partial(groups * pairs, 0.0);

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, groups));
    const auto run = [&](unsigned worker) {
        std::vector<double> sums(pairs);
        for (std::size_t g = worker; g < groups; g += threads) {
            auto acc = std::span(partial).subspan(g * pairs, pairs);
            const auto first = g * blocks / groups;
            const auto last = (g + 1) * blocks / groups;
            for (std::size_t b = first; b < last; ++b) {
                const auto begin = b * block;
                const auto end = std::min(networks, begin + block);
                block_sums(series, w, begin, end, sums);
                for (std::size_t p = 0; p < pairs; ++p) {
                    acc[p] += sums[p];
                }
            }
        }
    };
    if (threads <= 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(run, t);
        }
    }

    std::vector<double> matched(pairs, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t p = 0; p < pairs; ++p) {
            matched[p] += partial[g * pairs + p];
        }
    }

    std::vector<double> values(steps * steps);
    std::size_t cell = 0;
    for (std::size_t i = 0; i < steps; ++i) {
        for (std::size_t j = i; j < steps; ++j) {
            const double phi = matched[cell++] / total;
            values[i * steps + j] = phi;
            values[j * steps + i] = phi;
        }
    }
    return SimilarityMatrix(series.times(), std::move(values));
}

} // namespace routemodes::analysis
