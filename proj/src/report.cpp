#include "routemodes/report.hpp"

#include "routemodes/quantify.hpp"
#include "routemodes/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace routemodes::report {

namespace {

std::string hex_gray(int g)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", g, g, g);
    return buf;
}

std::string xml_escape(std::string_view s)
{
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string px(double v)
{
    return text::fixed(v, 2);
}

/// Evenly spaced tick positions, at most `max_ticks`, always including 0.
std::vector<std::size_t> tick_indexes(std::size_t n, std::size_t max_ticks)
{
    std::vector<std::size_t> out;
    if (n == 0) {
        return out;
    }
    const std::size_t every = std::max<std::size_t>(1, (n + max_ticks - 1) / max_ticks);
    for (std::size_t i = 0; i < n; i += every) {
        out.push_back(i);
    }
    return out;
}

constexpr const char* kSvgHeader = "<svg xmlns=\"http://www.w3.org/2000/svg\" ";

const char* const kSitePalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#393b79"};

std::string band_color(const CatchmentLabel& label, std::size_t site_rank)
{
    switch (label.kind()) {
    case LabelKind::Error:
        return "#595959";
    case LabelKind::Other:
        return "#a6a6a6";
    case LabelKind::Unknown:
        return "#d9d9d9";
    case LabelKind::Site:
        break;
    }
    return kSitePalette[site_rank % std::size(kSitePalette)];
}

int reserved_rank(const CatchmentLabel& l)
{
    switch (l.kind()) {
    case LabelKind::Error:
        return 0;
    case LabelKind::Other:
        return 1;
    default:
        return 2;
    }
}

} // namespace

int heatmap_gray(double phi, double lo, double hi)
{
    if (!(hi > lo)) {
        return 0;
    }
    const double g = std::round(255.0 * (hi - phi) / (hi - lo));
    return static_cast<int>(std::clamp(g, 0.0, 255.0));
}

std::string render_heatmap(const SimilarityMatrix& matrix, const ModeAssignment* modes)
{
    const auto n = matrix.size();
    const int cell = n == 0 ? 1 : std::max(1, 640 / static_cast<int>(n));
    const int grid = cell * static_cast<int>(n);
    const int left = 90;
    const int top = 20;
    const int bottom = 110;
    const int width = left + grid + 20;
    const int height = top + grid + bottom;
    const double lo = n ? matrix.min_value() : 0.0;
    const double hi = n ? matrix.max_value() : 0.0;

    std::ostringstream svg;
    svg << kSvgHeader << "width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
        << height << "\" shape-rendering=\"crispEdges\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    svg << "<g id=\"cells\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = 0;
        while (j < n) {
            const int g = heatmap_gray(matrix.at(i, j), lo, hi);
            std::size_t run = j + 1;
            while (run < n && heatmap_gray(matrix.at(i, run), lo, hi) == g) {
                ++run;
            }
            svg << "<rect x=\"" << left + cell * static_cast<int>(j) << "\" y=\"" << top + cell * static_cast<int>(i)
                << "\" width=\"" << cell * static_cast<int>(run - j) << "\" height=\"" << cell << "\" fill=\""
                << hex_gray(g) << "\"/>\n";
            j = run;
        }
    }
    svg << "</g>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << grid << "\" height=\"" << grid
        << "\" fill=\"none\" stroke=\"#000000\"/>\n";

    svg << "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"10\">\n";
    for (const auto i : tick_indexes(n, 8)) {
        const int pos = cell * static_cast<int>(i) + cell / 2;
        const auto date = text::utc_date(matrix.times()[i]);
        svg << "<text x=\"" << left - 4 << "\" y=\"" << top + pos + 3 << "\" text-anchor=\"end\">" << date
            << "</text>\n";
        svg << "<text transform=\"translate(" << left + pos << ',' << top + grid + 6
            << ") rotate(60)\" text-anchor=\"start\">" << date << "</text>\n";
    }
    svg << "</g>\n";

    if (modes != nullptr && modes->cluster_of.size() == n) {
        svg << "<g id=\"modes\" stroke=\"#d62728\" stroke-width=\"2\">\n";
        for (std::size_t i = 1; i < n; ++i) {
            if (modes->cluster_of[i] != modes->cluster_of[i - 1]) {
                const int pos = left + cell * static_cast<int>(i);
                const int ypos = top + cell * static_cast<int>(i);
                svg << "<line x1=\"" << pos << "\" y1=\"" << top - 8 << "\" x2=\"" << pos << "\" y2=\"" << top
                    << "\"/>\n";
                svg << "<line x1=\"" << left - 8 << "\" y1=\"" << ypos << "\" x2=\"" << left << "\" y2=\"" << ypos
                    << "\"/>\n";
            }
        }
        svg << "</g>\n";
    }

    const int ly = top + grid + 80;
    svg << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"10\">\n";
    svg << "<defs><linearGradient id=\"scale\"><stop offset=\"0\" stop-color=\"#ffffff\"/>"
           "<stop offset=\"1\" stop-color=\"#000000\"/></linearGradient></defs>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << ly << "\" width=\"120\" height=\"10\" fill=\"url(#scale)\" "
        << "stroke=\"#000000\"/>\n";
    svg << "<text x=\"" << left + 126 << "\" y=\"" << ly + 9 << "\">similarity " << text::fixed(lo, 4) << " (white) to "
        << text::fixed(hi, 4) << " (black), scaled to the observed range</text>\n";
    svg << "</g>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::vector<CatchmentLabel> stack_order(std::span<const AggregateVector> series,
                                        std::span<const CatchmentLabel> preferred)
{
    std::map<CatchmentLabel, double> sums;
    for (const auto& a : series) {
        for (const auto& [label, count] : a.counts) {
            sums[label] += count;
        }
    }
    std::erase_if(sums, [](const auto& kv) { return !(kv.second > 0.0); });

    std::vector<CatchmentLabel> out;
    std::set<CatchmentLabel> placed;
    for (const auto& l : preferred) {
        if (sums.contains(l) && placed.insert(l).second) {
            out.push_back(l);
        }
    }
    std::vector<std::pair<CatchmentLabel, double>> sites;
    std::vector<CatchmentLabel> reserved;
    for (const auto& [label, sum] : sums) {
        if (placed.contains(label)) {
            continue;
        }
        if (label.is_site()) {
            sites.emplace_back(label, sum);
        } else {
            reserved.push_back(label);
        }
    }
    // equal sums over the same series give equal means
    std::stable_sort(sites.begin(), sites.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (const auto& s : sites) {
        out.push_back(s.first);
    }
    std::sort(reserved.begin(), reserved.end(),
              [](const CatchmentLabel& a, const CatchmentLabel& b) { return reserved_rank(a) < reserved_rank(b); });
    out.insert(out.end(), reserved.begin(), reserved.end());
    return out;
}

std::string render_stackplot(std::span<const AggregateVector> series, std::span<const CatchmentLabel> preferred)
{
    const auto order = stack_order(series, preferred);
    const double left = 70;
    const double top = 20;
    const double plot_w = 720;
    const double plot_h = 360;
    const double width = left + plot_w + 150;
    const double height = top + plot_h + 50;

    double ymax = 0.0;
    for (const auto& a : series) {
        double total = 0.0;
        for (const auto& l : order) {
            total += a.count(l);
        }
        ymax = std::max(ymax, total);
    }
    const auto n = series.size();
    const Timestamp t0 = n ? series.front().time : 0;
    const Timestamp t1 = n ? series.back().time : 0;
    const auto x_of = [&](std::size_t i) {
        if (n < 2 || t1 == t0) {
            return i == 0 ? left : left + plot_w;
        }
        return left + plot_w * static_cast<double>(series[i].time - t0) / static_cast<double>(t1 - t0);
    };
    const auto y_of = [&](double v) { return ymax > 0.0 ? top + plot_h - plot_h * v / ymax : top + plot_h; };

    // a single aggregate is drawn across the whole width
    std::vector<std::size_t> columns;
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i) {
        columns.push_back(i);
        xs.push_back(x_of(i));
    }
    if (n == 1) {
        columns.push_back(0);
        xs.push_back(left + plot_w);
    }

    std::ostringstream svg;
    svg << kSvgHeader << "width=\"" << px(width) << "\" height=\"" << px(height) << "\" viewBox=\"0 0 " << px(width)
        << ' ' << px(height) << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << px(width) << "\" height=\"" << px(height) << "\" fill=\"#ffffff\"/>\n";

    std::vector<double> base(columns.size(), 0.0);
    std::size_t site_rank = 0;
    svg << "<g id=\"bands\">\n";
    for (const auto& label : order) {
        std::vector<double> upper(columns.size());
        for (std::size_t k = 0; k < columns.size(); ++k) {
            upper[k] = base[k] + series[columns[k]].count(label);
        }
        svg << "<polygon data-label=\"" << xml_escape(label.text()) << "\" fill=\""
            << band_color(label, label.is_site() ? site_rank++ : 0) << "\" points=\"";
        for (std::size_t k = 0; k < columns.size(); ++k) {
            svg << (k ? " " : "") << px(xs[k]) << ',' << px(y_of(upper[k]));
        }
        for (std::size_t k = columns.size(); k-- > 0;) {
            svg << ' ' << px(xs[k]) << ',' << px(y_of(base[k]));
        }
        svg << "\"/>\n";
        base = std::move(upper);
    }
    svg << "</g>\n";

    svg << "<g id=\"axes\" font-family=\"sans-serif\" font-size=\"10\" stroke=\"#000000\">\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(top + plot_h) << "\" x2=\"" << px(left + plot_w) << "\" y2=\""
        << px(top + plot_h) << "\"/>\n";
    svg << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
        << px(top + plot_h) << "\"/>\n";
    for (const auto i : tick_indexes(n, 6)) {
        svg << "<text stroke=\"none\" x=\"" << px(x_of(i)) << "\" y=\"" << px(top + plot_h + 14)
            << "\" text-anchor=\"middle\">" << text::utc_date(series[i].time) << "</text>\n";
    }
    svg << "<text stroke=\"none\" x=\"" << px(left - 4) << "\" y=\"" << px(top + 4) << "\" text-anchor=\"end\">"
        << text::count(ymax) << "</text>\n";
    svg << "<text stroke=\"none\" x=\"" << px(left - 4) << "\" y=\"" << px(top + plot_h) << "\" text-anchor=\"end\">0</text>\n";
    svg << "</g>\n";

    svg << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"10\">\n";
    site_rank = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double y = top + 14.0 * static_cast<double>(k);
        svg << "<rect x=\"" << px(left + plot_w + 12) << "\" y=\"" << px(y) << "\" width=\"10\" height=\"10\" fill=\""
            << band_color(order[k], order[k].is_site() ? site_rank++ : 0) << "\"/>";
        svg << "<text x=\"" << px(left + plot_w + 26) << "\" y=\"" << px(y + 9) << "\">"
            << xml_escape(order[k].text()) << "</text>\n";
    }
    svg << "</g>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::vector<SankeyLink> sankey_links(std::span<const HopSnapshot> hops, const WeightVector& weights)
{
    if (hops.size() < 2) {
        throw ConfigError("a flow export needs at least two hop levels");
    }
    const auto keys_of = [](const Snapshot& s) {
        std::vector<NetworkId> keys;
        for (const auto& [id, label] : s.entries) {
            keys.push_back(id);
        }
        return keys;
    };
    const auto reference = keys_of(hops.front().second);
    for (std::size_t h = 1; h < hops.size(); ++h) {
        if (hops[h].first <= hops[h - 1].first) {
            throw ConfigError("hop levels must be in increasing order");
        }
        if (keys_of(hops[h].second) != reference) {
            throw ConfigError("hop level " + std::to_string(hops[h].first) + " covers a different set of networks");
        }
    }
    std::vector<SankeyLink> out;
    for (std::size_t h = 0; h + 1 < hops.size(); ++h) {
        const auto m = quantify::transition_matrix(hops[h].second, hops[h + 1].second, weights);
        const auto from_hop = "_" + std::to_string(hops[h].first);
        const auto to_hop = "_" + std::to_string(hops[h + 1].first);
        for (std::size_t i = 0; i < m.labels.size(); ++i) {
            for (std::size_t j = 0; j < m.labels.size(); ++j) {
                if (m.cells[i][j] > 0.0) {
                    out.push_back({m.labels[i].text() + from_hop, m.labels[j].text() + to_hop, m.cells[i][j]});
                }
            }
        }
    }
    return out;
}

void write_sankey(std::ostream& out, std::span<const SankeyLink> links)
{
    out << "source_node,target_node,value\n";
    for (const auto& l : links) {
        out << l.source << ',' << l.target << ',' << text::exact(l.value) << '\n';
    }
}

void write_snapshots(std::ostream& out, const SnapshotSeries& series)
{
    const auto& universe = series.universe();
    std::vector<std::size_t> order(universe.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return universe.at(a).key < universe.at(b).key; });
    std::vector<std::string> label_text;
    for (LabelCode c = 0; c < series.labels().size(); ++c) {
        label_text.push_back(series.labels().label(c).text());
    }
    out << "time,network,label\n";
    std::string line;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto time = std::to_string(series.time(i));
        const auto row = series.codes(i);
        for (const auto n : order) {
            line.clear();
            line += time;
            line += ',';
            line += universe.at(n).key;
            line += ',';
            line += label_text[row[n]];
            line += '\n';
            out << line;
        }
    }
}

void write_snapshots(std::ostream& out, std::span<const Snapshot> snapshots)
{
    std::vector<const Snapshot*> sorted;
    for (const auto& s : snapshots) {
        sorted.push_back(&s);
    }
    std::stable_sort(sorted.begin(), sorted.end(), [](const Snapshot* a, const Snapshot* b) { return a->time < b->time; });
    out << "time,network,label\n";
    for (const auto* s : sorted) {
        for (const auto& [id, label] : s->entries) {
            out << s->time << ',' << id.key << ',' << label.text() << '\n';
        }
    }
}

void write_snapshots(const std::filesystem::path& path, const SnapshotSeries& series)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    write_snapshots(out, series);
    out.flush();
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

std::string render_transition_table(const TransitionMatrix& m, double highlight)
{
    const auto n = m.labels.size();
    // cells[r][c] as text, with header row/column and totals
    std::vector<std::vector<std::string>> grid(n + 2, std::vector<std::string>(n + 2));
    grid[0][0] = "from\\to";
    for (std::size_t k = 0; k < n; ++k) {
        grid[0][k + 1] = m.labels[k].text();
        grid[k + 1][0] = m.labels[k].text();
    }
    grid[0][n + 1] = "total";
    grid[n + 1][0] = "total";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.cells[i][j];
            auto cell = text::count(v);
            if (i != j && v > 0.0 && v >= highlight) {
                cell += '*';
            }
            grid[i + 1][j + 1] = std::move(cell);
        }
        grid[i + 1][n + 1] = text::count(m.row_sum(i));
        grid[n + 1][i + 1] = text::count(m.column_sum(i));
    }
    grid[n + 1][n + 1] = text::count(m.total());

    std::vector<std::size_t> widths(n + 2, 0);
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : grid) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                line += row[c] + std::string(widths[c] - row[c].size(), ' ');
            } else {
                line += "  " + std::string(widths[c] - row[c].size(), ' ') + row[c];
            }
        }
        out += line + '\n';
    }
    return out;
}

void write_matrix(std::ostream& out, const SimilarityMatrix& matrix, int decimals)
{
    out << "time";
    for (const auto t : matrix.times()) {
        out << ',' << t;
    }
    out << '\n';
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.times()[i];
        for (std::size_t j = 0; j < matrix.size(); ++j) {
            out << ',' << (decimals < 0 ? text::exact(matrix.at(i, j)) : text::fixed(matrix.at(i, j), decimals));
        }
        out << '\n';
    }
}

SimilarityMatrix read_matrix(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    const auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (!text::trim(line).empty()) {
                return true;
            }
        }
        return false;
    };
    if (!next()) {
        throw EmptyInputError("matrix file is empty");
    }
    const auto header = text::split(line, ',');
    if (header.empty() || text::trim(header[0]) != "time") {
        throw ParseError("matrix header must start with 'time'", line_no);
    }
    std::vector<Timestamp> times;
    for (std::size_t k = 1; k < header.size(); ++k) {
        const auto t = text::parse_int(header[k]);
        if (!t) {
            throw ParseError("bad time '" + std::string(header[k]) + "' in matrix header", line_no);
        }
        times.push_back(*t);
    }
    const auto n = times.size();
    std::vector<double> values;
    values.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!next()) {
            throw ParseError("matrix has fewer rows than columns", line_no);
        }
        const auto fields = text::split(line, ',');
        if (fields.size() != n + 1) {
            throw ParseError("matrix row has " + std::to_string(fields.size()) + " fields", line_no);
        }
        const auto t = text::parse_int(fields[0]);
        if (!t || *t != times[i]) {
            throw ParseError("matrix row time does not match the header", line_no);
        }
        for (std::size_t j = 1; j <= n; ++j) {
            const auto v = text::parse_double(fields[j]);
            if (!v) {
                throw ParseError("bad value '" + std::string(fields[j]) + "'", line_no);
            }
            values.push_back(*v);
        }
    }
    if (next()) {
        throw ParseError("matrix has extra rows", line_no);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (values[i * n + j] != values[j * n + i]) {
                throw ParseError("matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")",
                                 line_no);
            }
        }
    }
    try {
        return SimilarityMatrix(std::move(times), std::move(values));
    } catch (const Error& e) {
        throw ParseError(e.what(), line_no);
    }
}

} // namespace routemodes::report
