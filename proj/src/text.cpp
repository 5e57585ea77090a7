#include "routemodes/text.hpp"

#include "routemodes/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace routemodes::text {

std::string_view trim(std::string_view s)
{
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::optional<std::int64_t> parse_int(std::string_view s)
{
    s = trim(s);
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return v;
}

std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    double v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string exact(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fixed(double v, int decimals)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    std::string out(buf, ptr);
    // "-0.0000" reads badly in reports
    if (!out.empty() && out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1);
    }
    return out;
}

std::string count(double v, int decimals)
{
    if (std::nearbyint(v) == v && std::fabs(v) < 9.0e15) {
        return std::to_string(static_cast<long long>(v));
    }
    return fixed(v, decimals);
}

namespace {

std::tm utc(std::int64_t epoch)
{
    const std::time_t t = static_cast<std::time_t>(epoch);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return tm;
}

} // namespace

std::string utc_date(std::int64_t epoch)
{
    const std::tm tm = utc(epoch);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday);
    return buf;
}

std::string utc_minute(std::int64_t epoch)
{
    const std::tm tm = utc(epoch);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min);
    return buf;
}

CsvReader::CsvReader(std::istream& in, std::vector<std::string> expected_header)
    : in_(in), header_(std::move(expected_header))
{
}

bool CsvReader::next(std::vector<std::string_view>& fields)
{
    while (std::getline(in_, buffer_)) {
        ++line_;
        if (line_ == 1 && buffer_.size() >= 3 && buffer_.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            buffer_.erase(0, 3);
        }
        const auto content = trim(buffer_);
        if (content.empty()) {
            continue;
        }
        fields = split(content, ',');
        for (auto& f : fields) {
            f = trim(f);
        }
        if (!saw_header_) {
            saw_header_ = true;
            bool matches = fields.size() == header_.size();
            for (std::size_t i = 0; matches && i < fields.size(); ++i) {
                matches = to_lower(fields[i]) == header_[i];
            }
            if (!matches) {
                std::string expected;
                for (const auto& h : header_) {
                    expected += (expected.empty() ? "" : ",") + h;
                }
                throw ParseError("expected header '" + expected + "'", line_);
            }
            continue;
        }
        if (fields.size() != header_.size()) {
            throw ParseError("expected " + std::to_string(header_.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_);
        }
        return true;
    }
    return false;
}

} // namespace routemodes::text
