#pragma once

// Small text helpers shared by the file readers and writers.

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace routemodes::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);

/// Shortest decimal text that reads back to exactly `v`.
std::string exact(double v);
/// Fixed-point text with `decimals` digits.
std::string fixed(double v, int decimals);
/// Integer text when `v` is integral, otherwise fixed with `decimals`.
std::string count(double v, int decimals = 2);

/// YYYY-MM-DD for a UTC epoch time.
std::string utc_date(std::int64_t epoch);
/// YYYY-MM-DD HH:MM for a UTC epoch time.
std::string utc_minute(std::int64_t epoch);

/// Reads comma-separated lines, skipping blank ones and checking the header.
/// Data rows are returned with their 1-based line numbers.
class CsvReader {
public:
    CsvReader(std::istream& in, std::vector<std::string> expected_header);

    /// False at end of input. Throws ParseError on a wrong column count.
    bool next(std::vector<std::string_view>& fields);
    std::size_t line() const noexcept { return line_; }
    bool saw_header() const noexcept { return saw_header_; }

private:
    std::istream& in_;
    std::vector<std::string> header_;
    std::string buffer_;
    std::size_t line_ = 0;
    bool saw_header_ = false;
};

} // namespace routemodes::text
