#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace routemodes {

/// IPv4 prefix in host byte order with host bits cleared.
struct Ipv4Prefix {
    std::uint32_t network = 0;
    int length = 32;

    /// "a.b.c.d/len" or a bare address (length 32). nullopt when malformed.
    static std::optional<Ipv4Prefix> parse(std::string_view text);

    std::uint32_t mask() const { return length == 0 ? 0u : ~0u << (32 - length); }
    bool contains(std::uint32_t address) const { return (address & mask()) == network; }
    /// True when `inner` lies entirely inside this prefix.
    bool contains(const Ipv4Prefix& inner) const { return inner.length >= length && contains(inner.network); }
    bool overlaps(const Ipv4Prefix& other) const { return contains(other) || other.contains(*this); }
    /// Number of /24 blocks covered; prefixes longer than /24 count as one.
    double block24_count() const;

    std::string text() const;

    friend bool operator==(const Ipv4Prefix&, const Ipv4Prefix&) = default;
};

} // namespace routemodes
