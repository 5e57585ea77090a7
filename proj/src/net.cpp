#include "routemodes/net.hpp"

#include "routemodes/text.hpp"

#include <arpa/inet.h>

#include <cmath>

namespace routemodes {

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view raw)
{
    const auto t = text::trim(raw);
    const auto slash = t.find('/');
    const std::string address(t.substr(0, slash));
    int length = 32;
    if (slash != std::string_view::npos) {
        const auto parsed = text::parse_int(t.substr(slash + 1));
        if (!parsed || *parsed < 0 || *parsed > 32) {
            return std::nullopt;
        }
        length = static_cast<int>(*parsed);
    }
    in_addr addr{};
    if (inet_pton(AF_INET, address.c_str(), &addr) != 1) {
        return std::nullopt;
    }
    Ipv4Prefix prefix;
    prefix.length = length;
    prefix.network = ntohl(addr.s_addr) & prefix.mask();
    return prefix;
}

double Ipv4Prefix::block24_count() const
{
    return length >= 24 ? 1.0 : std::ldexp(1.0, 24 - length);
}

std::string Ipv4Prefix::text() const
{
    in_addr addr{};
    addr.s_addr = htonl(network);
    char buf[INET_ADDRSTRLEN];
    inet_ntop(AF_INET, &addr, buf, sizeof(buf));
    return std::string(buf) + "/" + std::to_string(length);
}

} // namespace routemodes
