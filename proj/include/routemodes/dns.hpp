#pragma once

// EDNS client-subnet lookups: ask a resolver which front-end it would hand
// to a given client prefix, and turn the answer into a catchment label.

#include "routemodes/core.hpp"
#include "routemodes/ingest.hpp"
#include "routemodes/net.hpp"

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace routemodes::dns {

inline constexpr std::uint16_t kTypeA = 1;
inline constexpr std::uint16_t kTypeCname = 5;
inline constexpr std::uint16_t kTypeAaaa = 28;
inline constexpr std::uint16_t kTypeOpt = 41;
inline constexpr std::uint16_t kOptionClientSubnet = 8;

inline constexpr int kRcodeNoError = 0;
inline constexpr int kRcodeServFail = 2;
inline constexpr int kRcodeNxDomain = 3;
inline constexpr int kRcodeRefused = 5;

/// Parses and validates a client prefix; throws ConfigError when malformed
/// or longer than /24.
Ipv4Prefix client_prefix(std::string_view text);

/// Standard recursive A query with an OPT record carrying the client-subnet
/// option (family 1, source length = prefix length, scope 0).
std::vector<std::uint8_t> build_query(std::uint16_t id, std::string_view hostname, const Ipv4Prefix& prefix);

struct Response {
    std::uint16_t id = 0;
    int rcode = 0;
    bool truncated = false;
    std::vector<std::string> addresses; // A and AAAA answers, text form
    std::vector<std::string> cnames;    // CNAME targets without trailing dot
};

/// Throws ParseError on malformed packets.
Response parse_response(std::span<const std::uint8_t> packet);

/// Maps a parsed answer to a label: error rcodes give ERROR; CNAME targets
/// matching `rules` give that site; otherwise the sorted answer addresses
/// joined with ';' form the site key; an empty answer gives OTHER.
CatchmentLabel label_from_response(const Response& response, const ingest::NsidRules* rules = nullptr);

struct Resolver {
    std::string address = "127.0.0.1"; // IPv4 literal
    std::uint16_t port = 53;

    /// "a.b.c.d" or "a.b.c.d:port"; throws ConfigError.
    static Resolver parse(std::string_view text);
};

struct LookupOptions {
    std::chrono::milliseconds timeout{2000};
    const ingest::NsidRules* rules = nullptr;
};

/// One lookup. Network trouble never throws: timeouts give UNKNOWN, send
/// failures and malformed replies give ERROR. A bad prefix throws
/// ConfigError before anything is sent.
CatchmentLabel edns_cs_lookup(std::string_view hostname, std::string_view client_prefix_text, const Resolver& resolver,
                              const LookupOptions& options = {});

/// Lookups for many prefixes with at most `concurrency` queries in flight.
/// Results are parallel to `prefixes`.
std::vector<CatchmentLabel> edns_cs_lookup_many(std::string_view hostname, std::span<const std::string> prefixes,
                                                const Resolver& resolver, const LookupOptions& options,
                                                std::size_t concurrency);

} // namespace routemodes::dns
