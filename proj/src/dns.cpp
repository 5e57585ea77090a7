#include "routemodes/dns.hpp"

#include "routemodes/text.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

namespace routemodes::dns {

Ipv4Prefix client_prefix(std::string_view text)
{
    const auto prefix = Ipv4Prefix::parse(text);
    if (!prefix) {
        throw ConfigError("client prefix '" + std::string(text) + "' is not an IPv4 prefix");
    }
    if (prefix->length > 24) {
        throw ConfigError("client prefix '" + std::string(text) + "' is longer than /24");
    }
    return *prefix;
}

namespace {

void put16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_name(std::vector<std::uint8_t>& out, std::string_view name)
{
    if (!name.empty() && name.back() == '.') {
        name.remove_suffix(1);
    }
    if (!name.empty()) {
        for (const auto label : text::split(name, '.')) {
            if (label.empty() || label.size() > 63) {
                throw ConfigError("hostname '" + std::string(name) + "' has an invalid label");
            }
            out.push_back(static_cast<std::uint8_t>(label.size()));
            out.insert(out.end(), label.begin(), label.end());
        }
    }
    out.push_back(0);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> packet) : packet_(packet) {}

    std::uint8_t u8()
    {
        need(1);
        return packet_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        const auto v = static_cast<std::uint16_t>(packet_[pos_] << 8 | packet_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        const std::uint32_t hi = u16();
        return hi << 16 | u16();
    }
    void skip(std::size_t n)
    {
        need(n);
        pos_ += n;
    }
    std::span<const std::uint8_t> bytes(std::size_t n)
    {
        need(n);
        auto out = packet_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    std::size_t pos() const { return pos_; }

    /// Reads a possibly compressed name starting at the current position.
    std::string name()
    {
        std::string out;
        std::size_t cursor = pos_;
        bool jumped = false;
        int hops = 0;
        while (true) {
            if (cursor >= packet_.size()) {
                throw ParseError("truncated DNS name");
            }
            const std::uint8_t len = packet_[cursor];
            if ((len & 0xC0) == 0xC0) {
                if (cursor + 1 >= packet_.size() || ++hops > 32) {
                    throw ParseError("bad DNS name pointer");
                }
                const std::size_t target = static_cast<std::size_t>((len & 0x3F) << 8 | packet_[cursor + 1]);
                if (!jumped) {
                    pos_ = cursor + 2;
                }
                jumped = true;
                cursor = target;
                continue;
            }
            if (len == 0) {
                if (!jumped) {
                    pos_ = cursor + 1;
                }
                return out;
            }
            if (cursor + 1 + len > packet_.size()) {
                throw ParseError("truncated DNS label");
            }
            if (!out.empty()) {
                out += '.';
            }
            out.append(reinterpret_cast<const char*>(&packet_[cursor + 1]), len);
            cursor += 1 + len;
        }
    }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > packet_.size()) {
            throw ParseError("truncated DNS message");
        }
    }

    std::span<const std::uint8_t> packet_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> build_query(std::uint16_t id, std::string_view hostname, const Ipv4Prefix& prefix)
{
    std::vector<std::uint8_t> out;
    out.reserve(64 + hostname.size());
    put16(out, id);
    put16(out, 0x0100); // RD
    put16(out, 1);      // QDCOUNT
    put16(out, 0);
    put16(out, 0);
    put16(out, 1); // ARCOUNT: OPT
    put_name(out, hostname);
    put16(out, kTypeA);
    put16(out, 1); // IN

    const int address_bytes = (prefix.length + 7) / 8;
    out.push_back(0); // root owner
    put16(out, kTypeOpt);
    put16(out, 1232); // UDP payload size
    put16(out, 0);    // extended rcode, version
    put16(out, 0);    // flags
    put16(out, static_cast<std::uint16_t>(4 + 4 + address_bytes));
    put16(out, kOptionClientSubnet);
    put16(out, static_cast<std::uint16_t>(4 + address_bytes));
    put16(out, 1); // family IPv4
    out.push_back(static_cast<std::uint8_t>(prefix.length));
    out.push_back(0); // scope
    for (int i = 0; i < address_bytes; ++i) {
        out.push_back(static_cast<std::uint8_t>(prefix.network >> (24 - 8 * i)));
    }
    return out;
}

Response parse_response(std::span<const std::uint8_t> packet)
{
    Reader r(packet);
    Response resp;
    resp.id = r.u16();
    const auto flags = r.u16();
    if ((flags & 0x8000) == 0) {
        throw ParseError("DNS message is not a response");
    }
    resp.rcode = flags & 0x0F;
    resp.truncated = (flags & 0x0200) != 0;
    const auto qd = r.u16();
    const auto an = r.u16();
    r.u16(); // NSCOUNT
    r.u16(); // ARCOUNT
    for (int i = 0; i < qd; ++i) {
        r.name();
        r.skip(4);
    }
    for (int i = 0; i < an; ++i) {
        r.name();
        const auto type = r.u16();
        r.u16(); // class
        r.u32(); // ttl
        const auto rdlen = r.u16();
        const auto start = r.pos();
        if (type == kTypeA && rdlen == 4) {
            const auto b = r.bytes(4);
            char buf[INET_ADDRSTRLEN];
            inet_ntop(AF_INET, b.data(), buf, sizeof(buf));
            resp.addresses.emplace_back(buf);
        } else if (type == kTypeAaaa && rdlen == 16) {
            const auto b = r.bytes(16);
            char buf[INET6_ADDRSTRLEN];
            inet_ntop(AF_INET6, b.data(), buf, sizeof(buf));
            resp.addresses.emplace_back(buf);
        } else if (type == kTypeCname) {
            resp.cnames.push_back(r.name());
            if (r.pos() != start + rdlen) {
                throw ParseError("CNAME length mismatch");
            }
        } else {
            r.skip(rdlen);
        }
    }
    return resp;
}

CatchmentLabel label_from_response(const Response& response, const ingest::NsidRules* rules)
{
    if (response.rcode != kRcodeNoError) {
        return CatchmentLabel::error();
    }
    if (rules) {
        for (const auto& cname : response.cnames) {
            if (auto label = rules->try_map(cname); label && label->is_site()) {
                return *label;
            }
        }
    }
    if (response.addresses.empty()) {
        return CatchmentLabel::other();
    }
    auto addresses = response.addresses;
    std::sort(addresses.begin(), addresses.end());
    addresses.erase(std::unique(addresses.begin(), addresses.end()), addresses.end());
    std::string key;
    for (const auto& a : addresses) {
        key += (key.empty() ? "" : ";") + a;
    }
    return CatchmentLabel::site(key);
}

Resolver Resolver::parse(std::string_view raw)
{
    const auto t = text::trim(raw);
    Resolver out;
    const auto colon = t.rfind(':');
    out.address = std::string(t.substr(0, colon));
    if (colon != std::string_view::npos) {
        const auto port = text::parse_int(t.substr(colon + 1));
        if (!port || *port <= 0 || *port > 65535) {
            throw ConfigError("resolver port in '" + std::string(raw) + "' is invalid");
        }
        out.port = static_cast<std::uint16_t>(*port);
    }
    in_addr addr{};
    if (inet_pton(AF_INET, out.address.c_str(), &addr) != 1) {
        throw ConfigError("resolver '" + std::string(raw) + "' is not an IPv4 address");
    }
    return out;
}

namespace {

class Socket {
public:
    Socket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {}
    ~Socket()
    {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool ok() const { return fd_ >= 0; }

private:
    int fd_;
};

std::uint16_t next_query_id()
{
    thread_local std::mt19937 rng{std::random_device{}()};
    return static_cast<std::uint16_t>(rng());
}

} // namespace

CatchmentLabel edns_cs_lookup(std::string_view hostname, std::string_view client_prefix_text, const Resolver& resolver,
                              const LookupOptions& options)
{
    const auto prefix = client_prefix(client_prefix_text);
    const auto id = next_query_id();
    const auto query = build_query(id, hostname, prefix);

    Socket sock;
    if (!sock.ok()) {
        return CatchmentLabel::error();
    }
    sockaddr_in to{};
    to.sin_family = AF_INET;
    to.sin_port = htons(resolver.port);
    inet_pton(AF_INET, resolver.address.c_str(), &to.sin_addr);
    if (::sendto(sock.fd(), query.data(), query.size(), 0, reinterpret_cast<const sockaddr*>(&to), sizeof(to)) < 0) {
        return CatchmentLabel::error();
    }

    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    std::vector<std::uint8_t> buf(4096);
    while (true) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            return CatchmentLabel::unknown();
        }
        pollfd pfd{sock.fd(), POLLIN, 0};
        const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready == 0) {
            return CatchmentLabel::unknown();
        }
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            return CatchmentLabel::error();
        }
        sockaddr_in from{};
        socklen_t from_len = sizeof(from);
        const auto n =
            ::recvfrom(sock.fd(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &from_len);
        if (n < 0) {
            return CatchmentLabel::error();
        }
        if (from.sin_addr.s_addr != to.sin_addr.s_addr || from.sin_port != to.sin_port) {
            continue;
        }
        try {
            const auto resp = parse_response(std::span(buf.data(), static_cast<std::size_t>(n)));
            if (resp.id != id) {
                continue;
            }
            return label_from_response(resp, options.rules);
        } catch (const ParseError&) {
            return CatchmentLabel::error();
        }
    }
}

std::vector<CatchmentLabel> edns_cs_lookup_many(std::string_view hostname, std::span<const std::string> prefixes,
                                                const Resolver& resolver, const LookupOptions& options,
                                                std::size_t concurrency)
{
    for (const auto& p : prefixes) {
        client_prefix(p);
    }
    std::vector<CatchmentLabel> out(prefixes.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (auto i = next++; i < prefixes.size(); i = next++) {
            out[i] = edns_cs_lookup(hostname, prefixes[i], resolver, options);
        }
    };
    const auto threads = std::clamp<std::size_t>(concurrency, 1, std::max<std::size_t>(prefixes.size(), 1));
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    return out;
}

} // namespace routemodes::dns
