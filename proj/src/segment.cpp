#include "cnoa/segment.hpp"

#include <arpa/inet.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <vector>

namespace cnoa {

namespace {

std::vector<std::string_view> splitSpaces(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < line.size()) {
        auto next = line.find(' ', pos);
        if (next == std::string_view::npos) {
            next = line.size();
        }
        if (next == pos) {
            throw TraceParseError("empty field in trace line");
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

template <typename T>
T parseNumber(std::string_view text, int base = 10)
{
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw TraceParseError("bad number '" + std::string(text) + "'");
    }
    return value;
}

std::pair<Address, std::uint16_t> parseEndpoint(std::string_view text, Realm realm)
{
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
        throw TraceParseError("endpoint without port: " + std::string(text));
    }
    Address addr;
    try {
        addr = Address::parse(text.substr(0, colon));
    } catch (const InvalidFlow& e) {
        throw TraceParseError(e.what());
    }
    if (addr.realm != realm) {
        throw TraceParseError("endpoint realm does not match line realm");
    }
    return {addr, parseNumber<std::uint16_t>(text.substr(colon + 1))};
}

}  // namespace

Address Address::v4(std::uint32_t value) { return {Realm::V4, value}; }

Address Address::v6(uint128 value) { return {Realm::V6, value}; }

Address Address::parse(std::string_view text)
{
    std::string s(text);
    std::array<unsigned char, 16> buf{};
    if (s.find(':') == std::string::npos) {
        if (inet_pton(AF_INET, s.c_str(), buf.data()) != 1) {
            throw InvalidFlow("bad IPv4 address '" + s + "'");
        }
        std::uint32_t v = (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
                          (std::uint32_t{buf[2]} << 8) | buf[3];
        return v4(v);
    }
    if (inet_pton(AF_INET6, s.c_str(), buf.data()) != 1) {
        throw InvalidFlow("bad IPv6 address '" + s + "'");
    }
    uint128 v = 0;
    for (auto b : buf) {
        v = (v << 8) | b;
    }
    return v6(v);
}

std::string Address::toString() const
{
    std::array<unsigned char, 16> buf{};
    std::array<char, INET6_ADDRSTRLEN> text{};
    if (realm == Realm::V4) {
        auto v = static_cast<std::uint32_t>(value);
        buf = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
               static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        inet_ntop(AF_INET, buf.data(), text.data(), text.size());
    } else {
        for (int i = 0; i < 16; ++i) {
            buf[i] = static_cast<unsigned char>(value >> (8 * (15 - i)));
        }
        inet_ntop(AF_INET6, buf.data(), text.data(), text.size());
    }
    return text.data();
}

Address Address::offset(std::uint64_t delta) const
{
    uint128 next = value + delta;
    if (realm == Realm::V4) {
        next &= 0xFFFFFFFFu;
    }
    return {realm, next};
}

std::string Flags::toString() const
{
    std::string out;
    if (has(kSyn)) out += 'S';
    if (has(kAck)) out += 'A';
    if (has(kRst)) out += 'R';
    if (has(kFin)) out += 'F';
    return out;
}

Flags Flags::parse(std::string_view text)
{
    std::uint8_t bits = 0;
    for (char c : text) {
        switch (c) {
        case 'S': bits |= kSyn; break;
        case 'A': bits |= kAck; break;
        case 'R': bits |= kRst; break;
        case 'F': bits |= kFin; break;
        default: throw TraceParseError(std::string("unknown flag '") + c + "'");
        }
    }
    Flags f(bits);
    if (f.toString() != text) {
        throw TraceParseError("flags not in canonical order: " + std::string(text));
    }
    return f;
}

bool Segment::wellFormed() const
{
    if (flags.empty() || hopBudget == 0 || !flow.portsValid()) {
        return false;
    }
    if (flags.has(Flags::kSyn) && (flags.has(Flags::kFin) || flags.has(Flags::kRst))) {
        return false;
    }
    if (challenge && !flags.has(Flags::kAck)) {
        return false;
    }
    return flow.srcAddr.realm == flow.dstAddr.realm;
}

Segment makeSyn(const FlowKey& flow, std::uint32_t isn, std::uint8_t hopBudget)
{
    if (!flow.portsValid()) {
        throw InvalidFlow("flow port must be nonzero");
    }
    if (hopBudget == 0) {
        throw InvalidFlow("hop budget must be positive");
    }
    return Segment{flow, Flags::syn(), isn, 0, std::nullopt, hopBudget, 0};
}

Segment makeSynAck(const Segment& inResponseTo, std::uint32_t serverIsn,
                   std::optional<std::uint32_t> challenge, std::uint8_t hopBudget)
{
    if (!inResponseTo.isSyn()) {
        throw NotASyn("SYN+ACK must answer a bare SYN");
    }
    return Segment{inResponseTo.flow.reversed(), Flags::synAck(), serverIsn,
                   inResponseTo.seq + 1u, challenge, hopBudget, 0};
}

Segment makeAckEcho(const Segment& inResponseTo, bool echoChallenge, std::uint8_t hopBudget)
{
    if (!inResponseTo.isSynAck()) {
        throw NotASynAck("ACK must answer a SYN+ACK");
    }
    std::optional<std::uint32_t> chal;
    if (echoChallenge) {
        chal = inResponseTo.challenge;
    }
    return Segment{inResponseTo.flow.reversed(), Flags::ack(), inResponseTo.ack,
                   inResponseTo.seq + 1u, chal, hopBudget, 0};
}

Segment makeRst(const FlowKey& flow, std::uint32_t seq, std::uint8_t hopBudget)
{
    return Segment{flow, Flags::rst(), seq, 0, std::nullopt, hopBudget, 0};
}

std::string formatTraceLine(const Segment& seg)
{
    const char* realm = seg.flow.srcAddr.realm == Realm::V4 ? "v4" : "v6";
    char chal[16] = "-";
    if (seg.challenge) {
        std::snprintf(chal, sizeof chal, "%08x", *seg.challenge);
    }
    std::string out;
    out.reserve(96);
    out += std::to_string(seg.sentAt);
    out += ' ';
    out += realm;
    out += ' ';
    out += seg.flow.srcAddr.toString() + ':' + std::to_string(seg.flow.srcPort);
    out += " > ";
    out += seg.flow.dstAddr.toString() + ':' + std::to_string(seg.flow.dstPort);
    out += ' ';
    out += seg.flags.toString();
    out += ' ' + std::to_string(seg.seq) + ' ' + std::to_string(seg.ack);
    out += " chal=";
    out += chal;
    out += " hop=" + std::to_string(seg.hopBudget);
    return out;
}

Segment parseTraceLine(std::string_view line)
{
    auto fields = splitSpaces(line);
    if (fields.size() != 10 || fields[3] != ">") {
        throw TraceParseError("trace line must have 10 fields: " + std::string(line));
    }
    Realm realm;
    if (fields[1] == "v4") {
        realm = Realm::V4;
    } else if (fields[1] == "v6") {
        realm = Realm::V6;
    } else {
        throw TraceParseError("unknown realm " + std::string(fields[1]));
    }
    Segment seg;
    seg.sentAt = parseNumber<TimeMs>(fields[0]);
    auto [src, sport] = parseEndpoint(fields[2], realm);
    auto [dst, dport] = parseEndpoint(fields[4], realm);
    seg.flow = FlowKey{src, sport, dst, dport};
    seg.flags = Flags::parse(fields[5]);
    seg.seq = parseNumber<std::uint32_t>(fields[6]);
    seg.ack = parseNumber<std::uint32_t>(fields[7]);
    if (!fields[8].starts_with("chal=") || !fields[9].starts_with("hop=")) {
        throw TraceParseError("missing chal=/hop= field");
    }
    auto chal = fields[8].substr(5);
    if (chal != "-") {
        if (chal.size() != 8) {
            throw TraceParseError("challenge must be 8 hex digits");
        }
        seg.challenge = parseNumber<std::uint32_t>(chal, 16);
    }
    seg.hopBudget = parseNumber<std::uint8_t>(fields[9].substr(4));
    return seg;
}

void appendFlowBytes(std::string& out, const FlowKey& flow)
{
    auto endpoint = [&out](const Address& addr, std::uint16_t port) {
        out += static_cast<char>(addr.realm);
        for (int i = 15; i >= 0; --i) {
            out += static_cast<char>(static_cast<std::uint8_t>(addr.value >> (8 * i)));
        }
        out += static_cast<char>(port >> 8);
        out += static_cast<char>(port & 0xFF);
    };
    endpoint(flow.srcAddr, flow.srcPort);
    endpoint(flow.dstAddr, flow.dstPort);
}

}  // namespace cnoa
