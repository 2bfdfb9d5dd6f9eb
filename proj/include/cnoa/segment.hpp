#pragma once

// Addresses, flow identifiers and simulated TCP segments, plus the
// canonical one-line trace format used by golden-file tests.
//
// Trace line layout (fields separated by single spaces):
//   time_ms realm src:port > dst:port flags seq ack chal=<hex|-> hop=<n>
// realm is "v4" or "v6"; flags are drawn from "SARF" in that order;
// the challenge is eight lowercase hex digits.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cnoa {

using TimeMs = std::int64_t;
using uint128 = unsigned __int128;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidFlow : public Error {
public:
    using Error::Error;
};

class NotASyn : public Error {
public:
    using Error::Error;
};

class NotASynAck : public Error {
public:
    using Error::Error;
};

class TraceParseError : public Error {
public:
    using Error::Error;
};

enum class Realm : std::uint8_t { V4 = 4, V6 = 6 };

struct Address {
    Realm realm{Realm::V4};
    uint128 value{0};

    static Address v4(std::uint32_t value);
    static Address v6(uint128 value);
    // Accepts dotted-quad or RFC 4291 text; throws InvalidFlow on bad input.
    static Address parse(std::string_view text);

    std::string toString() const;
    Address offset(std::uint64_t delta) const;

    friend bool operator==(const Address&, const Address&) = default;
    friend std::strong_ordering operator<=>(const Address& a, const Address& b)
    {
        if (auto c = a.realm <=> b.realm; c != 0) {
            return c;
        }
        return a.value <=> b.value;
    }
};

struct FlowKey {
    Address srcAddr;
    std::uint16_t srcPort{0};
    Address dstAddr;
    std::uint16_t dstPort{0};

    FlowKey reversed() const { return {dstAddr, dstPort, srcAddr, srcPort}; }
    bool portsValid() const { return srcPort != 0 && dstPort != 0; }

    friend bool operator==(const FlowKey&, const FlowKey&) = default;
    friend std::strong_ordering operator<=>(const FlowKey&, const FlowKey&) = default;
};

class Flags {
public:
    static constexpr std::uint8_t kSyn = 0x1;
    static constexpr std::uint8_t kAck = 0x2;
    static constexpr std::uint8_t kRst = 0x4;
    static constexpr std::uint8_t kFin = 0x8;

    constexpr Flags() = default;
    constexpr explicit Flags(std::uint8_t bits) : bits_(bits & 0xF) {}

    static constexpr Flags syn() { return Flags(kSyn); }
    static constexpr Flags synAck() { return Flags(kSyn | kAck); }
    static constexpr Flags ack() { return Flags(kAck); }
    static constexpr Flags rst() { return Flags(kRst); }

    constexpr bool has(std::uint8_t bit) const { return (bits_ & bit) != 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    constexpr bool empty() const { return bits_ == 0; }

    std::string toString() const;
    static Flags parse(std::string_view text);

    friend constexpr bool operator==(Flags, Flags) = default;

private:
    std::uint8_t bits_{0};
};

struct Segment {
    FlowKey flow;
    Flags flags;
    std::uint32_t seq{0};
    std::uint32_t ack{0};
    std::optional<std::uint32_t> challenge;
    std::uint8_t hopBudget{64};
    TimeMs sentAt{0};

    bool isSyn() const { return flags == Flags::syn(); }
    bool isSynAck() const { return flags == Flags::synAck(); }
    bool isAck() const { return flags == Flags::ack(); }
    bool isRst() const { return flags.has(Flags::kRst); }

    // Structural invariants: nonempty flags, no SYN+FIN / SYN+RST, challenge
    // only alongside ACK, nonzero hop budget, nonzero ports.
    bool wellFormed() const;

    friend bool operator==(const Segment&, const Segment&) = default;
};

Segment makeSyn(const FlowKey& flow, std::uint32_t isn, std::uint8_t hopBudget = 64);

Segment makeSynAck(const Segment& inResponseTo, std::uint32_t serverIsn,
                   std::optional<std::uint32_t> challenge = std::nullopt,
                   std::uint8_t hopBudget = 64);

Segment makeAckEcho(const Segment& inResponseTo, bool echoChallenge,
                    std::uint8_t hopBudget = 64);

Segment makeRst(const FlowKey& flow, std::uint32_t seq, std::uint8_t hopBudget = 64);

std::string formatTraceLine(const Segment& seg);
Segment parseTraceLine(std::string_view line);

// Fixed-width big-endian encoding of a flow, the keyed-hash input prefix.
// Per endpoint: realm byte, 16 value bytes, 2 port bytes.
void appendFlowBytes(std::string& out, const FlowKey& flow);

}  // namespace cnoa
