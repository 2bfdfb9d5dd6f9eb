#pragma once

// Challenging-number handshake defense.
//
// The server attaches a 32-bit challenge to its SYN+ACK and establishes the
// connection only when the client's ACK echoes it. A spoofing sender never
// sees the SYN+ACK, so it cannot echo the value except by guessing
// (probability 2^-32 per attempt). Sources that fail the echo, or never
// answer, accumulate offenses and are blacklisted.
//
// Pipeline, in handshake order:
//   classify      - protocol analyzer; only TCP goes through the challenge
//   generate      - challenge token (seeded random, or keyed hash)
//   verifyEcho    - packet capture check of the client's ACK
//   decide        - decider; appends to the history log, feeds the blacklist
//
// Stateless tokens are truncate32(SipHash-2-4(key, "C" | flow | clientIsn |
// epoch)) with clientIsn and epoch big-endian (4 and 8 bytes). The epoch is
// floor(now / epochMs); verification accepts the current and previous epoch.

#include "cnoa/defense.hpp"
#include "cnoa/history.hpp"
#include "cnoa/keyed_hash.hpp"
#include "cnoa/rng.hpp"
#include "cnoa/segment.hpp"

#include <cstdint>
#include <optional>

namespace cnoa {

class MissingKey : public Error {
public:
    using Error::Error;
};

enum class ChallengeMode : std::uint8_t { Stateful, Stateless };

struct ChallengeToken {
    std::uint32_t value{0};
    ChallengeMode mode{ChallengeMode::Stateful};

    friend bool operator==(const ChallengeToken&, const ChallengeToken&) = default;
};

enum class PacketKind : std::uint8_t { Tcp, Udp };

// A record on the wire. Non-TCP packets reuse the segment's addressing
// fields and ignore the rest.
struct Packet {
    PacketKind kind{PacketKind::Tcp};
    Segment seg;
};

enum class Protocol : std::uint8_t { Tcp, Other };

constexpr Protocol classify(const Packet& p)
{
    return p.kind == PacketKind::Tcp ? Protocol::Tcp : Protocol::Other;
}

enum class EchoCheck : std::uint8_t { Match, Mismatch, Absent };

// Includes the timeout outcome, which has no ACK to check.
enum class Verification : std::uint8_t { Match, Mismatch, Absent, NoResponse };

constexpr Verification toVerification(EchoCheck c)
{
    switch (c) {
    case EchoCheck::Match: return Verification::Match;
    case EchoCheck::Mismatch: return Verification::Mismatch;
    case EchoCheck::Absent: return Verification::Absent;
    }
    return Verification::Absent;
}

struct CnoaPolicy {
    unsigned blacklistThreshold{3};
    TimeMs blacklistTtlMs{60'000};
    TimeMs epochMs{30'000};
    std::optional<SecretKey> secretKey;
};

ChallengeToken generateChallenge(SeededRng& rng);

ChallengeToken generateChallenge(const std::optional<SecretKey>& key, const FlowKey& flow,
                                 std::uint32_t clientIsn, std::uint64_t epoch);

EchoCheck verifyEcho(const ChallengeToken& expected, const Segment& ack);

struct StatelessCheck {
    EchoCheck result{EchoCheck::Absent};
    // Token for the epoch that matched, else the current-epoch token.
    std::uint32_t expected{0};
};

// Recomputes from the ACK alone: flow as carried, client ISN = ack.seq - 1.
StatelessCheck verifyEchoStateless(const SecretKey& key, const Segment& ack, TimeMs now,
                                   TimeMs epochMs);

// The decider. MATCH accepts; everything else is a drop plus one offense
// against the flow's source address. Every verdict lands in `history`.
Verdict decide(HistoryLog& history, Blacklist& blacklist, const FlowKey& flow,
               Verification verification, TimeMs now, const CnoaPolicy& policy,
               std::optional<std::uint32_t> challengeSent = std::nullopt,
               std::optional<std::uint32_t> challengeReceived = std::nullopt);

class CnoaDefense final : public Defense {
public:
    // Stateful tokens come from a generator seeded with `challengeSeed`.
    // Stateless mode throws MissingKey unless policy.secretKey is set.
    CnoaDefense(ChallengeMode mode, CnoaPolicy policy, std::uint64_t challengeSeed);

    std::string name() const override;
    bool stateless() const override { return mode_ == ChallengeMode::Stateless; }

    SynAction onSyn(const Segment& syn, TimeMs now) override;
    bool onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now) override;
    void onTimeout(const HalfOpenEntry& entry, TimeMs now) override;
    void onReset(const HalfOpenEntry& entry, TimeMs now) override;

    std::size_t blacklistedAddresses() const override { return blacklist_.everListed(); }

    const Blacklist& blacklist() const { return blacklist_; }
    ChallengeMode mode() const { return mode_; }

private:
    ChallengeMode mode_;
    CnoaPolicy policy_;
    SeededRng rng_;
    Blacklist blacklist_;
};

}  // namespace cnoa
