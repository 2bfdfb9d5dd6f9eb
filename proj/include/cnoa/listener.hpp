#pragma once

// Server-side listener: bounded half-open backlog, SYN+ACK retransmission,
// establishment. Each handler returns what the event loop must do next.
//
// Retransmission schedule, absolute from the first SYN+ACK:
//   resend at +3 s, +6 s, +12 s, +24 s, +48 s; expire at +96 s.

#include "cnoa/cnoa.hpp"
#include "cnoa/defense.hpp"
#include "cnoa/rng.hpp"
#include "cnoa/segment.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace cnoa {

inline constexpr std::array<TimeMs, 6> kSynAckSchedule{3'000, 6'000, 12'000, 24'000, 48'000, 96'000};
inline constexpr unsigned kMaxRetransmits = 5;

struct ListenerConfig {
    std::size_t backlogCapacity{128};
    std::vector<std::uint16_t> ports{80};
    std::uint8_t initialTtl{64};
    bool rstOnReject{true};
};

struct ListenerCounters {
    std::uint64_t synReceived{0};
    std::uint64_t synAckSent{0};
    std::uint64_t retransmits{0};
    std::uint64_t backlogDrops{0};
    std::size_t backlogPeak{0};
    std::uint64_t vetoed{0};
    std::uint64_t halfOpenCreated{0};
    std::uint64_t halfOpenTimeouts{0};
    std::uint64_t establishedFromBacklog{0};
    std::uint64_t establishedStateless{0};
    std::uint64_t rejected{0};  // half-open entries removed on a failed ACK
    std::uint64_t rejectedStateless{0};
    std::uint64_t resets{0};
    std::uint64_t staleTimers{0};
    std::uint64_t unknownFlowAcks{0};
    std::uint64_t duplicateAcks{0};
    std::uint64_t badAckNumber{0};
    std::uint64_t closedPortDrops{0};
    std::uint64_t nonTcpBypassed{0};
    std::uint64_t ignored{0};
};

struct TimerRequest {
    FlowKey flow;
    std::uint64_t generation{0};
    TimeMs at{0};
};

struct ListenerOutput {
    std::vector<Segment> segments;
    std::optional<TimerRequest> timer;
    std::optional<FlowKey> established;
};

class Listener {
public:
    // `defense` must outlive the listener. Server ISNs come from `isnSeed`.
    Listener(ListenerConfig config, Defense& defense, std::uint64_t isnSeed);

    // Protocol analyzer entry point: non-TCP packets bypass the handshake.
    ListenerOutput onPacket(const Packet& packet, TimeMs now);

    ListenerOutput onSyn(const Segment& seg, TimeMs now);
    ListenerOutput onAck(const Segment& seg, TimeMs now);
    ListenerOutput onRst(const Segment& seg, TimeMs now);
    ListenerOutput onTimer(const FlowKey& flow, std::uint64_t generation, TimeMs now);

    const ListenerConfig& config() const { return config_; }
    const ListenerCounters& counters() const { return counters_; }
    const std::map<FlowKey, HalfOpenEntry>& halfOpen() const { return halfOpen_; }
    const std::set<FlowKey>& established() const { return established_; }
    const Defense& defense() const { return defense_; }

private:
    bool listensOn(std::uint16_t port) const;
    Segment synAckFor(const HalfOpenEntry& entry) const;
    ListenerOutput reject(const Segment& ack, bool fromBacklog);

    ListenerConfig config_;
    Defense& defense_;
    SeededRng isnRng_;
    std::map<FlowKey, HalfOpenEntry> halfOpen_;
    std::set<FlowKey> established_;
    ListenerCounters counters_;
    std::uint64_t nextGeneration_{1};
};

}  // namespace cnoa
