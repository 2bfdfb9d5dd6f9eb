#pragma once

// Behavior profiles that drive scenarios: cooperating clients and SYN
// flooders. Both are step functions; the event loop owns time.

#include "cnoa/cnoa.hpp"
#include "cnoa/rng.hpp"
#include "cnoa/segment.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace cnoa {

// Flood source ports stay below the ephemeral range clients use, so a
// spoofed flow can never collide with a legitimate one.
inline constexpr std::uint16_t kFloodPortLow = 1024;
inline constexpr std::uint16_t kFloodPortHigh = 49151;
inline constexpr std::uint16_t kClientPortLow = 49152;

struct ClientProfile {
    std::vector<TimeMs> connectAt;
    bool echoesChallenge{true};
    unsigned retryOnFailure{0};
    TimeMs connectTimeoutMs{3'000};
    std::uint16_t serverPort{80};
    // Answer an unsolicited SYN+ACK with RST.
    bool rstUnsolicited{true};
};

struct ClientTimer {
    std::size_t connection{0};
    unsigned attempt{0};
    TimeMs at{0};
};

struct ClientActions {
    std::vector<Segment> send;
    std::vector<ClientTimer> timers;
    // Connections abandoned for good during this step.
    std::vector<std::size_t> failed;
    // (flow, connection) for each SYN sent, for ground-truth attribution.
    std::vector<std::pair<FlowKey, std::size_t>> newFlows;
};

class ClientAgent {
public:
    ClientAgent(ClientProfile profile, Address self, Address server, std::uint64_t seed,
                std::uint8_t initialTtl = 64);

    const ClientProfile& profile() const { return profile_; }
    std::size_t connectionCount() const { return profile_.connectAt.size(); }

    ClientActions onConnect(std::size_t connection, TimeMs now);
    ClientActions onSegment(const Segment& seg, TimeMs now);
    ClientActions onTimeout(std::size_t connection, unsigned attempt, TimeMs now);

    std::size_t failures() const { return failures_; }

private:
    enum class State : std::uint8_t { Idle, SynSent, AckSent, Failed };
    struct Connection {
        State state{State::Idle};
        unsigned attempt{0};
        FlowKey flow;
        std::uint32_t isn{0};
    };

    ClientActions startAttempt(std::size_t connection, TimeMs now);
    ClientActions fail(std::size_t connection, TimeMs now);
    std::optional<std::size_t> findByFlow(const FlowKey& flow) const;
    std::uint16_t nextPort();

    ClientProfile profile_;
    Address self_;
    Address server_;
    SeededRng rng_;
    std::uint8_t initialTtl_;
    std::vector<Connection> connections_;
    std::uint32_t portCursor_{0};
    std::size_t failures_{0};
};

enum class SpoofMode : std::uint8_t { NonexistentPool, ExistingHosts, SelfIgnoreSynAck };

struct FloodProfile {
    TimeMs startAt{0};
    TimeMs stopAt{1'000};
    double ratePerSecond{100.0};
    SpoofMode spoofMode{SpoofMode::NonexistentPool};
    std::size_t poolSize{1'000};
    std::vector<Address> existingHosts;
    Realm realm{Realm::V4};
    PacketKind protocol{PacketKind::Tcp};
    std::uint16_t targetPort{80};
};

// Reserved, never-owned address ranges the nonexistent pool is drawn from:
// 198.18.0.0/15 for V4 and 2001:db8:5f00::/40 for V6.
Address poolBase(Realm realm);
std::uint64_t poolRangeSize(Realm realm);
bool inPoolRange(const Address& addr);

class FloodGenerator {
public:
    FloodGenerator(FloodProfile profile, Address self, Address target, std::uint64_t seed,
                   std::uint8_t initialTtl = 64);

    // All SYNs due at or before `now`, in emission order. Emission k is due
    // at startAt + floor(k * 1000 / rate) and only while that is < stopAt.
    std::vector<Segment> floodStep(TimeMs now);

    std::optional<TimeMs> nextDue() const;
    std::uint64_t emitted() const { return emitted_; }
    const std::vector<Address>& pool() const { return pool_; }
    const FloodProfile& profile() const { return profile_; }

private:
    TimeMs dueAt(std::uint64_t k) const;
    Address nextSource();

    FloodProfile profile_;
    Address self_;
    Address target_;
    SeededRng rng_;
    std::uint8_t initialTtl_;
    std::vector<Address> pool_;
    std::vector<std::size_t> order_;
    std::size_t orderPos_{0};
    std::size_t roundRobin_{0};
    std::uint64_t emitted_{0};
    std::set<std::pair<Address, std::uint16_t>> usedEndpoints_;
};

}  // namespace cnoa
