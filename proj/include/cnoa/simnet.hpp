#pragma once

// Deterministic discrete-event network. Events are processed in (at, seqNo)
// order; all randomness flows from seeded streams, so identical inputs
// produce an identical trace.
//
// Spoofing semantics live in routing: a segment is delivered to whichever
// host owns its destination address. Replies to a spoofed source therefore
// go to the real owner (or nowhere), never back to the attacker.

#include "cnoa/cnoa.hpp"
#include "cnoa/defense.hpp"
#include "cnoa/listener.hpp"
#include "cnoa/traffic.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <variant>
#include <vector>

namespace cnoa {

class EventQueueOverflow : public Error {
public:
    using Error::Error;
};

enum class Behavior : std::uint8_t { Server, Client, Attacker, Silent, Innocent, Nonexistent };

std::string_view toString(Behavior b);

struct HostSpec {
    std::string id;
    std::vector<Address> addresses;
    Behavior behavior{Behavior::Innocent};
    ClientProfile client;  // Behavior::Client
    FloodProfile flood;    // Behavior::Attacker
    TimeMs linkDelayMs{5};
    std::uint8_t initialTtl{64};
    std::optional<std::uint64_t> rngSeed;
};

struct PathSpec {
    std::string a;
    std::string b;
    std::uint8_t hops{7};
};

struct NetworkConfig {
    std::uint8_t defaultHops{7};
    TimeMs jitterMs{0};
    bool innocentRst{true};
    std::size_t maxPendingEvents{4'000'000};
    TimeMs sampleEveryMs{100};
};

struct Metrics {
    std::uint64_t synReceived{0};
    std::uint64_t spoofedInjected{0};
    std::uint64_t spoofedDetected{0};
    std::uint64_t spoofedPassed{0};
    std::uint64_t legitAttempted{0};
    std::uint64_t legitEstablished{0};
    std::uint64_t legitFailed{0};
    std::uint64_t backlogPeak{0};
    std::uint64_t backlogDrops{0};
    std::uint64_t halfOpenTimeouts{0};
    std::uint64_t blacklistedAddresses{0};
    std::uint64_t blacklistDrops{0};
    std::uint64_t segmentsSent{0};
    std::uint64_t segmentsDelivered{0};
    std::uint64_t blackholed{0};
    std::uint64_t droppedInFlight{0};
    std::uint64_t synAckSent{0};
    std::uint64_t retransmits{0};
    std::uint64_t rejectedAcks{0};
    std::uint64_t resets{0};
    std::uint64_t staleTimers{0};
    std::uint64_t unknownFlowAcks{0};
    std::uint64_t nonTcpSent{0};
    std::uint64_t nonTcpBypassed{0};
    std::uint64_t establishedTotal{0};
    std::uint64_t extraFieldBytes{0};

    // Backlog occupancy at t = 0, sampleEvery, 2*sampleEvery, ...
    std::vector<std::size_t> backlogSeries;
    TimeMs sampleEveryMs{100};

    // Per simulated second of injection: spoofed SYNs injected and how many
    // of those flows were later detected.
    std::vector<std::uint64_t> spoofedInjectedPerSecond;
    std::vector<std::uint64_t> spoofedDetectedPerSecond;

    // (name, value) pairs in a fixed order, for the metrics CSV.
    std::vector<std::pair<std::string, std::string>> rows() const;
};

// Ground truth about who created a flow.
struct FlowOrigin {
    enum class Kind : std::uint8_t { Legit, Spoofed } kind{Kind::Legit};
    std::size_t host{0};
    std::size_t connection{0};
    TimeMs injectedAt{0};
};

struct Delivery {
    std::size_t host{0};
    TimeMs at{0};
    std::uint8_t hopBudget{0};
};

class Network {
public:
    Network(std::uint64_t seed, NetworkConfig config, std::vector<HostSpec> hosts,
            std::vector<PathSpec> paths, ListenerConfig listener,
            std::unique_ptr<Defense> defense);

    // Where a segment sent by `fromHost` at `now` ends up; nullopt if
    // blackholed (unowned or nonexistent destination) or out of hops.
    std::optional<Delivery> route(const Segment& seg, std::size_t fromHost, TimeMs now);

    Metrics run(TimeMs untilMs);

    const std::vector<Segment>& trace() const { return trace_; }
    const HistoryLog& history() const { return defense_->history(); }
    const Listener& listener() const { return *listener_; }
    const Defense& defense() const { return *defense_; }
    const std::map<FlowKey, FlowOrigin>& origins() const { return origins_; }
    const std::vector<HostSpec>& hosts() const { return hosts_; }

private:
    struct Deliver {
        Packet packet;
        std::size_t host;
    };
    struct Timer {
        FlowKey flow;
        std::uint64_t generation;
    };
    struct ClientConnect {
        std::size_t host;
        std::size_t connection;
    };
    struct ClientTimeout {
        std::size_t host;
        std::size_t connection;
        unsigned attempt;
    };
    struct FloodTick {
        std::size_t host;
    };
    using Payload = std::variant<Deliver, Timer, ClientConnect, ClientTimeout, FloodTick>;

    struct SimEvent {
        TimeMs at;
        std::uint64_t seqNo;
        Payload payload;
    };
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const
        {
            return a.at != b.at ? a.at > b.at : a.seqNo > b.seqNo;
        }
    };

    void schedule(TimeMs at, Payload payload);
    void send(Packet packet, std::size_t fromHost, TimeMs now);
    void apply(const ListenerOutput& out, std::size_t serverHost, TimeMs now);
    void apply(const ClientActions& actions, std::size_t host, TimeMs now);
    void dispatch(const SimEvent& ev);
    void handleDeliver(const Deliver& d, TimeMs now);
    void sampleUntil(TimeMs t);
    Metrics collect(TimeMs untilMs);
    std::uint8_t pathHops(std::size_t a, std::size_t b) const;

    std::uint64_t seed_;
    NetworkConfig config_;
    std::vector<HostSpec> hosts_;
    std::map<std::pair<std::size_t, std::size_t>, std::uint8_t> paths_;
    std::map<Address, std::size_t> owners_;
    std::size_t serverHost_{0};
    std::unique_ptr<Defense> defense_;
    std::unique_ptr<Listener> listener_;
    std::map<std::size_t, ClientAgent> clients_;
    std::map<std::size_t, FloodGenerator> floods_;
    SeededRng jitterRng_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
    std::uint64_t nextSeqNo_{0};
    TimeMs now_{0};
    bool ran_{false};

    std::vector<Segment> trace_;
    std::map<FlowKey, FlowOrigin> origins_;
    std::set<std::pair<std::size_t, std::size_t>> legitEstablished_;
    std::vector<std::size_t> backlogSeries_;
    TimeMs nextSampleAt_{0};
    Metrics m_;
};

}  // namespace cnoa
