#include "cnoa/simnet.hpp"

#include <algorithm>
#include <set>

namespace cnoa {

namespace {

constexpr std::uint64_t kListenerIsnTag = 0x6c69736e;  // "lisn"
constexpr std::uint64_t kJitterTag = 0x6a697474;       // "jitt"
constexpr std::uint64_t kHostTagBase = 0x686f7374'00000000ull;

std::optional<Address> addressInRealm(const HostSpec& host, Realm realm)
{
    for (const auto& a : host.addresses) {
        if (a.realm == realm) {
            return a;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view toString(Behavior b)
{
    switch (b) {
    case Behavior::Server: return "server";
    case Behavior::Client: return "client";
    case Behavior::Attacker: return "attacker";
    case Behavior::Silent: return "silent";
    case Behavior::Innocent: return "innocent";
    case Behavior::Nonexistent: return "nonexistent";
    }
    return "unknown";
}

std::vector<std::pair<std::string, std::string>> Metrics::rows() const
{
    auto n = [](std::uint64_t v) { return std::to_string(v); };
    return {
        {"synReceived", n(synReceived)},
        {"spoofedInjected", n(spoofedInjected)},
        {"spoofedDetected", n(spoofedDetected)},
        {"spoofedPassed", n(spoofedPassed)},
        {"legitAttempted", n(legitAttempted)},
        {"legitEstablished", n(legitEstablished)},
        {"legitFailed", n(legitFailed)},
        {"backlogPeak", n(backlogPeak)},
        {"backlogDrops", n(backlogDrops)},
        {"halfOpenTimeouts", n(halfOpenTimeouts)},
        {"blacklistedAddresses", n(blacklistedAddresses)},
        {"blacklistDrops", n(blacklistDrops)},
        {"segmentsSent", n(segmentsSent)},
        {"segmentsDelivered", n(segmentsDelivered)},
        {"blackholed", n(blackholed)},
        {"droppedInFlight", n(droppedInFlight)},
        {"synAckSent", n(synAckSent)},
        {"retransmits", n(retransmits)},
        {"rejectedAcks", n(rejectedAcks)},
        {"resets", n(resets)},
        {"staleTimers", n(staleTimers)},
        {"unknownFlowAcks", n(unknownFlowAcks)},
        {"nonTcpSent", n(nonTcpSent)},
        {"nonTcpBypassed", n(nonTcpBypassed)},
        {"establishedTotal", n(establishedTotal)},
        {"extraFieldBytes", n(extraFieldBytes)},
    };
}

Network::Network(std::uint64_t seed, NetworkConfig config, std::vector<HostSpec> hosts,
                 std::vector<PathSpec> paths, ListenerConfig listener,
                 std::unique_ptr<Defense> defense)
    : seed_(seed), config_(config), hosts_(std::move(hosts)), defense_(std::move(defense)),
      jitterRng_(SeededRng::derive(seed, kJitterTag))
{
    if (!defense_) {
        throw Error("network needs a defense (use NoDefense for none)");
    }
    std::map<std::string, std::size_t> byId;
    std::size_t servers = 0;
    for (std::size_t i = 0; i < hosts_.size(); ++i) {
        const auto& h = hosts_[i];
        if (!byId.emplace(h.id, i).second) {
            throw Error("duplicate host id '" + h.id + "'");
        }
        if (h.addresses.empty()) {
            throw Error("host '" + h.id + "' has no address");
        }
        for (const auto& a : h.addresses) {
            if (!owners_.emplace(a, i).second) {
                throw Error("address " + a.toString() + " owned by two hosts");
            }
        }
        if (h.behavior == Behavior::Server) {
            ++servers;
            serverHost_ = i;
        }
    }
    if (servers != 1) {
        throw Error("network needs exactly one server host");
    }
    for (const auto& p : paths) {
        auto a = byId.find(p.a);
        auto b = byId.find(p.b);
        if (a == byId.end() || b == byId.end()) {
            throw Error("path references unknown host");
        }
        paths_[{std::min(a->second, b->second), std::max(a->second, b->second)}] = p.hops;
    }

    listener.initialTtl = hosts_[serverHost_].initialTtl;
    listener_ = std::make_unique<Listener>(std::move(listener), *defense_,
                                           SeededRng::derive(seed_, kListenerIsnTag));

    const HostSpec& server = hosts_[serverHost_];
    for (std::size_t i = 0; i < hosts_.size(); ++i) {
        const auto& h = hosts_[i];
        const std::uint64_t hostSeed = h.rngSeed ? *h.rngSeed : SeededRng::derive(seed_, kHostTagBase + i);
        if (h.behavior == Behavior::Client) {
            auto target = addressInRealm(server, h.addresses.front().realm);
            if (!target) {
                throw Error("client '" + h.id + "' has no server address in its realm");
            }
            ClientProfile profile = h.client;
            profile.rstUnsolicited = config_.innocentRst;
            clients_.emplace(i, ClientAgent(profile, h.addresses.front(), *target, hostSeed,
                                            h.initialTtl));
            for (std::size_t c = 0; c < profile.connectAt.size(); ++c) {
                schedule(profile.connectAt[c], ClientConnect{i, c});
            }
        } else if (h.behavior == Behavior::Attacker) {
            auto target = addressInRealm(server, h.flood.realm);
            if (!target) {
                throw Error("attacker '" + h.id + "' floods a realm the server lacks");
            }
            auto self = addressInRealm(h, h.flood.realm);
            if (!self && h.flood.spoofMode == SpoofMode::SelfIgnoreSynAck) {
                throw Error("attacker '" + h.id + "' has no own address in the flood realm");
            }
            auto [it, ok] = floods_.emplace(
                i, FloodGenerator(h.flood, self.value_or(h.addresses.front()), *target, hostSeed,
                                  h.initialTtl));
            if (auto due = it->second.nextDue()) {
                schedule(*due, FloodTick{i});
            }
        }
    }
}

void Network::schedule(TimeMs at, Payload payload)
{
    if (queue_.size() >= config_.maxPendingEvents) {
        throw EventQueueOverflow("event queue exceeded " + std::to_string(config_.maxPendingEvents) +
                                 " pending events");
    }
    queue_.push(SimEvent{at, nextSeqNo_++, std::move(payload)});
}

std::uint8_t Network::pathHops(std::size_t a, std::size_t b) const
{
    auto it = paths_.find({std::min(a, b), std::max(a, b)});
    return it == paths_.end() ? config_.defaultHops : it->second;
}

std::optional<Delivery> Network::route(const Segment& seg, std::size_t fromHost, TimeMs now)
{
    auto owner = owners_.find(seg.flow.dstAddr);
    if (owner == owners_.end() || hosts_[owner->second].behavior == Behavior::Nonexistent) {
        ++m_.blackholed;
        return std::nullopt;
    }
    const std::size_t to = owner->second;
    const std::uint8_t hops = pathHops(fromHost, to);
    if (seg.hopBudget <= hops) {
        ++m_.droppedInFlight;
        return std::nullopt;
    }
    TimeMs delay = hosts_[to].linkDelayMs;
    if (config_.jitterMs > 0) {
        delay += static_cast<TimeMs>(jitterRng_.below(static_cast<std::uint64_t>(config_.jitterMs) + 1));
    }
    return Delivery{to, now + delay, static_cast<std::uint8_t>(seg.hopBudget - hops)};
}

void Network::send(Packet packet, std::size_t fromHost, TimeMs now)
{
    packet.seg.sentAt = now;
    ++m_.segmentsSent;
    if (packet.kind == PacketKind::Tcp) {
        trace_.push_back(packet.seg);
        if (packet.seg.challenge) {
            m_.extraFieldBytes += sizeof(std::uint32_t);
        }
    } else {
        ++m_.nonTcpSent;
    }
    if (auto d = route(packet.seg, fromHost, now)) {
        packet.seg.hopBudget = d->hopBudget;
        schedule(d->at, Deliver{std::move(packet), d->host});
    }
}

void Network::apply(const ListenerOutput& out, std::size_t serverHost, TimeMs now)
{
    for (const auto& seg : out.segments) {
        send(Packet{PacketKind::Tcp, seg}, serverHost, now);
    }
    if (out.timer) {
        schedule(out.timer->at, Timer{out.timer->flow, out.timer->generation});
    }
    if (out.established) {
        auto it = origins_.find(*out.established);
        if (it != origins_.end() && it->second.kind == FlowOrigin::Kind::Legit) {
            legitEstablished_.insert({it->second.host, it->second.connection});
        }
    }
}

void Network::apply(const ClientActions& actions, std::size_t host, TimeMs now)
{
    for (const auto& [flow, conn] : actions.newFlows) {
        origins_[flow] = FlowOrigin{FlowOrigin::Kind::Legit, host, conn, now};
    }
    for (const auto& seg : actions.send) {
        send(Packet{PacketKind::Tcp, seg}, host, now);
    }
    for (const auto& t : actions.timers) {
        schedule(t.at, ClientTimeout{host, t.connection, t.attempt});
    }
}

void Network::handleDeliver(const Deliver& d, TimeMs now)
{
    ++m_.segmentsDelivered;
    const HostSpec& host = hosts_[d.host];
    const Segment& seg = d.packet.seg;
    switch (host.behavior) {
    case Behavior::Server:
        apply(listener_->onPacket(d.packet, now), d.host, now);
        break;
    case Behavior::Client:
        if (d.packet.kind == PacketKind::Tcp) {
            apply(clients_.at(d.host).onSegment(seg, now), d.host, now);
        }
        break;
    case Behavior::Innocent:
        if (d.packet.kind == PacketKind::Tcp && seg.isSynAck() && config_.innocentRst) {
            send(Packet{PacketKind::Tcp, makeRst(seg.flow.reversed(), seg.ack, host.initialTtl)},
                 d.host, now);
        }
        break;
    case Behavior::Attacker:
    case Behavior::Silent:
    case Behavior::Nonexistent:
        break;
    }
}

void Network::dispatch(const SimEvent& ev)
{
    const TimeMs now = ev.at;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Deliver>) {
                handleDeliver(p, now);
            } else if constexpr (std::is_same_v<T, Timer>) {
                apply(listener_->onTimer(p.flow, p.generation, now), serverHost_, now);
            } else if constexpr (std::is_same_v<T, ClientConnect>) {
                apply(clients_.at(p.host).onConnect(p.connection, now), p.host, now);
            } else if constexpr (std::is_same_v<T, ClientTimeout>) {
                apply(clients_.at(p.host).onTimeout(p.connection, p.attempt, now), p.host, now);
            } else if constexpr (std::is_same_v<T, FloodTick>) {
                auto& gen = floods_.at(p.host);
                const bool tcp = gen.profile().protocol == PacketKind::Tcp;
                for (auto& syn : gen.floodStep(now)) {
                    if (tcp) {
                        origins_[syn.flow] = FlowOrigin{FlowOrigin::Kind::Spoofed, p.host, 0, now};
                        ++m_.spoofedInjected;
                    }
                    send(Packet{gen.profile().protocol, syn}, p.host, now);
                }
                if (auto due = gen.nextDue()) {
                    schedule(*due, FloodTick{p.host});
                }
            }
        },
        ev.payload);
}

void Network::sampleUntil(TimeMs t)
{
    const auto step = std::max<TimeMs>(config_.sampleEveryMs, 1);
    while (nextSampleAt_ < t) {
        backlogSeries_.push_back(listener_->halfOpen().size());
        nextSampleAt_ += step;
    }
}

Metrics Network::run(TimeMs untilMs)
{
    if (untilMs <= 0) {
        throw Error("run horizon must be positive");
    }
    if (ran_) {
        throw Error("a network can only be run once");
    }
    ran_ = true;
    while (!queue_.empty() && queue_.top().at <= untilMs) {
        SimEvent ev = queue_.top();
        queue_.pop();
        sampleUntil(ev.at);
        now_ = ev.at;
        dispatch(ev);
    }
    sampleUntil(untilMs + 1);
    return collect(untilMs);
}

Metrics Network::collect(TimeMs untilMs)
{
    Metrics m = m_;
    while (!queue_.empty()) {
        if (std::holds_alternative<Deliver>(queue_.top().payload)) {
            ++m.droppedInFlight;
        }
        queue_.pop();
    }

    const auto& c = listener_->counters();
    m.synReceived = c.synReceived;
    m.backlogPeak = c.backlogPeak;
    m.backlogDrops = c.backlogDrops;
    m.halfOpenTimeouts = c.halfOpenTimeouts;
    m.synAckSent = c.synAckSent;
    m.retransmits = c.retransmits;
    m.rejectedAcks = c.rejected + c.rejectedStateless;
    m.resets = c.resets;
    m.staleTimers = c.staleTimers;
    m.unknownFlowAcks = c.unknownFlowAcks;
    m.nonTcpBypassed = c.nonTcpBypassed;
    m.establishedTotal = listener_->established().size();
    m.blacklistedAddresses = defense_->blacklistedAddresses();

    const auto buckets = static_cast<std::size_t>(untilMs / 1000 + 1);
    m.spoofedInjectedPerSecond.assign(buckets, 0);
    m.spoofedDetectedPerSecond.assign(buckets, 0);
    for (const auto& [flow, origin] : origins_) {
        if (origin.kind == FlowOrigin::Kind::Spoofed) {
            ++m.spoofedInjectedPerSecond[static_cast<std::size_t>(origin.injectedAt / 1000)];
        }
    }

    std::set<FlowKey> detected;
    for (const auto& r : defense_->history().records()) {
        if (r.verdict == Verdict::DroppedBlacklisted) {
            ++m.blacklistDrops;
        }
        if (!isDrop(r.verdict)) {
            continue;
        }
        auto it = origins_.find(r.flow);
        if (it != origins_.end() && it->second.kind == FlowOrigin::Kind::Spoofed &&
            detected.insert(r.flow).second) {
            ++m.spoofedDetectedPerSecond[static_cast<std::size_t>(it->second.injectedAt / 1000)];
        }
    }
    m.spoofedDetected = detected.size();

    for (const auto& flow : listener_->established()) {
        auto it = origins_.find(flow);
        if (it != origins_.end() && it->second.kind == FlowOrigin::Kind::Spoofed) {
            ++m.spoofedPassed;
        }
    }

    for (const auto& [idx, agent] : clients_) {
        const auto& at = agent.profile().connectAt;
        m.legitAttempted += static_cast<std::uint64_t>(
            std::count_if(at.begin(), at.end(), [untilMs](TimeMs t) { return t <= untilMs; }));
        m.legitFailed += agent.failures();
    }
    m.legitEstablished = legitEstablished_.size();

    m.backlogSeries = backlogSeries_;
    m.sampleEveryMs = std::max<TimeMs>(config_.sampleEveryMs, 1);
    return m;
}

}  // namespace cnoa
