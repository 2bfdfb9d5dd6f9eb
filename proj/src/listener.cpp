#include "cnoa/listener.hpp"

#include <algorithm>

namespace cnoa {

Listener::Listener(ListenerConfig config, Defense& defense, std::uint64_t isnSeed)
    : config_(std::move(config)), defense_(defense), isnRng_(isnSeed)
{
    if (config_.backlogCapacity == 0) {
        throw Error("backlog capacity must be positive");
    }
    if (config_.initialTtl == 0) {
        throw Error("initial TTL must be positive");
    }
}

bool Listener::listensOn(std::uint16_t port) const
{
    return std::find(config_.ports.begin(), config_.ports.end(), port) != config_.ports.end();
}

Segment Listener::synAckFor(const HalfOpenEntry& entry) const
{
    Segment syn{entry.flow, Flags::syn(), entry.clientIsn, 0, std::nullopt, 1, 0};
    return makeSynAck(syn, entry.serverIsn, entry.challenge, config_.initialTtl);
}

ListenerOutput Listener::onPacket(const Packet& packet, TimeMs now)
{
    if (classify(packet) == Protocol::Other) {
        ++counters_.nonTcpBypassed;
        return {};
    }
    const Segment& seg = packet.seg;
    if (seg.isSyn()) {
        return onSyn(seg, now);
    }
    if (seg.isAck()) {
        return onAck(seg, now);
    }
    if (seg.isRst()) {
        return onRst(seg, now);
    }
    ++counters_.ignored;
    return {};
}

ListenerOutput Listener::onSyn(const Segment& seg, TimeMs now)
{
    ListenerOutput out;
    if (!listensOn(seg.flow.dstPort)) {
        ++counters_.closedPortDrops;
        return out;
    }
    ++counters_.synReceived;

    if (auto it = halfOpen_.find(seg.flow); it != halfOpen_.end()) {
        // Duplicate SYN for a pending flow: answer with the same SYN+ACK.
        out.segments.push_back(synAckFor(it->second));
        ++counters_.synAckSent;
        return out;
    }
    if (established_.contains(seg.flow)) {
        ++counters_.ignored;
        return out;
    }

    const SynAction action = defense_.onSyn(seg, now);
    if (action.kind == SynAction::Kind::Drop) {
        ++counters_.vetoed;
        return out;
    }
    const std::uint32_t serverIsn = action.isn ? *action.isn : isnRng_.next32();

    if (action.kind == SynAction::Kind::Stateless) {
        out.segments.push_back(makeSynAck(seg, serverIsn, action.challenge, config_.initialTtl));
        ++counters_.synAckSent;
        return out;
    }

    if (halfOpen_.size() >= config_.backlogCapacity) {
        ++counters_.backlogDrops;
        return out;
    }
    HalfOpenEntry entry{seg.flow,        serverIsn, seg.seq, action.challenge, now, 0,
                        now + kSynAckSchedule[0], nextGeneration_++};
    out.segments.push_back(synAckFor(entry));
    out.timer = TimerRequest{entry.flow, entry.generation, entry.nextEventAt};
    halfOpen_.emplace(entry.flow, entry);
    ++counters_.synAckSent;
    ++counters_.halfOpenCreated;
    counters_.backlogPeak = std::max(counters_.backlogPeak, halfOpen_.size());
    return out;
}

ListenerOutput Listener::reject(const Segment& ack, bool fromBacklog)
{
    ListenerOutput out;
    ++(fromBacklog ? counters_.rejected : counters_.rejectedStateless);
    if (config_.rstOnReject) {
        out.segments.push_back(makeRst(ack.flow.reversed(), ack.ack, config_.initialTtl));
    }
    return out;
}

ListenerOutput Listener::onAck(const Segment& seg, TimeMs now)
{
    if (!listensOn(seg.flow.dstPort)) {
        ++counters_.closedPortDrops;
        return {};
    }
    if (established_.contains(seg.flow)) {
        ++counters_.duplicateAcks;
        return {};
    }

    if (defense_.stateless()) {
        if (!defense_.onAck(seg, nullptr, now)) {
            return reject(seg, false);
        }
        established_.insert(seg.flow);
        ++counters_.establishedStateless;
        ListenerOutput out;
        out.established = seg.flow;
        return out;
    }

    auto it = halfOpen_.find(seg.flow);
    if (it == halfOpen_.end()) {
        ++counters_.unknownFlowAcks;
        return {};
    }
    if (seg.ack != it->second.serverIsn + 1u) {
        ++counters_.badAckNumber;
        return {};
    }
    const HalfOpenEntry entry = it->second;
    halfOpen_.erase(it);
    if (!defense_.onAck(seg, &entry, now)) {
        return reject(seg, true);
    }
    established_.insert(entry.flow);
    ++counters_.establishedFromBacklog;
    ListenerOutput out;
    out.established = entry.flow;
    return out;
}

ListenerOutput Listener::onRst(const Segment& seg, TimeMs now)
{
    auto it = halfOpen_.find(seg.flow);
    if (it == halfOpen_.end()) {
        ++counters_.ignored;
        return {};
    }
    const HalfOpenEntry entry = it->second;
    halfOpen_.erase(it);
    ++counters_.resets;
    defense_.onReset(entry, now);
    return {};
}

ListenerOutput Listener::onTimer(const FlowKey& flow, std::uint64_t generation, TimeMs now)
{
    ListenerOutput out;
    auto it = halfOpen_.find(flow);
    if (it == halfOpen_.end() || it->second.generation != generation ||
        now < it->second.nextEventAt) {
        ++counters_.staleTimers;
        return out;
    }
    HalfOpenEntry& entry = it->second;
    if (entry.retransmitsSent < kMaxRetransmits) {
        out.segments.push_back(synAckFor(entry));
        ++entry.retransmitsSent;
        entry.nextEventAt = entry.createdAt + kSynAckSchedule[entry.retransmitsSent];
        out.timer = TimerRequest{entry.flow, entry.generation, entry.nextEventAt};
        ++counters_.synAckSent;
        ++counters_.retransmits;
        return out;
    }
    const HalfOpenEntry expired = entry;
    halfOpen_.erase(it);
    ++counters_.halfOpenTimeouts;
    defense_.onTimeout(expired, now);
    return out;
}

}  // namespace cnoa
