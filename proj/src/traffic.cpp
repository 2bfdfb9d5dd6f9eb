#include "cnoa/traffic.hpp"

#include <cmath>

namespace cnoa {

ClientAgent::ClientAgent(ClientProfile profile, Address self, Address server, std::uint64_t seed,
                         std::uint8_t initialTtl)
    : profile_(std::move(profile)), self_(self), server_(server), rng_(seed),
      initialTtl_(initialTtl), connections_(profile_.connectAt.size())
{
    for (std::size_t i = 1; i < profile_.connectAt.size(); ++i) {
        if (profile_.connectAt[i] <= profile_.connectAt[i - 1]) {
            throw Error("client connect times must be strictly increasing");
        }
    }
    portCursor_ = static_cast<std::uint32_t>(rng_.below(65536 - kClientPortLow));
}

std::uint16_t ClientAgent::nextPort()
{
    constexpr std::uint32_t span = 65536 - kClientPortLow;
    return static_cast<std::uint16_t>(kClientPortLow + (portCursor_++ % span));
}

std::optional<std::size_t> ClientAgent::findByFlow(const FlowKey& flow) const
{
    for (std::size_t i = 0; i < connections_.size(); ++i) {
        const auto& c = connections_[i];
        if (c.state != State::Idle && c.flow == flow) {
            return i;
        }
    }
    return std::nullopt;
}

ClientActions ClientAgent::startAttempt(std::size_t connection, TimeMs now)
{
    ClientActions out;
    auto& c = connections_[connection];
    c.state = State::SynSent;
    c.flow = FlowKey{self_, nextPort(), server_, profile_.serverPort};
    c.isn = rng_.next32();
    out.send.push_back(makeSyn(c.flow, c.isn, initialTtl_));
    out.timers.push_back({connection, c.attempt, now + profile_.connectTimeoutMs});
    out.newFlows.emplace_back(c.flow, connection);
    return out;
}

ClientActions ClientAgent::fail(std::size_t connection, TimeMs now)
{
    auto& c = connections_[connection];
    if (c.attempt < profile_.retryOnFailure) {
        ++c.attempt;
        return startAttempt(connection, now);
    }
    c.state = State::Failed;
    ++failures_;
    ClientActions out;
    out.failed.push_back(connection);
    return out;
}

ClientActions ClientAgent::onConnect(std::size_t connection, TimeMs now)
{
    if (connection >= connections_.size() || connections_[connection].state != State::Idle) {
        return {};
    }
    return startAttempt(connection, now);
}

ClientActions ClientAgent::onSegment(const Segment& seg, TimeMs now)
{
    const FlowKey mine = seg.flow.reversed();
    auto idx = findByFlow(mine);
    ClientActions out;

    if (seg.isRst()) {
        if (idx && (connections_[*idx].state == State::SynSent ||
                    connections_[*idx].state == State::AckSent)) {
            return fail(*idx, now);
        }
        return out;
    }
    if (!seg.isSynAck()) {
        return out;
    }
    if (idx) {
        auto& c = connections_[*idx];
        const bool acksOurSyn = seg.ack == c.isn + 1u;
        if (acksOurSyn && (c.state == State::SynSent || c.state == State::AckSent)) {
            out.send.push_back(makeAckEcho(seg, profile_.echoesChallenge, initialTtl_));
            c.state = State::AckSent;
            return out;
        }
    }
    if (profile_.rstUnsolicited) {
        out.send.push_back(makeRst(mine, seg.ack, initialTtl_));
    }
    return out;
}

ClientActions ClientAgent::onTimeout(std::size_t connection, unsigned attempt, TimeMs now)
{
    if (connection >= connections_.size()) {
        return {};
    }
    const auto& c = connections_[connection];
    if (c.attempt != attempt || c.state != State::SynSent) {
        return {};
    }
    return fail(connection, now);
}

Address poolBase(Realm realm)
{
    if (realm == Realm::V4) {
        return Address::v4(0xC6120000u);  // 198.18.0.0
    }
    return Address::v6((uint128{0x20010db85f000000ull} << 64));  // 2001:db8:5f00::
}

std::uint64_t poolRangeSize(Realm realm)
{
    return realm == Realm::V4 ? (std::uint64_t{1} << 17) : (std::uint64_t{1} << 40);
}

bool inPoolRange(const Address& addr)
{
    const Address base = poolBase(addr.realm);
    if (addr.realm == Realm::V4) {
        return addr.value >= base.value && addr.value < base.value + poolRangeSize(Realm::V4);
    }
    // /40 prefix match
    return (addr.value >> 88) == (base.value >> 88);
}

FloodGenerator::FloodGenerator(FloodProfile profile, Address self, Address target,
                               std::uint64_t seed, std::uint8_t initialTtl)
    : profile_(std::move(profile)), self_(self), target_(target), rng_(seed),
      initialTtl_(initialTtl)
{
    if (profile_.stopAt <= profile_.startAt) {
        throw Error("flood stop must be after start");
    }
    if (!(profile_.ratePerSecond > 0.0)) {
        throw Error("flood rate must be positive");
    }
    switch (profile_.spoofMode) {
    case SpoofMode::NonexistentPool: {
        if (profile_.poolSize == 0 || profile_.poolSize > poolRangeSize(profile_.realm)) {
            throw Error("flood pool size out of range");
        }
        const Address base = poolBase(profile_.realm);
        const std::uint64_t start = rng_.below(poolRangeSize(profile_.realm) - profile_.poolSize + 1);
        pool_.reserve(profile_.poolSize);
        for (std::size_t i = 0; i < profile_.poolSize; ++i) {
            pool_.push_back(base.offset(start + i));
        }
        break;
    }
    case SpoofMode::ExistingHosts:
        if (profile_.existingHosts.empty()) {
            throw Error("existing-hosts flood needs at least one address");
        }
        pool_ = profile_.existingHosts;
        break;
    case SpoofMode::SelfIgnoreSynAck:
        pool_ = {self_};
        break;
    }
    for (const auto& a : pool_) {
        if (a.realm != target_.realm) {
            throw Error("flood source realm differs from target realm");
        }
    }
}

TimeMs FloodGenerator::dueAt(std::uint64_t k) const
{
    return profile_.startAt +
           static_cast<TimeMs>(std::floor(static_cast<double>(k) * 1000.0 / profile_.ratePerSecond));
}

std::optional<TimeMs> FloodGenerator::nextDue() const
{
    const TimeMs t = dueAt(emitted_);
    if (t >= profile_.stopAt) {
        return std::nullopt;
    }
    return t;
}

Address FloodGenerator::nextSource()
{
    if (profile_.spoofMode == SpoofMode::ExistingHosts) {
        return pool_[roundRobin_++ % pool_.size()];
    }
    if (pool_.size() == 1) {
        return pool_.front();
    }
    if (orderPos_ == order_.size()) {
        // Fresh uniform permutation for each pass over the pool.
        order_.resize(pool_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            order_[i] = i;
        }
        for (std::size_t i = order_.size() - 1; i > 0; --i) {
            std::swap(order_[i], order_[rng_.below(i + 1)]);
        }
        orderPos_ = 0;
    }
    return pool_[order_[orderPos_++]];
}

std::vector<Segment> FloodGenerator::floodStep(TimeMs now)
{
    std::vector<Segment> out;
    constexpr std::uint32_t span = kFloodPortHigh - kFloodPortLow + 1;
    while (true) {
        auto due = nextDue();
        if (!due || *due > now) {
            break;
        }
        const Address src = nextSource();
        auto port = static_cast<std::uint16_t>(kFloodPortLow + rng_.below(span));
        std::uint32_t probes = 0;
        while (!usedEndpoints_.emplace(src, port).second) {
            if (++probes == span) {
                throw Error("flood exhausted source ports for " + src.toString());
            }
            port = port == kFloodPortHigh ? kFloodPortLow : static_cast<std::uint16_t>(port + 1);
        }
        Segment syn = makeSyn(FlowKey{src, port, target_, profile_.targetPort}, rng_.next32(),
                              initialTtl_);
        syn.sentAt = *due;
        out.push_back(syn);
        ++emitted_;
    }
    return out;
}

}  // namespace cnoa
