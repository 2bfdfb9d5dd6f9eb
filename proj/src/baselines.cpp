#include "cnoa/baselines.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace cnoa {

ThresholdDecision thresholdOnSyn(SynCountTable& table, const Address& src, TimeMs now)
{
    auto& row = table.rows[src];
    ++row.pendingSynCount;
    if (row.blockedSince) {
        return ThresholdDecision::Block;
    }
    if (row.pendingSynCount > table.threshold) {
        row.blockedSince = now;
        return ThresholdDecision::Block;
    }
    return ThresholdDecision::Pass;
}

void thresholdOnCompleted(SynCountTable& table, const Address& src)
{
    auto it = table.rows.find(src);
    if (it != table.rows.end() && it->second.pendingSynCount > 0) {
        --it->second.pendingSynCount;
    }
}

ThresholdDefense::ThresholdDefense(unsigned threshold)
{
    if (threshold == 0) {
        throw Error("threshold must be positive");
    }
    table_.threshold = threshold;
}

std::string ThresholdDefense::name() const
{
    return "threshold:" + std::to_string(table_.threshold);
}

SynAction ThresholdDefense::onSyn(const Segment& syn, TimeMs now)
{
    if (thresholdOnSyn(table_, syn.flow.srcAddr, now) == ThresholdDecision::Block) {
        history_.append({now, syn.flow, Verdict::DroppedBlacklisted, std::nullopt, std::nullopt});
        return SynAction::drop();
    }
    return {};
}

bool ThresholdDefense::onAck(const Segment& ack, const HalfOpenEntry*, TimeMs)
{
    thresholdOnCompleted(table_, ack.flow.srcAddr);
    return true;
}

std::size_t ThresholdDefense::blacklistedAddresses() const
{
    return static_cast<std::size_t>(std::count_if(
        table_.rows.begin(), table_.rows.end(),
        [](const auto& kv) { return kv.second.blockedSince.has_value(); }));
}

namespace {

std::uint32_t cookieCounter(const CookieParams& params, TimeMs now)
{
    const TimeMs window = static_cast<TimeMs>(params.timestampGranularityS) * 1000;
    return static_cast<std::uint32_t>((now / window) % 32);
}

std::uint32_t cookieHash24(const CookieParams& params, const FlowKey& flow,
                           std::uint32_t clientIsn, std::uint32_t counter, std::uint32_t mssIndex)
{
    std::string msg;
    msg.reserve(1 + 38 + 4 + 2);
    msg += 'K';
    appendFlowBytes(msg, flow);
    for (int i = 3; i >= 0; --i) {
        msg += static_cast<char>(clientIsn >> (8 * i));
    }
    msg += static_cast<char>(counter);
    msg += static_cast<char>(mssIndex);
    return static_cast<std::uint32_t>(keyedHash(params.secretKey, msg)) & 0xFFFFFFu;
}

std::uint32_t packCookie(std::uint32_t counter, std::uint32_t mssIndex, std::uint32_t hash24)
{
    return (counter << 27) | (mssIndex << 24) | hash24;
}

}  // namespace

std::uint32_t cookieEncode(const CookieParams& params, const Segment& syn, TimeMs now,
                           std::uint16_t clientMss)
{
    if (!params.valid()) {
        throw Error("cookie MSS table must hold 1..8 entries");
    }
    std::uint32_t mssIndex = 0;
    for (std::uint32_t i = 0; i < params.mssTable.size(); ++i) {
        if (params.mssTable[i] <= clientMss) {
            mssIndex = i;
        }
    }
    const auto counter = cookieCounter(params, now);
    return packCookie(counter, mssIndex, cookieHash24(params, syn.flow, syn.seq, counter, mssIndex));
}

CookieCheck cookieValidate(const CookieParams& params, const Segment& ack, TimeMs now)
{
    const std::uint32_t cookie = ack.ack - 1u;
    const std::uint32_t counter = cookie >> 27;
    const std::uint32_t mssIndex = (cookie >> 24) & 0x7u;
    if (mssIndex >= params.mssTable.size()) {
        return CookieCheck::Invalid;
    }
    const std::uint32_t current = cookieCounter(params, now);
    if (counter != current && counter != ((current + 31) % 32)) {
        return CookieCheck::Invalid;
    }
    const std::uint32_t clientIsn = ack.seq - 1u;
    if (packCookie(counter, mssIndex, cookieHash24(params, ack.flow, clientIsn, counter, mssIndex)) !=
        cookie) {
        return CookieCheck::Invalid;
    }
    return CookieCheck::Valid;
}

SynCookieDefense::SynCookieDefense(CookieParams params) : params_(std::move(params))
{
    if (!params_.valid()) {
        throw Error("cookie MSS table must hold 1..8 entries");
    }
}

SynAction SynCookieDefense::onSyn(const Segment& syn, TimeMs now)
{
    return {SynAction::Kind::Stateless, cookieEncode(params_, syn, now), std::nullopt};
}

bool SynCookieDefense::onAck(const Segment& ack, const HalfOpenEntry*, TimeMs now)
{
    if (cookieValidate(params_, ack, now) == CookieCheck::Valid) {
        return true;
    }
    history_.append({now, ack.flow, Verdict::DroppedBadCookie, std::nullopt, std::nullopt});
    return false;
}

std::uint8_t inferInitialTtl(std::uint8_t hopBudget)
{
    constexpr std::array<std::uint8_t, 4> kInitial{32, 64, 128, 255};
    for (auto ttl : kInitial) {
        if (ttl >= hopBudget) {
            return ttl;
        }
    }
    return 255;
}

std::uint8_t inferHops(std::uint8_t hopBudget)
{
    return static_cast<std::uint8_t>(inferInitialTtl(hopBudget) - hopBudget);
}

void hcfObserve(HopCountMap& map, const Address& src, std::uint8_t hopBudget)
{
    map.expectedHops[src] = inferHops(hopBudget);
}

HopCheck hcfCheck(const HopCountMap& map, const Address& src, std::uint8_t hopBudget)
{
    auto it = map.expectedHops.find(src);
    if (it == map.expectedHops.end()) {
        return HopCheck::Consistent;
    }
    const int diff = static_cast<int>(inferHops(hopBudget)) - static_cast<int>(it->second);
    return std::abs(diff) <= static_cast<int>(map.params.tolerance) ? HopCheck::Consistent
                                                                   : HopCheck::Mismatch;
}

bool hcfScreen(HopCountMap& map, const Address& src, std::uint8_t hopBudget, TimeMs now)
{
    if (hcfCheck(map, src, hopBudget) == HopCheck::Consistent) {
        return false;
    }
    if (map.filteringActive) {
        return true;
    }
    if (now - map.windowStart >= map.params.windowMs) {
        map.windowStart = now - (now - map.windowStart) % map.params.windowMs;
        map.mismatchCounter = 0;
    }
    if (++map.mismatchCounter >= map.params.activationThreshold) {
        map.filteringActive = true;
    }
    return false;
}

HcfDefense::HcfDefense(HcfParams params)
{
    if (params.activationThreshold == 0 || params.windowMs <= 0) {
        throw Error("HCF activation threshold and window must be positive");
    }
    map_.params = params;
}

SynAction HcfDefense::onSyn(const Segment& syn, TimeMs now)
{
    if (hcfScreen(map_, syn.flow.srcAddr, syn.hopBudget, now)) {
        history_.append({now, syn.flow, Verdict::DroppedHopMismatch, std::nullopt, std::nullopt});
        return SynAction::drop();
    }
    return {};
}

bool HcfDefense::onAck(const Segment& ack, const HalfOpenEntry*, TimeMs)
{
    hcfObserve(map_, ack.flow.srcAddr, ack.hopBudget);
    return true;
}

}  // namespace cnoa
