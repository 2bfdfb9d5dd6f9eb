#include "cnoa/history.hpp"

#include <cstdio>
#include <stdexcept>

namespace cnoa {

std::string_view toString(Verdict v)
{
    switch (v) {
    case Verdict::Accepted: return "ACCEPTED";
    case Verdict::DroppedBadChallenge: return "DROPPED_BAD_CHALLENGE";
    case Verdict::DroppedNoResponse: return "DROPPED_NO_RESPONSE";
    case Verdict::DroppedBlacklisted: return "DROPPED_BLACKLISTED";
    case Verdict::DroppedNotTcp: return "DROPPED_NOT_TCP";
    case Verdict::DroppedBadCookie: return "DROPPED_BAD_COOKIE";
    case Verdict::DroppedHopMismatch: return "DROPPED_HOP_MISMATCH";
    }
    return "UNKNOWN";
}

void HistoryLog::append(HistoryRecord record)
{
    if (!records_.empty() && record.at < records_.back().at) {
        throw std::logic_error("history log must be appended in time order");
    }
    if (record.verdict == Verdict::Accepted && (record.challengeSent || record.challengeReceived) &&
        record.challengeSent != record.challengeReceived) {
        throw std::logic_error("ACCEPTED verdict with mismatched challenge pair");
    }
    records_.push_back(record);
}

void HistoryLog::writeCsv(std::ostream& out) const
{
    auto hex = [](const std::optional<std::uint32_t>& v) -> std::string {
        if (!v) {
            return "-";
        }
        char buf[9];
        std::snprintf(buf, sizeof buf, "%08x", *v);
        return buf;
    };
    auto endpoint = [](const Address& a, std::uint16_t port) {
        return a.toString() + ':' + std::to_string(port);
    };
    out << "at_ms,src,dst,verdict,chal_sent,chal_recv\n";
    for (const auto& r : records_) {
        out << r.at << ',' << endpoint(r.flow.srcAddr, r.flow.srcPort) << ','
            << endpoint(r.flow.dstAddr, r.flow.dstPort) << ',' << toString(r.verdict) << ','
            << hex(r.challengeSent) << ',' << hex(r.challengeReceived) << '\n';
    }
}

bool Blacklist::recordOffense(const Address& addr, TimeMs now, unsigned threshold, TimeMs ttl)
{
    auto it = tallies_.try_emplace(addr, Tally{0, now}).first;
    ++it->second.count;
    if (it->second.count < threshold) {
        return isBlacklisted(addr, now);
    }
    everListed_.insert(addr);
    listed_[addr] = BlacklistEntry{addr, it->second.count, it->second.first, now + ttl};
    return true;
}

bool Blacklist::isBlacklisted(const Address& addr, TimeMs now) const
{
    auto it = listed_.find(addr);
    return it != listed_.end() && now < it->second.expiresAt;
}

void Blacklist::evictExpired(TimeMs now)
{
    std::erase_if(listed_, [now](const auto& kv) { return kv.second.expiresAt <= now; });
}

std::optional<BlacklistEntry> Blacklist::entry(const Address& addr) const
{
    auto it = listed_.find(addr);
    if (it == listed_.end()) {
        return std::nullopt;
    }
    return it->second;
}

unsigned Blacklist::offenses(const Address& addr) const
{
    auto it = tallies_.find(addr);
    return it == tallies_.end() ? 0 : it->second.count;
}

std::vector<BlacklistEntry> Blacklist::snapshot() const
{
    std::vector<BlacklistEntry> out;
    out.reserve(listed_.size());
    for (const auto& [addr, e] : listed_) {
        out.push_back(e);
    }
    return out;
}

}  // namespace cnoa
