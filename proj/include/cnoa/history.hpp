#pragma once

#include "cnoa/segment.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace cnoa {

enum class Verdict : std::uint8_t {
    Accepted,
    DroppedBadChallenge,
    DroppedNoResponse,
    DroppedBlacklisted,
    DroppedNotTcp,
    DroppedBadCookie,
    DroppedHopMismatch,
};

std::string_view toString(Verdict v);
constexpr bool isDrop(Verdict v) { return v != Verdict::Accepted; }

struct HistoryRecord {
    TimeMs at{0};
    FlowKey flow;
    Verdict verdict{Verdict::Accepted};
    std::optional<std::uint32_t> challengeSent;
    std::optional<std::uint32_t> challengeReceived;
};

// Append-only audit trail; records are ordered by (at, insertion index).
class HistoryLog {
public:
    // Throws std::logic_error if `at` goes backwards or an ACCEPTED record
    // lacks a matching challenge pair (when either side is present).
    void append(HistoryRecord record);

    std::span<const HistoryRecord> records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    // Header: at_ms,src,dst,verdict,chal_sent,chal_recv
    void writeCsv(std::ostream& out) const;

private:
    std::vector<HistoryRecord> records_;
};

struct BlacklistEntry {
    Address addr;
    unsigned offenseCount{0};
    TimeMs firstOffenseAt{0};
    TimeMs expiresAt{0};
};

// Offense tally per address plus the set of currently blacklisted addresses.
// An address has at most one entry; repeat offenses update it in place.
class Blacklist {
public:
    // Records one offense; lists (or re-lists) the address once its tally
    // reaches `threshold`. Returns true if the address is listed afterwards.
    bool recordOffense(const Address& addr, TimeMs now, unsigned threshold, TimeMs ttl);

    // Expiry is exclusive: listed while now < expiresAt.
    bool isBlacklisted(const Address& addr, TimeMs now) const;
    void evictExpired(TimeMs now);

    std::optional<BlacklistEntry> entry(const Address& addr) const;
    std::size_t listedCount() const { return listed_.size(); }
    std::size_t everListed() const { return everListed_.size(); }
    unsigned offenses(const Address& addr) const;
    std::vector<BlacklistEntry> snapshot() const;

private:
    struct Tally {
        unsigned count{0};
        TimeMs first{0};
    };
    std::map<Address, Tally> tallies_;
    std::map<Address, BlacklistEntry> listed_;
    std::set<Address> everListed_;
};

}  // namespace cnoa
