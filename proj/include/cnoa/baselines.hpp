#pragma once

// Comparison defenses sharing the Defense hooks: no defense, per-source
// pending-SYN threshold, SYN cookies, and hop-count filtering.

#include "cnoa/defense.hpp"
#include "cnoa/keyed_hash.hpp"
#include "cnoa/segment.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace cnoa {

class NoDefense final : public Defense {
public:
    std::string name() const override { return "none"; }
    SynAction onSyn(const Segment&, TimeMs) override { return {}; }
    bool onAck(const Segment&, const HalfOpenEntry*, TimeMs) override { return true; }
};

// --- SYN-count threshold -------------------------------------------------

enum class ThresholdDecision : std::uint8_t { Pass, Block };

struct SynCountTable {
    struct Row {
        unsigned pendingSynCount{0};
        std::optional<TimeMs> blockedSince;
    };
    std::map<Address, Row> rows;
    unsigned threshold{5};
};

ThresholdDecision thresholdOnSyn(SynCountTable& table, const Address& src, TimeMs now);
void thresholdOnCompleted(SynCountTable& table, const Address& src);

class ThresholdDefense final : public Defense {
public:
    explicit ThresholdDefense(unsigned threshold);

    std::string name() const override;
    SynAction onSyn(const Segment& syn, TimeMs now) override;
    bool onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now) override;
    std::size_t blacklistedAddresses() const override;

    const SynCountTable& table() const { return table_; }

private:
    SynCountTable table_;
};

// --- SYN cookies ----------------------------------------------------------
//
// Cookie layout, most significant bit first:
//   [31..27] time counter = floor(now / granularity) mod 32
//   [26..24] index into the MSS table
//   [23..0]  low 24 bits of SipHash-2-4(key, "K" | flow | clientIsn | counter | mssIndex)
// clientIsn is 4 bytes big-endian, counter and mssIndex one byte each.

struct CookieParams {
    SecretKey secretKey{};
    std::vector<std::uint16_t> mssTable{536, 1220, 1440, 1460};
    unsigned timestampGranularityS{64};

    bool valid() const { return !mssTable.empty() && mssTable.size() <= 8 && timestampGranularityS > 0; }
};

enum class CookieCheck : std::uint8_t { Valid, Invalid };

constexpr std::uint16_t kDefaultClientMss = 1460;

std::uint32_t cookieEncode(const CookieParams& params, const Segment& syn, TimeMs now,
                           std::uint16_t clientMss = kDefaultClientMss);

// Accepts a cookie minted in the current or previous time window.
CookieCheck cookieValidate(const CookieParams& params, const Segment& ack, TimeMs now);

class SynCookieDefense final : public Defense {
public:
    explicit SynCookieDefense(CookieParams params);

    std::string name() const override { return "syn_cookies"; }
    bool stateless() const override { return true; }
    SynAction onSyn(const Segment& syn, TimeMs now) override;
    bool onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now) override;

private:
    CookieParams params_;
};

// --- Hop-count filtering --------------------------------------------------

enum class HopCheck : std::uint8_t { Consistent, Mismatch };

struct HcfParams {
    unsigned tolerance{1};
    unsigned activationThreshold{32};
    TimeMs windowMs{10'000};
};

struct HopCountMap {
    std::map<Address, std::uint8_t> expectedHops;
    unsigned mismatchCounter{0};
    bool filteringActive{false};
    TimeMs windowStart{0};
    HcfParams params;
};

// Smallest of {32, 64, 128, 255} not below the observed budget.
std::uint8_t inferInitialTtl(std::uint8_t hopBudget);
std::uint8_t inferHops(std::uint8_t hopBudget);

void hcfObserve(HopCountMap& map, const Address& src, std::uint8_t hopBudget);

// Unknown sources are Consistent.
HopCheck hcfCheck(const HopCountMap& map, const Address& src, std::uint8_t hopBudget);

// Check plus the activation bookkeeping: counts mismatches in the current
// window and reports true (drop) only once filtering has been switched on.
bool hcfScreen(HopCountMap& map, const Address& src, std::uint8_t hopBudget, TimeMs now);

class HcfDefense final : public Defense {
public:
    explicit HcfDefense(HcfParams params);

    std::string name() const override { return "hcf"; }
    SynAction onSyn(const Segment& syn, TimeMs now) override;
    bool onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now) override;

    const HopCountMap& map() const { return map_; }

private:
    HopCountMap map_;
};

}  // namespace cnoa
