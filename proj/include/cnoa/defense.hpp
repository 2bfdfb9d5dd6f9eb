#pragma once

// The hook interface every defense implements. The listener owns the
// half-open backlog; a defense only decides.

#include "cnoa/history.hpp"
#include "cnoa/segment.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace cnoa {

struct HalfOpenEntry {
    FlowKey flow;  // client -> server orientation, as in the SYN
    std::uint32_t serverIsn{0};
    std::uint32_t clientIsn{0};
    std::optional<std::uint32_t> challenge;
    TimeMs createdAt{0};
    unsigned retransmitsSent{0};
    TimeMs nextEventAt{0};
    std::uint64_t generation{0};
};

struct SynAction {
    enum class Kind : std::uint8_t {
        Drop,       // vetoed; nothing emitted
        Stateful,   // create a half-open entry
        Stateless,  // answer without storing anything
    };
    Kind kind{Kind::Stateful};
    std::optional<std::uint32_t> isn;  // unset: listener picks one
    std::optional<std::uint32_t> challenge;

    static SynAction drop() { return {Kind::Drop, std::nullopt, std::nullopt}; }
};

class Defense {
public:
    virtual ~Defense() = default;

    virtual std::string name() const = 0;

    // Stateless defenses never ask the listener for a half-open entry, and
    // validate ACKs with no entry to look at.
    virtual bool stateless() const { return false; }

    virtual SynAction onSyn(const Segment& syn, TimeMs now) = 0;

    // `entry` is null in stateless mode. Returns true to establish.
    virtual bool onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now) = 0;

    // Half-open entry expired without any ACK.
    virtual void onTimeout(const HalfOpenEntry&, TimeMs) {}

    // The claimed source answered the SYN+ACK with RST.
    virtual void onReset(const HalfOpenEntry&, TimeMs) {}

    virtual std::size_t blacklistedAddresses() const { return 0; }

    const HistoryLog& history() const { return history_; }

protected:
    HistoryLog history_;
};

}  // namespace cnoa
