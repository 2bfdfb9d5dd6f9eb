#include "cnoa/cnoa.hpp"

#include <string>

namespace cnoa {

namespace {

std::uint32_t statelessToken(const SecretKey& key, const FlowKey& flow, std::uint32_t clientIsn,
                             std::uint64_t epoch)
{
    std::string msg;
    msg.reserve(1 + 38 + 4 + 8);
    msg += 'C';
    appendFlowBytes(msg, flow);
    for (int i = 3; i >= 0; --i) {
        msg += static_cast<char>(clientIsn >> (8 * i));
    }
    for (int i = 7; i >= 0; --i) {
        msg += static_cast<char>(epoch >> (8 * i));
    }
    return static_cast<std::uint32_t>(keyedHash(key, msg));
}

}  // namespace

ChallengeToken generateChallenge(SeededRng& rng)
{
    return {rng.next32(), ChallengeMode::Stateful};
}

ChallengeToken generateChallenge(const std::optional<SecretKey>& key, const FlowKey& flow,
                                 std::uint32_t clientIsn, std::uint64_t epoch)
{
    if (!key) {
        throw MissingKey("stateless challenge mode needs a 128-bit secret key");
    }
    return {statelessToken(*key, flow, clientIsn, epoch), ChallengeMode::Stateless};
}

EchoCheck verifyEcho(const ChallengeToken& expected, const Segment& ack)
{
    if (!ack.challenge) {
        return EchoCheck::Absent;
    }
    return *ack.challenge == expected.value ? EchoCheck::Match : EchoCheck::Mismatch;
}

StatelessCheck verifyEchoStateless(const SecretKey& key, const Segment& ack, TimeMs now,
                                   TimeMs epochMs)
{
    const auto epoch = static_cast<std::uint64_t>(now / epochMs);
    const std::uint32_t clientIsn = ack.seq - 1u;
    const std::uint32_t current = statelessToken(key, ack.flow, clientIsn, epoch);
    if (!ack.challenge) {
        return {EchoCheck::Absent, current};
    }
    if (*ack.challenge == current) {
        return {EchoCheck::Match, current};
    }
    if (epoch > 0) {
        const std::uint32_t previous = statelessToken(key, ack.flow, clientIsn, epoch - 1);
        if (*ack.challenge == previous) {
            return {EchoCheck::Match, previous};
        }
    }
    return {EchoCheck::Mismatch, current};
}

Verdict decide(HistoryLog& history, Blacklist& blacklist, const FlowKey& flow,
               Verification verification, TimeMs now, const CnoaPolicy& policy,
               std::optional<std::uint32_t> challengeSent,
               std::optional<std::uint32_t> challengeReceived)
{
    Verdict verdict = Verdict::Accepted;
    switch (verification) {
    case Verification::Match:
        verdict = Verdict::Accepted;
        break;
    case Verification::Mismatch:
    case Verification::Absent:
        verdict = Verdict::DroppedBadChallenge;
        break;
    case Verification::NoResponse:
        verdict = Verdict::DroppedNoResponse;
        challengeReceived.reset();
        break;
    }
    history.append({now, flow, verdict, challengeSent, challengeReceived});
    if (isDrop(verdict)) {
        blacklist.recordOffense(flow.srcAddr, now, policy.blacklistThreshold,
                                policy.blacklistTtlMs);
    }
    return verdict;
}

CnoaDefense::CnoaDefense(ChallengeMode mode, CnoaPolicy policy, std::uint64_t challengeSeed)
    : mode_(mode), policy_(policy), rng_(challengeSeed)
{
    if (mode_ == ChallengeMode::Stateless && !policy_.secretKey) {
        throw MissingKey("stateless challenge mode needs a 128-bit secret key");
    }
    if (policy_.epochMs <= 0) {
        throw Error("challenge epoch must be positive");
    }
}

std::string CnoaDefense::name() const
{
    return mode_ == ChallengeMode::Stateful ? "cnoa_stateful" : "cnoa_stateless";
}

SynAction CnoaDefense::onSyn(const Segment& syn, TimeMs now)
{
    if (blacklist_.isBlacklisted(syn.flow.srcAddr, now)) {
        history_.append({now, syn.flow, Verdict::DroppedBlacklisted, std::nullopt, std::nullopt});
        return SynAction::drop();
    }
    if (mode_ == ChallengeMode::Stateful) {
        return {SynAction::Kind::Stateful, std::nullopt, generateChallenge(rng_).value};
    }
    const auto epoch = static_cast<std::uint64_t>(now / policy_.epochMs);
    auto token = generateChallenge(policy_.secretKey, syn.flow, syn.seq, epoch);
    return {SynAction::Kind::Stateless, std::nullopt, token.value};
}

bool CnoaDefense::onAck(const Segment& ack, const HalfOpenEntry* entry, TimeMs now)
{
    EchoCheck check;
    std::uint32_t expected;
    if (mode_ == ChallengeMode::Stateful) {
        if (entry == nullptr || !entry->challenge) {
            return false;
        }
        expected = *entry->challenge;
        check = verifyEcho({expected, mode_}, ack);
    } else {
        auto result = verifyEchoStateless(*policy_.secretKey, ack, now, policy_.epochMs);
        check = result.result;
        expected = result.expected;
    }
    auto verdict = decide(history_, blacklist_, ack.flow, toVerification(check), now, policy_,
                          expected, ack.challenge);
    return verdict == Verdict::Accepted;
}

void CnoaDefense::onTimeout(const HalfOpenEntry& entry, TimeMs now)
{
    decide(history_, blacklist_, entry.flow, Verification::NoResponse, now, policy_,
           entry.challenge);
}

void CnoaDefense::onReset(const HalfOpenEntry& entry, TimeMs now)
{
    decide(history_, blacklist_, entry.flow, Verification::NoResponse, now, policy_,
           entry.challenge);
}

}  // namespace cnoa
