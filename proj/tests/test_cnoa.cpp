#include "cnoa/cnoa.hpp"
#include "cnoa/keyed_hash.hpp"
#include "cnoa/rng.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace cnoa;

namespace {

// Bytes 00 01 .. 0f, the key the oracle vectors were generated with.
SecretKey oracleKey()
{
    SecretKey k{};
    for (std::size_t i = 0; i < k.size(); ++i) {
        k[i] = static_cast<std::uint8_t>(i);
    }
    return k;
}

const FlowKey kF{Address::parse("10.0.0.2"), 49152, Address::parse("10.0.0.1"), 80};

Segment ackWith(std::optional<std::uint32_t> chal, std::uint32_t clientIsn = 101)
{
    Segment a;
    a.flow = kF;
    a.flags = Flags::ack();
    a.seq = clientIsn + 1u;
    a.ack = 1;
    a.challenge = chal;
    return a;
}

}  // namespace

TEST_CASE("siphash matches the reference vector", "[cnoa]")
{
    CHECK(keyedHash(oracleKey(), "") == 0x726fdb47dd0e0e31ull);
    CHECK(parseKeyHex("000102030405060708090a0b0c0d0e0f") == oracleKey());
    CHECK_FALSE(parseKeyHex("0001"));
    CHECK_FALSE(parseKeyHex("zz0102030405060708090a0b0c0d0e0f"));
}

TEST_CASE("seeded generator is the raw 64-bit Mersenne twister", "[cnoa]")
{
    SeededRng rng(42);
    CHECK(rng.next64() == 13930160852258120406ull);
    SeededRng again(42);
    CHECK(again.next32() == 0xc151df7du);
}

TEST_CASE("protocol analyzer", "[cnoa]")
{
    Packet p{PacketKind::Tcp, makeSyn(kF, 1)};
    CHECK(classify(p) == Protocol::Tcp);
    p.seg.flags = Flags::ack();
    CHECK(classify(p) == Protocol::Tcp);
    p.kind = PacketKind::Udp;
    CHECK(classify(p) == Protocol::Other);
}

TEST_CASE("challenge generation", "[cnoa]")
{
    SECTION("stateful draws from the seeded stream")
    {
        SeededRng rng(42);
        const auto t = generateChallenge(rng);
        CHECK(t.value == 0xc151df7du);
        CHECK(t.mode == ChallengeMode::Stateful);
    }
    SECTION("stateless is a keyed function of flow, isn and epoch")
    {
        const auto key = oracleKey();
        CHECK(generateChallenge(key, kF, 101, 0).value == 0xf2c787c8u);
        CHECK(generateChallenge(key, kF, 101, 0) == generateChallenge(key, kF, 101, 0));
        CHECK(generateChallenge(key, kF, 101, 1).value == 0xf150dabbu);

        const FlowKey f6{Address::parse("2001:db8::2"), 40000, Address::parse("2001:db8::1"), 80};
        CHECK(generateChallenge(key, f6, 7, 3).value == 0xf80abe39u);
    }
    SECTION("stateless without a key")
    {
        CHECK_THROWS_AS(generateChallenge(std::nullopt, kF, 1, 0), MissingKey);
    }
}

TEST_CASE("verifyEcho", "[cnoa]")
{
    const ChallengeToken c{0x12345678u, ChallengeMode::Stateful};
    CHECK(verifyEcho(c, ackWith(0x12345678u)) == EchoCheck::Match);
    CHECK(verifyEcho(c, ackWith(0x12345679u)) == EchoCheck::Mismatch);
    CHECK(verifyEcho(c, ackWith(std::nullopt)) == EchoCheck::Absent);
}

TEST_CASE("stateless verification accepts the current and previous epoch", "[cnoa]")
{
    const auto key = oracleKey();
    const TimeMs epochMs = 30'000;
    const std::uint32_t e0 = generateChallenge(key, kF, 101, 0).value;
    const std::uint32_t e1 = generateChallenge(key, kF, 101, 1).value;

    CHECK(verifyEchoStateless(key, ackWith(e0), 0, epochMs).result == EchoCheck::Match);
    CHECK(verifyEchoStateless(key, ackWith(e0), 59'999, epochMs).result == EchoCheck::Match);
    CHECK(verifyEchoStateless(key, ackWith(e0), 60'000, epochMs).result == EchoCheck::Mismatch);
    CHECK(verifyEchoStateless(key, ackWith(e1), 30'000, epochMs).result == EchoCheck::Match);
    CHECK(verifyEchoStateless(key, ackWith(e1), 29'999, epochMs).result == EchoCheck::Mismatch);
    CHECK(verifyEchoStateless(key, ackWith(std::nullopt), 0, epochMs).result == EchoCheck::Absent);
    // a different client ISN changes the token
    CHECK(verifyEchoStateless(key, ackWith(e0, 102), 0, epochMs).result == EchoCheck::Mismatch);
}

TEST_CASE("decide", "[cnoa]")
{
    HistoryLog log;
    Blacklist bl;
    const CnoaPolicy policy;
    const Address a = kF.srcAddr;

    CHECK(decide(log, bl, kF, Verification::Match, 10, policy, 7u, 7u) == Verdict::Accepted);
    CHECK(bl.offenses(a) == 0);

    CHECK(decide(log, bl, kF, Verification::Absent, 20, policy, 7u) == Verdict::DroppedBadChallenge);
    CHECK(decide(log, bl, kF, Verification::Mismatch, 30, policy, 7u, 8u) ==
          Verdict::DroppedBadChallenge);
    CHECK_FALSE(bl.isBlacklisted(a, 30));
    CHECK(decide(log, bl, kF, Verification::Absent, 40, policy, 7u) == Verdict::DroppedBadChallenge);
    CHECK(bl.isBlacklisted(a, 40));
    CHECK(bl.entry(a)->expiresAt == 40 + policy.blacklistTtlMs);

    CHECK(decide(log, bl, kF, Verification::NoResponse, 96'000, policy, 7u) ==
          Verdict::DroppedNoResponse);
    const auto last = log.records().back();
    CHECK(last.verdict == Verdict::DroppedNoResponse);
    CHECK(last.challengeSent == 7u);
    CHECK_FALSE(last.challengeReceived);
    CHECK(log.size() == 5);
}

TEST_CASE("history log", "[cnoa]")
{
    HistoryLog log;
    log.append({5, kF, Verdict::Accepted, 0xabu, 0xabu});
    log.append({9, kF, Verdict::DroppedBadChallenge, 0x1u, std::nullopt});
    CHECK_THROWS_AS(log.append({8, kF, Verdict::Accepted, 1u, 1u}), std::logic_error);
    CHECK_THROWS_AS(log.append({10, kF, Verdict::Accepted, 1u, 2u}), std::logic_error);

    std::ostringstream out;
    log.writeCsv(out);
    CHECK(out.str() ==
          "at_ms,src,dst,verdict,chal_sent,chal_recv\n"
          "5,10.0.0.2:49152,10.0.0.1:80,ACCEPTED,000000ab,000000ab\n"
          "9,10.0.0.2:49152,10.0.0.1:80,DROPPED_BAD_CHALLENGE,00000001,-\n");
}

TEST_CASE("blacklist expiry is exclusive", "[cnoa]")
{
    Blacklist bl;
    const Address a = Address::parse("198.18.0.1");
    CHECK(bl.recordOffense(a, 0, 1, 10'000));
    CHECK(bl.isBlacklisted(a, 9'999));
    CHECK_FALSE(bl.isBlacklisted(a, 10'000));
    CHECK_FALSE(bl.isBlacklisted(Address::parse("198.18.0.2"), 5));

    bl.recordOffense(Address::parse("198.18.0.3"), 100, 1, 500);
    CHECK(bl.listedCount() == 2);
    bl.evictExpired(20'000);
    CHECK(bl.listedCount() == 0);
    CHECK(bl.everListed() == 2);
}

TEST_CASE("CNoA defense end to end on hooks", "[cnoa]")
{
    CnoaPolicy policy;
    policy.secretKey = oracleKey();

    SECTION("stateful hands out seeded challenges and blacklists repeat offenders")
    {
        CnoaDefense d(ChallengeMode::Stateful, policy, 42);
        const auto syn = makeSyn(kF, 100);
        const auto act = d.onSyn(syn, 0);
        CHECK(act.kind == SynAction::Kind::Stateful);
        CHECK(act.challenge == 0xc151df7du);

        HalfOpenEntry e{kF, 500, 100, act.challenge, 0, 0, 3000, 1};
        for (int i = 0; i < 3; ++i) {
            d.onTimeout(e, 96'000 + i);
        }
        CHECK(d.blacklist().isBlacklisted(kF.srcAddr, 96'002));
        CHECK(d.onSyn(syn, 96'003).kind == SynAction::Kind::Drop);
        CHECK(d.history().records().back().verdict == Verdict::DroppedBlacklisted);
        CHECK(d.blacklistedAddresses() == 1);
    }
    SECTION("stateless answers without state and verifies by recomputation")
    {
        CnoaDefense d(ChallengeMode::Stateless, policy, 42);
        CHECK(d.stateless());
        const auto syn = makeSyn(kF, 101);
        const auto act = d.onSyn(syn, 1000);
        CHECK(act.kind == SynAction::Kind::Stateless);
        CHECK(act.challenge == 0xf2c787c8u);
        const auto ack = makeAckEcho(makeSynAck(syn, 9, act.challenge), true);
        CHECK(d.onAck(ack, nullptr, 2000));
        CHECK_FALSE(d.onAck(makeAckEcho(makeSynAck(syn, 9, *act.challenge ^ 1u), true), nullptr, 2000));
    }
    SECTION("stateless without a key")
    {
        CHECK_THROWS_AS(CnoaDefense(ChallengeMode::Stateless, CnoaPolicy{}, 1), MissingKey);
    }
}

// A blind attacker never sees the SYN+ACK; each guess faces a fresh token.
// P(any match in 1e6 guesses) is about 1e6 / 2^32 = 2.3e-4.
TEST_CASE("blind guesses never match", "[cnoa]")
{
    SeededRng server(SeededRng::derive(1, 2));
    SeededRng attacker(SeededRng::derive(3, 4));
    std::uint64_t matches = 0;
    for (int i = 0; i < 1'000'000; ++i) {
        const auto token = generateChallenge(server);
        const auto guess = ackWith(attacker.next32());
        matches += verifyEcho(token, guess) == EchoCheck::Match;
    }
    CHECK(matches == 0);
}
