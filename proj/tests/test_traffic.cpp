#include "cnoa/baselines.hpp"
#include "cnoa/cnoa.hpp"
#include "cnoa/listener.hpp"
#include "cnoa/traffic.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace cnoa;

namespace {

const Address kServer = Address::parse("10.0.0.1");
const Address kClient = Address::parse("10.0.0.2");

struct Outcome {
    bool established{false};
    std::size_t failures{0};
};

// Ping-pong between one client and a listener with zero latency.
Outcome handshake(Defense& defense, bool echo)
{
    Listener listener({}, defense, 3);
    ClientProfile profile;
    profile.connectAt = {0};
    profile.echoesChallenge = echo;
    ClientAgent client(profile, kClient, kServer, 9);

    Outcome result;
    std::vector<Segment> toServer = client.onConnect(0, 0).send;
    for (int round = 0; round < 4 && !toServer.empty(); ++round) {
        std::vector<Segment> toClient;
        for (const auto& s : toServer) {
            auto out = listener.onPacket({PacketKind::Tcp, s}, round);
            result.established |= out.established.has_value();
            toClient.insert(toClient.end(), out.segments.begin(), out.segments.end());
        }
        toServer.clear();
        for (const auto& s : toClient) {
            auto acts = client.onSegment(s, round);
            toServer.insert(toServer.end(), acts.send.begin(), acts.send.end());
        }
    }
    result.failures = client.failures();
    return result;
}

FloodProfile floodProfile(double rate, TimeMs stop, std::size_t pool)
{
    FloodProfile p;
    p.startAt = 0;
    p.stopAt = stop;
    p.ratePerSecond = rate;
    p.poolSize = pool;
    return p;
}

std::vector<Segment> drain(FloodGenerator& gen)
{
    std::vector<Segment> all;
    while (auto due = gen.nextDue()) {
        auto step = gen.floodStep(*due);
        all.insert(all.end(), step.begin(), step.end());
    }
    return all;
}

}  // namespace

TEST_CASE("client echoing the challenge connects through CNoA", "[traffic]")
{
    CnoaDefense d(ChallengeMode::Stateful, {}, 1);
    auto r = handshake(d, true);
    CHECK(r.established);
    CHECK(r.failures == 0);
    CHECK(d.history().records().back().verdict == Verdict::Accepted);
}

TEST_CASE("legacy client without echo is refused by CNoA", "[traffic]")
{
    CnoaDefense d(ChallengeMode::Stateful, {}, 1);
    auto r = handshake(d, false);
    CHECK_FALSE(r.established);
    CHECK(r.failures == 1);
    CHECK(d.history().records().back().verdict == Verdict::DroppedBadChallenge);
    CHECK_FALSE(d.history().records().back().challengeReceived);
}

TEST_CASE("legacy client without echo connects with no defense", "[traffic]")
{
    NoDefense d;
    CHECK(handshake(d, false).established);
}

TEST_CASE("client retries on timeout with a fresh port", "[traffic]")
{
    ClientProfile profile;
    profile.connectAt = {100};
    profile.retryOnFailure = 2;
    ClientAgent c(profile, kClient, kServer, 4);

    auto a0 = c.onConnect(0, 100);
    REQUIRE(a0.timers.size() == 1);
    CHECK(a0.timers[0].at == 3100);
    auto a1 = c.onTimeout(0, a0.timers[0].attempt, 3100);
    REQUIRE(a1.send.size() == 1);
    CHECK(a1.send[0].flow.srcPort != a0.send[0].flow.srcPort);
    CHECK(a1.send[0].flow.srcPort >= kClientPortLow);
    // a timer from the first attempt is stale now
    CHECK(c.onTimeout(0, a0.timers[0].attempt, 3100).send.empty());

    auto a2 = c.onTimeout(0, a1.timers[0].attempt, 6100);
    auto a3 = c.onTimeout(0, a2.timers[0].attempt, 9100);
    CHECK(a3.send.empty());
    CHECK(a3.failed == std::vector<std::size_t>{0});
    CHECK(c.failures() == 1);
}

TEST_CASE("client resets an unsolicited SYN+ACK", "[traffic]")
{
    ClientProfile profile;
    ClientAgent c(profile, kClient, kServer, 4);
    const auto stray = makeSynAck(makeSyn({kClient, 50000, kServer, 80}, 5), 77, 1u);
    auto acts = c.onSegment(stray, 10);
    REQUIRE(acts.send.size() == 1);
    CHECK(acts.send[0].isRst());
    CHECK(acts.send[0].flow == stray.flow.reversed());
}

TEST_CASE("flood at 100/s for one second", "[traffic]")
{
    FloodGenerator gen(floodProfile(100, 1000, 1000), Address::parse("10.0.9.9"), kServer, 11);
    const auto syns = drain(gen);
    REQUIRE(syns.size() == 100);
    std::set<Address> sources;
    for (const auto& s : syns) {
        CHECK(s.isSyn());
        CHECK(inPoolRange(s.flow.srcAddr));
        CHECK(s.flow.srcPort >= kFloodPortLow);
        CHECK(s.flow.srcPort <= kFloodPortHigh);
        CHECK(s.flow.dstAddr == kServer);
        sources.insert(s.flow.srcAddr);
    }
    CHECK(sources.size() == 100);
    CHECK(syns.front().sentAt == 0);
    CHECK(syns.back().sentAt == 990);
}

TEST_CASE("flood emission count follows the rate", "[traffic]")
{
    for (double rate : {1.0, 3.0, 7.5, 333.0, 500.0, 1234.5}) {
        for (TimeMs dur : {1000, 2500, 10'000}) {
            FloodGenerator gen(floodProfile(rate, dur, 1000), Address::parse("10.0.9.9"), kServer, 5);
            const auto n = static_cast<double>(drain(gen).size());
            const double expected = std::floor(rate * static_cast<double>(dur) / 1000.0);
            INFO("rate " << rate << " duration " << dur);
            CHECK(std::abs(n - expected) <= 1.0);
        }
    }
}

TEST_CASE("pool passes are permutations", "[traffic]")
{
    FloodGenerator gen(floodProfile(1000, 1000, 50), Address::parse("10.0.9.9"), kServer, 12);
    const auto syns = drain(gen);
    REQUIRE(syns.size() == 1000);
    for (std::size_t pass = 0; pass < 20; ++pass) {
        std::set<Address> seen;
        for (std::size_t i = 0; i < 50; ++i) seen.insert(syns[pass * 50 + i].flow.srcAddr);
        CHECK(seen.size() == 50);
    }
    std::set<std::pair<Address, std::uint16_t>> endpoints;
    for (const auto& s : syns) endpoints.emplace(s.flow.srcAddr, s.flow.srcPort);
    CHECK(endpoints.size() == syns.size());
}

TEST_CASE("self flood uses the attacker's own address", "[traffic]")
{
    auto p = floodProfile(50, 1000, 1);
    p.spoofMode = SpoofMode::SelfIgnoreSynAck;
    const Address self = Address::parse("10.0.7.7");
    FloodGenerator gen(p, self, kServer, 1);
    for (const auto& s : drain(gen)) CHECK(s.flow.srcAddr == self);
}

TEST_CASE("V6 flood stays in the V6 pool", "[traffic]")
{
    auto p = floodProfile(200, 1000, 500);
    p.realm = Realm::V6;
    FloodGenerator gen(p, Address::parse("2001:db8::66"), Address::parse("2001:db8::1"), 1);
    const auto syns = drain(gen);
    CHECK(syns.size() == 200);
    for (const auto& s : syns) {
        CHECK(s.flow.srcAddr.realm == Realm::V6);
        CHECK(inPoolRange(s.flow.srcAddr));
    }
}

TEST_CASE("flood profile errors", "[traffic]")
{
    const Address self = Address::parse("10.0.9.9");
    CHECK_THROWS_AS(FloodGenerator(floodProfile(10, 0, 10), self, kServer, 1), Error);
    CHECK_THROWS_AS(FloodGenerator(floodProfile(0, 100, 10), self, kServer, 1), Error);
    CHECK_THROWS_AS(FloodGenerator(floodProfile(10, 100, 0), self, kServer, 1), Error);
    auto p = floodProfile(10, 100, 10);
    p.realm = Realm::V6;
    CHECK_THROWS_AS(FloodGenerator(p, self, kServer, 1), Error);
}

TEST_CASE("same seed, same flood", "[traffic]")
{
    FloodGenerator a(floodProfile(300, 2000, 100), Address::parse("10.0.9.9"), kServer, 8);
    FloodGenerator b(floodProfile(300, 2000, 100), Address::parse("10.0.9.9"), kServer, 8);
    CHECK(drain(a) == drain(b));
}
