#include "cnoa/baselines.hpp"
#include "cnoa/cnoa.hpp"
#include "cnoa/simnet.hpp"

#include <catch_amalgamated.hpp>

using namespace cnoa;

namespace {

HostSpec host(std::string id, Behavior b, const char* addr)
{
    HostSpec h;
    h.id = std::move(id);
    h.behavior = b;
    h.addresses = {Address::parse(addr)};
    return h;
}

HostSpec client(std::string id, const char* addr, std::vector<TimeMs> at, bool echo = true)
{
    HostSpec h = host(std::move(id), Behavior::Client, addr);
    h.client.connectAt = std::move(at);
    h.client.echoesChallenge = echo;
    return h;
}

HostSpec attacker(std::string id, const char* addr, double rate, TimeMs stop, std::size_t pool,
                  SpoofMode mode = SpoofMode::NonexistentPool)
{
    HostSpec h = host(std::move(id), Behavior::Attacker, addr);
    h.flood.startAt = 0;
    h.flood.stopAt = stop;
    h.flood.ratePerSecond = rate;
    h.flood.poolSize = pool;
    h.flood.spoofMode = mode;
    return h;
}

std::unique_ptr<Defense> statefulCnoa(std::uint64_t seed = 1)
{
    return std::make_unique<CnoaDefense>(ChallengeMode::Stateful, CnoaPolicy{}, seed);
}

Network twoHosts(std::unique_ptr<Defense> d, NetworkConfig cfg = {})
{
    return Network(5, cfg,
                   {host("server", Behavior::Server, "10.0.0.1"), client("c", "10.0.0.2", {100})}, {},
                   {}, std::move(d));
}

}  // namespace

TEST_CASE("a network with nothing to do", "[simnet]")
{
    Network net(1, {}, {host("server", Behavior::Server, "10.0.0.1")}, {}, {},
                std::make_unique<NoDefense>());
    const auto m = net.run(1000);
    CHECK(net.trace().empty());
    CHECK(m.segmentsSent == 0);
    CHECK(m.backlogSeries.size() == 11);
}

TEST_CASE("plain three-way handshake", "[simnet]")
{
    auto net = twoHosts(std::make_unique<NoDefense>());
    const auto m = net.run(1000);
    const auto& t = net.trace();
    REQUIRE(t.size() == 3);
    CHECK(t[0].isSyn());
    CHECK(t[1].isSynAck());
    CHECK(t[2].isAck());
    CHECK(t[1].ack == t[0].seq + 1u);
    CHECK(t[2].ack == t[1].seq + 1u);
    CHECK(t[0].sentAt == 100);
    CHECK(t[1].sentAt == 105);
    CHECK(t[2].sentAt == 110);
    CHECK(m.legitEstablished == 1);
    CHECK(m.legitAttempted == 1);
}

TEST_CASE("CNoA handshake carries the same challenge twice", "[simnet]")
{
    auto net = twoHosts(statefulCnoa());
    net.run(1000);
    const auto& t = net.trace();
    REQUIRE(t.size() == 3);
    CHECK_FALSE(t[0].challenge);
    REQUIRE(t[1].challenge);
    CHECK(t[1].challenge == t[2].challenge);
    REQUIRE(net.history().size() == 1);
    CHECK(net.history().records()[0].verdict == Verdict::Accepted);
}

TEST_CASE("routing", "[simnet]")
{
    std::vector<HostSpec> hosts{host("server", Behavior::Server, "10.0.0.1"),
                                host("ghost", Behavior::Nonexistent, "10.0.5.5"),
                                host("far", Behavior::Innocent, "10.0.6.6")};
    hosts[2].linkDelayMs = 20;
    Network net(1, {}, hosts, {{"server", "far", 12}}, {}, std::make_unique<NoDefense>());

    const auto toServer = makeSyn({Address::parse("10.0.6.6"), 1000, Address::parse("10.0.0.1"), 80}, 1);
    auto d = net.route(toServer, 2, 50);
    REQUIRE(d);
    CHECK(d->host == 0);
    CHECK(d->at == 55);
    CHECK(d->hopBudget == 64 - 12);

    auto toGhost = makeSynAck(makeSyn({Address::parse("10.0.5.5"), 1000, Address::parse("10.0.0.1"), 80}, 1), 9);
    CHECK_FALSE(net.route(toGhost, 0, 0));
    auto toNobody = makeSynAck(makeSyn({Address::parse("198.18.0.1"), 1000, Address::parse("10.0.0.1"), 80}, 1), 9);
    CHECK_FALSE(net.route(toNobody, 0, 0));

    auto lowHop = toServer;
    lowHop.hopBudget = 12;
    CHECK_FALSE(net.route(lowHop, 2, 0));
}

TEST_CASE("replies to spoofed sources", "[simnet]")
{
    SECTION("nonexistent sources: SYN+ACKs vanish, the server times out")
    {
        Network net(3, {}, {host("server", Behavior::Server, "10.0.0.1"), attacker("a", "10.0.9.9", 10, 1000, 10)},
                    {}, {}, statefulCnoa());
        const auto m = net.run(100'000);
        CHECK(m.spoofedInjected == 10);
        CHECK(m.blackholed == 60);
        CHECK(m.halfOpenTimeouts == 10);
        CHECK(m.spoofedDetected == 10);
        CHECK(m.spoofedPassed == 0);
    }
    SECTION("silent bot ignores the SYN+ACK")
    {
        Network net(3, {},
                    {host("server", Behavior::Server, "10.0.0.1"),
                     attacker("a", "10.0.7.7", 1, 1000, 1, SpoofMode::SelfIgnoreSynAck)},
                    {}, {}, statefulCnoa());
        const auto m = net.run(100'000);
        CHECK(m.blackholed == 0);
        CHECK(m.segmentsDelivered == 7);
        CHECK(m.halfOpenTimeouts == 1);
    }
    SECTION("innocent host answers with RST")
    {
        auto a = attacker("a", "10.0.9.9", 1, 1000, 1, SpoofMode::ExistingHosts);
        a.flood.existingHosts = {Address::parse("10.0.3.3")};
        Network net(3, {},
                    {host("server", Behavior::Server, "10.0.0.1"), a,
                     host("bystander", Behavior::Innocent, "10.0.3.3")},
                    {}, {}, statefulCnoa());
        const auto m = net.run(10'000);
        CHECK(m.resets == 1);
        CHECK(m.halfOpenTimeouts == 0);
        CHECK(m.spoofedDetected == 1);
        CHECK(net.history().records()[0].verdict == Verdict::DroppedNoResponse);
    }
}

TEST_CASE("non-TCP flood bypasses the handshake", "[simnet]")
{
    auto a = attacker("a", "10.0.9.9", 100, 1000, 100);
    a.flood.protocol = PacketKind::Udp;
    Network net(3, {}, {host("server", Behavior::Server, "10.0.0.1"), a}, {}, {}, statefulCnoa());
    const auto m = net.run(5000);
    CHECK(m.nonTcpSent == 100);
    CHECK(m.nonTcpBypassed == 100);
    CHECK(m.synReceived == 0);
    CHECK(net.trace().empty());
}

TEST_CASE("runs are deterministic", "[simnet]")
{
    NetworkConfig cfg;
    cfg.jitterMs = 7;
    auto build = [&] {
        return Network(99, cfg,
                       {host("server", Behavior::Server, "10.0.0.1"),
                        client("c1", "10.0.0.2", {10, 500, 900}), client("c2", "10.0.0.3", {20, 30}),
                        attacker("a", "10.0.9.9", 400, 2000, 50)},
                       {}, {}, statefulCnoa(4));
    };
    auto a = build();
    auto b = build();
    const auto ma = a.run(120'000);
    const auto mb = b.run(120'000);
    CHECK(a.trace() == b.trace());
    CHECK(ma.rows() == mb.rows());
    CHECK(ma.backlogSeries == mb.backlogSeries);
    REQUIRE(a.history().size() == b.history().size());

    Network c(100, cfg,
              {host("server", Behavior::Server, "10.0.0.1"), client("c1", "10.0.0.2", {10, 500, 900}),
               client("c2", "10.0.0.3", {20, 30}), attacker("a", "10.0.9.9", 400, 2000, 50)},
              {}, {}, statefulCnoa(4));
    c.run(120'000);
    CHECK(c.trace() != a.trace());
}

TEST_CASE("segments are conserved and causally ordered", "[simnet]")
{
    NetworkConfig cfg;
    cfg.jitterMs = 3;
    auto a = attacker("a", "10.0.9.9", 300, 3000, 40);
    Network net(8, cfg,
                {host("server", Behavior::Server, "10.0.0.1"), client("c", "10.0.0.2", {50, 1500, 2500}),
                 host("quiet", Behavior::Silent, "10.0.4.4"), a},
                {}, {}, statefulCnoa());
    // stop mid-flight so some segments are still travelling
    const auto m = net.run(30'003);
    CHECK(m.segmentsSent == m.segmentsDelivered + m.blackholed + m.droppedInFlight);
    CHECK(m.segmentsSent == net.trace().size());

    TimeMs last = 0;
    for (const auto& s : net.trace()) {
        REQUIRE(s.sentAt >= last);
        last = s.sentAt;
    }
    CHECK(m.spoofedDetected + m.spoofedPassed <= m.spoofedInjected);
    CHECK(m.legitEstablished <= m.legitAttempted);
}

TEST_CASE("hop budgets shrink along the path", "[simnet]")
{
    auto c = client("c", "10.0.0.2", {0});
    c.initialTtl = 128;
    Network net(2, {}, {host("server", Behavior::Server, "10.0.0.1"), c}, {{"server", "c", 9}}, {},
                std::make_unique<HcfDefense>(HcfParams{}));
    net.run(1000);
    const auto& hcf = dynamic_cast<const HcfDefense&>(net.defense());
    CHECK(hcf.map().expectedHops.at(Address::parse("10.0.0.2")) == 9);
}

TEST_CASE("network misuse", "[simnet]")
{
    auto net = twoHosts(std::make_unique<NoDefense>());
    CHECK_THROWS_AS(net.run(0), Error);
    net.run(10);
    CHECK_THROWS_AS(net.run(10), Error);

    CHECK_THROWS_AS(Network(1, {}, {client("c", "10.0.0.2", {1})}, {}, {}, std::make_unique<NoDefense>()),
                    Error);
    CHECK_THROWS_AS(Network(1, {},
                            {host("s1", Behavior::Server, "10.0.0.1"), host("s2", Behavior::Server, "10.0.0.1")},
                            {}, {}, std::make_unique<NoDefense>()),
                    Error);
}

TEST_CASE("event queue bound", "[simnet]")
{
    NetworkConfig cfg;
    cfg.maxPendingEvents = 50;
    Network net(3, cfg, {host("server", Behavior::Server, "10.0.0.1"), attacker("a", "10.0.9.9", 1000, 1000, 1000)},
                {}, {}, statefulCnoa());
    CHECK_THROWS_AS(net.run(5000), EventQueueOverflow);
}
