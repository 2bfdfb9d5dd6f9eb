#include "cnoa/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace cnoa {

namespace {

constexpr std::uint64_t kKeyTag = 0x6b6579;  // "key"

std::string where(const YAML::Node& node, std::string_view origin)
{
    return std::string(origin) + ":" + std::to_string(node.Mark().line + 1);
}

void checkKeys(const YAML::Node& node, std::initializer_list<std::string_view> allowed,
               std::string_view section, std::string_view origin)
{
    if (!node.IsMap()) {
        throw ParseError(where(node, origin) + ": '" + std::string(section) + "' must be a mapping");
    }
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ParseError(where(kv.first, origin) + ": unknown key '" + key + "' in " +
                             std::string(section));
        }
    }
}

template <typename T>
T get(const YAML::Node& node, std::string_view field, std::string_view origin)
{
    try {
        return node.as<T>();
    } catch (const YAML::BadConversion&) {
        throw ParseError(where(node, origin) + ": bad value for '" + std::string(field) + "'");
    }
}

template <typename T>
void maybe(const YAML::Node& parent, const char* key, T& dst, std::string_view origin)
{
    if (auto n = parent[key]) {
        dst = get<T>(n, key, origin);
    }
}

std::uint8_t getByte(const YAML::Node& node, std::string_view field, std::string_view origin)
{
    const auto v = get<unsigned>(node, field, origin);
    if (v > 255) {
        throw ParseError(where(node, origin) + ": '" + std::string(field) + "' exceeds 255");
    }
    return static_cast<std::uint8_t>(v);
}

Address getAddress(const YAML::Node& node, std::string_view origin)
{
    try {
        return Address::parse(get<std::string>(node, "address", origin));
    } catch (const InvalidFlow& e) {
        throw ParseError(where(node, origin) + ": " + e.what());
    }
}

Behavior parseBehavior(const YAML::Node& node, std::string_view origin)
{
    const auto s = get<std::string>(node, "behavior", origin);
    static const std::map<std::string, Behavior> kinds{
        {"server", Behavior::Server},     {"client", Behavior::Client},
        {"attacker", Behavior::Attacker}, {"silent", Behavior::Silent},
        {"innocent", Behavior::Innocent}, {"nonexistent", Behavior::Nonexistent}};
    auto it = kinds.find(s);
    if (it == kinds.end()) {
        throw ParseError(where(node, origin) + ": unknown behavior '" + s + "'");
    }
    return it->second;
}

Realm parseRealm(const YAML::Node& node, std::string_view origin)
{
    const auto s = get<std::string>(node, "realm", origin);
    if (s == "v4") return Realm::V4;
    if (s == "v6") return Realm::V6;
    throw ParseError(where(node, origin) + ": realm must be v4 or v6");
}

SecretKey parseKey(const YAML::Node& node, std::string_view origin)
{
    auto key = parseKeyHex(get<std::string>(node, "secret_key", origin));
    if (!key) {
        throw ParseError(where(node, origin) + ": secret_key must be 32 hex digits");
    }
    return *key;
}

struct HostTemplate {
    HostSpec spec;
    std::size_t count{1};
    TimeMs staggerMs{0};
};

HostTemplate parseHost(const YAML::Node& node, std::string_view origin)
{
    checkKeys(node,
              {"id", "addresses", "behavior", "link_delay_ms", "initial_ttl", "rng_seed", "count",
               "client", "flood"},
              "host", origin);
    HostTemplate t;
    HostSpec& h = t.spec;
    if (!node["id"] || !node["behavior"] || !node["addresses"]) {
        throw ParseError(where(node, origin) + ": host needs id, behavior and addresses");
    }
    h.id = get<std::string>(node["id"], "id", origin);
    h.behavior = parseBehavior(node["behavior"], origin);
    for (const auto& a : node["addresses"]) {
        h.addresses.push_back(getAddress(a, origin));
    }
    maybe(node, "link_delay_ms", h.linkDelayMs, origin);
    if (auto n = node["initial_ttl"]) {
        h.initialTtl = getByte(n, "initial_ttl", origin);
    }
    if (auto n = node["rng_seed"]) {
        h.rngSeed = get<std::uint64_t>(n, "rng_seed", origin);
    }
    maybe(node, "count", t.count, origin);

    if (auto c = node["client"]) {
        checkKeys(c,
                  {"connect_at", "stagger_ms", "echoes_challenge", "retries", "connect_timeout_ms",
                   "server_port"},
                  "client", origin);
        if (auto at = c["connect_at"]) {
            h.client.connectAt = get<std::vector<TimeMs>>(at, "connect_at", origin);
        }
        maybe(c, "stagger_ms", t.staggerMs, origin);
        maybe(c, "echoes_challenge", h.client.echoesChallenge, origin);
        maybe(c, "retries", h.client.retryOnFailure, origin);
        maybe(c, "connect_timeout_ms", h.client.connectTimeoutMs, origin);
        maybe(c, "server_port", h.client.serverPort, origin);
    }
    if (auto f = node["flood"]) {
        checkKeys(f,
                  {"start_ms", "stop_ms", "rate", "spoof", "pool_size", "existing", "realm",
                   "protocol", "target_port"},
                  "flood", origin);
        FloodProfile& p = h.flood;
        maybe(f, "start_ms", p.startAt, origin);
        maybe(f, "stop_ms", p.stopAt, origin);
        maybe(f, "rate", p.ratePerSecond, origin);
        maybe(f, "pool_size", p.poolSize, origin);
        maybe(f, "target_port", p.targetPort, origin);
        if (auto n = f["realm"]) {
            p.realm = parseRealm(n, origin);
        }
        if (auto n = f["spoof"]) {
            const auto s = get<std::string>(n, "spoof", origin);
            if (s == "nonexistent_pool") {
                p.spoofMode = SpoofMode::NonexistentPool;
            } else if (s == "existing_hosts") {
                p.spoofMode = SpoofMode::ExistingHosts;
            } else if (s == "self") {
                p.spoofMode = SpoofMode::SelfIgnoreSynAck;
            } else {
                throw ParseError(where(n, origin) + ": spoof must be nonexistent_pool, existing_hosts or self");
            }
        }
        if (auto n = f["existing"]) {
            for (const auto& a : n) {
                p.existingHosts.push_back(getAddress(a, origin));
            }
        }
        if (auto n = f["protocol"]) {
            const auto s = get<std::string>(n, "protocol", origin);
            if (s == "tcp") {
                p.protocol = PacketKind::Tcp;
            } else if (s == "udp") {
                p.protocol = PacketKind::Udp;
            } else {
                throw ParseError(where(n, origin) + ": protocol must be tcp or udp");
            }
        }
    }
    return t;
}

void expandHost(const HostTemplate& t, std::vector<HostSpec>& out)
{
    if (t.count <= 1) {
        out.push_back(t.spec);
        return;
    }
    for (std::size_t i = 0; i < t.count; ++i) {
        HostSpec h = t.spec;
        h.id = t.spec.id + "-" + std::to_string(i);
        for (auto& a : h.addresses) {
            a = a.offset(i);
        }
        for (auto& at : h.client.connectAt) {
            at += static_cast<TimeMs>(i) * t.staggerMs;
        }
        if (h.rngSeed) {
            h.rngSeed = *h.rngSeed + i;
        }
        out.push_back(std::move(h));
    }
}

std::string fmt(double v, const char* spec)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error([&problems] {
          std::string msg = "invalid scenario:";
          for (const auto& p : problems) {
              msg += "\n  - " + p;
          }
          return msg;
      }()),
      problems_(std::move(problems))
{
}

DefenseSpec DefenseSpec::parse(std::string_view text)
{
    if (text == "none") return {Kind::None};
    if (text == "cnoa_stateful" || text == "cnoa") return {Kind::CnoaStateful};
    if (text == "cnoa_stateless") return {Kind::CnoaStateless};
    if (text == "syn_cookies") return {Kind::SynCookies};
    if (text == "hcf") return {Kind::Hcf};
    if (text == "threshold") return {Kind::Threshold, 5};
    if (text.starts_with("threshold:")) {
        auto k = text.substr(10);
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), value);
        if (ec == std::errc{} && ptr == k.data() + k.size() && value > 0) {
            return {Kind::Threshold, value};
        }
    }
    throw ParseError("unknown defense '" + std::string(text) + "'");
}

std::string DefenseSpec::label() const
{
    switch (kind) {
    case Kind::None: return "none";
    case Kind::CnoaStateful: return "cnoa_stateful";
    case Kind::CnoaStateless: return "cnoa_stateless";
    case Kind::Threshold: return "threshold:" + std::to_string(thresholdK);
    case Kind::SynCookies: return "syn_cookies";
    case Kind::Hcf: return "hcf";
    }
    return "unknown";
}

ScenarioConfig parseScenario(std::string_view yamlText, std::string_view origin)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yamlText));
    } catch (const YAML::ParserException& e) {
        throw ParseError(std::string(origin) + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (!root.IsMap()) {
        throw ParseError(std::string(origin) + ": scenario must be a mapping");
    }
    checkKeys(root,
              {"version", "name", "seed", "duration_ms", "defense", "listener", "policy", "cookies",
               "hcf", "network", "paths", "hosts"},
              "scenario", origin);

    ScenarioConfig cfg;
    if (auto v = root["version"]; v && get<int>(v, "version", origin) != 1) {
        throw ParseError(where(v, origin) + ": unsupported scenario version");
    }
    maybe(root, "name", cfg.name, origin);
    if (auto n = root["seed"]) {
        cfg.seed = get<std::uint64_t>(n, "seed", origin);
    }
    maybe(root, "duration_ms", cfg.durationMs, origin);
    if (auto n = root["defense"]) {
        try {
            cfg.defense = DefenseSpec::parse(get<std::string>(n, "defense", origin));
        } catch (const ParseError& e) {
            throw ParseError(where(n, origin) + ": " + e.what());
        }
    }
    if (auto n = root["listener"]) {
        checkKeys(n, {"backlog", "ports", "rst_on_reject"}, "listener", origin);
        maybe(n, "backlog", cfg.listener.backlogCapacity, origin);
        maybe(n, "ports", cfg.listener.ports, origin);
        maybe(n, "rst_on_reject", cfg.listener.rstOnReject, origin);
    }
    if (auto n = root["policy"]) {
        checkKeys(n, {"blacklist_threshold", "blacklist_ttl_ms", "epoch_ms", "secret_key"}, "policy",
                  origin);
        maybe(n, "blacklist_threshold", cfg.policy.blacklistThreshold, origin);
        maybe(n, "blacklist_ttl_ms", cfg.policy.blacklistTtlMs, origin);
        maybe(n, "epoch_ms", cfg.policy.epochMs, origin);
        if (auto k = n["secret_key"]) {
            cfg.policy.secretKey = parseKey(k, origin);
        }
    }
    if (auto n = root["cookies"]) {
        checkKeys(n, {"granularity_s", "mss_table"}, "cookies", origin);
        maybe(n, "granularity_s", cfg.cookies.timestampGranularityS, origin);
        maybe(n, "mss_table", cfg.cookies.mssTable, origin);
    }
    if (auto n = root["hcf"]) {
        checkKeys(n, {"tolerance", "activation_threshold", "window_ms"}, "hcf", origin);
        maybe(n, "tolerance", cfg.hcf.tolerance, origin);
        maybe(n, "activation_threshold", cfg.hcf.activationThreshold, origin);
        maybe(n, "window_ms", cfg.hcf.windowMs, origin);
    }
    if (auto n = root["network"]) {
        checkKeys(n, {"default_hops", "jitter_ms", "innocent_rst", "max_events", "sample_every_ms"},
                  "network", origin);
        if (auto h = n["default_hops"]) {
            cfg.network.defaultHops = getByte(h, "default_hops", origin);
        }
        maybe(n, "jitter_ms", cfg.network.jitterMs, origin);
        maybe(n, "innocent_rst", cfg.network.innocentRst, origin);
        maybe(n, "max_events", cfg.network.maxPendingEvents, origin);
        maybe(n, "sample_every_ms", cfg.network.sampleEveryMs, origin);
    }
    if (auto n = root["paths"]) {
        for (const auto& p : n) {
            checkKeys(p, {"a", "b", "hops"}, "path", origin);
            if (!p["a"] || !p["b"] || !p["hops"]) {
                throw ParseError(where(p, origin) + ": path needs a, b and hops");
            }
            cfg.paths.push_back({get<std::string>(p["a"], "a", origin),
                                 get<std::string>(p["b"], "b", origin),
                                 getByte(p["hops"], "hops", origin)});
        }
    }
    if (auto n = root["hosts"]) {
        if (!n.IsSequence()) {
            throw ParseError(where(n, origin) + ": hosts must be a list");
        }
        for (const auto& h : n) {
            expandHost(parseHost(h, origin), cfg.hosts);
        }
    }
    return cfg;
}

std::vector<std::string> validateScenario(const ScenarioConfig& cfg)
{
    std::vector<std::string> problems;
    auto bad = [&problems](std::string msg) { problems.push_back(std::move(msg)); };

    if (!cfg.seed) bad("seed is required");
    if (cfg.durationMs <= 0) bad("duration_ms must be positive");
    if (cfg.listener.backlogCapacity == 0) bad("listener.backlog must be positive");
    if (cfg.listener.ports.empty()) bad("listener.ports must not be empty");
    for (auto p : cfg.listener.ports) {
        if (p == 0) bad("listener port 0 is not allowed");
    }
    if (cfg.policy.blacklistThreshold == 0) bad("policy.blacklist_threshold must be positive");
    if (cfg.policy.blacklistTtlMs <= 0) bad("policy.blacklist_ttl_ms must be positive");
    if (cfg.policy.epochMs <= 0) bad("policy.epoch_ms must be positive");
    if (!cfg.cookies.valid()) bad("cookies.mss_table must hold 1..8 entries and granularity must be positive");
    if (cfg.hcf.activationThreshold == 0) bad("hcf.activation_threshold must be positive");
    if (cfg.hcf.windowMs <= 0) bad("hcf.window_ms must be positive");
    if (cfg.network.defaultHops == 0) bad("network.default_hops must be positive");
    if (cfg.network.jitterMs < 0) bad("network.jitter_ms must not be negative");
    if (cfg.network.maxPendingEvents == 0) bad("network.max_events must be positive");

    std::set<std::string> ids;
    std::map<Address, std::string> owners;
    std::size_t servers = 0;
    std::set<Realm> serverRealms;
    for (const auto& h : cfg.hosts) {
        if (!ids.insert(h.id).second) bad("duplicate host id '" + h.id + "'");
        if (h.addresses.empty()) bad("host '" + h.id + "' has no address");
        for (const auto& a : h.addresses) {
            auto [it, ok] = owners.emplace(a, h.id);
            if (!ok) bad("address " + a.toString() + " owned by both '" + it->second + "' and '" + h.id + "'");
            if (inPoolRange(a)) bad("host '" + h.id + "' owns " + a.toString() + " inside the reserved spoof-pool range");
        }
        if (h.linkDelayMs < 0) bad("host '" + h.id + "' link_delay_ms must not be negative");
        if (h.initialTtl == 0) bad("host '" + h.id + "' initial_ttl must be positive");
        if (h.behavior == Behavior::Server) {
            ++servers;
            for (const auto& a : h.addresses) serverRealms.insert(a.realm);
        }
    }
    if (servers != 1) bad("exactly one server host required, found " + std::to_string(servers));

    for (const auto& h : cfg.hosts) {
        if (h.behavior == Behavior::Client) {
            const auto& at = h.client.connectAt;
            for (std::size_t i = 1; i < at.size(); ++i) {
                if (at[i] <= at[i - 1]) {
                    bad("client '" + h.id + "' connect_at must be strictly increasing");
                    break;
                }
            }
            if (!at.empty() && at.front() < 0) bad("client '" + h.id + "' connect_at must not be negative");
            if (!h.addresses.empty() && servers == 1 && !serverRealms.contains(h.addresses.front().realm)) {
                bad("client '" + h.id + "' has no server address in its realm");
            }
            if (h.client.connectTimeoutMs <= 0) bad("client '" + h.id + "' connect_timeout_ms must be positive");
            if (h.client.serverPort == 0) bad("client '" + h.id + "' server_port must be nonzero");
        }
        if (h.behavior == Behavior::Attacker) {
            const auto& f = h.flood;
            if (f.stopAt <= f.startAt) bad("attacker '" + h.id + "' stop_ms must be after start_ms");
            if (f.startAt < 0) bad("attacker '" + h.id + "' start_ms must not be negative");
            if (!(f.ratePerSecond > 0.0)) bad("attacker '" + h.id + "' rate must be positive");
            if (f.targetPort == 0) bad("attacker '" + h.id + "' target_port must be nonzero");
            if (servers == 1 && !serverRealms.contains(f.realm)) bad("attacker '" + h.id + "' floods a realm the server lacks");
            switch (f.spoofMode) {
            case SpoofMode::NonexistentPool:
                if (f.poolSize == 0 || f.poolSize > poolRangeSize(f.realm)) {
                    bad("attacker '" + h.id + "' pool_size out of range");
                }
                break;
            case SpoofMode::ExistingHosts:
                if (f.existingHosts.empty()) bad("attacker '" + h.id + "' existing list is empty");
                for (const auto& a : f.existingHosts) {
                    if (a.realm != f.realm) bad("attacker '" + h.id + "' existing address " + a.toString() + " is outside the flood realm");
                }
                break;
            case SpoofMode::SelfIgnoreSynAck: {
                bool has = std::any_of(h.addresses.begin(), h.addresses.end(),
                                       [&](const Address& a) { return a.realm == f.realm; });
                if (!has) bad("attacker '" + h.id + "' has no own address in the flood realm");
                break;
            }
            }
        }
    }
    for (const auto& p : cfg.paths) {
        if (!ids.contains(p.a) || !ids.contains(p.b)) bad("path " + p.a + " <-> " + p.b + " references an unknown host");
        if (p.hops == 0) bad("path " + p.a + " <-> " + p.b + " needs at least one hop");
    }
    return problems;
}

ScenarioConfig loadScenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open scenario file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    ScenarioConfig cfg = parseScenario(buf.str(), path.string());
    if (cfg.name.empty()) {
        cfg.name = path.stem().string();
    }
    if (auto problems = validateScenario(cfg); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    return cfg;
}

SecretKey effectiveKey(const ScenarioConfig& cfg)
{
    if (cfg.policy.secretKey) {
        return *cfg.policy.secretKey;
    }
    SeededRng rng(SeededRng::derive(cfg.seed.value_or(0), kKeyTag));
    SecretKey key{};
    for (std::size_t half = 0; half < 2; ++half) {
        const std::uint64_t v = rng.next64();
        for (std::size_t i = 0; i < 8; ++i) {
            key[half * 8 + i] = static_cast<std::uint8_t>(v >> (8 * i));
        }
    }
    return key;
}

std::unique_ptr<Defense> makeDefense(const ScenarioConfig& cfg)
{
    using Kind = DefenseSpec::Kind;
    const std::uint64_t seed = cfg.seed.value_or(0);
    switch (cfg.defense.kind) {
    case Kind::None:
        return std::make_unique<NoDefense>();
    case Kind::CnoaStateful:
    case Kind::CnoaStateless: {
        CnoaPolicy policy = cfg.policy;
        policy.secretKey = effectiveKey(cfg);
        const auto mode = cfg.defense.kind == Kind::CnoaStateful ? ChallengeMode::Stateful
                                                                 : ChallengeMode::Stateless;
        return std::make_unique<CnoaDefense>(mode, policy, seed);
    }
    case Kind::Threshold:
        return std::make_unique<ThresholdDefense>(cfg.defense.thresholdK);
    case Kind::SynCookies: {
        CookieParams params = cfg.cookies;
        params.secretKey = effectiveKey(cfg);
        return std::make_unique<SynCookieDefense>(params);
    }
    case Kind::Hcf:
        return std::make_unique<HcfDefense>(cfg.hcf);
    }
    throw Error("unknown defense kind");
}

ScenarioResult runScenario(const ScenarioConfig& cfg)
{
    if (auto problems = validateScenario(cfg); !problems.empty()) {
        throw ValidationError(std::move(problems));
    }
    const auto started = std::chrono::steady_clock::now();
    Network net(*cfg.seed, cfg.network, cfg.hosts, cfg.paths, cfg.listener, makeDefense(cfg));
    ScenarioResult result;
    result.name = cfg.name;
    result.defense = cfg.defense.label();
    result.seed = *cfg.seed;
    result.metrics = net.run(cfg.durationMs);
    result.trace = net.trace();
    result.history = net.history();
    result.origins = net.origins();
    result.wallTimeMs =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return result;
}

void writeTrace(std::ostream& out, const std::vector<Segment>& trace)
{
    for (const auto& seg : trace) {
        out << formatTraceLine(seg) << '\n';
    }
}

void writeMetricsCsv(std::ostream& out, const Metrics& m)
{
    out << "metric,value\n";
    for (const auto& [name, value] : m.rows()) {
        out << name << ',' << value << '\n';
    }
}

void writeBacklogCsv(std::ostream& out, const Metrics& m)
{
    out << "t_ms,half_open\n";
    for (std::size_t i = 0; i < m.backlogSeries.size(); ++i) {
        out << static_cast<TimeMs>(i) * m.sampleEveryMs << ',' << m.backlogSeries[i] << '\n';
    }
}

void writeSpoofedSeriesCsv(std::ostream& out, const Metrics& m)
{
    out << "second,injected,detected\n";
    for (std::size_t i = 0; i < m.spoofedInjectedPerSecond.size(); ++i) {
        out << i << ',' << m.spoofedInjectedPerSecond[i] << ',' << m.spoofedDetectedPerSecond[i]
            << '\n';
    }
}

void writeOutputs(const ScenarioResult& result, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&dir](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) {
            throw Error("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("trace.txt");
        writeTrace(f, result.trace);
    }
    {
        auto f = open("history.csv");
        result.history.writeCsv(f);
    }
    {
        auto f = open("metrics.csv");
        writeMetricsCsv(f, result.metrics);
    }
    {
        auto f = open("backlog.csv");
        writeBacklogCsv(f, result.metrics);
    }
    {
        auto f = open("spoofed_series.csv");
        writeSpoofedSeriesCsv(f, result.metrics);
    }
}

std::string summarize(const ScenarioResult& r)
{
    const auto& m = r.metrics;
    const auto row = toComparisonRow(r);
    std::ostringstream out;
    out << "scenario " << r.name << " (defense " << r.defense << ", seed " << r.seed << ")\n"
        << "  legit established   " << m.legitEstablished << "/" << m.legitAttempted << " ("
        << fmt(row.legitSuccessRate, "%.3f") << ")\n"
        << "  spoofed injected    " << m.spoofedInjected << ", detected " << m.spoofedDetected
        << ", passed " << m.spoofedPassed << " (detection " << fmt(row.detectionRate, "%.3f") << ")\n"
        << "  backlog peak        " << m.backlogPeak << ", drops " << m.backlogDrops
        << ", timeouts " << m.halfOpenTimeouts << "\n"
        << "  blacklisted         " << m.blacklistedAddresses << " addresses, "
        << m.blacklistDrops << " SYNs dropped\n"
        << "  segments            " << m.segmentsSent << " sent, " << m.blackholed
        << " blackholed\n";
    return out.str();
}

ComparisonRow toComparisonRow(const ScenarioResult& r)
{
    const auto& m = r.metrics;
    ComparisonRow row;
    row.defense = r.defense;
    row.detectionRate = m.spoofedInjected == 0
                            ? 0.0
                            : static_cast<double>(m.spoofedDetected) / static_cast<double>(m.spoofedInjected);
    row.legitSuccessRate = m.legitAttempted == 0
                               ? 0.0
                               : static_cast<double>(m.legitEstablished) / static_cast<double>(m.legitAttempted);
    if (m.establishedTotal > 0) {
        row.segmentsPerEstablished =
            static_cast<double>(m.segmentsSent) / static_cast<double>(m.establishedTotal);
    }
    row.backlogPeak = m.backlogPeak;
    row.wallTimeMs = r.wallTimeMs;
    row.extraFieldBytes = m.extraFieldBytes;
    return row;
}

std::vector<ComparisonRow> compareDefenses(const ScenarioConfig& base,
                                           const std::vector<DefenseSpec>& defenses)
{
    if (defenses.empty()) {
        throw Error("compare needs at least one defense");
    }
    std::vector<std::future<ComparisonRow>> jobs;
    jobs.reserve(defenses.size());
    for (const auto& d : defenses) {
        ScenarioConfig cfg = base;
        cfg.defense = d;
        jobs.push_back(std::async(std::launch::async,
                                  [cfg = std::move(cfg)] { return toComparisonRow(runScenario(cfg)); }));
    }
    std::vector<ComparisonRow> rows;
    rows.reserve(jobs.size());
    for (auto& j : jobs) {
        rows.push_back(j.get());
    }
    return rows;
}

void writeComparisonCsv(std::ostream& out, const std::vector<ComparisonRow>& rows)
{
    out << "defense,detectionRate,legitSuccessRate,segmentsPerEstablished,backlogPeak,wallTimeMs,"
           "extraFieldBytes\n";
    for (const auto& r : rows) {
        out << r.defense << ',' << fmt(r.detectionRate, "%.6f") << ','
            << fmt(r.legitSuccessRate, "%.6f") << ','
            << (r.segmentsPerEstablished ? fmt(*r.segmentsPerEstablished, "%.6f") : "inf") << ','
            << r.backlogPeak << ',' << fmt(r.wallTimeMs, "%.3f") << ',' << r.extraFieldBytes << '\n';
    }
}

}  // namespace cnoa
