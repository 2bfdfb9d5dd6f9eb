#pragma once

// Declarative experiments: YAML scenario files, deterministic runs, and
// the CSV/trace outputs consumed by plotting tools.

#include "cnoa/baselines.hpp"
#include "cnoa/cnoa.hpp"
#include "cnoa/listener.hpp"
#include "cnoa/simnet.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cnoa {

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct DefenseSpec {
    enum class Kind : std::uint8_t { None, CnoaStateful, CnoaStateless, Threshold, SynCookies, Hcf };
    Kind kind{Kind::None};
    unsigned thresholdK{5};

    // none | cnoa_stateful | cnoa_stateless | threshold[:k] | syn_cookies | hcf
    static DefenseSpec parse(std::string_view text);
    std::string label() const;

    friend bool operator==(const DefenseSpec&, const DefenseSpec&) = default;
};

struct ScenarioConfig {
    std::string name;
    std::optional<std::uint64_t> seed;
    TimeMs durationMs{0};
    DefenseSpec defense;
    ListenerConfig listener;
    CnoaPolicy policy;
    CookieParams cookies;
    HcfParams hcf;
    NetworkConfig network;
    std::vector<HostSpec> hosts;
    std::vector<PathSpec> paths;
};

// Parse without validating; throws ParseError with line diagnostics.
ScenarioConfig parseScenario(std::string_view yamlText, std::string_view origin = "<string>");

// Every violated invariant, empty when the config is runnable.
std::vector<std::string> validateScenario(const ScenarioConfig& cfg);

// parse + validate; throws ParseError or ValidationError.
ScenarioConfig loadScenario(const std::filesystem::path& path);

// The secret key in effect: policy.secretKey, else one derived from the seed.
SecretKey effectiveKey(const ScenarioConfig& cfg);

std::unique_ptr<Defense> makeDefense(const ScenarioConfig& cfg);

struct ScenarioResult {
    std::string name;
    std::string defense;
    std::uint64_t seed{0};
    Metrics metrics;
    std::vector<Segment> trace;
    HistoryLog history;
    std::map<FlowKey, FlowOrigin> origins;
    double wallTimeMs{0.0};
};

ScenarioResult runScenario(const ScenarioConfig& cfg);

void writeTrace(std::ostream& out, const std::vector<Segment>& trace);
void writeMetricsCsv(std::ostream& out, const Metrics& m);
void writeBacklogCsv(std::ostream& out, const Metrics& m);
void writeSpoofedSeriesCsv(std::ostream& out, const Metrics& m);

// trace.txt, history.csv, metrics.csv, backlog.csv, spoofed_series.csv
void writeOutputs(const ScenarioResult& result, const std::filesystem::path& dir);

std::string summarize(const ScenarioResult& result);

struct ComparisonRow {
    std::string defense;
    double detectionRate{0.0};
    double legitSuccessRate{0.0};
    std::optional<double> segmentsPerEstablished;  // nullopt when nothing was established
    std::uint64_t backlogPeak{0};
    double wallTimeMs{0.0};
    std::uint64_t extraFieldBytes{0};
};

ComparisonRow toComparisonRow(const ScenarioResult& result);

// Same traffic and seed under each defense; rows follow `defenses` order.
std::vector<ComparisonRow> compareDefenses(const ScenarioConfig& base,
                                           const std::vector<DefenseSpec>& defenses);

void writeComparisonCsv(std::ostream& out, const std::vector<ComparisonRow>& rows);

}  // namespace cnoa
