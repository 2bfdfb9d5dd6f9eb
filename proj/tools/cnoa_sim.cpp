// cnoa-sim: run handshake-defense scenarios and compare defenses.
//
//   cnoa-sim run scenarios/case3_v4_flood.yaml --out results/case3
//   cnoa-sim compare scenarios/compare_spoofed_flood.yaml
//       --defenses none,cnoa_stateful,threshold:5,syn_cookies,hcf --out cmp.csv
//   cnoa-sim list-scenarios

#include "cnoa/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

std::vector<cnoa::DefenseSpec> parseDefenseList(const std::string& csv)
{
    std::vector<cnoa::DefenseSpec> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto comma = csv.find(',', start);
        if (comma == std::string::npos) comma = csv.size();
        auto item = csv.substr(start, comma - start);
        if (!item.empty()) out.push_back(cnoa::DefenseSpec::parse(item));
        start = comma + 1;
    }
    if (out.empty()) throw cnoa::ParseError("--defenses is empty");
    return out;
}

int listScenarios(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        std::cerr << "no scenario directory at " << dir << '\n';
        return kExitRuntime;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".yaml") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::cout << f.stem().string() << "\t" << f.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete-event simulator for TCP handshake defenses"};
    app.require_subcommand(1);

    std::string scenarioPath;
    std::optional<std::uint64_t> seed;
    std::string outDir;
    std::string defense;
    auto* run = app.add_subcommand("run", "Run one scenario and write its outputs");
    run->add_option("scenario", scenarioPath, "Scenario YAML file")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", outDir, "Output directory (default: results/<name>)");
    run->add_option("--defense", defense, "Override the defense");

    std::string templatePath;
    std::string defenses;
    std::string outFile;
    auto* compare = app.add_subcommand("compare", "Run one traffic template under several defenses");
    compare->add_option("template", templatePath, "Scenario YAML file")->required();
    compare->add_option("--defenses", defenses, "Comma-separated defense list")->required();
    compare->add_option("--out", outFile, "CSV output file (default: stdout)");
    compare->add_option("--seed", seed, "Override the scenario seed");

    std::string scenarioDir = CNOA_SCENARIO_DIR;
    auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");
    list->add_option("--dir", scenarioDir, "Scenario directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*list) {
            return listScenarios(scenarioDir);
        }
        if (*run) {
            auto cfg = cnoa::parseScenario(
                [&] {
                    std::ifstream in(scenarioPath);
                    if (!in) throw cnoa::ParseError("cannot open scenario file " + scenarioPath);
                    return std::string(std::istreambuf_iterator<char>(in), {});
                }(),
                scenarioPath);
            if (cfg.name.empty()) cfg.name = fs::path(scenarioPath).stem().string();
            if (seed) cfg.seed = seed;
            if (!defense.empty()) cfg.defense = cnoa::DefenseSpec::parse(defense);
            if (auto problems = cnoa::validateScenario(cfg); !problems.empty()) {
                throw cnoa::ValidationError(std::move(problems));
            }
            auto result = cnoa::runScenario(cfg);
            const fs::path dir = outDir.empty() ? fs::path("results") / cfg.name : fs::path(outDir);
            cnoa::writeOutputs(result, dir);
            std::cout << cnoa::summarize(result) << "  outputs in " << dir.string() << '\n';
            return 0;
        }
        if (*compare) {
            const auto specs = parseDefenseList(defenses);
            auto cfg = cnoa::loadScenario(templatePath);
            if (seed) cfg.seed = seed;
            const auto rows = cnoa::compareDefenses(cfg, specs);
            if (outFile.empty()) {
                cnoa::writeComparisonCsv(std::cout, rows);
            } else {
                std::ofstream out(outFile);
                if (!out) throw cnoa::Error("cannot write " + outFile);
                cnoa::writeComparisonCsv(out, rows);
                std::cout << "wrote " << rows.size() << " rows to " << outFile << '\n';
            }
            return 0;
        }
    } catch (const cnoa::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const cnoa::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
