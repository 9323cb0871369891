// klaimnet — command-line workbench for tuple-space process nets.
//
//   check     parse a net description and run the static checks
//   simulate  run one seeded execution (or replay a recorded trace)
//   explore   enumerate every interleaving and decide the file's assertions
//   services  print the service registry of a state as JSON
//   examples  write the bundled scenario corpus to a directory
//
// Exit codes: 0 success; 1 parse/static/model/assertion failure;
// 2 I/O error; 3 exploration truncated with all assertions passing.

#include <CLI11.hpp>
#include <klaimnet/klaimnet.hpp>

#include "scenarios_data.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace klaimnet;

constexpr int kExitOk = 0;
constexpr int kExitModel = 1;
constexpr int kExitIo = 2;
constexpr int kExitTruncated = 3;

bool read_file(const std::string& path, std::string& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good()) return false;
    std::ostringstream ss;
    ss << f.rdbuf();
    out = ss.str();
    return true;
}

bool write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    f << body;
    return f.good();
}

// Parses `path` into `result`. Returns kExitOk, or the exit code to use.
int load(const std::string& path, ParseResult& result) {
    std::string text;
    if (!read_file(path, text)) {
        std::cerr << "error: cannot read '" << path << "'\n";
        return kExitIo;
    }
    result = parse_net(text, path);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w.render() << '\n';
    if (!result.ok()) {
        for (const auto& e : result.errors) std::cerr << "error: " << e.render() << '\n';
        return kExitModel;
    }
    return kExitOk;
}

int load_trace(const std::string& path, Trace& out) {
    std::string text;
    if (!read_file(path, text)) {
        std::cerr << "error: cannot read trace '" << path << "'\n";
        return kExitIo;
    }
    try {
        out = trace_from_json(ordered_json::parse(text));
    } catch (const std::exception& e) {
        std::cerr << "error: malformed trace '" << path << "': " << e.what() << '\n';
        return kExitModel;
    }
    return kExitOk;
}

struct EngineFlags {
    bool strict = false;
    bool faults = false;
    std::vector<std::string> extensions;

    // Attaches the shared semantics flags to a subcommand.
    void attach(CLI::App* cmd) {
        cmd->add_flag("--strict", strict,
                      "only allow remote actions between linked nodes");
        cmd->add_flag("--faults", faults, "inject link-failure transitions");
        cmd->add_option("--extensions", extensions,
                        "enable semantic extensions (known: open-accept)")
            ->delimiter(',');
    }

    // Validates extension names; returns an exit code (kExitOk if fine).
    int config(EngineConfig& cfg) const {
        cfg.strict_connectivity = strict;
        cfg.fault_injection = faults;
        for (const auto& e : extensions) {
            if (e == "open-accept") {
                cfg.open_accept = true;
            } else {
                std::cerr << "error: unknown extension '" << e << "'\n";
                return kExitModel;
            }
        }
        return kExitOk;
    }
};

ordered_json record_to_json(const ServiceRecord& r) {
    ordered_json j;
    j["node"] = r.node;
    j["description"] = r.description;
    j["id"] = r.id;
    j["route"] = r.route;
    return j;
}

int cmd_check(const std::string& file) {
    ParseResult r;
    if (int rc = load(file, r); rc != kExitOk) return rc;
    std::cout << "ok: " << file << " (" << r.net.nodes.size() << " node(s), "
              << r.assertions.size() << " assertion(s))\n";
    return kExitOk;
}

int cmd_simulate(const std::string& file, std::uint64_t seed, std::uint64_t maxSteps,
                 const EngineFlags& flags, const std::string& jsonOut,
                 const std::string& replayFile) {
    ParseResult r;
    if (int rc = load(file, r); rc != kExitOk) return rc;
    EngineConfig cfg;
    if (int rc = flags.config(cfg); rc != kExitOk) return rc;

    Trace trace;
    bool cutoff = false;
    if (!replayFile.empty()) {
        Trace recorded;
        if (int rc = load_trace(replayFile, recorded); rc != kExitOk) return rc;
        NetState final;
        try {
            final = replay(r.net, recorded.steps, cfg);
        } catch (const ModelError& e) {
            std::cerr << "error: replay failed: " << e.what() << '\n';
            return kExitModel;
        }
        const std::string canon = canonical_form(final);
        if (canon != recorded.final_state) {
            std::cerr << "error: replayed final state differs from the recorded one\n";
            return kExitModel;
        }
        std::cout << "replayed " << recorded.steps.size()
                  << " step(s); final state matches the recording\n";
        trace = std::move(recorded);
    } else {
        SimResult res;
        try {
            res = run_simulation(r.net, seed, maxSteps, cfg);
        } catch (const ModelError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitModel;
        }
        cutoff = res.stop == StopReason::Cutoff;
        std::cout << "seed " << seed << ": stopped after " << res.trace.steps.size()
                  << " step(s): " << stop_name(res.stop) << '\n';
        trace = std::move(res.trace);
    }

    if (!jsonOut.empty()) {
        ordered_json j = trace_to_json(trace);
        j["cutoff"] = cutoff;
        if (!write_file(jsonOut, j.dump(2) + "\n")) {
            std::cerr << "error: cannot write '" << jsonOut << "'\n";
            return kExitIo;
        }
        std::cout << "trace written to " << jsonOut << '\n';
    }
    return kExitOk;
}

int cmd_explore(const std::string& file, std::uint64_t maxStates, std::uint64_t maxDepth,
                unsigned workers, const EngineFlags& flags, const std::string& jsonOut) {
    ParseResult r;
    if (int rc = load(file, r); rc != kExitOk) return rc;
    EngineConfig cfg;
    if (int rc = flags.config(cfg); rc != kExitOk) return rc;

    Bounds bounds;
    bounds.max_states = maxStates;
    if (maxDepth > 0) bounds.max_depth = static_cast<std::uint32_t>(maxDepth);
    bounds.workers = workers > 0 ? workers : std::max(1u, std::thread::hardware_concurrency());

    ExploreResult res = explore(r.net, cfg, bounds, r.assertions);

    bool anyFail = false;
    for (const auto& v : res.verdicts) {
        anyFail = anyFail || v.verdict != Verdict::Pass;
        std::cout << verdict_name(v.verdict) << "  " << v.assertion.render();
        if (v.witness) std::cout << "  [witness: " << v.witness->steps.size() << " step(s)]";
        std::cout << '\n';
    }
    std::cout << "states=" << res.states << " transitions=" << res.transitions
              << " terminals=" << res.terminals.size() << (res.truncated ? " (truncated)" : "")
              << '\n';

    if (!jsonOut.empty()) {
        if (!write_file(jsonOut, report_to_json(file, res).dump(2) + "\n")) {
            std::cerr << "error: cannot write '" << jsonOut << "'\n";
            return kExitIo;
        }
        std::cout << "report written to " << jsonOut << '\n';
    }
    if (anyFail) return kExitModel;
    if (res.truncated) return kExitTruncated;
    return kExitOk;
}

int cmd_services(const std::string& file, const std::string& site, const std::string& afterTrace,
                 const EngineFlags& flags) {
    ParseResult r;
    if (int rc = load(file, r); rc != kExitOk) return rc;
    EngineConfig cfg;
    if (int rc = flags.config(cfg); rc != kExitOk) return rc;

    NetState state = r.net;
    if (!afterTrace.empty()) {
        Trace recorded;
        if (int rc = load_trace(afterTrace, recorded); rc != kExitOk) return rc;
        try {
            state = replay(state, recorded.steps, cfg);
        } catch (const ModelError& e) {
            std::cerr << "error: replay failed: " << e.what() << '\n';
            return kExitModel;
        }
    }

    std::vector<ServiceRecord> records;
    try {
        records = site.empty() ? list_services(state) : list_services(state, site);
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitModel;
    }
    ordered_json j = ordered_json::array();
    for (const auto& rec : records) j.push_back(record_to_json(rec));
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_examples(const std::string& outDir) {
    std::error_code ec;
    std::filesystem::create_directories(outDir, ec);
    if (ec) {
        std::cerr << "error: cannot create '" << outDir << "': " << ec.message() << '\n';
        return kExitIo;
    }
    for (const auto& f : embedded::scenario_files) {
        const auto path = std::filesystem::path(outDir) / f.name;
        if (!write_file(path.string(), std::string(f.body))) {
            std::cerr << "error: cannot write '" << path.string() << "'\n";
            return kExitIo;
        }
        std::cout << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Workbench for tuple-space process nets: parse, simulate, explore, inspect."};
    app.require_subcommand(1);

    std::string file, jsonOut, replayFile, site, afterTrace;
    std::string outDir = "examples";
    std::uint64_t seed = 0, maxSteps = 10000, maxStates = 200000, maxDepth = 0;
    unsigned workers = 0;
    EngineFlags simFlags, expFlags, svcFlags;

    CLI::App* check = app.add_subcommand("check", "Parse a net description and run static checks");
    check->add_option("file", file, "net description")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Run one seeded execution");
    simulate->add_option("file", file, "net description")->required();
    simulate->add_option("--seed", seed, "PRNG seed (default 0)");
    simulate->add_option("--max-steps", maxSteps, "stop after this many steps (default 10000)");
    simulate->add_option("--json", jsonOut, "write the trace as JSON to this file");
    simulate->add_option("--replay", replayFile,
                         "replay a recorded trace instead of running the PRNG");
    simFlags.attach(simulate);

    CLI::App* explore_ = app.add_subcommand(
        "explore", "Enumerate all interleavings and decide the file's assertions");
    explore_->add_option("file", file, "net description")->required();
    explore_->add_option("--max-states", maxStates, "state budget (default 200000)");
    explore_->add_option("--max-depth", maxDepth, "depth bound, 0 = unbounded (default 0)");
    explore_->add_option("--workers", workers, "worker threads, 0 = auto (default 0)");
    explore_->add_option("--json", jsonOut, "write the report as JSON to this file");
    expFlags.attach(explore_);

    CLI::App* services = app.add_subcommand("services", "Print a state's service registry as JSON");
    services->add_option("file", file, "net description")->required();
    services->add_option("--site", site, "restrict to one node");
    services->add_option("--after", afterTrace, "replay this trace JSON first");
    svcFlags.attach(services);

    CLI::App* examples = app.add_subcommand("examples", "Write the bundled scenarios to a directory");
    examples->add_option("--out", outDir, "target directory (default: examples)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitModel;
    }

    try {
        if (*check) return cmd_check(file);
        if (*simulate) return cmd_simulate(file, seed, maxSteps, simFlags, jsonOut, replayFile);
        if (*explore_) return cmd_explore(file, maxStates, maxDepth, workers, expFlags, jsonOut);
        if (*services) return cmd_services(file, site, afterTrace, svcFlags);
        if (*examples) return cmd_examples(outDir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitModel;
    }
    return kExitOk;
}
