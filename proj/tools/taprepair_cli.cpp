#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "taprepair/report.hpp"

// Exit codes: 0 all properties pass or are fixed, 1 violations remain,
// 2 configuration, I/O, or parse errors.

namespace {

using namespace taprepair;

void add_common_flags(CLI::App* cmd, RunConfig& cfg, std::string& format) {
    cmd->add_option("--rules", cfg.rules_path, "rule DSL file")->required();
    cmd->add_option("--scenario", cfg.scenario_path, "scenario file (INIT/PIN/OUTDOOR/MANUAL)");
    cmd->add_option("--props", cfg.property_selection,
                    "catalog property ids (P.22) or group tags (G2)")
        ->required()
        ->delimiter(',');
    cmd->add_option("--channels", cfg.channel_config_path,
                    "physical-channel EFFECT file (built-ins otherwise)");
    cmd->add_option("--tick", cfg.tick_sec, "platform sensor period in seconds")
        ->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "priority tie-break seed")->capture_default_str();
    cmd->add_option("--iter-limit", cfg.iter_limit, "candidate budget per repair round")
        ->capture_default_str();
    cmd->add_option("--round-limit", cfg.round_limit, "repair recursion depth")
        ->capture_default_str();
    cmd->add_option("--state-cap", cfg.state_cap, "state-space exploration cap")
        ->capture_default_str();
    cmd->add_option("--out", cfg.output_path, "write the report here instead of stdout");
    cmd->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
}

int write_out(const std::string& path, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return 0;
    }
    std::ofstream f(path);
    if (!f) {
        std::cerr << "cannot write " << path << "\n";
        return 2;
    }
    f << body;
    return 0;
}

int emit(const Report& rep, const RunConfig& cfg, const std::string& format) {
    std::string body = format == "json" ? render_records(rep) : render_text(rep);
    if (int rc = write_out(cfg.output_path, body)) return rc;
    if (rep.repair_mode && !cfg.output_path.empty()) {
        // the patched DSL rides alongside the report file, ready to re-check
        if (int rc = write_out(cfg.output_path + ".patched.rules", rep.patched_rules_text))
            return rc;
    }
    return rep.all_clear() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trigger-action rule verification and repair"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string format = "text";
    CLI::App* check = app.add_subcommand("check", "detect property violations");
    add_common_flags(check, cfg, format);
    CLI::App* repair = app.add_subcommand("repair", "detect violations and synthesize patches");
    add_common_flags(repair, cfg, format);
    CLI::App* bench =
        app.add_subcommand("bench", "run the built-in flawed-deployment benchmark");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help exits 0, everything else is an input error
    }

    try {
        if (bench->parsed()) {
            auto cases = taprepair::run_bench();
            std::cout << taprepair::render_bench(cases);
            for (const auto& c : cases)
                if (!c.ok) return 1;
            return 0;
        }
        taprepair::Report rep = check->parsed() ? taprepair::run_check(cfg)
                                                : taprepair::run_repair(cfg);
        return emit(rep, cfg, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
