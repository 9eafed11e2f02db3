// Command-line front end: scenario validation, runs, connectivity profiles,
// and summary recomputation from trajectory CSVs.

#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "mscd/runner.hpp"
#include "mscd/scenario.hpp"

namespace {

int guarded(int (*fn)(const std::string&), const std::string& arg) {
    try {
        return fn(arg);
    } catch (const mscd::scenario::ScenarioParseError& err) {
        std::cerr << err.what() << "\n";
        return mscd::runner::kExitConfig;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return mscd::runner::kExitConfig;
    }
}

int do_run(const std::string& path) {
    const auto sc = mscd::scenario::parse_scenario(path);
    const auto outcome = mscd::runner::run_scenario(sc);
    std::cout << outcome.summary_json << "\n";
    return outcome.exit_code;
}

int do_check(const std::string& path) {
    const auto sc = mscd::scenario::parse_scenario(path);
    std::cout << "ok: " << mscd::scenario::mode_name(sc.mode) << " scenario, "
              << sc.species_masses.size() << " species\n";
    return mscd::runner::kExitOk;
}

int do_profile(const std::string& path) {
    const auto sc = mscd::scenario::parse_scenario(path);
    const auto outcome = mscd::runner::profile_scenario(sc);
    std::cout << outcome.summary_json << "\n";
    return outcome.exit_code;
}

int do_report(const std::string& path) {
    const auto outcome = mscd::runner::report_from_csv(path);
    std::cout << outcome.summary_json << "\n";
    return outcome.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-species collective dynamics toolkit"};
    app.require_subcommand(1);

    std::string run_path, check_path, profile_path, report_path;
    CLI::App* run = app.add_subcommand("run", "run a scenario and emit diagnostics");
    run->add_option("scenario", run_path, "scenario config file")->required();
    CLI::App* check = app.add_subcommand("check", "validate a scenario without running it");
    check->add_option("scenario", check_path, "scenario config file")->required();
    CLI::App* profile =
        app.add_subcommand("profile", "connectivity profile and tail certification");
    profile->add_option("scenario", profile_path, "scenario config file")->required();
    CLI::App* report = app.add_subcommand("report", "recompute a summary from a trajectory CSV");
    report->add_option("csv", report_path, "trajectory CSV")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return guarded(do_run, run_path);
    if (check->parsed()) return guarded(do_check, check_path);
    if (profile->parsed()) return guarded(do_profile, profile_path);
    if (report->parsed()) return guarded(do_report, report_path);
    return mscd::runner::kExitConfig;
}
