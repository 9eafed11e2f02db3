#pragma once

#include <string>

#include "mscd/scenario.hpp"

namespace mscd::runner {

// Exit code classes of the command-line front end.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBlowup = 3;
constexpr int kExitMonitor = 4;

struct Outcome {
    int exit_code = kExitOk;
    std::string summary_json; // serialized summary document
};

// Runs one scenario end to end: integrates (or classifies), writes the
// trajectory CSV / snapshot / summary artifacts, and evaluates every
// theorem-bound monitor. Monitor keys are stable strings like
// "thm4.1-energy-envelope"; each carries value, threshold and pass.
Outcome run_scenario(const scenario::Scenario& sc);

// Connectivity profile + tail certification only (the `profile` subcommand).
Outcome profile_scenario(const scenario::Scenario& sc);

// Recomputes summary statistics from a previously written trajectory CSV.
Outcome report_from_csv(const std::string& csv_path);

} // namespace mscd::runner
