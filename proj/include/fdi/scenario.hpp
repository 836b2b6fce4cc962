// scenario.hpp — configuration loading and the study runner
//
// A scenario is a JSON document naming a model (explicit bath or recipe), the
// sweep parameters, and one of the registered studies. Running a study writes
// <out>/<study>.csv and <out>/<study>-summary.json. CSV output is
// byte-deterministic for a fixed configuration and seed regardless of thread
// count; the summary carries one verdict per claim the study checks.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdi/model.hpp"
#include "fdi/moments.hpp"

namespace fdi {

struct InitialStateSpec {
    std::string label;
    GaussianMomentState state;
};

struct Scenario {
    OscillatorBathModel model;
    std::optional<DrudeBathRecipe> recipe;
    std::vector<double> temperatures{1.0};
    std::string energy_function = "thermal";
    double t_max = 10.0;
    int n_steps = 100;
    std::vector<InitialStateSpec> initial_states;
    std::string study;
    std::uint64_t seed = 0;
    std::string out_dir; // optional; --out overrides

    // Study-specific knobs (ignored by studies that do not use them).
    int trials = 200;     // neg-dissipation-search: number of sampled models
    double split = 1.0;   // appendix2-demo: w1/w2 partition ratio
    int w3_sign = 1;      // appendix2-demo: sign of w3
    double w4_rate = 1.0; // appendix2-demo: w4(t) = w4_rate * t
    double dx = 1e-4;     // fd16-check: step of the centered x-difference
};

const std::vector<std::string>& registered_studies();

Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);

struct RunOptions {
    std::string out_dir = ".";
    int threads = 1;
    std::optional<std::uint64_t> seed_override;
};

// Exit code contract: 0 success, 2 configuration error, 3 numerical failure,
// 4 property violation. A violated claim is a reportable finding: the run
// still writes every row and the full summary before returning 4.
int run_study(const Scenario& scenario, const RunOptions& options);

} // namespace fdi
