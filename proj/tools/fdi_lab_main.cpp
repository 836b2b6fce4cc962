// fdi-lab — scenario runner for the oscillator-bath fluctuation-dissipation lab
//
//   fdi-lab <study-name> --config <path> [--out <dir>] [--threads <n>] [--seed <k>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 property violation (a claimed inequality failed beyond tolerance; all data
// is still written).

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fdi/errors.hpp"
#include "fdi/scenario.hpp"

namespace {

int threads_from_env() {
    if (const char* env = std::getenv("FDI_LAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fdi-lab: exact propagators, fluctuation integrals, and "
                 "inequality scans for the oscillator-bath model"};
    app.footer("Registered studies: fd-scan, fd16-check, d-scan, moments, "
               "neg-dissipation-search, continuum-study, appendix2-demo, "
               "appendix1-check");

    std::string study;
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;

    app.add_option("study", study, "study name from the registered set")->required();
    app.add_option("--config", config_path, "path to the scenario JSON")->required();
    app.add_option("--out", out_dir, "output directory (default: out_dir from the "
                                     "config, else the working directory)");
    app.add_option("--threads", threads,
                   "worker threads (default: FDI_LAB_THREADS, else 1)");
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");

    CLI11_PARSE(app, argc, argv);
    seed_given = seed_opt->count() > 0;

    try {
        fdi::Scenario sc = fdi::load_scenario_file(config_path);
        if (sc.study != study) {
            std::cerr << "fdi-lab: config study \"" << sc.study
                      << "\" does not match requested study \"" << study << "\"\n";
            return 2;
        }
        fdi::RunOptions opt;
        opt.out_dir = out_dir;
        opt.threads = threads >= 1 ? threads : threads_from_env();
        if (seed_given) opt.seed_override = seed;
        const int code = fdi::run_study(sc, opt);
        if (code == 4)
            std::cerr << "fdi-lab: one or more claims violated; see the summary\n";
        return code;
    } catch (const fdi::ConfigError& e) {
        std::cerr << "fdi-lab: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const fdi::Error& e) {
        std::cerr << "fdi-lab: " << e.what() << '\n';
        return 3;
    }
}
