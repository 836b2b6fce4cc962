// scenario.cpp — study implementations and the report pipeline

#include "fdi/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fdi/energy.hpp"
#include "fdi/errors.hpp"
#include "fdi/fluctuation.hpp"
#include "fdi/master.hpp"
#include "fdi/model_json.hpp"
#include "fdi/propagator.hpp"
#include "fdi/util.hpp"

namespace fdi {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and output plumbing

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Fields containing separators are quoted per the usual CSV convention.
std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
    std::ostringstream os;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(table.header[i]);
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << csv_escape(row[i]);
        }
        os << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open output file " + path.string());
    f << os.str();
}

struct Verdict {
    std::string claim;
    std::string status = "holds"; // holds | violated | not-applicable
    double worst_residual = 0.0;
    std::optional<double> at_t;
    std::optional<double> at_T;
};

// Tracks the extremum of a residual across cells and settles into a verdict.
struct ClaimTracker {
    std::string claim;
    double tolerance = 0.0; // holds while residual >= -tolerance (scaled externally)
    bool any = false;
    double worst = std::numeric_limits<double>::infinity();
    double worst_t = 0.0, worst_T = 0.0;
    bool violated = false;

    void observe(double residual, double tol, double t, double temp) {
        any = true;
        if (residual < worst) {
            worst = residual;
            worst_t = t;
            worst_T = temp;
        }
        if (residual < -tol) violated = true;
    }

    Verdict verdict() const {
        Verdict v;
        v.claim = claim;
        if (!any) {
            v.status = "not-applicable";
            return v;
        }
        v.status = violated ? "violated" : "holds";
        v.worst_residual = worst;
        v.at_t = worst_t;
        v.at_T = worst_T;
        return v;
    }
};

// An existence claim: holds once a strictly qualifying cell is seen; otherwise
// reports the closest approach.
struct ExistenceTracker {
    std::string claim;
    bool found = false;
    bool any = false;
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0, best_T = 0.0;

    void observe(double value, bool qualifies, double t, double temp) {
        any = true;
        if (qualifies) found = true;
        if (value < best) {
            best = value;
            best_t = t;
            best_T = temp;
        }
    }

    Verdict verdict() const {
        Verdict v;
        v.claim = claim;
        if (!any) {
            v.status = "not-applicable";
            return v;
        }
        v.status = found ? "holds" : "violated";
        v.worst_residual = best; // closest approach when not found
        v.at_t = best_t;
        v.at_T = best_T;
        return v;
    }
};

json verdicts_to_json(const std::vector<Verdict>& verdicts) {
    json arr = json::array();
    for (const auto& v : verdicts) {
        json jv;
        jv["claim"] = v.claim;
        jv["status"] = v.status;
        if (v.status == "not-applicable") {
            jv["worst_residual"] = nullptr;
            jv["at_t"] = nullptr;
            jv["at_T"] = nullptr;
        } else {
            jv["worst_residual"] = v.worst_residual;
            jv["at_t"] = v.at_t ? json(*v.at_t) : json(nullptr);
            jv["at_T"] = v.at_T ? json(*v.at_T) : json(nullptr);
        }
        arr.push_back(jv);
    }
    return arr;
}

// Deterministic parallel map: cells are claimed from an atomic queue but
// results land in slots indexed by cell, so the merge order is fixed.
void parallel_cells(std::size_t n_cells, int threads,
                    const std::function<void(std::size_t)>& work) {
    const int n_threads = std::max(1, threads);
    if (n_threads == 1 || n_cells <= 1) {
        for (std::size_t i = 0; i < n_cells; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_cells) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> time_grid(const Scenario& sc) {
    std::vector<double> out(static_cast<std::size_t>(sc.n_steps));
    for (int i = 0; i < sc.n_steps; ++i)
        out[static_cast<std::size_t>(i)] =
            sc.t_max * static_cast<double>(i) / static_cast<double>(sc.n_steps - 1);
    return out;
}

// ---------------------------------------------------------------------------
// Scenario parsing

GaussianMomentState parse_preset(const std::string& text, const OscillatorBathModel& m) {
    auto args_of = [&](const std::string& name) -> std::vector<double> {
        const auto open = text.find('(');
        if (open == std::string::npos || text.back() != ')')
            throw ConfigError("initial state \"" + text + "\": expected " + name + "(...)");
        std::vector<double> args;
        std::string body = text.substr(open + 1, text.size() - open - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                args.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("initial state \"" + text + "\": bad number \"" + item + "\"");
            }
        }
        return args;
    };

    if (text == "ground") return ground_state(m);
    if (text.rfind("coherent", 0) == 0) {
        const auto a = args_of("coherent");
        if (a.size() != 2) throw ConfigError("coherent(q,p) takes two arguments");
        return coherent_state(m, a[0], a[1]);
    }
    if (text.rfind("squeezed", 0) == 0) {
        const auto a = args_of("squeezed");
        if (a.size() != 2) throw ConfigError("squeezed(r,phi) takes two arguments");
        return squeezed_state(m, a[0], a[1]);
    }
    if (text.rfind("thermal", 0) == 0) {
        const auto a = args_of("thermal");
        if (a.size() != 1) throw ConfigError("thermal(nbar) takes one argument");
        return thermal_state(m, a[0]);
    }
    throw ConfigError("unknown initial state preset \"" + text + "\"");
}

InitialStateSpec parse_initial_state(const json& j, const OscillatorBathModel& m) {
    InitialStateSpec spec;
    if (j.is_string()) {
        spec.label = j.get<std::string>();
        spec.state = parse_preset(spec.label, m);
    } else if (j.is_array()) {
        if (j.size() != 3 && j.size() != 5)
            throw ConfigError("raw initial state must be [qq, pp, qp_sym] or "
                              "[qq, pp, qp_sym, mean_q, mean_p]");
        for (const auto& v : j)
            if (!v.is_number()) throw ConfigError("raw initial state entries must be numbers");
        spec.state.qq = j[0].get<double>();
        spec.state.pp = j[1].get<double>();
        spec.state.qp_sym = j[2].get<double>();
        if (j.size() == 5) {
            spec.state.mean_q = j[3].get<double>();
            spec.state.mean_p = j[4].get<double>();
        }
        spec.label = j.dump();
    } else {
        throw ConfigError("initial state must be a preset string or a moment tuple");
    }
    try {
        require_physical(spec.state, m.hbar);
    } catch (const UnphysicalInitialState& e) {
        throw ConfigError("initial state " + spec.label + ": " + e.what());
    }
    return spec;
}

} // namespace

const std::vector<std::string>& registered_studies() {
    static const std::vector<std::string> studies = {
        "fd-scan",      "fd16-check",       "d-scan",
        "moments",      "neg-dissipation-search", "continuum-study",
        "appendix2-demo", "appendix1-check"};
    return studies;
}

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    detail::require_keys(j,
                         {"model", "temperatures", "energy_function", "t_max", "n_steps",
                          "initial_states", "study", "seed", "out_dir", "trials", "split",
                          "w3_sign", "w4_rate", "dx", "notes"},
                         "scenario");
    if (j.contains("notes") && !j.at("notes").is_string())
        throw ConfigError("scenario: notes must be a string");

    Scenario sc;
    if (!j.contains("model")) throw ConfigError("scenario: missing \"model\"");
    const auto parsed = parse_model_document(j.at("model"));
    sc.model = parsed.model;
    sc.recipe = parsed.recipe;

    if (!j.contains("study") || !j.at("study").is_string())
        throw ConfigError("scenario: missing \"study\"");
    sc.study = j.at("study").get<std::string>();
    const auto& studies = registered_studies();
    if (std::find(studies.begin(), studies.end(), sc.study) == studies.end())
        throw ConfigError("scenario: unknown study \"" + sc.study + "\"");

    if (j.contains("temperatures")) {
        sc.temperatures = detail::number_list_at(j, "temperatures", "scenario");
        if (sc.temperatures.empty())
            throw ConfigError("scenario: temperatures must be non-empty");
        for (double v : sc.temperatures)
            if (v < 0.0) throw ConfigError("scenario: temperatures must be >= 0");
    }
    sc.energy_function = j.value("energy_function", std::string("thermal"));
    energy_function_by_name(sc.energy_function, sc.model.hbar, sc.model.boltzmann);

    sc.t_max = detail::number_or(j, "t_max", sc.t_max, "scenario");
    if (!(sc.t_max > 0.0)) throw ConfigError("scenario: t_max must be > 0");
    const double ns = detail::number_or(j, "n_steps", sc.n_steps, "scenario");
    sc.n_steps = static_cast<int>(ns);
    if (static_cast<double>(sc.n_steps) != ns || sc.n_steps < 2)
        throw ConfigError("scenario: n_steps must be an integer >= 2");

    if (j.contains("initial_states")) {
        if (!j.at("initial_states").is_array() || j.at("initial_states").empty())
            throw ConfigError("scenario: initial_states must be a non-empty array");
        for (const auto& e : j.at("initial_states"))
            sc.initial_states.push_back(parse_initial_state(e, sc.model));
    } else {
        sc.initial_states.push_back({"ground", ground_state(sc.model)});
    }

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned())
            throw ConfigError("scenario: seed must be an integer");
        sc.seed = j.at("seed").get<std::uint64_t>();
    }
    sc.out_dir = j.value("out_dir", std::string());

    const double trials = detail::number_or(j, "trials", sc.trials, "scenario");
    sc.trials = static_cast<int>(trials);
    if (static_cast<double>(sc.trials) != trials || sc.trials < 1)
        throw ConfigError("scenario: trials must be a positive integer");
    sc.split = detail::number_or(j, "split", sc.split, "scenario");
    if (!(sc.split > 0.0)) throw ConfigError("scenario: split must be > 0");
    const double sgn = detail::number_or(j, "w3_sign", sc.w3_sign, "scenario");
    sc.w3_sign = static_cast<int>(sgn);
    if (sc.w3_sign != 1 && sc.w3_sign != -1)
        throw ConfigError("scenario: w3_sign must be +1 or -1");
    sc.w4_rate = detail::number_or(j, "w4_rate", sc.w4_rate, "scenario");
    if (!(sc.w4_rate > 0.0)) throw ConfigError("scenario: w4_rate must be > 0");
    sc.dx = detail::number_or(j, "dx", sc.dx, "scenario");
    if (!(sc.dx > 0.0)) throw ConfigError("scenario: dx must be > 0");

    return sc;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read configuration file " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return scenario_from_json_text(os.str());
}

// ---------------------------------------------------------------------------
// Studies

namespace {

struct StudyOutput {
    CsvTable table;
    std::vector<Verdict> verdicts;
    json extra; // study-specific summary fields
};

StudyOutput run_fd_scan(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto efun =
        energy_function_by_name(sc.energy_function, sc.model.hbar, sc.model.boltzmann);
    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);

    const std::size_t nt = grid.size();
    const std::size_t cells = sc.temperatures.size() * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "T",   "t",        "A",
                        "Adot",       "R2",  "X",        "Xdot",
                        "Y",          "fd15_lhs", "fd17_residual", "ref2_residual"};
    out.table.rows.resize(cells);

    struct Cell {
        double fd15, fd15_scale, fd17, fd17_scale;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const double temp = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        const auto pr = propagator_at(d, t);
        const auto fl = xy_quantities(d, sc.model, temp, t);
        const auto fb = fd_inequality_terms(d, sc.model, efun, temp, t);
        const double fd17 = fd_thermal_residual(d, sc.model, temp, t);
        const double ref2 = fd_quartic_comparison_residual(d, sc.model, temp, t);
        out.table.rows[i] = {hash,          g17(temp),     g17(t),    g17(pr.A),
                             g17(pr.A_dot), g17(pr.R2),    g17(fl.X), g17(fl.X_dot),
                             g17(fl.Y),     g17(fb.lhs()), g17(fd17), g17(ref2)};
        results[i] = {fb.lhs(),
                      scale_of({fb.sum_f2 * fb.sum_df2, 0.25 * fb.dt_sum_f2 * fb.dt_sum_f2}),
                      fd17,
                      scale_of({fl.X * fl.Y, 0.25 * fl.X_dot * fl.X_dot})};
    });

    ClaimTracker fd15{"fd15-nonnegative"};
    ClaimTracker fd17{"fd17-nonnegative"};
    for (std::size_t i = 0; i < cells; ++i) {
        const double temp = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        fd15.observe(results[i].fd15, 1e-10 * results[i].fd15_scale, t, temp);
        fd17.observe(results[i].fd17, 1e-10 * results[i].fd17_scale, t, temp);
    }
    out.verdicts = {fd15.verdict(), fd17.verdict()};
    return out;
}

StudyOutput run_fd16_check(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto efun =
        energy_function_by_name(sc.energy_function, sc.model.hbar, sc.model.boltzmann);
    for (double x : sc.temperatures)
        if (x < sc.dx)
            throw ConfigError("fd16-check: every x in temperatures must be >= dx so the "
                              "centered difference stays in the domain");

    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);
    const std::size_t nt = grid.size();
    const std::size_t cells = sc.temperatures.size() * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "x",  "t", "dx", "numeric_derivative",
                        "closed_form", "abs_diff", "tolerance"};
    out.table.rows.resize(cells);
    struct Cell {
        double diff, tol, closed;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const double x = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        const auto chk = fd_x_monotonicity_check(d, sc.model, efun, x, t, sc.dx);
        const double diff = std::abs(chk.numeric_derivative - chk.closed_form);
        const double tol = std::max(1e-7, 1e-5 * std::abs(chk.closed_form));
        out.table.rows[i] = {hash,
                             g17(x),
                             g17(t),
                             g17(sc.dx),
                             g17(chk.numeric_derivative),
                             g17(chk.closed_form),
                             g17(diff),
                             g17(tol)};
        results[i] = {diff, tol, chk.closed_form};
    });

    ClaimTracker match{"fd16-derivative-match"};
    ClaimTracker nonneg{"fd16-closed-form-nonnegative"};
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        match.observe(results[i].tol - results[i].diff, 0.0, t, x);
        nonneg.observe(results[i].closed, 0.0, t, x);
    }
    out.verdicts = {match.verdict(), nonneg.verdict()};
    return out;
}

StudyOutput run_d_scan(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);
    const std::size_t nt = grid.size();
    const std::size_t n_temps = sc.temperatures.size();
    const std::size_t n_states = sc.initial_states.size();
    const std::size_t cells = n_states * n_temps * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "state", "T", "t", "D", "d_state", "d_dev", "R2"};
    out.table.rows.resize(cells);
    struct Cell {
        double dvalue = 0.0, scale = 1.0, dev = 0.0;
        bool defined = false;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const std::size_t si = i / (n_temps * nt);
        const double temp = sc.temperatures[(i / nt) % n_temps];
        const double t = grid[i % nt];
        const auto& st = sc.initial_states[si];
        const double dval = decoherence_functional(d, sc.model, temp, t);
        const double r2 = propagator_at(d, t).R2;
        const auto fl = xy_quantities(d, sc.model, temp, t);
        const double sc_d = scale_of({fl.X * fl.Y, 0.25 * fl.X_dot * fl.X_dot});
        Cell cell{dval, sc_d, 0.0, false};
        std::string d_state = "nan", d_dev = "nan";
        try {
            const auto dq = delta_quantities(d, sc.model, temp, st.state, t);
            cell.dev = std::abs(dq.d_value - dval);
            cell.defined = true;
            d_state = g17(dq.d_value);
            d_dev = g17(cell.dev);
        } catch (const NonPositiveR2&) {
            // delta route undefined here; the state-free column remains valid
        }
        out.table.rows[i] = {hash, st.label, g17(temp), g17(t), g17(dval),
                             d_state, d_dev, g17(r2)};
        results[i] = cell;
    });

    ClaimTracker nonneg{"d-nonnegative"};
    ClaimTracker zero_at_origin{"d-zero-at-origin"};
    ClaimTracker state_indep{"d-state-independent"};
    for (std::size_t i = 0; i < cells; ++i) {
        const double temp = sc.temperatures[(i / nt) % n_temps];
        const double t = grid[i % nt];
        nonneg.observe(results[i].dvalue, 1e-10 * results[i].scale, t, temp);
        if (t == 0.0) zero_at_origin.observe(-std::abs(results[i].dvalue), 0.0, t, temp);
        if (results[i].defined)
            state_indep.observe(1e-9 * results[i].scale - results[i].dev, 0.0, t, temp);
    }

    // Pointwise monotonicity in temperature, checked on the sorted list.
    ClaimTracker monotone{"d-monotone-in-temperature"};
    std::vector<std::size_t> order(n_temps);
    for (std::size_t k = 0; k < n_temps; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sc.temperatures[a] < sc.temperatures[b];
    });
    for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t k = 1; k < n_temps; ++k) {
            const double lo = results[order[k - 1] * nt + j].dvalue;
            const double hi = results[order[k] * nt + j].dvalue;
            const double scl = scale_of({lo, hi});
            monotone.observe(hi - lo, 1e-10 * scl, grid[j], sc.temperatures[order[k]]);
        }
    }

    out.verdicts = {nonneg.verdict(), zero_at_origin.verdict(), state_indep.verdict(),
                    monotone.verdict()};
    return out;
}

StudyOutput run_moments(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);
    const std::size_t nt = grid.size();
    const std::size_t n_temps = sc.temperatures.size();
    const std::size_t n_states = sc.initial_states.size();
    const std::size_t cells = n_states * n_temps * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "state", "T",         "t",        "qq",
                        "pp",         "qp_sym", "qq_master", "pp_master", "qp_master",
                        "rel_diff_max", "rs_residual"};
    out.table.rows.resize(cells);
    struct Cell {
        double rel_diff = 0.0, rs = 0.0;
        bool routed = false;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const std::size_t si = i / (n_temps * nt);
        const double temp = sc.temperatures[(i / nt) % n_temps];
        const double t = grid[i % nt];
        const auto& st = sc.initial_states[si];

        const auto direct = evolve_moments(d, sc.model, temp, st.state, t);
        Cell cell;
        cell.rs = robertson_schrodinger_residual(direct, sc.model.hbar);
        std::string mq = "nan", mp = "nan", mqp = "nan", rel = "nan";
        try {
            const auto rev = reference_moments(d, sc.model, st.state, t);
            const auto w = w_from_ullersma(d, sc.model, temp, t);
            const auto routed = master_moments(w, rev, sc.model.hbar);
            const double scl = scale_of({direct.qq, direct.pp, direct.qp_sym});
            cell.rel_diff = std::max({std::abs(routed.qq - direct.qq),
                                      std::abs(routed.pp - direct.pp),
                                      std::abs(routed.qp_sym - direct.qp_sym)}) /
                            scl;
            cell.routed = true;
            mq = g17(routed.qq);
            mp = g17(routed.pp);
            mqp = g17(routed.qp_sym);
            rel = g17(cell.rel_diff);
        } catch (const NonPositiveR2&) {
        }
        out.table.rows[i] = {hash,      st.label,       g17(temp), g17(t),
                             g17(direct.qq), g17(direct.pp), g17(direct.qp_sym),
                             mq,        mp,             mqp,       rel,
                             g17(cell.rs)};
        results[i] = cell;
    });

    ClaimTracker match{"cross-route-moments-match"};
    ClaimTracker rs{"robertson-schrodinger-nonnegative"};
    const double h2 = sc.model.hbar * sc.model.hbar;
    for (std::size_t i = 0; i < cells; ++i) {
        const double temp = sc.temperatures[(i / nt) % n_temps];
        const double t = grid[i % nt];
        if (results[i].routed) match.observe(1e-8 - results[i].rel_diff, 0.0, t, temp);
        rs.observe(results[i].rs, 1e-10 * h2, t, temp);
    }
    out.verdicts = {match.verdict(), rs.verdict()};
    return out;
}

StudyOutput run_neg_dissipation_search(const Scenario& sc, int threads) {
    const std::size_t trials = static_cast<std::size_t>(sc.trials);

    struct Candidate {
        std::size_t trial = 0;
        OscillatorBathModel model;
        double t_star = 0.0;
        double min_value = std::numeric_limits<double>::infinity();
    };
    std::vector<Candidate> results(trials);

    parallel_cells(trials, threads, [&](std::size_t i) {
        // Per-trial generator keyed to (seed, trial) so results are independent
        // of the thread schedule.
        std::mt19937_64 rng(sc.seed + 0x9e3779b97f4a7c15ull * (i + 1));
        std::uniform_real_distribution<double> omega0_dist(0.5, 2.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<int> n_dist(1, 3);

        OscillatorBathModel m;
        m.omega0 = omega0_dist(rng);
        m.m0 = sc.model.m0;
        m.hbar = sc.model.hbar;
        m.boltzmann = sc.model.boltzmann;
        const int n = n_dist(rng);
        const double margin = 0.5 + 0.4999 * unit(rng);
        std::vector<double> g(static_cast<std::size_t>(n));
        double gsum = 0.0;
        for (auto& v : g) {
            v = unit(rng) + 1e-3;
            gsum += v;
        }
        for (int k = 0; k < n; ++k) {
            // log-uniform frequencies across two decades around omega0
            const double w = m.omega0 * std::pow(10.0, -1.0 + 2.0 * unit(rng));
            const double frac =
                margin * m.omega0 * m.omega0 * g[static_cast<std::size_t>(k)] / gsum;
            m.bath_omegas.push_back(w);
            m.bath_epsilons.push_back(w * std::sqrt(frac));
        }

        const auto scan = min_dissipation_scan(m, sc.t_max, sc.n_steps);
        results[i] = {i, std::move(m), scan.t_star, scan.min_one_minus_r2};
    });

    std::vector<std::size_t> order(trials);
    for (std::size_t i = 0; i < trials; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (results[a].min_value != results[b].min_value)
            return results[a].min_value < results[b].min_value;
        return a < b;
    });
    const std::size_t keep = std::min<std::size_t>(10, trials);

    StudyOutput out;
    out.table.header = {"rank",   "trial",  "model_hash", "n_modes", "omega0",
                        "omega_1", "omega_2", "omega_3",   "eps_1",   "eps_2",
                        "eps_3",  "t_star", "min_one_minus_r2"};
    for (std::size_t r = 0; r < keep; ++r) {
        const auto& c = results[order[r]];
        std::vector<std::string> row = {std::to_string(r + 1), std::to_string(c.trial),
                                        model_hash(c.model),
                                        std::to_string(c.model.mode_count()),
                                        g17(c.model.omega0)};
        for (std::size_t k = 0; k < 3; ++k)
            row.push_back(k < c.model.mode_count() ? g17(c.model.bath_omegas[k]) : "");
        for (std::size_t k = 0; k < 3; ++k)
            row.push_back(k < c.model.mode_count() ? g17(c.model.bath_epsilons[k]) : "");
        row.push_back(g17(c.t_star));
        row.push_back(g17(c.min_value));
        out.table.rows.push_back(std::move(row));
    }

    ExistenceTracker found{"negative-dissipation-found"};
    for (const auto& c : results)
        found.observe(c.min_value, c.min_value < 0.0, c.t_star, 0.0);
    out.verdicts = {found.verdict()};

    const auto& best = results[order[0]];
    json best_json;
    best_json["omega0"] = best.model.omega0;
    best_json["omegas"] = best.model.bath_omegas;
    best_json["epsilons"] = best.model.bath_epsilons;
    best_json["t_star"] = best.t_star;
    best_json["min_one_minus_r2"] = best.min_value;
    best_json["trial"] = best.trial;
    out.extra["search"] = {{"trials", sc.trials}, {"best", best_json}};
    return out;
}

StudyOutput run_continuum_study(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);
    const std::vector<std::string> variants = {"thermal", "no_zero_point", "classical"};
    const std::size_t nt = grid.size();
    const std::size_t n_temps = sc.temperatures.size();
    const std::size_t cells = variants.size() * n_temps * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "energy_function", "T", "t", "d_generalized"};
    out.table.rows.resize(cells);
    struct Cell {
        double value = 0.0, scale = 1.0;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const auto& variant = variants[i / (n_temps * nt)];
        const double temp = sc.temperatures[(i / nt) % n_temps];
        const double t = grid[i % nt];
        const auto efun =
            energy_function_by_name(variant, sc.model.hbar, sc.model.boltzmann);
        const auto fb = fd_inequality_terms(d, sc.model, efun, temp, t);
        out.table.rows[i] = {hash, variant, g17(temp), g17(t), g17(fb.lhs())};
        results[i] = {fb.lhs(), scale_of({fb.sum_f2 * fb.sum_df2,
                                          0.25 * fb.dt_sum_f2 * fb.dt_sum_f2})};
    });

    ClaimTracker thermal_nonneg{"thermal-d-nonnegative"};
    ExistenceTracker nzp_negative{"no-zero-point-d-negative"};
    ExistenceTracker classical_negative{"classical-d-negative"};
    json first_negative = json::object();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        for (std::size_t c = 0; c < n_temps; ++c) {
            const double temp = sc.temperatures[c];
            json first = nullptr;
            for (std::size_t j = 0; j < nt; ++j) {
                const auto& cell = results[(v * n_temps + c) * nt + j];
                const double tol = 1e-10 * cell.scale;
                if (variants[v] == "thermal") {
                    thermal_nonneg.observe(cell.value, tol, grid[j], temp);
                } else {
                    const bool negative = cell.value < -tol;
                    if (negative && first.is_null()) first = grid[j];
                    if (variants[v] == "no_zero_point")
                        nzp_negative.observe(cell.value, negative, grid[j], temp);
                    else
                        classical_negative.observe(cell.value, negative, grid[j], temp);
                }
            }
            if (variants[v] != "thermal")
                first_negative[variants[v]][g17(temp)] = first;
        }
    }
    out.verdicts = {thermal_nonneg.verdict(), nzp_negative.verdict(),
                    classical_negative.verdict()};
    out.extra["first_negative_t"] = first_negative;
    if (sc.recipe)
        out.extra["recipe"] = {{"gamma", sc.recipe->gamma},
                               {"alpha", sc.recipe->alpha},
                               {"omega_max", sc.recipe->omega_max},
                               {"n_modes", sc.recipe->n_modes},
                               {"alpha_ge_3gamma", sc.recipe->alpha_ge_3gamma()}};
    return out;
}

StudyOutput run_appendix2_demo(const Scenario& sc, int threads) {
    const double hbar = sc.model.hbar;
    const auto grid = time_grid(sc);
    const double rate = sc.w4_rate;
    const auto ws = counterexample_w_states([rate](double t) { return rate * t; },
                                            sc.split, sc.w3_sign, grid, hbar);
    const double b11 = 0.5 * sc.model.omega0 * sc.model.omega0;
    const double b22 = 0.5;

    const auto hash = model_hash(sc.model);
    StudyOutput out;
    out.table.header = {"model_hash", "t",  "w1", "w2", "w3", "w4",
                        "lindblad_residual", "bracket_residual",
                        "min_uncertainty_residual"};
    out.table.rows.resize(grid.size());
    struct Cell {
        double lindblad = 0.0, bracket = 0.0, bracket_scale = 1.0, min_unc = 0.0;
    };
    std::vector<Cell> results(grid.size());

    parallel_cells(grid.size(), threads, [&](std::size_t i) {
        const auto& w = ws[i];
        Cell cell;
        cell.lindblad = lindblad_condition_residual(w, hbar);
        const double g = std::expm1(w.w4) / (4.0 * hbar);
        cell.bracket =
            2.0 * hbar * hbar * (w.w1 * w.w2 - g * g) - std::expm1(w.w4) / 4.0;
        cell.bracket_scale = scale_of({2.0 * hbar * hbar * w.w1 * w.w2,
                                       std::expm1(w.w4) / 4.0});
        cell.min_unc = std::numeric_limits<double>::infinity();
        for (const auto& st : sc.initial_states) {
            const auto rev = constant_hs_reversible_moments(b11, 0.0, b22, st.state, w.t);
            const auto ev = master_moments(w, rev, hbar);
            cell.min_unc =
                std::min(cell.min_unc, ev.qq * ev.pp - 0.25 * hbar * hbar);
        }
        out.table.rows[i] = {hash,      g17(w.t),  g17(w.w1), g17(w.w2),
                             g17(w.w3), g17(w.w4), g17(cell.lindblad),
                             g17(cell.bracket), g17(cell.min_unc)};
        results[i] = cell;
    });

    ClaimTracker lindblad{"lindblad-residual-negative"};
    ClaimTracker survives{"uncertainty-product-survives"};
    ClaimTracker bracket{"bracket-coefficient-vanishes"};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        if (t > 0.0) lindblad.observe(-results[i].lindblad, 0.0, t, 0.0);
        survives.observe(results[i].min_unc, 1e-10 * hbar * hbar, t, 0.0);
        bracket.observe(-std::abs(results[i].bracket),
                        1e-12 * results[i].bracket_scale, t, 0.0);
    }
    out.verdicts = {lindblad.verdict(), survives.verdict(), bracket.verdict()};
    return out;
}

StudyOutput run_appendix1_check(const Scenario& sc, int threads) {
    const auto d = decompose(sc.model);
    const auto grid = time_grid(sc);
    const auto hash = model_hash(sc.model);
    const std::size_t nt = grid.size();
    const std::size_t cells = sc.temperatures.size() * nt;

    StudyOutput out;
    out.table.header = {"model_hash", "T", "t", "moment_bound_residual", "dissipation_bound_residual", "status"};
    out.table.rows.resize(cells);
    struct Cell {
        double moment_res = 0.0, diss_res = 0.0, scale = 1.0;
        bool defined = false;
    };
    std::vector<Cell> results(cells);

    parallel_cells(cells, threads, [&](std::size_t i) {
        const double temp = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        Cell cell;
        std::string moment_str = "nan", diss_str = "nan", status = "precondition-failed";
        try {
            const auto rep = uncertainty_route_check(d, sc.model, temp, t);
            const auto fl = xy_quantities(d, sc.model, temp, t);
            cell = {rep.special_moment_residual, rep.dissipation_bound_residual,
                    scale_of({fl.X * fl.Y, sc.model.hbar * sc.model.hbar}), true};
            moment_str = g17(cell.moment_res);
            diss_str = g17(cell.diss_res);
            status = "ok";
        } catch (const PreconditionFailure&) {
        }
        out.table.rows[i] = {hash, g17(temp), g17(t), moment_str, diss_str, status};
        results[i] = cell;
    });

    ClaimTracker moment_bound{"special-moment-bound-nonnegative"};
    ClaimTracker diss_bound{"dissipation-bound-nonnegative"};
    for (std::size_t i = 0; i < cells; ++i) {
        if (!results[i].defined) continue;
        const double temp = sc.temperatures[i / nt];
        const double t = grid[i % nt];
        moment_bound.observe(results[i].moment_res, 1e-10 * results[i].scale, t, temp);
        diss_bound.observe(results[i].diss_res, 1e-10 * results[i].scale, t, temp);
    }
    out.verdicts = {moment_bound.verdict(), diss_bound.verdict()};
    return out;
}

json scenario_echo(const Scenario& sc, const RunOptions& opt, std::uint64_t seed) {
    json j;
    j["study"] = sc.study;
    j["model_hash"] = model_hash(sc.model);
    j["n_bath_modes"] = sc.model.mode_count();
    j["temperatures"] = sc.temperatures;
    j["energy_function"] = sc.energy_function;
    j["t_max"] = sc.t_max;
    j["n_steps"] = sc.n_steps;
    j["seed"] = seed;
    j["threads"] = opt.threads;
    json states = json::array();
    for (const auto& st : sc.initial_states) states.push_back(st.label);
    j["initial_states"] = states;
    return j;
}

} // namespace

int run_study(const Scenario& scenario, const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();

    Scenario sc = scenario;
    if (options.seed_override) sc.seed = *options.seed_override;
    std::string out_dir = !options.out_dir.empty() ? options.out_dir
                          : !sc.out_dir.empty()    ? sc.out_dir
                                                   : std::string(".");

    StudyOutput result;
    bool numerical_failure = false;
    std::string failure_message;
    try {
        if (sc.study == "fd-scan") result = run_fd_scan(sc, options.threads);
        else if (sc.study == "fd16-check") result = run_fd16_check(sc, options.threads);
        else if (sc.study == "d-scan") result = run_d_scan(sc, options.threads);
        else if (sc.study == "moments") result = run_moments(sc, options.threads);
        else if (sc.study == "neg-dissipation-search")
            result = run_neg_dissipation_search(sc, options.threads);
        else if (sc.study == "continuum-study")
            result = run_continuum_study(sc, options.threads);
        else if (sc.study == "appendix2-demo")
            result = run_appendix2_demo(sc, options.threads);
        else if (sc.study == "appendix1-check")
            result = run_appendix1_check(sc, options.threads);
        else
            throw ConfigError("unknown study \"" + sc.study + "\"");
    } catch (const ConfigError&) {
        throw; // caller maps configuration problems to exit code 2
    } catch (const Error& e) {
        numerical_failure = true;
        failure_message = e.what();
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    const auto elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json summary;
    summary["scenario"] = scenario_echo(sc, options, sc.seed);
    summary["verdicts"] = verdicts_to_json(result.verdicts);
    summary["timing"] = {{"seconds", elapsed}};
    if (!result.extra.is_null())
        for (auto it = result.extra.begin(); it != result.extra.end(); ++it)
            summary[it.key()] = it.value();
    if (numerical_failure) summary["error"] = failure_message;

    const auto csv_path = std::filesystem::path(out_dir) / (sc.study + ".csv");
    const auto summary_path =
        std::filesystem::path(out_dir) / (sc.study + "-summary.json");
    if (!numerical_failure) write_csv(result.table, csv_path);
    {
        std::ofstream f(summary_path, std::ios::binary);
        if (!f) throw Error("cannot open output file " + summary_path.string());
        f << summary.dump(2) << '\n';
    }

    if (numerical_failure) return 3;
    for (const auto& v : result.verdicts)
        if (v.status == "violated") return 4;
    return 0;
}

} // namespace fdi
