// nhdicke: deterministic command-line front end over the model library.
// One subcommand per produced quantity; flat key=value config files with
// command-line override; CSV (with a '#' header echoing the resolved
// configuration) or JSON artifacts; inclusive start:stop:steps grids printed
// with 17 significant digits so every run is byte-identical.
//
// Exit codes: 0 success, 2 configuration error (with usage), 3 numerical
// failure inside a computation.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nhdicke/chain.hpp"
#include "nhdicke/dynamics.hpp"
#include "nhdicke/linalg.hpp"
#include "nhdicke/nonlinear.hpp"
#include "nhdicke/quantum.hpp"
#include "nhdicke/semiclassical.hpp"

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// formatting and small utilities

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Inclusive linear grid "start:stop:steps" with steps >= 2.
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() != 3) {
        throw std::invalid_argument("grid spec must be start:stop:steps, got '" + spec + "'");
    }
    double start = 0.0, stop = 0.0;
    long steps = 0;
    try {
        std::size_t used = 0;
        start = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
        stop = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
        steps = std::stol(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
    } catch (const std::exception&) {
        throw std::invalid_argument("grid spec must be start:stop:steps with numeric fields, got '" +
                                    spec + "'");
    }
    if (steps < 2) {
        throw std::invalid_argument("grid spec needs steps >= 2, got '" + spec + "'");
    }
    std::vector<double> g(static_cast<std::size_t>(steps));
    for (long i = 0; i < steps; ++i) {
        g[static_cast<std::size_t>(i)] = start + (stop - start) * double(i) / double(steps - 1);
    }
    return g;
}

// Geometric grid for perturbation strengths (log-spaced between the bounds).
std::vector<double> parse_log_grid(const std::string& spec) {
    std::vector<double> lin = parse_grid(spec);
    const double a = lin.front(), b = lin.back();
    if (a <= 0.0 || b <= 0.0) {
        throw std::invalid_argument("log grid bounds must be positive, got '" + spec + "'");
    }
    const std::size_t n = lin.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = a * std::pow(b / a, double(i) / double(n - 1));
    }
    return g;
}

// Run f(0..n-1) on a pool of `jobs` workers; caller stores results by index,
// so output order never depends on completion order.
template <typename F>
void parallel_map(int n, int jobs, F&& f) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// artifact writing

// One value of a table cell: number, text, or empty.
struct Cell {
    enum class Kind { number, text, empty } kind = Kind::empty;
    double num = 0.0;
    std::string text;

    Cell() = default;
    Cell(double v) : kind(Kind::number), num(v) {}
    Cell(const std::string& s) : kind(Kind::text), text(s) {}
    Cell(const char* s) : kind(Kind::text), text(s) {}
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    // extra '#' header lines beyond the config echo (derived scalars)
    std::vector<std::pair<std::string, std::string>> notes;
};

struct Artifact {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;  // resolved, echo order
    Table table;
    std::optional<json> custom;  // JSON-only payload replacing the table (encircle)
};

std::string resolve_output_path(const std::string& out_opt, const std::string& command,
                                const std::string& format) {
    if (!out_opt.empty()) return out_opt;
    const char* dir = std::getenv("NHDICKE_OUTPUT_DIR");
    std::string base = (dir && *dir) ? std::string(dir) : std::string(".");
    return base + "/" + command + (format == "json" ? ".json" : ".csv");
}

void write_artifact(const Artifact& art, const std::string& path, const std::string& format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::invalid_argument("cannot open output file '" + path + "'");
    }
    if (format == "csv") {
        out << "# nhdicke " << art.command << "\n";
        for (const auto& [k, v] : art.config) out << "# " << k << "=" << v << "\n";
        for (const auto& [k, v] : art.table.notes) out << "# " << k << "=" << v << "\n";
        for (std::size_t c = 0; c < art.table.columns.size(); ++c) {
            out << (c ? "," : "") << art.table.columns[c];
        }
        out << "\n";
        for (const auto& row : art.table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out << ",";
                switch (row[c].kind) {
                    case Cell::Kind::number: out << fmt17(row[c].num); break;
                    case Cell::Kind::text: out << row[c].text; break;
                    case Cell::Kind::empty: break;
                }
            }
            out << "\n";
        }
    } else {
        json j;
        j["command"] = art.command;
        json cfg = json::object();
        for (const auto& [k, v] : art.config) cfg[k] = v;
        j["config"] = cfg;
        if (art.custom) {
            for (auto it = art.custom->begin(); it != art.custom->end(); ++it) {
                j[it.key()] = it.value();
            }
        } else {
            for (const auto& [k, v] : art.table.notes) j["notes"][k] = v;
            j["columns"] = art.table.columns;
            json rows = json::array();
            for (const auto& row : art.table.rows) {
                json r = json::array();
                for (const auto& cell : row) {
                    switch (cell.kind) {
                        case Cell::Kind::number: r.push_back(cell.num); break;
                        case Cell::Kind::text: r.push_back(cell.text); break;
                        case Cell::Kind::empty: r.push_back(nullptr); break;
                    }
                }
                rows.push_back(std::move(r));
            }
            j["rows"] = std::move(rows);
        }
        out << j.dump(2) << "\n";
    }
    if (!out) {
        throw std::runtime_error("failed while writing '" + path + "'");
    }
}

// ---------------------------------------------------------------------------
// per-subcommand state

struct CommonOpts {
    std::string output;
    std::string format = "csv";
    std::string config_file;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonOpts& c, bool with_jobs) {
    sub->add_option("-o,--output", c.output,
                    "output file (default: $NHDICKE_OUTPUT_DIR or . / <subcommand>.<ext>)");
    sub->add_option("--format", c.format, "artifact format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--config", c.config_file,
                    "flat key=value config file; command-line flags override it");
    if (with_jobs) {
        sub->add_option("--jobs", c.jobs, "worker threads for grid dispatch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }
}

using Echo = std::vector<std::pair<std::string, std::string>>;

// The anchor configurations used as defaults: the class-I point (gamma = 0.2,
// t = 0.5) whose EP2 sits near delta = 0.29, and the EP3 of t = 0.5.
constexpr double kAnchorT = 0.5;
constexpr double kAnchorGamma = 0.5;

nhd::EpPoint anchor_ep2(double gamma, double t, double kappa) {
    // the EP2 of this (gamma, t) on the locus branch with positive detuning
    const std::vector<nhd::EpPoint> pts = nhd::ep2_points_at(gamma, t, kappa);
    if (pts.empty()) {
        throw std::runtime_error("no EP2 exists at the requested (gamma, t)");
    }
    for (const nhd::EpPoint& ep : pts) {
        if (ep.location.gamma > 0.0 && ep.location.delta > 0.0) return ep;
    }
    return pts.back();
}

nhd::EpPoint anchor_ep3(double t, double kappa) {
    return nhd::ep3_point(nhd::omega_ep3_for_t(t, kappa), kappa);
}

// ---------------------------------------------------------------------------
// subcommand implementations (each returns the artifact to write)

Artifact run_ep_locus(const std::string& locus, double t, double kappa,
                      const std::string& omega_grid) {
    Artifact art;
    art.command = "ep-locus";
    art.config = {{"locus", locus}, {"t", fmt17(t)}, {"kappa", fmt17(kappa)},
                  {"omega-grid", omega_grid}};
    const std::vector<double> omegas = parse_grid(omega_grid);
    if (locus == "ep2") {
        art.table.columns = {"omega", "delta", "gamma", "omega3"};
        for (double w : omegas) {
            const nhd::Ep2Locus l = nhd::ep2_locus(w, t, kappa);
            art.table.rows.push_back({w, l.delta, l.gamma, l.omega3});
        }
    } else {
        art.table.columns = {"omega", "delta", "gamma", "t"};
        for (double w : omegas) {
            const nhd::Ep3Locus l = nhd::ep3_locus(w, kappa);
            art.table.rows.push_back({w, l.delta, l.gamma, l.t});
        }
    }
    return art;
}

Artifact run_phase_diagram(const std::string& t_grid, const std::string& gamma_grid, int jobs) {
    Artifact art;
    art.command = "phase-diagram";
    art.config = {{"t-grid", t_grid}, {"gamma-grid", gamma_grid}};
    const std::vector<double> ts = parse_grid(t_grid);
    const std::vector<double> gs = parse_grid(gamma_grid);
    art.table.columns = {"t", "gamma", "class"};
    const int n = static_cast<int>(ts.size() * gs.size());
    std::vector<std::string> cls(static_cast<std::size_t>(n));
    parallel_map(n, jobs, [&](int i) {
        const double t = ts[static_cast<std::size_t>(i) / gs.size()];
        const double g = gs[static_cast<std::size_t>(i) % gs.size()];
        cls[static_cast<std::size_t>(i)] = nhd::to_string(nhd::classify_point(g, t));
    });
    for (int i = 0; i < n; ++i) {
        const double t = ts[static_cast<std::size_t>(i) / gs.size()];
        const double g = gs[static_cast<std::size_t>(i) % gs.size()];
        art.table.rows.push_back({t, g, cls[static_cast<std::size_t>(i)]});
    }
    return art;
}

Artifact run_spectra(double gamma, double t, double kappa, const std::string& delta_grid) {
    Artifact art;
    art.command = "spectra";
    art.config = {{"gamma", fmt17(gamma)}, {"t", fmt17(t)}, {"kappa", fmt17(kappa)},
                  {"delta-grid", delta_grid}};
    nhd::SemiclassicalParams base{0.0, gamma, t, kappa};
    const nhd::SpectrumSweep sweep = nhd::spectrum_sweep(base, parse_grid(delta_grid));
    art.table.columns = {"delta", "re1", "im1", "photon1", "re2", "im2", "photon2",
                         "re3", "im3", "photon3"};
    for (std::size_t i = 0; i < sweep.delta.size(); ++i) {
        std::vector<Cell> row{sweep.delta[i]};
        for (int b = 0; b < 3; ++b) {
            row.push_back(sweep.bands[static_cast<std::size_t>(b)][i].real());
            row.push_back(sweep.bands[static_cast<std::size_t>(b)][i].imag());
            row.push_back(sweep.photon_weight[static_cast<std::size_t>(b)][i]);
        }
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_rigidity(double gamma, double t, double kappa, const std::string& delta_grid) {
    Artifact art;
    art.command = "rigidity";
    art.config = {{"gamma", fmt17(gamma)}, {"t", fmt17(t)}, {"kappa", fmt17(kappa)},
                  {"delta-grid", delta_grid}};
    art.table.columns = {"delta", "r1", "r2", "r3"};
    for (double d : parse_grid(delta_grid)) {
        const nhd::SemiclassicalParams p{d, gamma, t, kappa};
        const nhd::EigenSystem es = nhd::eig_full(nhd::build_dicke(p));
        art.table.rows.push_back({d, nhd::phase_rigidity(es, 0), nhd::phase_rigidity(es, 1),
                                  nhd::phase_rigidity(es, 2)});
    }
    return art;
}

Artifact run_scaling(const std::string& point, double gamma, double t, double kappa,
                     const std::string& eps_grid) {
    Artifact art;
    art.command = "scaling";
    art.config = {{"point", point}, {"gamma", fmt17(gamma)}, {"t", fmt17(t)},
                  {"kappa", fmt17(kappa)}, {"eps-grid", eps_grid}};
    const std::vector<double> eps = parse_log_grid(eps_grid);
    art.table.columns = {"point", "parameter", "slope"};
    const auto add_ep_rows = [&](const char* name, const nhd::EpPoint& ep) {
        const std::pair<const char*, nhd::Param> params[] = {
            {"delta", nhd::Param::delta}, {"gamma", nhd::Param::gamma},
            {"t", nhd::Param::t},         {"kappa", nhd::Param::kappa}};
        for (const auto& [pname, which] : params) {
            art.table.rows.push_back({name, pname, nhd::fit_scaling_exponent(ep, which, eps)});
        }
    };
    if (point == "p3" || point == "all") add_ep_rows("p3", anchor_ep2(gamma, t, kappa));
    if (point == "p5" || point == "all") add_ep_rows("p5", anchor_ep3(t, kappa));
    if (point == "nep5" || point == "all") {
        const nhd::NonlinearParams nep = nhd::nep5_parameters(1.0, 1.0);
        const nhd::PerturbationResponse resp = nhd::perturbation_response(nep, eps);
        art.table.rows.push_back({"nep5", "omega1", resp.slope});
    }
    return art;
}

Artifact run_encircle(const std::string& point, double gamma, double t, double kappa,
                      double radius, int steps, int loops, bool clockwise,
                      const std::string& format) {
    Artifact art;
    art.command = "encircle";
    art.config = {{"point", point},   {"gamma", fmt17(gamma)},       {"t", fmt17(t)},
                  {"kappa", fmt17(kappa)}, {"radius", fmt17(radius)}, {"steps", std::to_string(steps)},
                  {"loops", std::to_string(loops)}, {"clockwise", clockwise ? "1" : "0"}};
    if (loops < 1) throw std::invalid_argument("--loops must be >= 1");
    const nhd::EpPoint ep = (point == "p5") ? anchor_ep3(t, kappa) : anchor_ep2(gamma, t, kappa);
    nhd::LoopPath loop;
    loop.center = nhd::cx{ep.location.delta, 0.0};
    loop.radius = radius;
    loop.steps = steps;
    loop.counterclockwise = !clockwise;
    const nhd::EncircleResult one = nhd::encircle(ep, loop, ep.location, 1);
    const nhd::EncircleResult multi = nhd::encircle(ep, loop, ep.location, loops);

    std::string perm_one, perm_total;
    for (int j : one.permutation) perm_one += std::to_string(j + 1);
    for (int j : multi.permutation) perm_total += std::to_string(j + 1);

    json payload;
    payload["point"] = {{"order", ep.order},
                        {"omega_re", ep.frequency.real()},
                        {"omega_im", ep.frequency.imag()},
                        {"delta", ep.location.delta},
                        {"gamma", ep.location.gamma},
                        {"t", ep.location.t},
                        {"kappa", ep.location.kappa}};
    payload["loops"] = loops;
    payload["permutation"] = perm_one;               // after a single loop
    payload["permutation_after_loops"] = perm_total;  // after `loops` loops
    payload["geometric_phase_one_loop"] = one.geometric_phase;
    payload["geometric_phase_total"] = multi.geometric_phase;
    json per_cycle = json::array();
    for (double ph : multi.geometric_phase) per_cycle.push_back(ph / loops);
    payload["phase_per_cycle"] = per_cycle;
    json strands = json::array();
    for (const auto& strand : multi.strands) {
        json s = json::array();
        for (const nhd::cx& z : strand) s.push_back({z.real(), z.imag()});
        strands.push_back(std::move(s));
    }
    payload["strands"] = strands;
    json deltas = json::array();
    for (const nhd::cx& z : multi.deltas) deltas.push_back({z.real(), z.imag()});
    payload["deltas"] = deltas;

    if (format == "json") {
        art.custom = payload;
        return art;
    }
    // CSV flavour: strand trajectories, with the summary in the header
    art.table.notes = {{"permutation", perm_one},
                       {"permutation_after_loops", perm_total}};
    for (std::size_t j = 0; j < multi.geometric_phase.size(); ++j) {
        art.table.notes.emplace_back("geometric_phase_total_" + std::to_string(j + 1),
                                     fmt17(multi.geometric_phase[j]));
        art.table.notes.emplace_back("phase_per_cycle_" + std::to_string(j + 1),
                                     fmt17(multi.geometric_phase[j] / loops));
    }
    art.table.columns = {"sample", "delta_re", "delta_im"};
    for (std::size_t j = 1; j <= multi.strands.size(); ++j) {
        art.table.columns.push_back("strand" + std::to_string(j) + "_re");
        art.table.columns.push_back("strand" + std::to_string(j) + "_im");
    }
    for (std::size_t k = 0; k < multi.deltas.size(); ++k) {
        std::vector<Cell> row{double(k), multi.deltas[k].real(), multi.deltas[k].imag()};
        for (const auto& strand : multi.strands) {
            row.push_back(strand[k].real());
            row.push_back(strand[k].imag());
        }
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_nep(double omega_s, double kappa1, const std::string& eps_grid) {
    Artifact art;
    art.command = "nep";
    art.config = {{"omega-s", fmt17(omega_s)}, {"kappa1", fmt17(kappa1)}, {"eps-grid", eps_grid}};
    const nhd::NonlinearParams nep = nhd::nep5_parameters(omega_s, kappa1);
    const nhd::PerturbationResponse resp = nhd::perturbation_response(nep, parse_log_grid(eps_grid));
    art.table.notes = {{"omega1", fmt17(nep.omega1)}, {"omega2", fmt17(nep.omega2)},
                       {"kappa2", fmt17(nep.kappa2)}, {"t", fmt17(nep.t)},
                       {"gamma", fmt17(nep.gamma)},   {"slope", fmt17(resp.slope)},
                       {"omega-ref", fmt17(resp.omega_ref)}};
    art.table.columns = {"eps"};
    for (int b = 1; b <= 5; ++b) {
        art.table.columns.push_back("re" + std::to_string(b));
        art.table.columns.push_back("im" + std::to_string(b));
        art.table.columns.push_back("real" + std::to_string(b));
    }
    art.table.columns.push_back("delta_abs");
    for (std::size_t i = 0; i < resp.epsilons.size(); ++i) {
        std::vector<Cell> row{resp.epsilons[i]};
        for (int b = 0; b < 5; ++b) {
            row.push_back(resp.roots[i][static_cast<std::size_t>(b)].real());
            row.push_back(resp.roots[i][static_cast<std::size_t>(b)].imag());
            row.push_back(resp.is_real[i][static_cast<std::size_t>(b)] ? 1.0 : 0.0);
        }
        row.push_back(resp.delta_abs[i]);
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_dynamics(double delta, double gamma, double t, double kappa,
                      const std::string& initial, double T, double dt, int stride) {
    Artifact art;
    art.command = "dynamics";
    art.config = {{"delta", fmt17(delta)}, {"gamma", fmt17(gamma)}, {"t", fmt17(t)},
                  {"kappa", fmt17(kappa)}, {"initial", initial},    {"T", fmt17(T)},
                  {"dt", fmt17(dt)},       {"stride", std::to_string(stride)}};
    if (stride < 1) throw std::invalid_argument("--stride must be >= 1");
    if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("--dt and --T must be positive");
    nhd::AmplitudeState init;
    if (initial == "atom1") {
        init.c1 = 1.0;
    } else {
        init.cp = 1.0;
    }
    const nhd::SemiclassicalParams p{delta, gamma, t, kappa};
    const nhd::LinearTrajectory traj = nhd::evolve_linear(nhd::build_dicke(p), init, dt, T);
    const bool analytic = gamma == 0.0 && t == 0.0;
    art.table.columns = {"time", "p1", "pp", "p2", "norm"};
    if (analytic) {
        art.table.columns.insert(art.table.columns.end(),
                                 {"p1_analytic", "pp_analytic", "p2_analytic"});
    }
    if (traj.diverged) art.table.notes.emplace_back("diverged", "1");
    for (std::size_t i = 0; i < traj.states.size(); i += static_cast<std::size_t>(stride)) {
        const nhd::AmplitudeState& s = traj.states[i];
        std::vector<Cell> row{s.time, std::norm(s.c1), std::norm(s.cp), std::norm(s.c2),
                              nhd::probability_norm(s)};
        if (analytic) {
            const nhd::AmplitudeState a = nhd::hermitian_analytic(init, delta, kappa, s.time);
            row.push_back(std::norm(a.c1));
            row.push_back(std::norm(a.cp));
            row.push_back(std::norm(a.c2));
        }
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_steady_map(const nhd::NonlinearParams& base, const std::string& alpha_grid,
                        const std::string& beta_grid, int jobs) {
    Artifact art;
    art.command = "steady-map";
    art.config = {{"omega1", fmt17(base.omega1)}, {"omega2", fmt17(base.omega2)},
                  {"kappa1", fmt17(base.kappa1)}, {"kappa2", fmt17(base.kappa2)},
                  {"t", fmt17(base.t)},           {"gamma", fmt17(base.gamma)},
                  {"alpha-grid", alpha_grid},     {"beta-grid", beta_grid}};
    const std::vector<double> alphas = parse_grid(alpha_grid);
    const std::vector<double> betas = parse_grid(beta_grid);
    // one worker item per alpha row keeps the library call coarse enough
    std::vector<nhd::SteadyMap> rows(alphas.size());
    parallel_map(static_cast<int>(alphas.size()), jobs, [&](int i) {
        rows[static_cast<std::size_t>(i)] =
            nhd::steady_map(base, {alphas[static_cast<std::size_t>(i)]}, betas);
    });
    art.table.columns = {"alpha", "beta", "amplitude", "gain", "diverged"};
    for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
        for (std::size_t ib = 0; ib < betas.size(); ++ib) {
            const nhd::SteadyMap& m = rows[ia];
            art.table.rows.push_back({alphas[ia], betas[ib], m.amplitude[0][ib], m.gain[0][ib],
                                      m.diverged[0][ib] ? 1.0 : 0.0});
        }
    }
    return art;
}

Artifact run_chain_bands(const nhd::ChainParams& p, int k_steps) {
    Artifact art;
    art.command = "chain-bands";
    art.config = {{"delta", fmt17(p.delta)},   {"gamma", fmt17(p.gamma)},
                  {"t", fmt17(p.t)},           {"kappa", fmt17(p.kappa)},
                  {"lambda", fmt17(p.lambda)}, {"k-steps", std::to_string(k_steps)}};
    const nhd::BandStructure bs = nhd::band_structure(p, k_steps);
    art.table.notes = {{"gap1-open", bs.gap1_open ? "1" : "0"},
                       {"gap2-open", bs.gap2_open ? "1" : "0"},
                       {"all-real", bs.all_real ? "1" : "0"}};
    art.table.columns = {"k", "re1", "im1", "re2", "im2", "re3", "im3"};
    for (std::size_t i = 0; i < bs.k_grid.size(); ++i) {
        std::vector<Cell> row{bs.k_grid[i]};
        for (int b = 0; b < 3; ++b) {
            row.push_back(bs.bands[static_cast<std::size_t>(b)][i].real());
            row.push_back(bs.bands[static_cast<std::size_t>(b)][i].imag());
        }
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

const char* gap_label(bool open, const std::optional<double>& zak) {
    if (!open || !zak) return "NHSM";
    return *zak > 1.0 ? "NHTI" : "NHNI";
}

Artifact run_chain_phases(nhd::ChainParams base, const std::string& lambda_grid,
                          const std::string& delta_grid, int k_steps, int jobs) {
    Artifact art;
    art.command = "chain-phases";
    art.config = {{"delta", fmt17(base.delta)}, {"gamma", fmt17(base.gamma)},
                  {"t", fmt17(base.t)},         {"kappa", fmt17(base.kappa)},
                  {"lambda-grid", lambda_grid}, {"delta-grid", delta_grid},
                  {"k-steps", std::to_string(k_steps)}};
    const std::vector<double> lambdas = parse_grid(lambda_grid);
    const std::vector<double> deltas =
        delta_grid.empty() ? std::vector<double>{base.delta} : parse_grid(delta_grid);
    art.table.columns = {"delta", "lambda", "gap1", "gap2", "zak1", "zak2"};
    const int n = static_cast<int>(deltas.size() * lambdas.size());
    std::vector<nhd::TopoPhase> phases(static_cast<std::size_t>(n));
    std::vector<bool> open1(static_cast<std::size_t>(n)), open2(static_cast<std::size_t>(n));
    parallel_map(n, jobs, [&](int i) {
        nhd::ChainParams p = base;
        p.delta = deltas[static_cast<std::size_t>(i) / lambdas.size()];
        p.lambda = lambdas[static_cast<std::size_t>(i) % lambdas.size()];
        const nhd::BandStructure bs = nhd::band_structure(p, k_steps);
        open1[static_cast<std::size_t>(i)] = bs.gap1_open;
        open2[static_cast<std::size_t>(i)] = bs.gap2_open;
        phases[static_cast<std::size_t>(i)] = nhd::classify_chain(p, 1, k_steps);
    });
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const nhd::TopoPhase& ph = phases[ii];
        std::vector<Cell> row{deltas[ii / lambdas.size()], lambdas[ii % lambdas.size()],
                              gap_label(open1[ii], ph.zak_gap1), gap_label(open2[ii], ph.zak_gap2)};
        row.push_back(ph.zak_gap1 ? Cell(*ph.zak_gap1) : Cell());
        row.push_back(ph.zak_gap2 ? Cell(*ph.zak_gap2) : Cell());
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_zak(nhd::ChainParams base, int gap, const std::string& lambda_grid, int k_steps,
                 int jobs) {
    Artifact art;
    art.command = "zak";
    art.config = {{"delta", fmt17(base.delta)}, {"gamma", fmt17(base.gamma)},
                  {"t", fmt17(base.t)},         {"kappa", fmt17(base.kappa)},
                  {"gap", std::to_string(gap)}, {"lambda-grid", lambda_grid},
                  {"k-steps", std::to_string(k_steps)}};
    const std::vector<double> lambdas = parse_grid(lambda_grid);
    art.table.columns = {"lambda", "gap_open", "zak"};
    const int n = static_cast<int>(lambdas.size());
    std::vector<std::optional<double>> zaks(static_cast<std::size_t>(n));
    parallel_map(n, jobs, [&](int i) {
        nhd::ChainParams p = base;
        p.lambda = lambdas[static_cast<std::size_t>(i)];
        const nhd::BandStructure bs = nhd::band_structure(p, k_steps);
        const bool open = (gap == 1) ? bs.gap1_open : bs.gap2_open;
        if (open) zaks[static_cast<std::size_t>(i)] = nhd::zak_phase(p, gap, k_steps);
    });
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        art.table.rows.push_back({lambdas[ii], zaks[ii] ? 1.0 : 0.0,
                                  zaks[ii] ? Cell(*zaks[ii]) : Cell()});
    }
    return art;
}

Artifact run_edges(const nhd::ChainParams& p) {
    Artifact art;
    art.command = "edges";
    art.config = {{"delta", fmt17(p.delta)},   {"gamma", fmt17(p.gamma)},
                  {"t", fmt17(p.t)},           {"kappa", fmt17(p.kappa)},
                  {"lambda", fmt17(p.lambda)}, {"n-cells", std::to_string(p.n_cells)}};
    const std::vector<nhd::EdgeState> edges = nhd::edge_states(p);
    nhd::EigOptions opt;
    opt.want_left = false;
    opt.coalesce_defective = false;
    const nhd::EigenSystem es = nhd::eig_full(nhd::open_chain(p), opt);
    art.table.columns = {"re", "im", "is_edge", "ipr", "edge_weight", "left_weight", "gap"};
    for (const nhd::cx& v : es.values) {
        const nhd::EdgeState* hit = nullptr;
        for (const nhd::EdgeState& e : edges) {
            if (std::abs(e.value - v) < 1e-9 && !hit) hit = &e;
        }
        std::vector<Cell> row{v.real(), v.imag(), hit ? 1.0 : 0.0};
        if (hit) {
            row.push_back(hit->ipr);
            row.push_back(hit->edge_weight);
            row.push_back(hit->left_weight);
            row.push_back(double(hit->gap));
        } else {
            row.insert(row.end(), {Cell(), Cell(), Cell(), Cell()});
        }
        art.table.rows.push_back(std::move(row));
    }
    return art;
}

Artifact run_quantum_g2(double gamma1, double gamma2, double t, double eta, double delta,
                        const std::string& delta_grid, const std::string& kappa_grid, int n_max,
                        int jobs) {
    Artifact art;
    art.command = "quantum-g2";
    art.config = {{"gamma1", fmt17(gamma1)},   {"gamma2", fmt17(gamma2)},
                  {"t", fmt17(t)},             {"eta", fmt17(eta)},
                  {"delta", fmt17(delta)},     {"delta-grid", delta_grid},
                  {"kappa-grid", kappa_grid},  {"n-max", std::to_string(n_max)}};
    const std::vector<double> deltas =
        delta_grid.empty() ? std::vector<double>{delta} : parse_grid(delta_grid);
    const std::vector<double> kappas = parse_grid(kappa_grid);
    art.table.columns = {"delta", "kappa", "g2", "g2_nh", "g2_weak",
                         "n_photon", "p_dd1", "p_dd2", "top_fock"};
    const int n = static_cast<int>(deltas.size() * kappas.size());
    std::vector<std::vector<Cell>> rows(static_cast<std::size_t>(n));
    parallel_map(n, jobs, [&](int i) {
        const double d = deltas[static_cast<std::size_t>(i) / kappas.size()];
        const double k = kappas[static_cast<std::size_t>(i) % kappas.size()];
        nhd::QuantumParams q;
        // resonant drive at the photon frequency; the bias detunes the qubits
        q.omega_p = q.omega_d = 1.0;
        q.omega1 = q.omega2 = 1.0 + d;
        q.kappa1 = q.kappa2 = k;
        q.t = t;
        q.gamma1 = gamma1;
        q.gamma2 = gamma2;
        q.eta = eta;
        q.n_max = n_max;
        const nhd::CMat rho = nhd::steady_state(nhd::liouvillian(q, true));
        const std::vector<double> pop = nhd::populations(rho);
        const int i1 = nhd::basis_index({false, false, 1}, n_max);
        const int i2 = nhd::basis_index({false, false, 2}, n_max);
        double nph = 0.0;
        for (int idx = 0; idx < nhd::hilbert_dim(n_max); ++idx) {
            nph += pop[static_cast<std::size_t>(idx)] * nhd::basis_label(idx, n_max).n;
        }
        const double g2 = nhd::g2_zero(rho);
        const double g2nh = nhd::g2_zero(nhd::nh_steady_approx(q));
        const double g2w = 2.0 * pop[static_cast<std::size_t>(i2)] /
                           (pop[static_cast<std::size_t>(i1)] * pop[static_cast<std::size_t>(i1)]);
        rows[static_cast<std::size_t>(i)] = {d,   k,
                                             g2,  g2nh,
                                             g2w, nph,
                                             pop[static_cast<std::size_t>(i1)],
                                             pop[static_cast<std::size_t>(i2)],
                                             nhd::top_fock_population(rho)};
    });
    for (auto& row : rows) art.table.rows.push_back(std::move(row));
    return art;
}

// ---------------------------------------------------------------------------
// config file to extra argv tokens

std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line is not key=value: '" + line + "'");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend == std::string::npos ? 0 : kend + 1);
        const auto vbeg = value.find_first_not_of(" \t");
        value = vbeg == std::string::npos ? "" : value.substr(vbeg);
        if (key.empty()) throw std::invalid_argument("config line has empty key: '" + line + "'");
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-Hermitian Dicke model laboratory: deterministic tabular artifacts"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // ---- ep-locus
    auto* cmd_locus = app.add_subcommand("ep-locus", "EP2/EP3 locus tables vs the coalesced frequency");
    CommonOpts c_locus;
    std::string locus_kind = "ep2", locus_grid = "-1:1:201";
    double locus_t = 0.5, locus_kappa = 1.0;
    cmd_locus->add_option("--locus", locus_kind, "which locus")->check(CLI::IsMember({"ep2", "ep3"}))->capture_default_str();
    cmd_locus->add_option("--t", locus_t, "atom-atom coupling (ep2 locus only)")->capture_default_str();
    cmd_locus->add_option("--kappa", locus_kappa, "atom-photon coupling")->capture_default_str();
    cmd_locus->add_option("--omega-grid", locus_grid, "coalesced-frequency grid start:stop:steps")->capture_default_str();
    add_common(cmd_locus, c_locus, false);

    // ---- phase-diagram
    auto* cmd_phase = app.add_subcommand("phase-diagram", "class map over (t/kappa, gamma/kappa)");
    CommonOpts c_phase;
    std::string phase_tg = "0:3:121", phase_gg = "0:3:121";
    cmd_phase->add_option("--t-grid", phase_tg, "t/kappa grid")->capture_default_str();
    cmd_phase->add_option("--gamma-grid", phase_gg, "gamma/kappa grid")->capture_default_str();
    add_common(cmd_phase, c_phase, true);

    // ---- spectra
    auto* cmd_spec = app.add_subcommand("spectra", "continuity-tracked bands and photon weight vs detuning");
    CommonOpts c_spec;
    double spec_gamma = 0.2, spec_t = kAnchorT, spec_kappa = 1.0;
    std::string spec_grid = "-1:2:601";
    cmd_spec->add_option("--gamma", spec_gamma, "gain/loss")->capture_default_str();
    cmd_spec->add_option("--t", spec_t, "atom-atom coupling")->capture_default_str();
    cmd_spec->add_option("--kappa", spec_kappa, "atom-photon coupling")->capture_default_str();
    cmd_spec->add_option("--delta-grid", spec_grid, "detuning grid")->capture_default_str();
    add_common(cmd_spec, c_spec, false);

    // ---- rigidity
    auto* cmd_rig = app.add_subcommand("rigidity", "phase rigidity of the three states vs detuning");
    CommonOpts c_rig;
    double rig_gamma = 1.1504059086001417, rig_t = kAnchorT, rig_kappa = 1.0;  // EP3 gain of t=0.5
    std::string rig_grid = "0:1:501";
    cmd_rig->add_option("--gamma", rig_gamma, "gain/loss (default: the EP3 gain of t=0.5)")->capture_default_str();
    cmd_rig->add_option("--t", rig_t, "atom-atom coupling")->capture_default_str();
    cmd_rig->add_option("--kappa", rig_kappa, "atom-photon coupling")->capture_default_str();
    cmd_rig->add_option("--delta-grid", rig_grid, "detuning grid")->capture_default_str();
    add_common(cmd_rig, c_rig, false);

    // ---- scaling
    auto* cmd_scal = app.add_subcommand("scaling", "rigidity/response scaling exponents at the anchor points");
    CommonOpts c_scal;
    std::string scal_point = "all", scal_eps = "1e-8:1e-3:25";
    double scal_gamma = kAnchorGamma, scal_t = kAnchorT, scal_kappa = 1.0;
    cmd_scal->add_option("--point", scal_point, "which anchor")->check(CLI::IsMember({"p3", "p5", "nep5", "all"}))->capture_default_str();
    cmd_scal->add_option("--gamma", scal_gamma, "gain/loss selecting the p3 EP2")->capture_default_str();
    cmd_scal->add_option("--t", scal_t, "atom-atom coupling of the anchors")->capture_default_str();
    cmd_scal->add_option("--kappa", scal_kappa, "atom-photon coupling")->capture_default_str();
    cmd_scal->add_option("--eps-grid", scal_eps, "perturbation grid (log-spaced between the bounds)")->capture_default_str();
    add_common(cmd_scal, c_scal, false);

    // ---- encircle
    auto* cmd_enc = app.add_subcommand("encircle", "adiabatic loops around an EP: braid and geometric phase");
    CommonOpts c_enc;
    c_enc.format = "json";
    std::string enc_point = "p5";
    double enc_gamma = kAnchorGamma, enc_t = kAnchorT, enc_kappa = 1.0, enc_radius = 0.1;
    int enc_steps = 256, enc_loops = 3;
    bool enc_cw = false;
    cmd_enc->add_option("--point", enc_point, "EP3 of t (p5) or EP2 of (gamma, t) (p3)")->check(CLI::IsMember({"p3", "p5"}))->capture_default_str();
    cmd_enc->add_option("--gamma", enc_gamma, "gain/loss selecting the p3 EP2")->capture_default_str();
    cmd_enc->add_option("--t", enc_t, "atom-atom coupling")->capture_default_str();
    cmd_enc->add_option("--kappa", enc_kappa, "atom-photon coupling")->capture_default_str();
    cmd_enc->add_option("--radius", enc_radius, "loop radius in the complex-detuning plane")->capture_default_str();
    cmd_enc->add_option("--steps", enc_steps, "samples per loop")->capture_default_str();
    cmd_enc->add_option("--loops", enc_loops, "number of loops")->capture_default_str();
    cmd_enc->add_flag("--clockwise", enc_cw, "reverse the loop orientation");
    add_common(cmd_enc, c_enc, false);

    // ---- nep
    auto* cmd_nep = app.add_subcommand("nep", "fifth-order nonlinear EP: branch response to perturbation");
    CommonOpts c_nep;
    double nep_ws = 1.0, nep_k1 = 1.0;
    std::string nep_eps = "1e-8:1e-3:25";
    cmd_nep->add_option("--omega-s", nep_ws, "steady frequency of the constructed NEP5")->capture_default_str();
    cmd_nep->add_option("--kappa1", nep_k1, "atom-1 coupling (the unit)")->capture_default_str();
    cmd_nep->add_option("--eps-grid", nep_eps, "perturbation grid (log-spaced between the bounds)")->capture_default_str();
    add_common(cmd_nep, c_nep, false);

    // ---- dynamics
    auto* cmd_dyn = app.add_subcommand("dynamics", "population dynamics of the linear three-mode model");
    CommonOpts c_dyn;
    double dyn_delta = 2.0, dyn_gamma = 0.0, dyn_t = 0.0, dyn_kappa = 1.0, dyn_T = 20.0, dyn_dt = 0.001;
    std::string dyn_init = "atom1";
    int dyn_stride = 10;
    cmd_dyn->add_option("--delta", dyn_delta, "detuning")->capture_default_str();
    cmd_dyn->add_option("--gamma", dyn_gamma, "gain/loss")->capture_default_str();
    cmd_dyn->add_option("--t", dyn_t, "atom-atom coupling")->capture_default_str();
    cmd_dyn->add_option("--kappa", dyn_kappa, "atom-photon coupling")->capture_default_str();
    cmd_dyn->add_option("--initial", dyn_init, "initial amplitude placement")->check(CLI::IsMember({"atom1", "photon"}))->capture_default_str();
    cmd_dyn->add_option("--T", dyn_T, "horizon")->capture_default_str();
    cmd_dyn->add_option("--dt", dyn_dt, "integrator step")->capture_default_str();
    cmd_dyn->add_option("--stride", dyn_stride, "store every n-th step")->capture_default_str();
    add_common(cmd_dyn, c_dyn, false);

    // ---- steady-map
    auto* cmd_map = app.add_subcommand("steady-map", "saturated amplitude and gain over the (alpha, beta) pump plane");
    CommonOpts c_map;
    nhd::NonlinearParams map_base;
    map_base.omega1 = 2.14407571047;  // the constructed NEP5 of omega_s = 1, kappa1 = 1
    map_base.omega2 = 1.42796214476;
    map_base.kappa1 = 1.0;
    map_base.kappa2 = 1.79174778186;
    map_base.t = 2.23238053719;
    map_base.gamma = 3.77383747709;
    std::string map_ag = "0:6:61", map_bg = "0:6:61";
    cmd_map->add_option("--omega1", map_base.omega1, "atom-1 frequency")->capture_default_str();
    cmd_map->add_option("--omega2", map_base.omega2, "atom-2 frequency")->capture_default_str();
    cmd_map->add_option("--kappa1", map_base.kappa1, "atom-1 coupling")->capture_default_str();
    cmd_map->add_option("--kappa2", map_base.kappa2, "atom-2 coupling")->capture_default_str();
    cmd_map->add_option("--t", map_base.t, "atom-atom coupling")->capture_default_str();
    cmd_map->add_option("--gamma", map_base.gamma, "linear loss on atom 2")->capture_default_str();
    cmd_map->add_option("--alpha-grid", map_ag, "pump-strength grid")->capture_default_str();
    cmd_map->add_option("--beta-grid", map_bg, "intrinsic-loss grid")->capture_default_str();
    add_common(cmd_map, c_map, true);

    // ---- chain-bands
    auto* cmd_cb = app.add_subcommand("chain-bands", "Bloch bands of the gain/loss chain");
    CommonOpts c_cb;
    nhd::ChainParams cb_p{1.0, 0.5, 0.0, 1.0, 1.0, 2};
    int cb_ksteps = 256;
    cmd_cb->add_option("--delta", cb_p.delta, "detuning")->capture_default_str();
    cmd_cb->add_option("--gamma", cb_p.gamma, "gain/loss")->capture_default_str();
    cmd_cb->add_option("--t", cb_p.t, "intra-cell atom-atom coupling")->capture_default_str();
    cmd_cb->add_option("--kappa", cb_p.kappa, "atom-photon coupling")->capture_default_str();
    cmd_cb->add_option("--lambda", cb_p.lambda, "inter-cell coupling")->capture_default_str();
    cmd_cb->add_option("--k-steps", cb_ksteps, "momentum samples")->capture_default_str();
    add_common(cmd_cb, c_cb, false);

    // ---- chain-phases
    auto* cmd_cp = app.add_subcommand("chain-phases", "topological classification over inter-cell coupling (and detuning)");
    CommonOpts c_cp;
    nhd::ChainParams cp_p{1.0, 0.5, 0.0, 1.0, 1.0, 2};
    std::string cp_lg = "0.1:2:39", cp_dg;
    int cp_ksteps = 128;
    cmd_cp->add_option("--delta", cp_p.delta, "detuning (used when no delta-grid)")->capture_default_str();
    cmd_cp->add_option("--gamma", cp_p.gamma, "gain/loss")->capture_default_str();
    cmd_cp->add_option("--t", cp_p.t, "intra-cell atom-atom coupling")->capture_default_str();
    cmd_cp->add_option("--kappa", cp_p.kappa, "atom-photon coupling")->capture_default_str();
    cmd_cp->add_option("--lambda-grid", cp_lg, "inter-cell coupling grid")->capture_default_str();
    cmd_cp->add_option("--delta-grid", cp_dg, "optional detuning grid for a 2-D map");
    cmd_cp->add_option("--k-steps", cp_ksteps, "momentum samples for the Zak phases")->capture_default_str();
    add_common(cmd_cp, c_cp, true);

    // ---- zak
    auto* cmd_zak = app.add_subcommand("zak", "biorthogonal Zak phase of one gap along an inter-cell sweep");
    CommonOpts c_zak;
    nhd::ChainParams zak_p{1.0, 0.5, 0.0, 1.0, 1.0, 2};
    int zak_gap = 2, zak_ksteps = 256;
    std::string zak_lg = "0.3:2:35";
    cmd_zak->add_option("--gap", zak_gap, "which gap (1 or 2)")->check(CLI::Range(1, 2))->capture_default_str();
    cmd_zak->add_option("--delta", zak_p.delta, "detuning")->capture_default_str();
    cmd_zak->add_option("--gamma", zak_p.gamma, "gain/loss")->capture_default_str();
    cmd_zak->add_option("--t", zak_p.t, "intra-cell atom-atom coupling")->capture_default_str();
    cmd_zak->add_option("--kappa", zak_p.kappa, "atom-photon coupling")->capture_default_str();
    cmd_zak->add_option("--lambda-grid", zak_lg, "inter-cell coupling grid")->capture_default_str();
    cmd_zak->add_option("--k-steps", zak_ksteps, "momentum samples")->capture_default_str();
    add_common(cmd_zak, c_zak, true);

    // ---- edges
    auto* cmd_edge = app.add_subcommand("edges", "open-chain spectrum with localized midgap states flagged");
    CommonOpts c_edge;
    nhd::ChainParams edge_p{1.0, 0.5, 0.0, 1.0, 1.0, 40};
    cmd_edge->add_option("--delta", edge_p.delta, "detuning")->capture_default_str();
    cmd_edge->add_option("--gamma", edge_p.gamma, "gain/loss")->capture_default_str();
    cmd_edge->add_option("--t", edge_p.t, "intra-cell atom-atom coupling")->capture_default_str();
    cmd_edge->add_option("--kappa", edge_p.kappa, "atom-photon coupling")->capture_default_str();
    cmd_edge->add_option("--lambda", edge_p.lambda, "inter-cell coupling")->capture_default_str();
    cmd_edge->add_option("--n-cells", edge_p.n_cells, "chain length in unit cells")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(cmd_edge, c_edge, false);

    // ---- quantum-g2
    auto* cmd_q = app.add_subcommand("quantum-g2", "driven-dissipative photon statistics over (delta, kappa)");
    CommonOpts c_q;
    double q_g1 = 1.0, q_g2 = 0.3, q_t = 0.0, q_eta = 0.01, q_delta = 0.0;
    std::string q_dg, q_kg = "0.1:1:19";
    int q_nmax = 6;
    cmd_q->add_option("--gamma1", q_g1, "qubit-1 decay")->capture_default_str();
    cmd_q->add_option("--gamma2", q_g2, "qubit-2 decay")->capture_default_str();
    cmd_q->add_option("--t", q_t, "qubit-qubit exchange")->capture_default_str();
    cmd_q->add_option("--eta", q_eta, "drive amplitude")->capture_default_str();
    cmd_q->add_option("--delta", q_delta, "qubit-photon bias (used when no delta-grid)")->capture_default_str();
    cmd_q->add_option("--delta-grid", q_dg, "optional bias grid for a 2-D map");
    cmd_q->add_option("--kappa-grid", q_kg, "coupling grid")->capture_default_str();
    cmd_q->add_option("--n-max", q_nmax, "Fock cutoff")->check(CLI::Range(2, 10))->capture_default_str();
    add_common(cmd_q, c_q, true);

    // ---- config-file merge: inject config tokens before the command line so
    // TakeLast gives the flags precedence
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        if (!args.empty()) {
            std::string cfg_path;
            for (std::size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--config" && i + 1 < args.size()) {
                    cfg_path = args[i + 1];
                } else if (args[i].rfind("--config=", 0) == 0) {
                    cfg_path = args[i].substr(9);
                }
            }
            if (!cfg_path.empty()) {
                const std::vector<std::string> extra = config_tokens(cfg_path);
                args.insert(args.begin() + 1, extra.begin(), extra.end());
            }
        }
        std::vector<const char*> argv2;
        argv2.push_back(argv[0]);
        for (const std::string& a : args) argv2.push_back(a.c_str());
        app.parse(static_cast<int>(argv2.size()), argv2.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, returns 0
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        std::fprintf(stderr, "%s\n", app.help().c_str());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        Artifact art;
        const CommonOpts* common = nullptr;
        if (cmd_locus->parsed()) {
            art = run_ep_locus(locus_kind, locus_t, locus_kappa, locus_grid);
            common = &c_locus;
        } else if (cmd_phase->parsed()) {
            art = run_phase_diagram(phase_tg, phase_gg, c_phase.jobs);
            common = &c_phase;
        } else if (cmd_spec->parsed()) {
            art = run_spectra(spec_gamma, spec_t, spec_kappa, spec_grid);
            common = &c_spec;
        } else if (cmd_rig->parsed()) {
            art = run_rigidity(rig_gamma, rig_t, rig_kappa, rig_grid);
            common = &c_rig;
        } else if (cmd_scal->parsed()) {
            art = run_scaling(scal_point, scal_gamma, scal_t, scal_kappa, scal_eps);
            common = &c_scal;
        } else if (cmd_enc->parsed()) {
            art = run_encircle(enc_point, enc_gamma, enc_t, enc_kappa, enc_radius, enc_steps,
                               enc_loops, enc_cw, c_enc.format);
            common = &c_enc;
        } else if (cmd_nep->parsed()) {
            art = run_nep(nep_ws, nep_k1, nep_eps);
            common = &c_nep;
        } else if (cmd_dyn->parsed()) {
            art = run_dynamics(dyn_delta, dyn_gamma, dyn_t, dyn_kappa, dyn_init, dyn_T, dyn_dt,
                               dyn_stride);
            common = &c_dyn;
        } else if (cmd_map->parsed()) {
            art = run_steady_map(map_base, map_ag, map_bg, c_map.jobs);
            common = &c_map;
        } else if (cmd_cb->parsed()) {
            art = run_chain_bands(cb_p, cb_ksteps);
            common = &c_cb;
        } else if (cmd_cp->parsed()) {
            art = run_chain_phases(cp_p, cp_lg, cp_dg, cp_ksteps, c_cp.jobs);
            common = &c_cp;
        } else if (cmd_zak->parsed()) {
            art = run_zak(zak_p, zak_gap, zak_lg, zak_ksteps, c_zak.jobs);
            common = &c_zak;
        } else if (cmd_edge->parsed()) {
            art = run_edges(edge_p);
            common = &c_edge;
        } else if (cmd_q->parsed()) {
            art = run_quantum_g2(q_g1, q_g2, q_t, q_eta, q_delta, q_dg, q_kg, q_nmax, c_q.jobs);
            common = &c_q;
        }
        const std::string path = resolve_output_path(common->output, art.command, common->format);
        write_artifact(art, path, common->format);
        std::printf("wrote %s\n", path.c_str());
        return 0;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
