// Copyright 2026 The rainbow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment runner. Every subcommand writes a CSV table preceded by the
// resolved parameters as '# key = value' lines; scalar summaries go to JSON.
//
//   rainbow verify-eig --lx 10 --ly 2
//   rainbow teleport --lx 6 --ly 2 --e-pairs 2 --t-max 15 --haar-samples 400
//   rainbow engineer-gap --lx 6 --ly 2 --out gap.csv
//   rainbow engineer-iterate --lx 6 --ly 2 --T 0.4 --steps 200 --out it.csv
//   rainbow trajectories --lx 8 --ly 2 --n-traj 200 --out traj.csv
//   rainbow --config run.cfg engineer-gap
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "rainbow/config.hpp"
#include "rainbow/engineer.hpp"
#include "rainbow/teleport.hpp"
#include "rainbow/trajectories.hpp"

using namespace rainbow;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

std::string flag_name(const std::string &key) {
    std::string f = "--" + key;
    for (char &c : f) {
        if (c == '_') c = '-';
    }
    return f;
}

/// Options of one subcommand plus how to echo their resolved values.
class Command {
  public:
    Command(CLI::App &app, const std::string &name, const std::string &help) : sub_(app.add_subcommand(name, help)) {}

    CLI::App *app() const { return sub_; }
    std::string name() const { return sub_->get_name(); }

    CLI::Option *real(const std::string &key, double &v, const std::string &help) {
        return add(key, v, help, [&v] { return format_number(v); });
    }
    CLI::Option *integer(const std::string &key, int &v, const std::string &help) {
        return add(key, v, help, [&v] { return std::to_string(v); });
    }
    CLI::Option *seed(const std::string &key, std::uint64_t &v, const std::string &help) {
        return add(key, v, help, [&v] { return std::to_string(v); });
    }
    CLI::Option *text(const std::string &key, std::string &v, const std::string &help) {
        return add(key, v, help, [&v] { return v; });
    }
    CLI::Option *flag(const std::string &key, bool &v, const std::string &help) {
        echo_.emplace_back(key, [&v] { return std::string(v ? "true" : "false"); });
        return sub_->add_flag(flag_name(key), v, help);
    }

    ResolvedConfig resolved() const {
        ResolvedConfig out;
        for (const auto &[k, f] : echo_) {
            if (k == "out" || k == "summary") continue;
            out.emplace_back(k, f());
        }
        return out;
    }

  private:
    template <class T>
    CLI::Option *add(const std::string &key, T &v, const std::string &help, std::function<std::string()> echo) {
        echo_.emplace_back(key, std::move(echo));
        return sub_->add_option(flag_name(key), v, help)->capture_default_str();
    }

    CLI::App *sub_;
    std::vector<std::pair<std::string, std::function<std::string()>>> echo_;
};

struct Common {
    int lx = 0, ly = 0;
    double jx = 1.0, jy = 1.2;
    double evolve_tol = 1e-9;
    int krylov_dim = 30;
    std::string propagator = "chebyshev";
    std::string out;

    void attach(Command &c) {
        c.integer("lx", lx, "Columns (even)")->required();
        c.integer("ly", ly, "Rows")->required();
        c.real("jx", jx, "XX coupling");
        c.real("jy", jy, "YY coupling");
        c.real("evolve_tol", evolve_tol, "Propagation error target");
        c.integer("krylov_dim", krylov_dim, "Krylov subspace size");
        c.text("propagator", propagator, "Large-register propagator")->check(CLI::IsMember({"chebyshev", "krylov"}));
        c.text("out", out, "Output CSV (stdout when empty)");
    }

    LatticeGeometry geometry() const { return LatticeGeometry(lx, ly); }
    EvolveOptions evolve() const {
        EvolveOptions o;
        o.tol = evolve_tol;
        o.krylov_dim = krylov_dim;
        o.propagator = propagator == "krylov" ? Propagator::krylov : Propagator::chebyshev;
        return o;
    }
};

std::optional<int> row_option(int row) { return row > 0 ? std::optional<int>(row) : std::nullopt; }

std::vector<double> time_grid(double t0, double t1, int steps) {
    if (steps < 1) throw std::invalid_argument("number of grid points must be positive");
    if (t1 < t0) throw std::invalid_argument("grid end below grid start");
    if (steps == 1 || t1 == t0) return {t1};
    std::vector<double> out;
    for (int k = 0; k < steps; ++k) out.push_back(t0 + (t1 - t0) * k / (steps - 1));
    return out;
}

void write_text(const std::string &path, const std::string &text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError(0, "cannot write '" + path + "'");
    f << text;
}

std::string summary_path(const std::string &summary, const std::string &out) {
    if (!summary.empty() || out.empty()) return summary;
    const auto dot = out.find_last_of('.');
    const auto slash = out.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? out.substr(0, dot) : out) + ".json";
}

// JSON number at the table precision; null when not finite.
nlohmann::ordered_json json_number(double x) {
    return std::isfinite(x) ? nlohmann::ordered_json(std::stod(format_number(x))) : nlohmann::ordered_json();
}

std::string row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto &c : cells) s += (s.empty() ? "" : ",") + c;
    return s + '\n';
}

// Pulls "--config <path>" / "--config=<path>" out of the arguments.
std::optional<std::string> take_config(std::vector<std::string> &args) {
    std::optional<std::string> path;
    for (std::size_t k = 0; k < args.size();) {
        if (args[k] == "--config") {
            if (k + 1 >= args.size()) throw ConfigError(0, "--config needs a path");
            path = args[k + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(k), args.begin() + static_cast<std::ptrdiff_t>(k) + 2);
        } else if (args[k].rfind("--config=", 0) == 0) {
            path = args[k].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
        } else {
            ++k;
        }
    }
    return path;
}

// File values become "--key=value" arguments placed before the user's own,
// unless the flag was given on the command line.
void merge_config(const ConfigFile &file, const std::vector<Command *> &commands, std::vector<std::string> &args) {
    Command *cmd = nullptr;
    std::size_t at = 0;
    for (std::size_t k = 0; k < args.size() && !cmd; ++k) {
        for (auto *c : commands) {
            if (args[k] == c->name()) {
                cmd = c;
                at = k + 1;
            }
        }
    }
    if (!cmd) return;  // CLI11 reports the missing subcommand
    std::vector<std::string> injected;
    for (const auto &e : file.entries) {
        const std::string flag = flag_name(e.key);
        if (cmd->app()->get_option_no_throw(flag) == nullptr)
            throw ConfigError(e.line, "unknown key '" + e.key + "' for " + cmd->name());
        bool given = false;
        for (const auto &a : args) given = given || a == flag || a.rfind(flag + "=", 0) == 0;
        if (!given) injected.push_back(flag + "=" + e.value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
}

// --- subcommands -----------------------------------------------------------

int run_verify_eig(const Common &c, const Command &cmd) {
    const XYHamiltonian h(c.geometry(), c.jx, c.jy);
    std::ostringstream os;
    write_header(os, cmd.name(), cmd.resolved());
    os << "variant,energy,residual\n";
    double worst = 0.0;
    for (auto v : kAllVariants) {
        const double r = verify_eigenstate(h, v);
        worst = std::max(worst, r);
        os << row({to_string(v), format_number(eig_energy(c.geometry(), v, c.jx, c.jy)), format_number(r)});
    }
    write_text(c.out, os.str());
    if (!(worst < 1e-10)) {
        std::cerr << "eigenstate residual " << worst << " exceeds 1e-10\n";
        return kExitNumerical;
    }
    return 0;
}

struct TeleportArgs {
    int e_pairs = 2;
    double t_max = 15.0;
    int t_steps = 31;
    double bloch_theta = 0.0, bloch_phi = 0.0;
    int haar_samples = 0;
    std::uint64_t seed = 1;
    std::string variant = "IZ";
};

int run_teleport_cmd(const Common &c, const TeleportArgs &a, const Command &cmd) {
    TeleportConfig cfg;
    cfg.geometry = c.geometry();
    cfg.jx = c.jx;
    cfg.jy = c.jy;
    cfg.variant = parse_variant(a.variant);
    cfg.a = {a.bloch_theta, a.bloch_phi};
    cfg.times = time_grid(0.0, a.t_max, a.t_steps);
    cfg.measured_pairs = default_measured_pairs(cfg.geometry, a.e_pairs, cfg.injection);
    cfg.evolve = c.evolve();
    if (a.haar_samples < 0) throw std::invalid_argument("haar-samples must be non-negative");
    std::mt19937_64 rng(a.seed);

    std::ostringstream os;
    write_header(os, cmd.name(), cmd.resolved());
    for (const auto &p : cfg.measured_pairs) os << "# measured_pair = " << to_string(p.left) << ' ' << to_string(p.right) << '\n';
    os << "t,P,F,F_stderr\n";
    for (const auto &r : teleport_responses(cfg)) {
        double p, f, se = 0.0;
        if (a.haar_samples > 0) {
            const auto h = haar_average_fidelity(r, a.haar_samples, rng);
            p = h.mean_probability;
            f = h.samples > 0 ? h.mean : std::nan("");
            se = h.stderr_mean;
        } else {
            const auto o = r.evaluate(cfg.a);
            p = o.probability;
            f = o.valid ? o.fidelity : std::nan("");
        }
        os << row({format_number(r.time()), format_number(p), format_number(f), format_number(se)});
    }
    write_text(c.out, os.str());
    return 0;
}

struct GapArgs {
    double t_min = 0.05, t_max = 1.0;
    int t_steps = 20;
    int row = 0;
    double arnoldi_tol = 1e-9;
    int arnoldi_dim = 80;
    std::string summary;
};

int run_engineer_gap(const Common &c, const GapArgs &a, const Command &cmd) {
    const KrausBuilder builder(c.geometry(), c.jx, c.jy, row_option(a.row));
    ArnoldiOptions opt;
    opt.tol = a.arnoldi_tol;
    opt.krylov_dim = a.arnoldi_dim;
    std::ostringstream os;
    write_header(os, cmd.name(), cmd.resolved());
    os << "# measured_pair = " << to_string(builder.target().pair.left) << ' ' << to_string(builder.target().pair.right) << '\n';
    os << "T,lambda2_re,lambda2_im,abs_lambda2,gap,residual\n";
    double best_t = 0.0, best_gap = -1.0;
    for (double t : time_grid(a.t_min, a.t_max, a.t_steps)) {
        const auto g = channel_gap_sectored(builder.build(t), opt);
        os << row({format_number(t), format_number(g.lambda2.real()), format_number(g.lambda2.imag()),
                   format_number(std::abs(g.lambda2)), format_number(g.gap), format_number(g.residual)});
        if (g.gap > best_gap) {
            best_gap = g.gap;
            best_t = t;
        }
    }
    write_text(c.out, os.str());
    const nlohmann::ordered_json j{{"argmax_T", json_number(best_t)}, {"max_gap", json_number(best_gap)}};
    const std::string sp = summary_path(a.summary, c.out);
    write_text(sp, j.dump(2) + "\n");
    return 0;
}

struct IterateArgs {
    double T = 0.4;
    int steps = 200;
    bool post_select = false;
    int row = 0;
    std::string summary;
};

int run_engineer_iterate(const Common &c, const IterateArgs &a, const Command &cmd) {
    const auto ch = build_kraus(c.geometry(), a.T, c.jx, c.jy, row_option(a.row));
    const auto steps = run_channel_iteration(ch, a.steps, a.post_select);
    const auto [far, near] = diagnostic_pairs(ch.geometry, ch.target.pair);
    std::ostringstream os;
    write_header(os, cmd.name(), cmd.resolved());
    os << "# measured_pair = " << to_string(ch.target.pair.left) << ' ' << to_string(ch.target.pair.right) << '\n';
    os << "# far_pair = " << to_string(far.left) << ' ' << to_string(far.right) << '\n';
    os << "# near_pair = " << to_string(near.left) << ' ' << to_string(near.right) << '\n';
    os << "n,F,S2,MI_far,MI_near,p_reset\n";
    int first = -1;
    double s2_max = 0.0;
    for (const auto &s : steps) {
        os << row({std::to_string(s.n), format_number(s.fidelity), format_number(s.s2), format_number(s.mi_far),
                   format_number(s.mi_near), format_number(s.p_reset)});
        if (first < 0 && s.fidelity > 0.99) first = s.n;
        s2_max = std::max(s2_max, s.s2);
    }
    write_text(c.out, os.str());
    nlohmann::ordered_json j{{"first_step_F_above_0.99", first >= 0 ? nlohmann::ordered_json(first) : nlohmann::ordered_json()},
                             {"final_F", json_number(steps.back().fidelity)},
                             {"max_S2", json_number(s2_max)},
                             {"final_S2", json_number(steps.back().s2)}};
    write_text(summary_path(a.summary, c.out), j.dump(2) + "\n");
    return 0;
}

struct TrajectoryArgs {
    double T = 0.4;
    int n_traj = 200;
    double fidelity_target = 0.99;
    int max_steps = 2000;
    std::uint64_t seed = 1;
    int row = 0;
    std::string summary;
};

int run_trajectories(const Common &c, const TrajectoryArgs &a, const Command &cmd) {
    TrajectoryConfig cfg;
    cfg.geometry = c.geometry();
    cfg.jx = c.jx;
    cfg.jy = c.jy;
    cfg.T = a.T;
    cfg.fidelity_target = a.fidelity_target;
    cfg.max_steps = a.max_steps;
    cfg.seed = a.seed;
    cfg.row = row_option(a.row);
    cfg.evolve = c.evolve();
    const auto res = run_ensemble(cfg, a.n_traj);
    std::ostringstream os;
    write_header(os, cmd.name(), cmd.resolved());
    os << "traj_id,n_tot,n_c,converged\n";
    for (std::size_t k = 0; k < res.runs.size(); ++k) {
        const auto &r = res.runs[k];
        os << row({std::to_string(k), std::to_string(r.n_tot), std::to_string(r.n_c), r.converged ? "1" : "0"});
    }
    write_text(c.out, os.str());
    nlohmann::ordered_json j{{"mean_n_tot", json_number(res.n_tot.mean)},     {"median_n_tot", json_number(res.n_tot.median)},
                             {"mode_n_tot", res.n_tot.mode},          {"mean_n_c", json_number(res.n_c.mean)},
                             {"median_n_c", json_number(res.n_c.median)},     {"mode_n_c", res.n_c.mode},
                             {"n_converged", res.n_converged},        {"n_traj", a.n_traj}};
    write_text(summary_path(a.summary, c.out), j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Rainbow-scar teleportation and state engineering experiments"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    std::string config_help;
    app.add_option("--config", config_help, "Key-value file; command-line flags take precedence");

    Common common;
    Command verify(app, "verify-eig", "Residuals of the four rainbow eigenstates");
    common.attach(verify);

    Common tc;
    TeleportArgs ta;
    Command tele(app, "teleport", "Teleportation fidelity and post-selection probability vs time");
    tc.attach(tele);
    tele.integer("e_pairs", ta.e_pairs, "Measured mirror pairs besides the injection pair");
    tele.real("t_max", ta.t_max, "Last time");
    tele.integer("t_steps", ta.t_steps, "Time points from 0 to t_max");
    tele.real("bloch_theta", ta.bloch_theta, "Input state polar angle");
    tele.real("bloch_phi", ta.bloch_phi, "Input state azimuth");
    tele.integer("haar_samples", ta.haar_samples, "Average over this many Haar-random inputs (0: the Bloch state)");
    tele.seed("seed", ta.seed, "Seed for Haar sampling");
    tele.text("variant", ta.variant, "Eigenstate variant")->check(CLI::IsMember({"IZ", "ZI", "XY", "YX"}));

    Common gc;
    GapArgs ga;
    Command gap(app, "engineer-gap", "Channel gap vs measurement period");
    gc.attach(gap);
    gap.real("t_min", ga.t_min, "First period");
    gap.real("t_max", ga.t_max, "Last period");
    gap.integer("t_steps", ga.t_steps, "Grid points");
    gap.integer("row", ga.row, "Row of the measured central pair (0: default)");
    gap.real("arnoldi_tol", ga.arnoldi_tol, "Ritz residual target");
    gap.integer("arnoldi_dim", ga.arnoldi_dim, "Arnoldi basis size")->check(CLI::Range(4, 1000));
    gap.text("summary", ga.summary, "JSON summary path");

    Common ic;
    IterateArgs ia;
    Command iter(app, "engineer-iterate", "Fidelity, entropy and mutual information along channel iterations");
    ic.attach(iter);
    iter.real("T", ia.T, "Measurement period");
    iter.integer("steps", ia.steps, "Channel applications");
    iter.flag("post_select", ia.post_select, "Keep only the 00/11 branches");
    iter.integer("row", ia.row, "Row of the measured central pair (0: default)");
    iter.text("summary", ia.summary, "JSON summary path");

    Common jc;
    TrajectoryArgs ja;
    Command traj(app, "trajectories", "Monte Carlo trajectories of the measure-and-reset protocol");
    jc.attach(traj);
    traj.real("T", ja.T, "Measurement period");
    traj.integer("n_traj", ja.n_traj, "Number of trajectories");
    traj.real("fidelity_target", ja.fidelity_target, "Stop once the fidelity reaches this value");
    traj.integer("max_steps", ja.max_steps, "Give up after this many measurements");
    traj.seed("seed", ja.seed, "Ensemble seed");
    traj.integer("row", ja.row, "Row of the measured central pair (0: default)");
    traj.text("summary", ja.summary, "JSON summary path");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (auto path = take_config(args)) merge_config(load_config(*path), {&verify, &tele, &gap, &iter, &traj}, args);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (verify.app()->parsed()) return run_verify_eig(common, verify);
        if (tele.app()->parsed()) return run_teleport_cmd(tc, ta, tele);
        if (gap.app()->parsed()) return run_engineer_gap(gc, ga, gap);
        if (iter.app()->parsed()) return run_engineer_iterate(ic, ia, iter);
        if (traj.app()->parsed()) return run_trajectories(jc, ja, traj);
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::out_of_range &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}
