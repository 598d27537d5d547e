#include "internal.hpp"

#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/gap_solver.hpp"
#include "bcs/linear_criterion.hpp"
#include "bcs/potentials.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace bcs::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

using potentials::RadialPotential;

RadialPotential load_potential(const RunConfig& cfg) {
    try {
        return RadialPotential::parse(cfg.potential);
    } catch (const ParameterError& e) {
        throw UsageError(std::string("potential: ") + e.what());
    }
}

std::string flag_of(bool ok) { return ok ? "converged" : "not_converged"; }

Json command_tc(const RunConfig& cfg, bool& ok) {
    const RadialPotential v = load_potential(cfg);
    linear::TcOptions opts;
    opts.channels.clear();
    for (int l = 0; l <= cfg.channels; ++l) {
        opts.channels.push_back(l);
    }
    opts.tol = cfg.tol;
    opts.grid.n_outer = cfg.n_outer;
    opts.grid.n_inner = cfg.n_inner;
    const linear::TcResult r = linear::critical_temperature(v, cfg.mu, *cfg.lambda, opts);
    ok = r.zero || r.grid_report.converged;
    const std::string flag = r.zero ? "below_floor" : flag_of(r.grid_report.converged);
    Json o;
    o["tc"] = annotated(r.tc, flag);
    o["bracket"] = {r.bracket.first, r.bracket.second};
    o["channel"] = r.channel;
    o["zero"] = r.zero;
    o["grid"] = {{"nodes", r.grid_report.nodes},
                 {"refined_nodes", r.grid_report.refined_nodes},
                 {"w_min", r.grid_report.w_min},
                 {"cutoff", r.grid_report.cutoff},
                 {"criterion", r.grid_report.criterion},
                 {"refined_criterion", r.grid_report.refined_criterion},
                 {"converged", r.grid_report.converged}};
    o["warnings"] = r.warnings;
    if (!cfg.csv.empty()) {
        std::ostringstream csv;
        csv << "T,criterion\n";
        for (const auto& [t, f] : r.eigen_trace) {
            csv << format_csv_number(t) << ',' << format_csv_number(f) << '\n';
        }
        write_file(cfg.csv, csv.str());
        o["files"] = {{"eigen_trace", cfg.csv}};
    }
    return o;
}

gap::GapOptions gap_options(const RunConfig& cfg) {
    gap::GapOptions g;
    g.damping = cfg.damping;
    g.tol = cfg.gap_tol;
    g.max_iter = cfg.max_iter;
    g.n_outer = cfg.n_outer;
    g.n_inner = cfg.n_inner;
    return g;
}

Json command_gap(const RunConfig& cfg, bool& ok) {
    const RadialPotential v = load_potential(cfg);
    const double t = cfg.temperature.value_or(0.0);
    const gap::GapFunction g = gap::solve_gap(v, cfg.mu, *cfg.lambda, t, gap_options(cfg));
    ok = g.converged;
    const std::string flag = flag_of(g.converged);
    const gap::BCSState s = gap::derive_state(g);
    Json o;
    o["temperature"] = t;
    o["delta_fermi"] = annotated(g.at_fermi(), flag);
    o["xi"] = annotated(s.xi, flag);
    o["free_energy"] = annotated(s.free_energy, flag);
    o["gamma_jump"] = annotated(s.gamma_jump, flag);
    if (t == 0.0 && g.at_fermi() > 0.0) {
        o["mtilde"] = annotated(gap::mtilde(g), flag);
    }
    o["normal_state"] = g.normal_state;
    o["iterations"] = g.iterations;
    o["residual"] = g.residual;
    o["positivity_ok"] = g.positivity_ok;
    o["suspicious"] = g.suspicious;
    o["nodes"] = g.grid.size();
    o["warnings"] = g.warnings;
    if (!cfg.csv.empty()) {
        std::ostringstream csv;
        csv << "p,delta,E,alpha,gamma\n";
        const std::vector<double> e = g.quasiparticle_energies();
        for (std::size_t i = 0; i < g.grid.size(); ++i) {
            csv << format_csv_number(g.grid.nodes[i]) << ',' << format_csv_number(g.values[i])
                << ',' << format_csv_number(e[i]) << ',' << format_csv_number(s.alpha[i]) << ','
                << format_csv_number(s.gamma[i]) << '\n';
        }
        write_file(cfg.csv, csv.str());
        o["files"] = {{"gap_curve", cfg.csv}};
    }
    return o;
}

Json command_emu(const RunConfig& cfg) {
    const RadialPotential v = load_potential(cfg);
    const fermi::ChannelSpectrum s = fermi::emu(v, cfg.mu, cfg.ell_max);
    const std::string flag = s.truncation_stable ? "converged" : "truncation_unstable";
    Json o;
    Json table = Json::array();
    for (const auto& e : s.entries) {
        table.push_back({{"l", e.l}, {"e", e.e}});
    }
    o["channels"] = table;
    o["e_mu"] = annotated(s.e_min, flag);
    o["argmin_l"] = s.argmin_l;
    if (!cfg.csv.empty()) {
        std::ostringstream csv;
        csv << "l,e\n";
        for (const auto& e : s.entries) {
            csv << e.l << ',' << format_csv_number(e.e) << '\n';
        }
        write_file(cfg.csv, csv.str());
        o["files"] = {{"channels", cfg.csv}};
    }
    return o;
}

Json command_bmu(const RunConfig& cfg) {
    const RadialPotential v = load_potential(cfg);
    const fermi::BmuReport r = fermi::bmu(v, cfg.mu, *cfg.lambda);
    Json o;
    o["e_mu"] = annotated(r.e_mu, "converged");
    o["w_bar"] = annotated(r.w_bar, "converged");
    o["b_mu"] = annotated(r.b_mu, "converged");
    o["a0"] = annotated(r.a0, "converged");
    o["lambda_threshold"] = std::isfinite(r.lambda_threshold) ? Json(r.lambda_threshold)
                                                              : Json("inf");
    return o;
}

Json command_mmu(const RunConfig& cfg) {
    if (!cfg.temperature || !(*cfg.temperature > 0.0)) {
        throw UsageError("temperature must be positive for mmu");
    }
    const double m = fermi::mmu(cfg.mu, *cfg.temperature);
    Json o;
    o["m_mu"] = annotated(m, "converged");
    o["sqrt_mu_m_minus_log"] = std::sqrt(cfg.mu) * m - std::log(cfg.mu / *cfg.temperature);
    return o;
}

Json command_free_energy(const RunConfig& cfg, bool& ok) {
    const RadialPotential v = load_potential(cfg);
    const double t = cfg.temperature.value_or(0.0);
    const gap::GapFunction g = gap::solve_gap(v, cfg.mu, *cfg.lambda, t, gap_options(cfg));
    ok = g.converged;
    const std::string flag = flag_of(g.converged);
    const gap::BCSState s = gap::derive_state(g);
    const double normal = t > 0.0 ? gap::normal_free_energy(g.grid, t) : 0.0;
    Json o;
    o["temperature"] = t;
    o["free_energy"] = annotated(s.free_energy, flag);
    o["normal_free_energy"] = annotated(normal, "exact");
    o["difference"] = annotated(s.free_energy - normal, flag);
    o["delta_fermi"] = annotated(g.at_fermi(), flag);
    return o;
}

void add_common(CLI::App& app, RunConfig& cfg, std::string& config_file) {
    app.add_option("--config", config_file, "key=value config file");
    app.add_option("--potential", cfg.potential, "potential, e.g. gaussian:amp=-5,range=1");
    app.add_option("--mu", cfg.mu, "chemical potential");
    app.add_option("--lambda", cfg.lambda, "coupling");
    app.add_option("--temperature,-T", cfg.temperature, "temperature");
    app.add_option("--n-outer", cfg.n_outer, "outer quadrature nodes");
    app.add_option("--n-inner", cfg.n_inner, "Fermi-band quadrature nodes");
    app.add_option("--tol", cfg.tol, "relative T_c bisection tolerance");
    app.add_option("--gap-tol", cfg.gap_tol, "gap fixed-point tolerance");
    app.add_option("--damping", cfg.damping, "gap iteration damping");
    app.add_option("--max-iter", cfg.max_iter, "gap iteration budget");
    app.add_option("--ellmax", cfg.ell_max, "largest channel for emu");
    app.add_option("--channels", cfg.channels, "largest channel for tc");
    app.add_option("--output,-o", cfg.output, "JSON record path");
    app.add_option("--csv", cfg.csv, "CSV output path");
    app.add_option("--jobs,-j", cfg.jobs, "parallel jobs (default BCS_JOBS or 1)");
}

/// Config file first, then every flag given on the command line.
RunConfig merge(const CLI::App& sub, const RunConfig& flags, const std::string& config_file,
                const std::vector<std::string>& list_flags) {
    RunConfig cfg;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) {
            throw UsageError("cannot read config file '" + config_file + "'");
        }
        std::stringstream buf;
        buf << in.rdbuf();
        cfg = parse_config(buf.str());
    }
    auto given = [&](const char* name) { return sub.count(name) > 0; };
    if (given("--potential")) cfg.potential = flags.potential;
    if (given("--mu")) cfg.mu = flags.mu;
    if (given("--lambda")) cfg.lambda = flags.lambda;
    if (given("--temperature")) cfg.temperature = flags.temperature;
    if (given("--n-outer")) cfg.n_outer = flags.n_outer;
    if (given("--n-inner")) cfg.n_inner = flags.n_inner;
    if (given("--tol")) cfg.tol = flags.tol;
    if (given("--gap-tol")) cfg.gap_tol = flags.gap_tol;
    if (given("--damping")) cfg.damping = flags.damping;
    if (given("--max-iter")) cfg.max_iter = flags.max_iter;
    if (given("--ellmax")) cfg.ell_max = flags.ell_max;
    if (given("--channels")) cfg.channels = flags.channels;
    if (given("--output")) cfg.output = flags.output;
    if (given("--csv")) cfg.csv = flags.csv;
    if (given("--jobs")) cfg.jobs = flags.jobs;
    static const char* keys[] = {"lambda_ladder", "mu_ladder", "t_ladder", "budget"};
    for (std::size_t k = 0; k < list_flags.size(); ++k) {
        if (!list_flags[k].empty()) {
            set_config_value(cfg, keys[k], list_flags[k]);
        }
    }
    return cfg;
}

}  // namespace

Json annotated(double value, const std::string& flag) {
    return Json{{"value", value}, {"flag", flag}};
}

Json config_echo(const RunConfig& cfg) {
    Json c;
    c["potential"] = cfg.potential;
    c["mu"] = cfg.mu;
    c["lambda"] = cfg.lambda ? Json(*cfg.lambda) : Json(nullptr);
    c["lambda_ladder"] = cfg.lambda_ladder;
    c["mu_ladder"] = cfg.mu_ladder;
    c["temperature"] = cfg.temperature ? Json(*cfg.temperature) : Json(nullptr);
    c["t_ladder"] = cfg.t_ladder;
    c["n_outer"] = cfg.n_outer;
    c["n_inner"] = cfg.n_inner;
    c["tol"] = cfg.tol;
    c["gap_tol"] = cfg.gap_tol;
    c["damping"] = cfg.damping;
    c["max_iter"] = cfg.max_iter;
    c["ell_max"] = cfg.ell_max;
    c["channels"] = cfg.channels;
    return c;
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::filesystem::create_directories(target.parent_path());
    }
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) {
            throw UsageError("cannot write '" + path + "'");
        }
        f << text;
    }
    std::filesystem::rename(tmp, target);
}

void emit_record(const RunConfig& cfg, const Json& record, std::ostream& out) {
    const std::string text = record.dump(2) + "\n";
    out << text;
    if (!cfg.output.empty()) {
        write_file(cfg.output, text);
    }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"BCS gap equation, critical temperature and weak-coupling asymptotics", "bcs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    RunConfig flags;
    std::string config_file;
    std::string lambdas;
    std::string mus;
    std::string temps;
    std::string budget;
    std::string suite;

    const char* names[] = {"tc", "gap", "emu", "bmu", "mmu", "free-energy", "scan"};
    const char* help[] = {"critical temperature from the linear criterion",
                          "solve the gap equation",
                          "channel eigenvalues of V_mu",
                          "effective scattering length b_mu and Born a0",
                          "the scalar function m_mu(T)",
                          "free energy of the solved state against the normal state",
                          "ladders over lambda, mu and T"};
    std::vector<CLI::App*> subs;
    for (std::size_t k = 0; k < std::size(names); ++k) {
        CLI::App* sub = app.add_subcommand(names[k], help[k]);
        add_common(*sub, flags, config_file);
        subs.push_back(sub);
    }
    CLI::App* scan = subs.back();
    scan->add_option("--lambdas", lambdas, "comma separated couplings");
    scan->add_option("--mus", mus, "comma separated chemical potentials");
    scan->add_option("--temps", temps, "comma separated temperatures");
    scan->add_option("--budget", budget, "maximum number of scan points");
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("suite", suite, "fast or full")->required();
    verify->add_option("--jobs,-j", flags.jobs, "parallel jobs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        if (verify->parsed()) {
            if (suite != "fast" && suite != "full") {
                throw UsageError("unknown suite '" + suite + "' (expected fast or full)");
            }
            return run_verify(suite, flags, out);
        }
        CLI::App* sub = nullptr;
        std::string command;
        for (std::size_t k = 0; k < subs.size(); ++k) {
            if (subs[k]->parsed()) {
                sub = subs[k];
                command = names[k];
            }
        }
        const RunConfig cfg = merge(*sub, flags, config_file, {lambdas, mus, temps, budget});
        if (command == "scan") {
            validate(cfg, false);
            return run_scan(cfg, out);
        }
        const bool needs_lambda =
            command == "tc" || command == "gap" || command == "bmu" || command == "free-energy";
        validate(cfg, needs_lambda);
        bool ok = true;
        Json outputs;
        if (command == "tc") {
            outputs = command_tc(cfg, ok);
        } else if (command == "gap") {
            outputs = command_gap(cfg, ok);
        } else if (command == "emu") {
            outputs = command_emu(cfg);
        } else if (command == "bmu") {
            outputs = command_bmu(cfg);
        } else if (command == "mmu") {
            outputs = command_mmu(cfg);
        } else {
            outputs = command_free_energy(cfg, ok);
        }
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        Json record;
        record["command"] = command;
        record["config"] = config_echo(cfg);
        record["outputs"] = outputs;
        record["converged"] = ok;
        record["metadata"] = {{"version", kVersion},
                              {"timestamp", static_cast<long long>(std::time(nullptr))},
                              {"wall_time_s", wall}};
        emit_record(cfg, record, out);
        return ok ? kExitOk : kExitConvergence;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const AccuracyError& e) {
        err << "error: " << e.what() << " (coarse " << e.coarse() << ", fine " << e.fine()
            << ")\n";
        return kExitConvergence;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace bcs::cli
