#include "internal.hpp"

#include "bcs/asymptotics.hpp"
#include "bcs/errors.hpp"
#include "bcs/fermi_ops.hpp"
#include "bcs/gap_solver.hpp"
#include "bcs/linear_criterion.hpp"

#include <atomic>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace bcs::cli {

namespace {

namespace fs = std::filesystem;
using potentials::RadialPotential;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Point {
    double lambda = 0.0;
    double mu = 0.0;
    std::optional<double> t;
};

struct MuData {
    double e_mu = kNaN;
    double w_bar = kNaN;
    bool regime = false;  // lowest channel is l = 0 with e_mu < 0
};

struct Row {
    double tc = kNaN;
    double xi = kNaN;
    double e_mu = kNaN;
    double b_mu = kNaN;
    double drift_tc = kNaN;
    double drift_xi = kNaN;
    double ratio = kNaN;
    std::vector<std::string> flags;
    bool converged = true;
};

std::vector<Point> expand(const RunConfig& cfg) {
    std::vector<double> lambdas = cfg.lambda_ladder;
    if (lambdas.empty() && cfg.lambda) {
        lambdas.push_back(*cfg.lambda);
    }
    std::vector<double> mus = cfg.mu_ladder;
    if (mus.empty()) {
        mus.push_back(cfg.mu);
    }
    std::vector<std::optional<double>> ts;
    for (double t : cfg.t_ladder) {
        ts.emplace_back(t);
    }
    if (ts.empty()) {
        ts.emplace_back(cfg.temperature);
    }
    std::vector<Point> points;
    for (double l : lambdas) {
        for (double m : mus) {
            for (const auto& t : ts) {
                points.push_back({l, m, t});
            }
        }
    }
    return points;
}

void check_ladders(const RunConfig& cfg) {
    if (cfg.lambda_ladder.empty() && !cfg.lambda) {
        throw UsageError("scan needs lambda or lambda_ladder");
    }
    for (double l : cfg.lambda_ladder) {
        if (!(l > 0.0)) throw UsageError("lambda_ladder entries must be positive");
    }
    for (double m : cfg.mu_ladder) {
        if (!(m > 0.0)) throw UsageError("mu_ladder entries must be positive");
    }
    for (double t : cfg.t_ladder) {
        if (!(t >= 0.0)) throw UsageError("t_ladder entries must be nonnegative");
    }
}

MuData mu_data(const RadialPotential& v, double mu, int ell_max) {
    MuData d;
    const fermi::ChannelSpectrum s = fermi::emu(v, mu, ell_max);
    d.e_mu = s.entries.front().e;
    d.regime = s.argmin_l == 0 && d.e_mu < 0.0;
    if (d.regime) {
        d.w_bar = fermi::wmu_swave(v, mu);
    }
    return d;
}

Row compute(const RadialPotential& v, const Point& pt, const MuData& md, const RunConfig& cfg) {
    Row row;
    row.e_mu = md.e_mu;
    if (md.regime) {
        row.b_mu = fermi::bmu_value(pt.mu, pt.lambda, md.e_mu, md.w_bar);
    } else {
        row.flags.push_back("outside_swave_regime");
    }
    linear::TcOptions topts;
    topts.channels.clear();
    for (int l = 0; l <= cfg.channels; ++l) {
        topts.channels.push_back(l);
    }
    topts.tol = cfg.tol;
    topts.grid.n_outer = cfg.n_outer;
    topts.grid.n_inner = cfg.n_inner;
    try {
        const linear::TcResult tc = linear::critical_temperature(v, pt.mu, pt.lambda, topts);
        if (tc.zero) {
            row.flags.push_back("tc_below_floor");
        } else {
            row.tc = tc.tc;
            if (!tc.grid_report.converged) {
                row.flags.push_back("tc_grid_unconverged");
                row.converged = false;
            }
        }
    } catch (const AccuracyError&) {
        row.flags.push_back("tc_accuracy");
        row.converged = false;
    }

    gap::GapOptions g = asymptotics::ladder_gap_options();
    g.n_outer = cfg.n_outer;
    g.n_inner = cfg.n_inner;
    const double t = pt.t.value_or(0.0);
    if (t == 0.0 && row.b_mu < 0.0) {
        g.initial = asymptotics::predict_xi_from_b(pt.mu, row.b_mu);
    }
    try {
        const gap::GapFunction delta = gap::solve_gap(v, pt.mu, pt.lambda, t, g);
        if (!delta.converged) {
            row.flags.push_back("gap_unconverged");
            row.converged = false;
        }
        if (delta.normal_state) {
            row.flags.push_back("normal_state");
        }
        if (delta.suspicious) {
            row.flags.push_back("suspicious_collapse");
        }
        row.xi = gap::energy_gap(delta);
    } catch (const ConvergenceError&) {
        row.flags.push_back("gap_unconverged");
        row.converged = false;
    }

    const double shift = row.b_mu < 0.0 ? std::numbers::pi / (2.0 * std::sqrt(pt.mu) * row.b_mu)
                                        : kNaN;
    if (row.tc > 0.0) {
        row.drift_tc = std::log(pt.mu / row.tc) + shift;
    }
    if (row.xi > 0.0) {
        row.drift_xi = std::log(pt.mu / row.xi) + shift;
        if (row.tc > 0.0) {
            row.ratio = row.xi / row.tc;
        }
    }
    return row;
}

std::string csv_value(double x) { return std::isnan(x) ? "nan" : format_csv_number(x); }

std::string header(bool with_t) {
    return std::string("lambda,mu,") + (with_t ? "T," : "") +
           "tc,xi,e_mu,b_mu,drift_tc,drift_xi,ratio,flags\n";
}

std::string format_row(const Point& pt, const Row& r, bool with_t) {
    std::ostringstream s;
    s << csv_value(pt.lambda) << ',' << csv_value(pt.mu) << ',';
    if (with_t) {
        s << csv_value(pt.t.value_or(0.0)) << ',';
    }
    s << csv_value(r.tc) << ',' << csv_value(r.xi) << ',' << csv_value(r.e_mu) << ','
      << csv_value(r.b_mu) << ',' << csv_value(r.drift_tc) << ',' << csv_value(r.drift_xi)
      << ',' << csv_value(r.ratio) << ',';
    if (r.flags.empty()) {
        s << "ok";
    }
    for (std::size_t k = 0; k < r.flags.size(); ++k) {
        s << (k ? ";" : "") << r.flags[k];
    }
    s << '\n';
    return s.str();
}

double parse_field(const std::string& s) {
    return s == "nan" ? kNaN : std::stod(s);
}

/// Reads back a row written by format_row.
Row parse_row(const std::string& line, bool with_t) {
    std::vector<std::string> f;
    std::stringstream ss(line.substr(0, line.find_last_not_of("\r\n") + 1));
    for (std::string item; std::getline(ss, item, ',');) {
        f.push_back(item);
    }
    const std::size_t base = with_t ? 3 : 2;
    if (f.size() != base + 8) {
        throw std::runtime_error("malformed part file");
    }
    Row r;
    r.tc = parse_field(f[base]);
    r.xi = parse_field(f[base + 1]);
    r.e_mu = parse_field(f[base + 2]);
    r.b_mu = parse_field(f[base + 3]);
    r.drift_tc = parse_field(f[base + 4]);
    r.drift_xi = parse_field(f[base + 5]);
    r.ratio = parse_field(f[base + 6]);
    std::stringstream fl(f[base + 7]);
    for (std::string item; std::getline(fl, item, ';');) {
        if (item != "ok") {
            r.flags.push_back(item);
        }
    }
    for (const std::string& flag : r.flags) {
        if (flag == "tc_grid_unconverged" || flag == "tc_accuracy" || flag == "gap_unconverged") {
            r.converged = false;
        }
    }
    return r;
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

Json fit_json(const asymptotics::LimitFit& f) {
    return Json{{"limit", f.limit},
                {"slope", f.slope},
                {"residual", f.residual},
                {"limit_stderr", f.limit_stderr},
                {"points", f.points}};
}

}  // namespace

int run_scan(const RunConfig& cfg, std::ostream& out) {
    check_ladders(cfg);
    const std::vector<Point> points = expand(cfg);
    if (points.size() > cfg.budget) {
        throw UsageError("scan has " + std::to_string(points.size()) +
                         " points, budget is " + std::to_string(cfg.budget));
    }
    const RadialPotential v = [&] {
        try {
            return RadialPotential::parse(cfg.potential);
        } catch (const ParameterError& e) {
            throw UsageError(std::string("potential: ") + e.what());
        }
    }();
    const bool with_t = !cfg.t_ladder.empty() || cfg.temperature.has_value();

    // Completed points live in <csv>.parts/, keyed by index and guarded by the config text.
    fs::path parts;
    if (!cfg.csv.empty()) {
        parts = cfg.csv + ".parts";
        RunConfig key = cfg;
        key.output.clear();
        key.csv.clear();
        key.jobs = 0;
        const std::string manifest = emit_config(key);
        if (fs::exists(parts / "manifest") && read_text(parts / "manifest") != manifest) {
            fs::remove_all(parts);
        }
        fs::create_directories(parts);
        write_file((parts / "manifest").string(), manifest);
    }
    auto part_path = [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%06zu.csv", i);
        return parts / name;
    };

    std::vector<std::optional<Row>> rows(points.size());
    std::size_t resumed = 0;
    if (!parts.empty()) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (fs::exists(part_path(i))) {
                try {
                    rows[i] = parse_row(read_text(part_path(i)), with_t);
                    ++resumed;
                } catch (const std::exception&) {
                    fs::remove(part_path(i));
                }
            }
        }
    }

    std::map<double, MuData> mus;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!rows[i] && !mus.contains(points[i].mu)) {
            mus[points[i].mu] = mu_data(v, points[i].mu, cfg.ell_max);
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            if (rows[i]) {
                continue;
            }
            try {
                Row r = compute(v, points[i], mus.at(points[i].mu), cfg);
                if (!parts.empty()) {
                    write_file(part_path(i).string(), format_row(points[i], r, with_t));
                }
                rows[i] = std::move(r);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const unsigned jobs = std::max<std::size_t>(
        1, std::min<std::size_t>(effective_jobs(cfg), points.size()));
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::string csv = header(with_t);
    bool all_converged = true;
    Json table = Json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Row& r = *rows[i];
        csv += format_row(points[i], r, with_t);
        all_converged = all_converged && r.converged;
        auto num = [&](double x, const char* flag) {
            return std::isnan(x) ? Json(nullptr) : annotated(x, flag);
        };
        const char* conv = r.converged ? "converged" : "not_converged";
        Json entry;
        entry["lambda"] = points[i].lambda;
        entry["mu"] = points[i].mu;
        if (with_t) entry["T"] = points[i].t.value_or(0.0);
        entry["tc"] = num(r.tc, conv);
        entry["xi"] = num(r.xi, conv);
        entry["e_mu"] = num(r.e_mu, "converged");
        entry["b_mu"] = num(r.b_mu, "converged");
        entry["drift_tc"] = num(r.drift_tc, conv);
        entry["drift_xi"] = num(r.drift_xi, conv);
        entry["ratio"] = num(r.ratio, conv);
        entry["flags"] = r.flags;
        table.push_back(entry);
    }
    if (!cfg.csv.empty()) {
        write_file(cfg.csv, csv);
    }

    // Extrapolation in lambda for every (mu, T) group with at least 3 couplings.
    Json extrapolation = Json::array();
    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < points.size(); ++i) {
        groups[{points[i].mu, points[i].t.value_or(0.0)}].push_back(i);
    }
    for (const auto& [key, idx] : groups) {
        std::vector<std::pair<double, double>> dtc, dxi, ratio, leading;
        for (std::size_t i : idx) {
            const Row& r = *rows[i];
            if (!(r.tc > 0.0) || std::isnan(r.drift_tc) || std::isnan(r.ratio)) {
                continue;
            }
            dtc.emplace_back(points[i].lambda, r.drift_tc);
            dxi.emplace_back(points[i].lambda, r.drift_xi);
            ratio.emplace_back(points[i].lambda, r.ratio);
            leading.emplace_back(points[i].lambda, points[i].lambda * std::log(key.first / r.tc));
        }
        if (dtc.size() < 3) {
            continue;
        }
        const double e_mu = (*rows[idx.front()]).e_mu;
        Json g;
        g["mu"] = key.first;
        if (with_t) g["T"] = key.second;
        g["drift_tc"] = fit_json(asymptotics::extract_limit(dtc));
        g["drift_xi"] = fit_json(asymptotics::extract_limit(dxi));
        g["ratio"] = fit_json(asymptotics::extract_limit(ratio));
        g["leading"] = fit_json(asymptotics::extract_limit(leading));
        g["targets"] = {{"drift_tc", asymptotics::kDriftTcLimit},
                        {"drift_xi", asymptotics::kDriftXiLimit},
                        {"ratio", asymptotics::kUniversalRatio},
                        {"leading", -1.0 / e_mu}};
        extrapolation.push_back(g);
    }

    Json record;
    record["command"] = "scan";
    record["config"] = config_echo(cfg);
    Json outputs;
    outputs["points"] = points.size();
    outputs["rows"] = table;
    if (!extrapolation.empty()) {
        outputs["extrapolation"] = extrapolation;
    }
    if (!cfg.csv.empty()) {
        outputs["files"] = {{"table", cfg.csv}};
    }
    record["outputs"] = outputs;
    record["converged"] = all_converged;
    record["metadata"] = {{"version", "1.0.0"},
                          {"timestamp", static_cast<long long>(std::time(nullptr))},
                          {"resumed_points", resumed}};
    emit_record(cfg, record, out);
    return all_converged ? kExitOk : kExitConvergence;
}

}  // namespace bcs::cli
