#include "bcs/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace bcs::cli {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return std::string(s.substr(a, b - a));
}

double to_double(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw UsageError("invalid value for '" + std::string(key) + "': '" + t + "'");
    }
    return x;
}

long to_integer(std::string_view key, std::string_view text) {
    const std::string t = trim(text);
    long x = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw UsageError("invalid integer for '" + std::string(key) + "': '" + t + "'");
    }
    return x;
}

std::vector<double> to_list(std::string_view key, std::string_view text) {
    std::vector<double> out;
    const std::string t = trim(text);
    if (t.empty()) {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = t.find(',', start);
        out.push_back(to_double(key, std::string_view(t).substr(start, comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) {
            s += ',';
        }
        s += format_number(xs[i]);
    }
    return s;
}

}  // namespace

std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_csv_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "potential", "mu",       "lambda",   "lambda_ladder", "mu_ladder", "temperature",
        "t_ladder",  "n_outer",  "n_inner",  "tol",           "gap_tol",   "damping",
        "max_iter",  "ell_max",  "channels", "output",        "csv",       "jobs",
        "budget"};
    return keys;
}

void set_config_value(RunConfig& cfg, std::string_view key_in, std::string_view value) {
    const std::string key = trim(key_in);
    if (key == "potential") {
        cfg.potential = trim(value);
    } else if (key == "mu") {
        cfg.mu = to_double(key, value);
    } else if (key == "lambda") {
        const std::string t = trim(value);
        cfg.lambda = t.empty() ? std::nullopt : std::optional<double>(to_double(key, t));
    } else if (key == "lambda_ladder") {
        cfg.lambda_ladder = to_list(key, value);
    } else if (key == "mu_ladder") {
        cfg.mu_ladder = to_list(key, value);
    } else if (key == "temperature") {
        const std::string t = trim(value);
        cfg.temperature = t.empty() ? std::nullopt : std::optional<double>(to_double(key, t));
    } else if (key == "t_ladder") {
        cfg.t_ladder = to_list(key, value);
    } else if (key == "n_outer") {
        cfg.n_outer = static_cast<int>(to_integer(key, value));
    } else if (key == "n_inner") {
        cfg.n_inner = static_cast<int>(to_integer(key, value));
    } else if (key == "tol") {
        cfg.tol = to_double(key, value);
    } else if (key == "gap_tol") {
        cfg.gap_tol = to_double(key, value);
    } else if (key == "damping") {
        cfg.damping = to_double(key, value);
    } else if (key == "max_iter") {
        cfg.max_iter = static_cast<int>(to_integer(key, value));
    } else if (key == "ell_max") {
        cfg.ell_max = static_cast<int>(to_integer(key, value));
    } else if (key == "channels") {
        cfg.channels = static_cast<int>(to_integer(key, value));
    } else if (key == "output") {
        cfg.output = trim(value);
    } else if (key == "csv") {
        cfg.csv = trim(value);
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(to_integer(key, value));
    } else if (key == "budget") {
        const long b = to_integer(key, value);
        if (b < 1) {
            throw UsageError("invalid value for 'budget': must be at least 1");
        }
        cfg.budget = static_cast<std::size_t>(b);
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(number) + ": expected key = value");
        }
        set_config_value(cfg, std::string_view(line).substr(0, eq),
                         std::string_view(line).substr(eq + 1));
    }
    return cfg;
}

std::string emit_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "potential = " << cfg.potential << '\n';
    out << "mu = " << format_number(cfg.mu) << '\n';
    out << "lambda = " << (cfg.lambda ? format_number(*cfg.lambda) : "") << '\n';
    out << "lambda_ladder = " << join(cfg.lambda_ladder) << '\n';
    out << "mu_ladder = " << join(cfg.mu_ladder) << '\n';
    out << "temperature = " << (cfg.temperature ? format_number(*cfg.temperature) : "") << '\n';
    out << "t_ladder = " << join(cfg.t_ladder) << '\n';
    out << "n_outer = " << cfg.n_outer << '\n';
    out << "n_inner = " << cfg.n_inner << '\n';
    out << "tol = " << format_number(cfg.tol) << '\n';
    out << "gap_tol = " << format_number(cfg.gap_tol) << '\n';
    out << "damping = " << format_number(cfg.damping) << '\n';
    out << "max_iter = " << cfg.max_iter << '\n';
    out << "ell_max = " << cfg.ell_max << '\n';
    out << "channels = " << cfg.channels << '\n';
    out << "output = " << cfg.output << '\n';
    out << "csv = " << cfg.csv << '\n';
    out << "jobs = " << cfg.jobs << '\n';
    out << "budget = " << cfg.budget << '\n';
    return out.str();
}

void validate(const RunConfig& cfg, bool needs_lambda) {
    if (!(cfg.mu > 0.0)) {
        throw UsageError("mu must be positive");
    }
    for (double m : cfg.mu_ladder) {
        if (!(m > 0.0)) {
            throw UsageError("mu must be positive (mu_ladder)");
        }
    }
    if (cfg.lambda && !(*cfg.lambda > 0.0)) {
        throw UsageError("lambda must be positive");
    }
    for (double l : cfg.lambda_ladder) {
        if (!(l > 0.0)) {
            throw UsageError("lambda must be positive (lambda_ladder)");
        }
    }
    if (needs_lambda && !cfg.lambda) {
        throw UsageError("lambda is required");
    }
    if (cfg.temperature && !(*cfg.temperature >= 0.0)) {
        throw UsageError("temperature must be nonnegative");
    }
    for (double t : cfg.t_ladder) {
        if (!(t >= 0.0)) {
            throw UsageError("temperature must be nonnegative (t_ladder)");
        }
    }
    if (cfg.n_outer < 2 || cfg.n_inner < 1) {
        throw UsageError("n_outer must be >= 2 and n_inner >= 1");
    }
    if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) {
        throw UsageError("tol must lie in (0, 1)");
    }
    if (!(cfg.gap_tol > 0.0)) {
        throw UsageError("gap_tol must be positive");
    }
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) {
        throw UsageError("damping must lie in (0, 1]");
    }
    if (cfg.max_iter < 1) {
        throw UsageError("max_iter must be at least 1");
    }
    if (cfg.ell_max < 0 || cfg.channels < 0) {
        throw UsageError("ell_max and channels must be nonnegative");
    }
    if (cfg.jobs < 0) {
        throw UsageError("jobs must be nonnegative");
    }
}

unsigned effective_jobs(const RunConfig& cfg) {
    if (cfg.jobs > 0) {
        return static_cast<unsigned>(cfg.jobs);
    }
    if (const char* env = std::getenv("BCS_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) {
            return static_cast<unsigned>(j);
        }
    }
    return 1;
}

}  // namespace bcs::cli
