#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConvergence = 2;

/// Invalid command line or configuration; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Run parameters. A config file holds `key = value` lines (`#` starts a comment);
/// list values are comma separated. Command-line flags override file values.
struct RunConfig {
    std::string potential = "gaussian:amp=-5,range=1";
    double mu = 1.0;
    std::optional<double> lambda;
    std::vector<double> lambda_ladder;
    std::vector<double> mu_ladder;
    std::optional<double> temperature;
    std::vector<double> t_ladder;
    int n_outer = 200;
    int n_inner = 240;
    double tol = 1e-6;        // relative tolerance of the T_c bisection
    double gap_tol = 1e-10;   // gap fixed-point residual
    double damping = 0.5;
    int max_iter = 500;
    int ell_max = 8;          // emu channels
    int channels = 4;         // T_c uses l = 0..channels
    std::string output;       // JSON record path (stdout always receives it)
    std::string csv;          // CSV curve / table path
    int jobs = 0;             // 0: BCS_JOBS or 1
    std::size_t budget = 1000;
};

/// Keys accepted in config files, in canonical order.
const std::vector<std::string>& config_keys();

/// Applies one `key=value` assignment; throws UsageError naming the key on failure.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

RunConfig parse_config(std::string_view text);

/// Normalized text: every key in canonical order, shortest round-trip numbers.
std::string emit_config(const RunConfig& cfg);

/// Checks the physical parameters; throws UsageError ("mu must be positive", ...).
void validate(const RunConfig& cfg, bool needs_lambda);

/// Effective job count: cfg.jobs, else BCS_JOBS, else 1.
unsigned effective_jobs(const RunConfig& cfg);

/// Shortest representation that parses back to the same double.
std::string format_number(double x);

/// 17 significant digits, for CSV output.
std::string format_csv_number(double x);

/// Entry point shared by the `bcs` executable; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string measured;
    std::string target;
    double seconds = 0.0;
};

/// Acceptance checks. `full` adds the coupling-ladder extrapolations and the gap-solver suite.
std::vector<CriterionResult> run_acceptance(bool full, std::ostream* progress = nullptr);

/// Same, restricted to the listed criterion ids.
std::vector<CriterionResult> run_acceptance_ids(const std::vector<int>& ids,
                                                std::ostream* progress = nullptr);

std::string format_criterion(const CriterionResult& r);

}  // namespace bcs::cli
