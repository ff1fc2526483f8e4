#pragma once

// Config-driven batch runs behind the command-line tool and pv_run.
//
// A config is one JSON object. Unknown keys anywhere are rejected, and every
// expression is parsed while loading, before any computation starts.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psivolterra/core.hpp"
#include "psivolterra/expr.hpp"
#include "psivolterra/scenarios.hpp"
#include "psivolterra/solver.hpp"

namespace psivolterra {

enum class Command { Solve, Certify, Operators, Converge };

const char* version() noexcept;

const char* to_string(Command c) noexcept;
std::optional<Command> parse_command(std::string_view name);

/// Exit statuses of a run.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitNumeric = 2,
    kExitVacuous = 3,
    kExitFail = 4,
};

int exit_code_for(ErrorCode code) noexcept;

struct InlineProblem {
    ProblemKind kind;
    Expr g;
    Expr K;
    /// Closed-form solution, used by converge.
    std::optional<Expr> oracle;
};

struct ResolventProblem {
    Matrix A;
    Expr Phi;
    std::vector<Expr> forcing;
    std::optional<double> M;
};

struct RunConfig {
    std::optional<Command> command;

    /// Exactly one of these describes the problem (none for operators).
    std::optional<std::string> catalog;
    std::optional<InlineProblem> inline_problem;
    std::optional<ResolventProblem> resolvent;

    double T = 1.0;
    /// Catalog default when absent.
    std::optional<std::size_t> N;
    double r = 1.0;
    PsiScale psi = PsiScale::identity();
    std::optional<FractionalParams> params;

    std::optional<double> L1;
    std::optional<double> L2;
    bool lipschitz_estimated = false;
    std::size_t lipschitz_samples = 16;
    double lipschitz_lo = -1.0;
    double lipschitz_hi = 1.0;

    std::optional<Expr> phi;
    std::optional<double> L;

    /// certify: perturb the solved f0 by epsilon phi, or check `candidate`.
    std::optional<double> epsilon;
    std::vector<Expr> candidate;
    double certify_tol = 1e-6;

    /// operators (and operator converge studies).
    std::optional<Expr> operator_f;
    std::optional<Expr> integral_oracle;

    std::optional<std::string> csv;
    std::optional<std::string> report;

    double tol = 1e-10;
    std::size_t maxit = 200;
};

/// Throws Error(Config) or ParseError (with the offending key in the message).
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

/// The problem described by `cfg` on N intervals (cfg.N or the catalog default
/// when absent). Estimates L1, L2 when the config asks for it.
ProblemSpec build_problem(const RunConfig& cfg, std::optional<std::size_t> N = std::nullopt);

/// Runs one command and writes its files under out_dir. Errors propagate.
/// The return value is the exit status for a run that finished.
int run(Command command, const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out);

/// Full front end: parses the command and config file, runs, and maps every
/// error to its exit status with a one-line message on err.
int run_file(std::string_view command, const std::filesystem::path& config, const std::filesystem::path& out_dir,
             std::ostream& out, std::ostream& err);

}  // namespace psivolterra
