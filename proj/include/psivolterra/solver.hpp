#pragma once

// Picard maps for the fractional Volterra integral equation (VIE)
//   x(t) = g(t, x(t)) + (1/Gamma(alpha)) int_0^t psi'(s)(psi(t)-psi(s))^(alpha-1) K(t, s, x(s)) ds
// and the integro-differential equation (IDE)
//   D^{alpha,beta;psi} x(t) = g(t, x(t)) + int_0^t K(t, s, x(s)) ds,
// whose map is x -> I^alpha [g(., x) + int_0^. K(., s, x(s)) ds], together
// with the fixed-point iteration and its a-posteriori certificate.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psivolterra/core.hpp"
#include "psivolterra/expr.hpp"

namespace psivolterra {

enum class ProblemKind { VIE, IDE };

const char* to_string(ProblemKind kind) noexcept;

/// g(t, x) written into out (size dim).
using SourceFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// K(t, s, x) written into out (size dim).
using KernelFn = std::function<void(double t, double s, std::span<const double> x, std::span<double> out)>;

/// Scalar g(t, x) from an expression in t and x.
SourceFn source_from_expr(const Expr& e);
/// Scalar K(t, s, x) from an expression in t, s and x.
KernelFn kernel_from_expr(const Expr& e);

struct ProblemSpec {
    std::string name;
    ProblemKind kind = ProblemKind::VIE;
    SourceFn g;
    KernelFn K;
    FractionalParams params{0.5, 1.0};
    Grid grid;
    std::size_t dim = 1;
    double L1 = 0.0;
    double L2 = 0.0;
    /// Majorant phi sampled on grid, strictly positive.
    GridFunction phi;
    double L = 0.0;
    bool lipschitz_estimated = false;

    MetricKind metric() const;
    /// Throws InvalidArgument when an invariant does not hold.
    void validate() const;
};

/// VIE: (L1 + L2) L.  IDE: L1 + (L1 + L2 + L2 L) L.
double contraction_factor(ProblemKind kind, double L1, double L2, double L);
double contraction_factor(const ProblemSpec& spec);

GridFunction picard_map_vie(const GridFunction& x, const ProblemSpec& spec);
GridFunction picard_map_ide(const GridFunction& x, const ProblemSpec& spec);
/// Dispatches on spec.kind.
GridFunction picard_map(const GridFunction& x, const ProblemSpec& spec);

/// Samples of g(t_n, x_n).
GridFunction eval_source(const GridFunction& x, const ProblemSpec& spec);
/// int_0^{t_n} K(t_n, s, x(s)) ds by composite trapezoid over the grid nodes.
GridFunction memory_integral(const GridFunction& x, const ProblemSpec& spec);

struct ConvergenceReport {
    std::size_t iterations = 0;
    /// d(x_{k+1}, x_k) for k = 0 .. iterations-1.
    std::vector<ExtendedDistance> successive_distances;
    double q_used = 0.0;
    bool q_estimated = false;
    /// q/(1-q) times the last successive distance.
    double a_posteriori_bound = 0.0;
    bool converged = false;
};

struct SolveOptions {
    double tol = 1e-10;
    std::size_t maxit = 200;
    /// Starting iterate; zero when empty.
    std::optional<GridFunction> x0;
    /// Keep x_0 .. x_final in SolveResult::iterates.
    bool record_iterates = false;
};

struct SolveResult {
    GridFunction x;
    ConvergenceReport report;
    std::vector<GridFunction> iterates;
};

/// Thrown when maxit is reached; carries the report and the last iterate.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, SolveResult partial);
    const SolveResult& partial() const noexcept { return partial_; }

private:
    SolveResult partial_;
};

/// Iterates x_{k+1} = Lambda x_k until q/(1-q) d(x_{k+1}, x_k) <= tol in
/// the problem's weighted metric. Throws Error(NonContractive) when q >= 1 and
/// NoConvergenceError when maxit is exhausted.
SolveResult fixed_point_solve(const ProblemSpec& spec, const SolveOptions& opts = {});

struct LipschitzEstimate {
    double L1 = 0.0;
    double L2 = 0.0;
};

/// Largest difference quotients of g and K over `samples` grid times (and
/// s <= t for K) and `samples` state values spread over [lo, hi] per
/// component. These are lower bounds for the true constants.
LipschitzEstimate estimate_lipschitz(const ProblemSpec& spec, std::size_t samples, double lo, double hi);

/// D^{alpha,beta;psi} f0 - g(., f0) - int_0^. K(., s, f0(s)) ds, signed and
/// component-wise. `weighted_initial` is forwarded to hilfer_derivative.
GridFunction ide_residual_check(const GridFunction& f0, const ProblemSpec& spec,
                                std::span<const double> weighted_initial = {});

}  // namespace psivolterra
