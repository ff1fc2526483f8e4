#pragma once

// Ready-made problems: the linear resolvent-type matrix example
//   D^{alpha,beta;psi} x = A x + f(t) + int_0^t Phi(t - s) A x(s) ds
// with its admissible window for L, and a small named catalog.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psivolterra/core.hpp"
#include "psivolterra/expr.hpp"
#include "psivolterra/solver.hpp"

namespace psivolterra {

using Matrix = std::vector<std::vector<double>>;

/// Max row-sum (infinity) norm. Throws InvalidArgument unless A is square and nonempty.
double row_max_norm(const Matrix& A);

struct ResolventScenario {
    Matrix A;
    /// Kernel Phi(tau), written in the variable t (standing for tau = t - s).
    Expr Phi;
    /// Forcing f(t), one expression per state component.
    std::vector<Expr> forcing;
    double T = 1.0;
    std::size_t N = 256;
    double r = 1.0;
    PsiScale psi = PsiScale::identity();
    FractionalParams params{0.5, 1.0};
    /// Majorant phi(t).
    Expr phi;
    double L = 0.0;
    /// sup |Phi| on [0, T]; sampled when absent.
    std::optional<double> M;
};

/// sup of |Phi| over 4097 evenly spaced points of [0, T].
double kernel_sup(const Expr& Phi, double T);

/// Upper end of the open window 0 < L < (1 - |A|) / (|A| (1 + M + M T)).
/// Infinite when |A| = 0.
double resolvent_window(double normA, double M, double T);

/// IDE with g = A x + f(t), K = Phi(t - s) A x, L1 = |A|, L2 = M |A|.
/// Throws Error(WindowViolation) when L is outside the window.
ProblemSpec resolvent_spec(const ResolventScenario& s);

struct W11Check {
    bool ok = false;
    /// int_0^T |Phi| + |Phi'| on the finer of the two resolutions.
    double estimate = 0.0;
    double coarse_estimate = 0.0;
};

/// Truncated-domain W^{1,1} surrogate: midpoint-rule integral of |Phi| plus
/// the total variation over cell midpoints, at n and 2n cells. ok when both
/// are finite and differ by less than 5%.
W11Check w11_kernel_check(const Expr& Phi, double T, std::size_t n);

struct CatalogEntry {
    std::string name;
    std::string description;
    std::size_t default_N;
    std::function<ProblemSpec(std::size_t N)> build;
    /// Closed-form solution of the scalar problem, when known.
    std::function<double(double t)> oracle;
};

const std::vector<CatalogEntry>& catalog();

/// Throws Error(Config) for an unknown name.
const CatalogEntry& catalog_entry(const std::string& name);

/// The resolvent scenario used by the catalog entry of the same name.
ResolventScenario catalog_resolvent_scenario(std::size_t N = 256);

}  // namespace psivolterra
