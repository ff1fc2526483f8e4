#pragma once

// Ulam-Hyers certification: hypothesis checks, stability constants, and the
// comparison of a candidate function with the solved fixed point.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "psivolterra/core.hpp"
#include "psivolterra/solver.hpp"

namespace psivolterra {

enum class Verdict { Pass, Fail, Vacuous };

const char* to_string(Verdict v) noexcept;

struct ConditionCheck {
    bool ok = false;
    double max_ratio = 0.0;
};

/// I^{alpha;psi} phi <= L phi at every node but t_0.
ConditionCheck check_phi_condition(const GridFunction& phi, double L, double alpha);

/// int_0^t phi(s) ds <= L phi(t) at every node but t_0 (composite trapezoid).
/// The IDE contraction factor silently relies on this when L2 > 0.
ConditionCheck check_memory_condition(const GridFunction& phi, double L);

/// Weighted magnitude of f - g(., f) - fractional kernel integral of K(., s, f).
GridFunction residual_vie(const GridFunction& f, const ProblemSpec& spec);

/// Weighted magnitude of D f - g(., f) - int_0^. K(., s, f(s)) ds.
GridFunction residual_ide(const GridFunction& f, const ProblemSpec& spec,
                          std::span<const double> weighted_initial = {});

/// VIE: 1 / (1 - (L1 + L2) L).  IDE: (1 + L) / (1 - [L1 + (L1 + L2 + L2 L) L]).
/// Throws Error(NonContractive) when the contraction factor is >= 1.
double uh_constant(ProblemKind kind, double L1, double L2, double L);
double uh_constant(const ProblemSpec& spec);

/// f0 + epsilon phi (psi - psi(0))^(gamma - 1); the t_0 value is left at f0
/// when gamma < 1. The perturbation's weighted initial value is epsilon phi(t_0).
GridFunction perturb(const GridFunction& f0, const GridFunction& phi, double epsilon, double gamma);

struct StabilityCertificate {
    ProblemKind kind = ProblemKind::VIE;
    std::vector<double> t;
    std::vector<double> residual_profile;
    std::vector<double> phi_profile;
    bool residual_ok = false;
    double residual_max_ratio = 0.0;
    double phi_condition_ratio = 0.0;
    double L_declared = 0.0;
    bool phi_condition_ok = false;
    /// IDE with L2 > 0 only; informational, not part of the verdict.
    bool memory_condition_checked = false;
    double memory_condition_ratio = 0.0;
    double L1 = 0.0;
    double L2 = 0.0;
    double q = 0.0;
    /// NaN when q >= 1.
    double C = 0.0;
    /// Empty unless every hypothesis held and f0 was solved.
    std::vector<double> distance_profile;
    std::vector<double> ratio_profile;
    double max_ratio = 0.0;
    double tol = 0.0;
    double slack = 0.0;
    std::size_t solver_iterations = 0;
    double solver_bound = 0.0;
    Verdict verdict = Verdict::Vacuous;
    std::string reason;
    bool lipschitz_estimated = false;
};

struct CertifyOptions {
    /// Relative slack on max_ratio.
    double tol = 1e-6;
    SolveOptions solve{};
    /// Weighted initial value of the candidate (gamma < 1, IDE only).
    std::vector<double> weighted_initial;
};

/// Never throws NonContractive: a failed hypothesis gives a VACUOUS
/// certificate. NoConvergenceError from the solve does propagate.
StabilityCertificate certify(const GridFunction& f, const ProblemSpec& spec, const CertifyOptions& opts = {});

/// Flat key = value text.
void write_report(std::ostream& os, const StabilityCertificate& cert);

/// Columns t,residual,phi,distance,ratio; distance and ratio are empty for
/// a vacuous certificate.
void write_profile_csv(std::ostream& os, const StabilityCertificate& cert);

}  // namespace psivolterra
