#include "psivolterra/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "psivolterra/frac_ops.hpp"
#include "psivolterra/io.hpp"

namespace psivolterra {

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Vacuous: return "VACUOUS";
    }
    return "?";
}

namespace {

void require_phi(const GridFunction& phi) { MetricKind{MetricKind::Kind::VIE, phi}.validate(); }

ConditionCheck ratio_check(const GridFunction& lhs, const GridFunction& phi, double L) {
    ConditionCheck out;
    // Both sides vanish at t_0 under continuous extension.
    for (std::size_t j = 1; j < phi.size(); ++j) out.max_ratio = std::max(out.max_ratio, lhs.at(j) / phi.at(j));
    out.ok = out.max_ratio <= L;
    return out;
}

}  // namespace

ConditionCheck check_phi_condition(const GridFunction& phi, double L, double alpha) {
    require_phi(phi);
    return ratio_check(frac_integral(phi, alpha), phi, L);
}

ConditionCheck check_memory_condition(const GridFunction& phi, double L) {
    require_phi(phi);
    const Grid& grid = phi.grid();
    GridFunction cumulative(grid, 1);
    for (std::size_t j = 1; j < grid.size(); ++j)
        cumulative.at(j) = cumulative.at(j - 1) + 0.5 * (grid.node(j) - grid.node(j - 1)) * (phi.at(j) + phi.at(j - 1));
    return ratio_check(cumulative, phi, L);
}

GridFunction residual_vie(const GridFunction& f, const ProblemSpec& spec) {
    GridFunction r = f;
    r -= picard_map_vie(f, spec);
    return weighted_profile(r, spec.params.gamma());
}

GridFunction residual_ide(const GridFunction& f, const ProblemSpec& spec, std::span<const double> weighted_initial) {
    return weighted_profile(ide_residual_check(f, spec, weighted_initial), spec.params.gamma());
}

double uh_constant(ProblemKind kind, double L1, double L2, double L) {
    const double q = contraction_factor(kind, L1, L2, L);
    if (!(q < 1.0)) {
        std::ostringstream os;
        os << "contraction factor q = " << q << " >= 1; no stability constant";
        throw Error(ErrorCode::NonContractive, os.str());
    }
    if (kind == ProblemKind::VIE) return 1.0 / (1.0 - q);
    return (1.0 + L) / (1.0 - q);
}

double uh_constant(const ProblemSpec& spec) { return uh_constant(spec.kind, spec.L1, spec.L2, spec.L); }

GridFunction perturb(const GridFunction& f0, const GridFunction& phi, double epsilon, double gamma) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1]");
    if (phi.dim() != 1 || !(phi.grid() == f0.grid())) throw Error(ErrorCode::GridMismatch, "phi must be scalar on f0's grid");
    const Grid& grid = f0.grid();
    GridFunction out = f0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double bump = epsilon * phi.at(j);
        if (gamma < 1.0) {
            if (j == 0) continue;
            bump *= std::pow(grid.shifted(j), gamma - 1.0);
        }
        for (double& v : out.row(j)) v += bump;
    }
    return out;
}

StabilityCertificate certify(const GridFunction& f, const ProblemSpec& spec, const CertifyOptions& opts) {
    spec.validate();
    if (f.dim() != spec.dim || !(f.grid() == spec.grid))
        throw Error(ErrorCode::GridMismatch, "candidate does not live on the problem's grid and dimension");

    StabilityCertificate cert;
    cert.kind = spec.kind;
    cert.tol = opts.tol;
    cert.L_declared = spec.L;
    cert.L1 = spec.L1;
    cert.L2 = spec.L2;
    cert.lipschitz_estimated = spec.lipschitz_estimated;
    const auto nodes = spec.grid.nodes();
    cert.t.assign(nodes.begin(), nodes.end());
    cert.phi_profile.assign(spec.phi.values().begin(), spec.phi.values().end());

    const ConditionCheck phi_check = check_phi_condition(spec.phi, spec.L, spec.params.alpha);
    cert.phi_condition_ratio = phi_check.max_ratio;
    cert.phi_condition_ok = phi_check.ok;
    if (spec.kind == ProblemKind::IDE && spec.L2 > 0.0) {
        cert.memory_condition_checked = true;
        cert.memory_condition_ratio = check_memory_condition(spec.phi, spec.L).max_ratio;
    }

    cert.q = contraction_factor(spec);
    cert.C = cert.q < 1.0 ? uh_constant(spec) : std::numeric_limits<double>::quiet_NaN();

    const GridFunction residual = spec.kind == ProblemKind::VIE ? residual_vie(f, spec)
                                                                : residual_ide(f, spec, opts.weighted_initial);
    cert.residual_profile.assign(residual.values().begin(), residual.values().end());
    cert.residual_ok = true;
    for (std::size_t j = 0; j < residual.size(); ++j) {
        cert.residual_max_ratio = std::max(cert.residual_max_ratio, residual.at(j) / spec.phi.at(j));
        if (!(residual.at(j) <= spec.phi.at(j))) cert.residual_ok = false;
    }

    std::string reasons;
    auto add_reason = [&](const std::string& r) { reasons += reasons.empty() ? r : "; " + r; };
    if (!cert.residual_ok) add_reason("residual exceeds phi");
    if (!cert.phi_condition_ok) add_reason("phi-condition I^alpha phi <= L phi fails");
    if (!(cert.q < 1.0)) add_reason("contraction factor q >= 1");
    if (!reasons.empty()) {
        cert.verdict = Verdict::Vacuous;
        cert.reason = reasons;
        return cert;
    }

    const SolveResult solved = fixed_point_solve(spec, opts.solve);
    cert.solver_iterations = solved.report.iterations;
    cert.solver_bound = solved.report.a_posteriori_bound;

    const GridFunction distance = metric_profile(f, solved.x, spec.metric(), spec.params, opts.weighted_initial);
    cert.distance_profile.assign(distance.values().begin(), distance.values().end());
    cert.ratio_profile.resize(distance.size());
    cert.max_ratio = 0.0;
    double min_phi = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < distance.size(); ++j) {
        cert.ratio_profile[j] = distance.at(j) / (cert.C * spec.phi.at(j));
        cert.max_ratio = std::max(cert.max_ratio, cert.ratio_profile[j]);
        min_phi = std::min(min_phi, spec.phi.at(j));
    }
    cert.slack = opts.tol + cert.solver_bound / min_phi;
    if (cert.max_ratio <= 1.0 + cert.slack) {
        cert.verdict = Verdict::Pass;
    } else {
        cert.verdict = Verdict::Fail;
        cert.reason = "hypotheses hold but distance exceeds C phi";
    }
    return cert;
}

void write_report(std::ostream& os, const StabilityCertificate& c) {
    auto num = [](double v) { return format_double(v); };
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "verdict = " << to_string(c.verdict) << '\n';
    if (!c.reason.empty()) os << "reason = " << c.reason << '\n';
    os << "kind = " << to_string(c.kind) << '\n'
       << "residual_ok = " << flag(c.residual_ok) << '\n'
       << "residual_max_ratio = " << num(c.residual_max_ratio) << '\n'
       << "phi_condition_ok = " << flag(c.phi_condition_ok) << '\n'
       << "phi_condition_ratio = " << num(c.phi_condition_ratio) << '\n'
       << "L_declared = " << num(c.L_declared) << '\n';
    if (c.memory_condition_checked) os << "memory_condition_ratio = " << num(c.memory_condition_ratio) << '\n';
    os << "L1 = " << num(c.L1) << '\n'
       << "L2 = " << num(c.L2) << '\n'
       << "lipschitz_estimated = " << flag(c.lipschitz_estimated) << '\n'
       << "q = " << num(c.q) << '\n'
       << "C = " << num(c.C) << '\n';
    if (!c.distance_profile.empty()) {
        os << "max_ratio = " << num(c.max_ratio) << '\n'
           << "tol = " << num(c.tol) << '\n'
           << "slack = " << num(c.slack) << '\n'
           << "solver_iterations = " << c.solver_iterations << '\n'
           << "solver_bound = " << num(c.solver_bound) << '\n';
    }
}

void write_profile_csv(std::ostream& os, const StabilityCertificate& c) {
    os << "t,residual,phi,distance,ratio\n";
    const bool solved = !c.distance_profile.empty();
    for (std::size_t j = 0; j < c.t.size(); ++j) {
        os << format_double(c.t[j]) << ',' << format_double(c.residual_profile[j]) << ','
           << format_double(c.phi_profile[j]) << ',';
        if (solved) os << format_double(c.distance_profile[j]) << ',' << format_double(c.ratio_profile[j]);
        else os << ',';
        os << '\n';
    }
}

}  // namespace psivolterra
