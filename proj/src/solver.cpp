#include "psivolterra/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "psivolterra/frac_ops.hpp"

namespace psivolterra {

const char* to_string(ProblemKind kind) noexcept { return kind == ProblemKind::VIE ? "VIE" : "IDE"; }

SourceFn source_from_expr(const Expr& e) {
    return [e](double t, std::span<const double> x, std::span<double> out) {
        out[0] = e.eval({.t = t, .s = std::nullopt, .x = x[0]});
    };
}

KernelFn kernel_from_expr(const Expr& e) {
    return [e](double t, double s, std::span<const double> x, std::span<double> out) {
        out[0] = e.eval({.t = t, .s = s, .x = x[0]});
    };
}

MetricKind ProblemSpec::metric() const {
    return MetricKind{kind == ProblemKind::VIE ? MetricKind::Kind::VIE : MetricKind::Kind::IDE, phi};
}

void ProblemSpec::validate() const {
    params.validate();
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "problem dimension must be >= 1");
    if (!g || !K) throw Error(ErrorCode::InvalidArgument, "problem needs both g and K");
    for (double c : {L1, L2, L}) {
        if (!(c >= 0.0) || !std::isfinite(c))
            throw Error(ErrorCode::InvalidArgument, "Lipschitz and phi-condition constants must be finite and >= 0");
    }
    if (!(phi.grid() == grid)) throw Error(ErrorCode::GridMismatch, "phi is sampled on a different grid");
    metric().validate();
}

double contraction_factor(ProblemKind kind, double L1, double L2, double L) {
    if (kind == ProblemKind::VIE) return (L1 + L2) * L;
    return L1 + (L1 + L2 + L2 * L) * L;
}

double contraction_factor(const ProblemSpec& spec) { return contraction_factor(spec.kind, spec.L1, spec.L2, spec.L); }

namespace {

[[noreturn]] void rethrow_at(const Error& e, const Grid& grid, std::size_t n) {
    std::ostringstream os;
    os << e.what() << " (at node " << n << ", t=" << grid.node(n) << ")";
    throw Error(e.code(), os.str());
}

void require_state(const GridFunction& x, const ProblemSpec& spec) {
    if (x.dim() != spec.dim || !(x.grid() == spec.grid))
        throw Error(ErrorCode::GridMismatch, "state does not live on the problem's grid and dimension");
}

}  // namespace

GridFunction eval_source(const GridFunction& x, const ProblemSpec& spec) {
    require_state(x, spec);
    const Grid& grid = spec.grid;
    GridFunction out(grid, spec.dim);
    std::size_t n = 0;
    try {
        for (; n < grid.size(); ++n) spec.g(grid.node(n), x.row(n), out.row(n));
    } catch (const Error& e) {
        rethrow_at(e, grid, n);
    }
    return out;
}

GridFunction memory_integral(const GridFunction& x, const ProblemSpec& spec) {
    require_state(x, spec);
    const Grid& grid = spec.grid;
    const std::size_t dim = spec.dim;
    GridFunction out(grid, dim);
    std::vector<double> k(dim), acc(dim);
    std::size_t n = 0;
    try {
        for (n = 1; n < grid.size(); ++n) {
            const double tn = grid.node(n);
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j <= n; ++j) {
                spec.K(tn, grid.node(j), x.row(j), k);
                // Trapezoid weight of node j on [t_0, t_n].
                const double left = j > 0 ? grid.node(j) - grid.node(j - 1) : 0.0;
                const double right = j < n ? grid.node(j + 1) - grid.node(j) : 0.0;
                const double w = 0.5 * (left + right);
                for (std::size_t c = 0; c < dim; ++c) acc[c] += w * k[c];
            }
            std::copy(acc.begin(), acc.end(), out.row(n).begin());
        }
    } catch (const Error& e) {
        rethrow_at(e, grid, n);
    }
    return out;
}

GridFunction picard_map_vie(const GridFunction& x, const ProblemSpec& spec) {
    if (spec.kind != ProblemKind::VIE) throw Error(ErrorCode::InvalidArgument, "picard_map_vie needs a VIE problem");
    GridFunction out = eval_source(x, spec);
    const Grid& grid = spec.grid;
    const std::size_t dim = spec.dim;
    const auto weights = cached_weights(grid, spec.params.alpha);
    std::vector<double> k(dim);
    std::size_t n = 0;
    try {
        for (n = 1; n < grid.size(); ++n) {
            const double tn = grid.node(n);
            const double* w = weights->row(n);
            auto row = out.row(n);
            for (std::size_t j = 0; j <= n; ++j) {
                spec.K(tn, grid.node(j), x.row(j), k);
                for (std::size_t c = 0; c < dim; ++c) row[c] += w[j] * k[c];
            }
        }
    } catch (const Error& e) {
        rethrow_at(e, grid, n);
    }
    return out;
}

GridFunction picard_map_ide(const GridFunction& x, const ProblemSpec& spec) {
    if (spec.kind != ProblemKind::IDE) throw Error(ErrorCode::InvalidArgument, "picard_map_ide needs an IDE problem");
    GridFunction rhs = eval_source(x, spec);
    rhs += memory_integral(x, spec);
    return frac_integral(rhs, spec.params.alpha);
}

GridFunction picard_map(const GridFunction& x, const ProblemSpec& spec) {
    return spec.kind == ProblemKind::VIE ? picard_map_vie(x, spec) : picard_map_ide(x, spec);
}

NoConvergenceError::NoConvergenceError(const std::string& what, SolveResult partial)
    : Error(ErrorCode::NoConvergence, what), partial_(std::move(partial)) {}

SolveResult fixed_point_solve(const ProblemSpec& spec, const SolveOptions& opts) {
    spec.validate();
    if (!(opts.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    const double q = contraction_factor(spec);
    if (!(q < 1.0)) {
        std::ostringstream os;
        os << "contraction factor q = " << q << " >= 1; refusing to iterate";
        throw Error(ErrorCode::NonContractive, os.str());
    }
    GridFunction x = opts.x0 ? *opts.x0 : GridFunction(spec.grid, spec.dim);
    require_state(x, spec);
    x.require_finite();

    const MetricKind metric = spec.metric();
    SolveResult result{x, {}, {}};
    ConvergenceReport& rep = result.report;
    rep.q_used = q;
    rep.q_estimated = spec.lipschitz_estimated;
    if (opts.record_iterates) result.iterates.push_back(x);

    for (std::size_t k = 0; k < opts.maxit; ++k) {
        GridFunction next = picard_map(x, spec);
        const ExtendedDistance d = phi_distance(next, x, metric, spec.params);
        rep.successive_distances.push_back(d);
        ++rep.iterations;
        if (q == 0.0) rep.a_posteriori_bound = 0.0;
        else rep.a_posteriori_bound = d.is_infinite() ? d.value() : q / (1.0 - q) * d.value();
        x = std::move(next);
        if (opts.record_iterates) result.iterates.push_back(x);
        if (rep.a_posteriori_bound <= opts.tol) {
            rep.converged = true;
            break;
        }
    }
    result.x = x;
    if (!rep.converged) {
        std::ostringstream os;
        os << "no convergence after " << rep.iterations << " iterations (bound " << rep.a_posteriori_bound
           << " > tol " << opts.tol << ")";
        throw NoConvergenceError(os.str(), std::move(result));
    }
    return result;
}

LipschitzEstimate estimate_lipschitz(const ProblemSpec& spec, std::size_t samples, double lo, double hi) {
    if (samples < 2) throw Error(ErrorCode::InvalidArgument, "estimate_lipschitz needs samples >= 2");
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorCode::InvalidArgument, "degenerate state range for Lipschitz sampling");
    const Grid& grid = spec.grid;
    const std::size_t dim = spec.dim;

    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t n = static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(grid.intervals()) / static_cast<double>(samples - 1)));
        if (nodes.empty() || nodes.back() != n) nodes.push_back(n);
    }

    // States: an even sweep of the diagonal plus seeded scatter for dim > 1.
    std::vector<std::vector<double>> states;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> uni(lo, hi);
    for (std::size_t i = 0; i < samples; ++i) {
        std::vector<double> v(dim);
        const double diag = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
        for (std::size_t c = 0; c < dim; ++c) v[c] = (c == 0 || i % 2 == 0) ? diag : uni(rng);
        states.push_back(std::move(v));
    }

    auto sup_diff = [](std::span<const double> a, std::span<const double> b) {
        double m = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c]));
        return m;
    };

    LipschitzEstimate est;
    std::vector<std::vector<double>> fx(states.size(), std::vector<double>(dim));
    for (std::size_t n : nodes) {
        const double t = grid.node(n);
        for (std::size_t a = 0; a < states.size(); ++a) spec.g(t, states[a], fx[a]);
        for (std::size_t a = 0; a < states.size(); ++a)
            for (std::size_t b = a + 1; b < states.size(); ++b) {
                const double dx = sup_diff(states[a], states[b]);
                if (dx > 0.0) est.L1 = std::max(est.L1, sup_diff(fx[a], fx[b]) / dx);
            }
        for (std::size_t m : nodes) {
            if (m > n) break;
            const double s = grid.node(m);
            for (std::size_t a = 0; a < states.size(); ++a) spec.K(t, s, states[a], fx[a]);
            for (std::size_t a = 0; a < states.size(); ++a)
                for (std::size_t b = a + 1; b < states.size(); ++b) {
                    const double dx = sup_diff(states[a], states[b]);
                    if (dx > 0.0) est.L2 = std::max(est.L2, sup_diff(fx[a], fx[b]) / dx);
                }
        }
    }
    return est;
}

GridFunction ide_residual_check(const GridFunction& f0, const ProblemSpec& spec,
                                std::span<const double> weighted_initial) {
    require_state(f0, spec);
    GridFunction r = hilfer_derivative(f0, spec.params, weighted_initial);
    r -= eval_source(f0, spec);
    r -= memory_integral(f0, spec);
    return r;
}

}  // namespace psivolterra
