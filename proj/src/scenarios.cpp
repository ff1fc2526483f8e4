#include "psivolterra/scenarios.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "psivolterra/frac_ops.hpp"

namespace psivolterra {

double row_max_norm(const Matrix& A) {
    if (A.empty()) throw Error(ErrorCode::InvalidArgument, "matrix is empty");
    double norm = 0.0;
    for (const auto& row : A) {
        if (row.size() != A.size()) throw Error(ErrorCode::InvalidArgument, "matrix must be square");
        double sum = 0.0;
        for (double a : row) {
            if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "matrix entries must be finite");
            sum += std::abs(a);
        }
        norm = std::max(norm, sum);
    }
    return norm;
}

double kernel_sup(const Expr& Phi, double T) {
    constexpr int kSamples = 4096;
    double m = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
        const double tau = T * static_cast<double>(i) / kSamples;
        m = std::max(m, std::abs(Phi.eval({.t = tau})));
    }
    return m;
}

double resolvent_window(double normA, double M, double T) {
    if (normA == 0.0) return std::numeric_limits<double>::infinity();
    return (1.0 - normA) / (normA * (1.0 + M + M * T));
}

ProblemSpec resolvent_spec(const ResolventScenario& s) {
    const double a = row_max_norm(s.A);
    const std::size_t dim = s.A.size();
    if (a > 1.0) throw Error(ErrorCode::InvalidArgument, "resolvent scenario needs |A| <= 1");
    if (s.forcing.size() != dim) throw Error(ErrorCode::InvalidArgument, "forcing needs one expression per component");
    const double M = s.M ? *s.M : kernel_sup(s.Phi, s.T);
    if (!(M >= 0.0) || !std::isfinite(M)) throw Error(ErrorCode::InvalidArgument, "kernel bound M must be finite");
    const double upper = resolvent_window(a, M, s.T);
    if (!(s.L > 0.0 && s.L < upper)) {
        std::ostringstream os;
        os << "L = " << s.L << " outside the admissible window (0, " << upper << ") for |A| = " << a << ", M = " << M;
        throw Error(ErrorCode::WindowViolation, os.str());
    }

    const Grid grid = make_grid(s.T, s.N, s.r, s.psi);
    const Matrix A = s.A;
    const std::vector<Expr> forcing = s.forcing;
    const Expr Phi = s.Phi;
    const Expr phi = s.phi;

    ProblemSpec spec{
        .name = "resolvent",
        .kind = ProblemKind::IDE,
        .g =
            [A, forcing](double t, std::span<const double> x, std::span<double> out) {
                for (std::size_t i = 0; i < A.size(); ++i) {
                    double acc = forcing[i].eval({.t = t});
                    for (std::size_t j = 0; j < A.size(); ++j) acc += A[i][j] * x[j];
                    out[i] = acc;
                }
            },
        .K =
            [A, Phi](double t, double s_, std::span<const double> x, std::span<double> out) {
                const double k = Phi.eval({.t = t - s_});
                for (std::size_t i = 0; i < A.size(); ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < A.size(); ++j) acc += A[i][j] * x[j];
                    out[i] = k * acc;
                }
            },
        .params = s.params,
        .grid = grid,
        .dim = dim,
        .L1 = a,
        .L2 = M * a,
        .phi = GridFunction::sample(grid, [&](double t) { return phi.eval({.t = t}); }),
        .L = s.L,
        .lipschitz_estimated = false,
    };
    spec.validate();
    return spec;
}

W11Check w11_kernel_check(const Expr& Phi, double T, std::size_t n) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "w11_kernel_check needs n >= 2");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "w11_kernel_check needs T > 0");
    // Midpoints avoid evaluating at tau = 0, where admissible-looking kernels
    // such as 1/tau blow up; the blow-up then shows as growth under refinement.
    auto estimate = [&](std::size_t cells) {
        const double h = T / static_cast<double>(cells);
        double integral = 0.0;
        double variation = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            const double v = Phi.eval({.t = (static_cast<double>(i) + 0.5) * h});
            integral += h * std::abs(v);
            if (i > 0) variation += std::abs(v - prev);
            prev = v;
        }
        return integral + variation;
    };
    W11Check out;
    out.coarse_estimate = estimate(n);
    out.estimate = estimate(2 * n);
    const bool finite = std::isfinite(out.coarse_estimate) && std::isfinite(out.estimate);
    const double scale = std::max(std::abs(out.estimate), std::abs(out.coarse_estimate));
    out.ok = finite && (scale == 0.0 || std::abs(out.estimate - out.coarse_estimate) < 0.05 * scale);
    return out;
}

namespace {

GridFunction sample_phi(const Grid& grid, const char* text) {
    const Expr e = Expr::parse(text);
    return GridFunction::sample(grid, [&](double t) { return e.eval({.t = t}); });
}

ProblemSpec scalar_spec(std::string name, ProblemKind kind, const char* g, const char* K, FractionalParams params,
                        Grid grid, double L1, double L2, const char* phi, double L) {
    GridFunction phi_samples = sample_phi(grid, phi);
    ProblemSpec spec{
        .name = std::move(name),
        .kind = kind,
        .g = source_from_expr(Expr::parse(g)),
        .K = kernel_from_expr(Expr::parse(K)),
        .params = params,
        .grid = grid,
        .dim = 1,
        .L1 = L1,
        .L2 = L2,
        .phi = std::move(phi_samples),
        .L = L,
        .lipschitz_estimated = false,
    };
    spec.validate();
    return spec;
}

}  // namespace

ResolventScenario catalog_resolvent_scenario(std::size_t N) {
    // Constant phi keeps the Caputo-type (beta = 1) derivative of phi at zero;
    // the flat scale psi = 0.05 t makes I^alpha 1 <= 0.3 hold on [0, 1].
    return ResolventScenario{
        .A = {{0.5}},
        .Phi = Expr::parse("exp(-t)"),
        .forcing = {Expr::parse("1")},
        .T = 1.0,
        .N = N,
        .r = 1.0,
        .psi = PsiScale::affine(0.05, 0.0),
        .params = {0.5, 1.0},
        .phi = Expr::parse("1"),
        .L = 0.3,
        .M = std::nullopt,
    };
}

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {
            "linear-ml",
            "VIE x = 1 + I^0.5 (0.25 x); solution E_0.5(0.25 t^0.5)",
            512,
            [](std::size_t N) {
                return scalar_spec("linear-ml", ProblemKind::VIE, "1", "0.25 * x", {0.5, 1.0},
                                   make_grid(1.0, N, 1.0, PsiScale::identity()), 0.0, 0.25, "exp(2 * t)", 0.75);
            },
            [](double t) { return mittag_leffler(0.5, 0.25 * std::sqrt(t)); },
        },
        {
            "classical-ode",
            "alpha = beta = 1: x' = 0.2 x + 1, x(0) = 0; solution 5 (e^{0.2 t} - 1)",
            256,
            [](std::size_t N) {
                return scalar_spec("classical-ode", ProblemKind::IDE, "0.2 * x + 1", "0", {1.0, 1.0},
                                   make_grid(1.0, N, 1.0, PsiScale::identity()), 0.2, 0.0, "exp(1.1 * t)", 0.65);
            },
            [](double t) { return 5.0 * std::expm1(0.2 * t); },
        },
        {
            "hadamard-flavor",
            "VIE on psi = ln(1 + t): x = cos t + 0.1 x + I^0.5 (0.2 e^{-(t-s)} x)",
            256,
            [](std::size_t N) {
                return scalar_spec("hadamard-flavor", ProblemKind::VIE, "cos(t) + 0.1 * x", "0.2 * exp(-(t - s)) * x",
                                   {0.5, 1.0}, make_grid(1.0, N, 1.0, PsiScale::log_shift()), 0.1, 0.2, "1", 1.0);
            },
            nullptr,
        },
        {
            "resolvent-example",
            "IDE D x = A x + 1 + int_0^t e^{-(t-s)} A x ds with A = [[0.5]], L = 0.3",
            256,
            [](std::size_t N) {
                ProblemSpec spec = resolvent_spec(catalog_resolvent_scenario(N));
                spec.name = "resolvent-example";
                return spec;
            },
            nullptr,
        },
    };
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : catalog())
        if (e.name == name) return e;
    throw Error(ErrorCode::Config, "unknown catalog problem '" + name + "'");
}

}  // namespace psivolterra
