#include "psivolterra/frac_ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

namespace psivolterra {

namespace {

// Integrals of the two hat functions on [u_k, u_{k+1}] against
// (u_n - u)^(alpha-1), without the 1/Gamma(alpha) factor.
// a = u_n - u_k, h = u_{k+1} - u_k, b = u_n - u_{k+1} = a - h.
struct HatPair {
    double left;
    double right;
};

HatPair hat_integrals(double a, double h, double b, double alpha) {
    const double x = h / a;
    if (x <= 0.5) {
        // Binomial series of (1 - x theta)^(alpha-1); every term is
        // nonnegative, so the weights are too.
        double c = 1.0;
        double left = 0.0;
        double right = 0.0;
        for (int m = 0; m < 200; ++m) {
            const double dm = static_cast<double>(m);
            const double r_term = c / (dm + 2.0);
            const double l_term = c / ((dm + 1.0) * (dm + 2.0));
            right += r_term;
            left += l_term;
            if (r_term <= 1e-18 * right) break;
            c *= x * (dm + 1.0 - alpha) / (dm + 1.0);
            if (c == 0.0) break;
        }
        const double scale = h * std::pow(a, alpha - 1.0);
        return {scale * left, scale * right};
    }
    const double a_pow = std::pow(a, alpha);
    const double b_pow = b > 0.0 ? std::pow(b, alpha) : 0.0;
    const double first = (a_pow - b_pow) / alpha;
    const double second = (a_pow * a - b_pow * b) / (alpha + 1.0);
    // Left hat is (v - b)/h, right hat is (a - v)/h with v = u_n - u.
    return {(second - b * first) / h, (a * first - second) / h};
}

}  // namespace

QuadratureWeights::QuadratureWeights(const Grid& grid, double alpha) : grid_(grid), alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quadrature order must lie in (0, 1]");
    const std::size_t n_nodes = grid.size();
    const auto u = grid.shifted();
    const double inv_gamma = 1.0 / std::tgamma(alpha);
    w_.assign(n_nodes * (n_nodes + 1) / 2, 0.0);
    for (std::size_t n = 1; n < n_nodes; ++n) {
        double* row = w_.data() + n * (n + 1) / 2;
        for (std::size_t k = 0; k < n; ++k) {
            const double a = u[n] - u[k];
            const double h = u[k + 1] - u[k];
            const double b = u[n] - u[k + 1];
            const HatPair p = hat_integrals(a, h, b, alpha);
            row[k] += p.left * inv_gamma;
            row[k + 1] += p.right * inv_gamma;
        }
    }
}

QuadratureWeights quad_weights(const Grid& grid, double alpha) { return QuadratureWeights(grid, alpha); }

namespace {

using CacheKey = std::tuple<double, std::size_t, double, int, std::vector<double>, double>;

struct WeightCache {
    std::mutex mutex;
    std::map<CacheKey, std::shared_ptr<const QuadratureWeights>> entries;
};

WeightCache& weight_cache() {
    static WeightCache cache;
    return cache;
}

constexpr std::size_t kMaxCachedMatrices = 48;

}  // namespace

std::shared_ptr<const QuadratureWeights> cached_weights(const Grid& grid, double alpha) {
    const CacheKey key{grid.final_time(), grid.intervals(), grid.grading(), static_cast<int>(grid.psi().kind()),
                       grid.psi().params(), alpha};
    auto& cache = weight_cache();
    {
        std::lock_guard lock(cache.mutex);
        if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
    }
    // Built outside the lock; a concurrent builder produces identical weights.
    auto built = std::make_shared<const QuadratureWeights>(grid, alpha);
    std::lock_guard lock(cache.mutex);
    if (cache.entries.size() >= kMaxCachedMatrices) cache.entries.clear();
    auto [it, inserted] = cache.entries.emplace(key, std::move(built));
    return it->second;
}

void clear_weight_cache() {
    auto& cache = weight_cache();
    std::lock_guard lock(cache.mutex);
    cache.entries.clear();
}

GridFunction frac_integral(const GridFunction& f, double alpha, const QuadratureWeights* weights) {
    if (alpha == 0.0) return f;
    std::shared_ptr<const QuadratureWeights> owned;
    if (weights == nullptr) {
        owned = cached_weights(f.grid(), alpha);
        weights = owned.get();
    } else {
        if (!(weights->grid() == f.grid())) throw Error(ErrorCode::GridMismatch, "weights belong to another grid");
        if (weights->alpha() != alpha) throw Error(ErrorCode::InvalidArgument, "weights were built for another order");
    }
    const std::size_t dim = f.dim();
    GridFunction out(f.grid(), dim);
    for (std::size_t n = 1; n < f.size(); ++n) {
        const double* w = weights->row(n);
        for (std::size_t c = 0; c < dim; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= n; ++j) acc += w[j] * f.at(j, c);
            out.at(n, c) = acc;
        }
    }
    return out;
}

GridFunction psi_derivative(const GridFunction& f) {
    const Grid& grid = f.grid();
    const std::size_t N = grid.intervals();
    if (N < 2) throw Error(ErrorCode::InvalidArgument, "psi_derivative needs N >= 2");
    const auto u = grid.shifted();
    const std::size_t dim = f.dim();
    GridFunction out(grid, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        {
            const double h1 = u[1] - u[0];
            const double h2 = u[2] - u[1];
            out.at(0, c) = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f.at(0, c) + (h1 + h2) / (h1 * h2) * f.at(1, c) -
                           h1 / (h2 * (h1 + h2)) * f.at(2, c);
        }
        for (std::size_t j = 1; j < N; ++j) {
            const double h1 = u[j] - u[j - 1];
            const double h2 = u[j + 1] - u[j];
            out.at(j, c) = -h2 / (h1 * (h1 + h2)) * f.at(j - 1, c) + (h2 - h1) / (h1 * h2) * f.at(j, c) +
                           h1 / (h2 * (h1 + h2)) * f.at(j + 1, c);
        }
        {
            const double h1 = u[N - 1] - u[N - 2];
            const double h2 = u[N] - u[N - 1];
            out.at(N, c) = h2 / (h1 * (h1 + h2)) * f.at(N - 2, c) - (h1 + h2) / (h1 * h2) * f.at(N - 1, c) +
                           (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f.at(N, c);
        }
    }
    return out;
}

namespace {

constexpr double kIntegerGap = 1e-3;

bool near_integer(double sigma) { return std::abs(sigma - std::round(sigma)) < kIntegerGap; }

// Starting weights s(n, i), i < m, added on top of the base rule so that each
// row integrates 1, u and every admissible u^sigma exactly.
struct StartingCorrection {
    std::size_t nodes = 0;
    std::vector<double> s;  // size() * nodes, row-major
};

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t m) {
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(a[r * m + c]) > std::abs(a[pivot * m + c])) pivot = r;
        if (a[pivot * m + c] == 0.0) throw Error(ErrorCode::InvalidArgument, "singular starting-weight system");
        if (pivot != c) {
            for (std::size_t k = 0; k < m; ++k) std::swap(a[c * m + k], a[pivot * m + k]);
            std::swap(b[c], b[pivot]);
        }
        for (std::size_t r = c + 1; r < m; ++r) {
            const double factor = a[r * m + c] / a[c * m + c];
            for (std::size_t k = c; k < m; ++k) a[r * m + k] -= factor * a[c * m + k];
            b[r] -= factor * b[c];
        }
    }
    std::vector<double> x(m);
    for (std::size_t c = m; c-- > 0;) {
        double acc = b[c];
        for (std::size_t k = c + 1; k < m; ++k) acc -= a[c * m + k] * x[k];
        x[c] = acc / a[c * m + c];
    }
    return x;
}

StartingCorrection build_correction(const QuadratureWeights& w, std::span<const double> sigmas) {
    const Grid& grid = w.grid();
    const auto u = grid.shifted();
    const double order = w.alpha();
    std::vector<double> exps = {0.0, 1.0};
    exps.insert(exps.end(), sigmas.begin(), sigmas.end());
    const std::size_t m = exps.size();
    StartingCorrection out;
    if (grid.size() < m) return out;
    out.nodes = m;
    out.s.assign(grid.size() * m, 0.0);

    auto power = [](double base, double e) { return e == 0.0 ? 1.0 : std::pow(base, e); };
    std::vector<double> a(m * m);
    for (std::size_t r = 0; r < m; ++r) {
        // Rows scaled by u_{m-1}^sigma to keep the system well balanced on graded grids.
        const double scale = power(u[m - 1], exps[r]);
        for (std::size_t i = 0; i < m; ++i) a[r * m + i] = power(u[i], exps[r]) / scale;
    }
    for (std::size_t n = 1; n < grid.size(); ++n) {
        const double* row = w.row(n);
        std::vector<double> rhs(m, 0.0);
        for (std::size_t r = 2; r < m; ++r) {
            const double e = exps[r];
            double approx = 0.0;
            for (std::size_t j = 1; j <= n; ++j) approx += row[j] * std::pow(u[j], e);
            const double exact = std::exp(std::lgamma(e + 1.0) - std::lgamma(e + 1.0 + order)) * std::pow(u[n], e + order);
            rhs[r] = (exact - approx) / power(u[m - 1], e);
        }
        const std::vector<double> x = solve_dense(a, rhs, m);
        std::copy(x.begin(), x.end(), out.s.begin() + static_cast<std::ptrdiff_t>(n * m));
    }
    return out;
}

using CorrectionKey = std::tuple<double, std::size_t, double, int, std::vector<double>, double, std::vector<double>>;

struct CorrectionCache {
    std::mutex mutex;
    std::map<CorrectionKey, std::shared_ptr<const StartingCorrection>> entries;
};

CorrectionCache& correction_cache() {
    static CorrectionCache cache;
    return cache;
}

std::shared_ptr<const StartingCorrection> cached_correction(const QuadratureWeights& w, std::vector<double> sigmas) {
    const Grid& grid = w.grid();
    CorrectionKey key{grid.final_time(), grid.intervals(), grid.grading(), static_cast<int>(grid.psi().kind()),
                      grid.psi().params(), w.alpha(), sigmas};
    auto& cache = correction_cache();
    {
        std::lock_guard lock(cache.mutex);
        if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
    }
    auto built = std::make_shared<const StartingCorrection>(build_correction(w, sigmas));
    std::lock_guard lock(cache.mutex);
    if (cache.entries.size() >= kMaxCachedMatrices) cache.entries.clear();
    auto [it, inserted] = cache.entries.emplace(std::move(key), std::move(built));
    return it->second;
}

}  // namespace

GridFunction frac_integral_corrected(const GridFunction& f, double alpha, std::span<const double> exponents) {
    if (alpha == 0.0) return f;
    const auto weights = cached_weights(f.grid(), alpha);
    GridFunction out = frac_integral(f, alpha, weights.get());

    std::vector<double> sigmas;
    for (double e : exponents) {
        if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "correction exponents must be positive");
        if (near_integer(e)) continue;
        if (std::find_if(sigmas.begin(), sigmas.end(), [&](double s) { return std::abs(s - e) < kIntegerGap; }) != sigmas.end())
            continue;
        sigmas.push_back(e);
    }
    if (sigmas.empty()) return out;
    std::sort(sigmas.begin(), sigmas.end());
    const auto corr = cached_correction(*weights, std::move(sigmas));
    const std::size_t m = corr->nodes;
    if (m == 0) return out;
    for (std::size_t n = 1; n < f.size(); ++n) {
        const double* s = corr->s.data() + n * m;
        for (std::size_t c = 0; c < f.dim(); ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += s[i] * f.at(i, c);
            out.at(n, c) += acc;
        }
    }
    return out;
}

GridFunction hilfer_derivative(const GridFunction& f, const FractionalParams& params,
                               std::span<const double> weighted_initial) {
    params.validate();
    const std::size_t dim = f.dim();
    if (!weighted_initial.empty() && weighted_initial.size() != dim)
        throw Error(ErrorCode::InvalidArgument, "weighted_initial needs one entry per component");
    const double gamma = params.gamma();
    const auto u = f.grid().shifted();

    GridFunction regular = f;
    if (gamma >= 1.0) {
        for (std::size_t j = 0; j < f.size(); ++j)
            for (std::size_t c = 0; c < dim; ++c) regular.at(j, c) -= f.at(0, c);
    } else if (!weighted_initial.empty()) {
        for (std::size_t j = 1; j < f.size(); ++j) {
            const double k = std::pow(u[j], gamma - 1.0);
            for (std::size_t c = 0; c < dim; ++c) regular.at(j, c) -= weighted_initial[c] * k;
        }
    }
    if (params.alpha >= 1.0) return psi_derivative(regular);
    const double leading[] = {params.alpha, 1.0 + params.alpha};
    return psi_derivative(frac_integral_corrected(regular, 1.0 - params.alpha, leading));
}

double mittag_leffler(double alpha, double z) {
    if (!(alpha > 0.0) || !std::isfinite(z)) throw Error(ErrorCode::InvalidArgument, "mittag_leffler needs alpha > 0");
    if (z == 0.0) return 1.0;
    const double log_abs_z = std::log(std::abs(z));
    double sum = 1.0;
    for (int k = 1; k < 1000; ++k) {
        const double dk = static_cast<double>(k);
        double term = std::exp(dk * log_abs_z - std::lgamma(alpha * dk + 1.0));
        if (z < 0.0 && (k % 2 == 1)) term = -term;
        sum += term;
        if (std::abs(term) < 1e-15 * std::abs(sum)) return sum;
    }
    std::ostringstream os;
    os << "Mittag-Leffler series E_" << alpha << "(" << z << ") did not converge within 1000 terms";
    throw Error(ErrorCode::NoConvergence, os.str());
}

}  // namespace psivolterra
