#pragma once

// psi-Riemann-Liouville fractional integral, psi-Hilfer derivative (n = 1)
// and the Mittag-Leffler function.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "psivolterra/core.hpp"

namespace psivolterra {

/// Lower-triangular product-trapezoid weights: I^{alpha;psi} f(t_n) is
/// approximated by sum_{j<=n} w(n, j) f(t_j). Rows are stored packed.
class QuadratureWeights {
public:
    QuadratureWeights(const Grid& grid, double alpha);

    const Grid& grid() const noexcept { return grid_; }
    double alpha() const noexcept { return alpha_; }

    double operator()(std::size_t n, std::size_t j) const {
        return j > n ? 0.0 : w_[n * (n + 1) / 2 + j];
    }
    /// Row n holds n + 1 entries (j = 0..n).
    const double* row(std::size_t n) const { return w_.data() + n * (n + 1) / 2; }

private:
    Grid grid_;
    double alpha_;
    std::vector<double> w_;
};

/// Weights for alpha in (0, 1]. Weights are substitution u = psi(s) product
/// integration of the piecewise-linear interpolant, integrated exactly.
QuadratureWeights quad_weights(const Grid& grid, double alpha);

/// Shared, cached weights keyed by (grid, alpha). Safe for concurrent use.
std::shared_ptr<const QuadratureWeights> cached_weights(const Grid& grid, double alpha);

/// Drops every cached weight matrix.
void clear_weight_cache();

/// Component-wise I^{alpha;psi} f. alpha == 0 is the identity. When weights
/// are supplied they must belong to f's grid and carry the same alpha.
GridFunction frac_integral(const GridFunction& f, double alpha, const QuadratureWeights* weights = nullptr);

/// Product-trapezoid integral with starting corrections on the first nodes
/// so the rule is also exact on u^sigma for each listed exponent (u =
/// psi(t) - psi(0)). Exponents within 1e-3 of an integer are skipped; the
/// base rule already handles 0 and 1.
GridFunction frac_integral_corrected(const GridFunction& f, double alpha, std::span<const double> exponents);

/// (1/psi'(t)) d/dt f, i.e. d f / du in u = psi(t), by second-order
/// three-point stencils (one-sided at both ends). Needs N >= 2.
GridFunction psi_derivative(const GridFunction& f);

/// psi-Hilfer derivative of order alpha and type beta (n = 1),
///   I^{beta(1-alpha)} (1/psi' d/dt) I^{(1-beta)(1-alpha)} f.
///
/// Evaluated in the equivalent form d/du I^{1-alpha} (f - c k), where k is
/// the operator's kernel function ((psi - psi(0))^(gamma-1), or 1 when
/// gamma = 1) and c the weighted initial value of f. For gamma = 1, c is
/// f(t_0). For gamma < 1 the samples cannot carry c (the t_0 entry is a
/// placeholder), so it is passed per component in `weighted_initial`;
/// empty means zero. The inner integral is corrected to be exact on
/// u^alpha and u^(1+alpha), the leading terms of I^alpha of smooth data.
GridFunction hilfer_derivative(const GridFunction& f, const FractionalParams& params,
                               std::span<const double> weighted_initial = {});

/// E_alpha(z) by direct series summation. Throws NoConvergence if 1000 terms
/// are not enough.
double mittag_leffler(double alpha, double z);

}  // namespace psivolterra
