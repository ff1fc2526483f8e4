#pragma once

// Scale functions, graded grids, sampled functions and the weighted
// (generalized) distances used throughout the solver and the stability checks.

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "psivolterra/error.hpp"

namespace psivolterra {

/// Strictly increasing scale function psi on [0, T] with derivative and inverse.
class PsiScale {
public:
    enum class Kind { Identity, Power, LogShift, Exp, Affine };

    static PsiScale identity();
    /// psi(t) = t^sigma, sigma > 0.
    static PsiScale power(double sigma);
    /// psi(t) = ln(1 + t).
    static PsiScale log_shift();
    /// psi(t) = e^t.
    static PsiScale exp();
    /// psi(t) = slope * t + offset, slope > 0.
    static PsiScale affine(double slope, double offset);

    /// Parses "identity", "power", "log-shift", "exp", "affine" with the
    /// parameter list expected by the matching factory.
    static PsiScale from_name(const std::string& name, std::span<const double> params);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;
    const std::vector<double>& params() const noexcept { return params_; }

    double operator()(double t) const;
    /// Throws InvalidArgument where psi' is undefined or not positive.
    double derivative(double t) const;
    double inverse(double v) const;

    bool operator==(const PsiScale& other) const = default;

private:
    PsiScale(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

    Kind kind_;
    std::vector<double> params_;
};

/// Graded partition of [0, T]:
///   psi(t_j) - psi(0) = (j/N)^r * (psi(T) - psi(0)).
class Grid {
public:
    Grid(double T, std::size_t N, double r, PsiScale psi);

    double final_time() const noexcept { return data_->T; }
    std::size_t intervals() const noexcept { return data_->N; }
    std::size_t size() const noexcept { return data_->N + 1; }
    double grading() const noexcept { return data_->r; }
    const PsiScale& psi() const noexcept { return data_->psi; }

    std::span<const double> nodes() const noexcept { return data_->t; }
    double node(std::size_t j) const { return data_->t[j]; }
    /// Transformed coordinates u_j = psi(t_j) - psi(0); u_0 = 0.
    std::span<const double> shifted() const noexcept { return data_->u; }
    double shifted(std::size_t j) const { return data_->u[j]; }

    /// Same construction parameters (and therefore bitwise-identical nodes).
    bool operator==(const Grid& other) const;

private:
    struct Data {
        double T;
        std::size_t N;
        double r;
        PsiScale psi;
        std::vector<double> t;
        std::vector<double> u;
    };
    std::shared_ptr<const Data> data_;
};

Grid make_grid(double T, std::size_t N, double r, const PsiScale& psi);

/// Values of a (possibly vector-valued) function on a grid, stored row-major
/// as (N+1) x dim.
class GridFunction {
public:
    GridFunction(Grid grid, std::size_t dim);
    GridFunction(Grid grid, std::size_t dim, std::vector<double> values);

    template <class F>
    static GridFunction sample(const Grid& grid, F&& f) {
        GridFunction out(grid, 1);
        for (std::size_t j = 0; j < grid.size(); ++j) out.at(j) = f(grid.node(j));
        return out;
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return grid_.size(); }

    double& at(std::size_t j, std::size_t c = 0) { return values_[j * dim_ + c]; }
    double at(std::size_t j, std::size_t c = 0) const { return values_[j * dim_ + c]; }

    std::span<double> row(std::size_t j) { return {values_.data() + j * dim_, dim_}; }
    std::span<const double> row(std::size_t j) const { return {values_.data() + j * dim_, dim_}; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Throws GridMismatch when grids or dimensions differ.
    void require_compatible(const GridFunction& other) const;
    /// Throws InvalidArgument when any value is NaN or infinite.
    void require_finite() const;

    /// Max-norm of the state at node j.
    double magnitude(std::size_t j) const;

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double c);

private:
    Grid grid_;
    std::size_t dim_;
    std::vector<double> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double c, GridFunction a);

struct FractionalParams {
    double alpha;
    double beta;

    /// Weight exponent gamma = alpha + beta (1 - alpha).
    double gamma() const noexcept { return alpha + beta * (1.0 - alpha); }

    /// alpha in (0, 1], beta in [0, 1].
    void validate() const;
};

/// Nonnegative real or +infinity.
class ExtendedDistance {
public:
    constexpr ExtendedDistance() = default;
    constexpr explicit ExtendedDistance(double v) : value_(v) {}

    static constexpr ExtendedDistance infinity() {
        return ExtendedDistance(std::numeric_limits<double>::infinity());
    }

    constexpr bool is_infinite() const noexcept { return value_ == std::numeric_limits<double>::infinity(); }
    constexpr double value() const noexcept { return value_; }

    friend constexpr ExtendedDistance operator+(ExtendedDistance a, ExtendedDistance b) {
        return ExtendedDistance(a.value_ + b.value_);
    }
    friend constexpr auto operator<=>(ExtendedDistance a, ExtendedDistance b) = default;

private:
    double value_ = 0.0;
};

/// Weight (psi(t) - psi(0))^(1-gamma); zero at t_0 whenever gamma < 1.
double weight(double shifted, double gamma);

/// t -> (psi(t)-psi(0))^(1-gamma) * |f(t)|_inf. The weighted norm is its max.
GridFunction weighted_profile(const GridFunction& f, double gamma);
double weighted_norm(const GridFunction& f, double gamma);

struct MetricKind {
    enum class Kind { VIE, IDE };

    Kind kind;
    /// Strictly positive majorant phi on the grid.
    GridFunction phi;

    void validate() const;
};

/// Smallest C with weighted-magnitude(t_j) <= C phi(t_j) at every node. The
/// IDE variant adds the weighted psi-Hilfer derivative difference;
/// `weighted_initial` is the weighted initial value of x - y, passed on to
/// the derivative (only matters when gamma < 1).
ExtendedDistance phi_distance(const GridFunction& x, const GridFunction& y,
                              const MetricKind& metric, const FractionalParams& params,
                              std::span<const double> weighted_initial = {});

/// Node-wise weighted magnitude used by phi_distance (before dividing by phi).
GridFunction metric_profile(const GridFunction& x, const GridFunction& y,
                            const MetricKind& metric, const FractionalParams& params,
                            std::span<const double> weighted_initial = {});

}  // namespace psivolterra
