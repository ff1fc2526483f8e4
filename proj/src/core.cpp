#include "psivolterra/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psivolterra/frac_ops.hpp"

namespace psivolterra {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::GridMismatch: return "GRID_MISMATCH";
        case ErrorCode::Parse: return "PARSE_ERROR";
        case ErrorCode::Eval: return "EVAL_ERROR";
        case ErrorCode::NonContractive: return "NON_CONTRACTIVE";
        case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
        case ErrorCode::WindowViolation: return "WINDOW_VIOLATION";
        case ErrorCode::Config: return "CONFIG_ERROR";
        case ErrorCode::Io: return "IO_ERROR";
    }
    return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// PsiScale

PsiScale PsiScale::identity() { return PsiScale(Kind::Identity, {}); }

PsiScale PsiScale::power(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidArgument, "power scale needs sigma > 0");
    return PsiScale(Kind::Power, {sigma});
}

PsiScale PsiScale::log_shift() { return PsiScale(Kind::LogShift, {}); }

PsiScale PsiScale::exp() { return PsiScale(Kind::Exp, {}); }

PsiScale PsiScale::affine(double slope, double offset) {
    if (!(slope > 0.0) || !std::isfinite(slope) || !std::isfinite(offset))
        throw Error(ErrorCode::InvalidArgument, "affine scale needs slope > 0");
    return PsiScale(Kind::Affine, {slope, offset});
}

PsiScale PsiScale::from_name(const std::string& name, std::span<const double> params) {
    auto expect = [&](std::size_t n) {
        if (params.size() != n) {
            std::ostringstream os;
            os << "psi kind '" << name << "' takes " << n << " parameter(s), got " << params.size();
            throw Error(ErrorCode::InvalidArgument, os.str());
        }
    };
    if (name == "identity") { expect(0); return identity(); }
    if (name == "power") { expect(1); return power(params[0]); }
    if (name == "log-shift") { expect(0); return log_shift(); }
    if (name == "exp") { expect(0); return exp(); }
    if (name == "affine") { expect(2); return affine(params[0], params[1]); }
    throw Error(ErrorCode::InvalidArgument, "unknown psi kind '" + name + "'");
}

std::string PsiScale::name() const {
    switch (kind_) {
        case Kind::Identity: return "identity";
        case Kind::Power: return "power";
        case Kind::LogShift: return "log-shift";
        case Kind::Exp: return "exp";
        case Kind::Affine: return "affine";
    }
    return "?";
}

double PsiScale::operator()(double t) const {
    switch (kind_) {
        case Kind::Identity: return t;
        case Kind::Power: return std::pow(t, params_[0]);
        case Kind::LogShift: return std::log1p(t);
        case Kind::Exp: return std::exp(t);
        case Kind::Affine: return params_[0] * t + params_[1];
    }
    return t;
}

double PsiScale::derivative(double t) const {
    double d = 1.0;
    switch (kind_) {
        case Kind::Identity: d = 1.0; break;
        case Kind::Power: d = params_[0] * std::pow(t, params_[0] - 1.0); break;
        case Kind::LogShift: d = 1.0 / (1.0 + t); break;
        case Kind::Exp: d = std::exp(t); break;
        case Kind::Affine: d = params_[0]; break;
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
        std::ostringstream os;
        os << "psi'(" << t << ") is undefined for scale " << name();
        throw Error(ErrorCode::InvalidArgument, os.str());
    }
    return d;
}

double PsiScale::inverse(double v) const {
    switch (kind_) {
        case Kind::Identity: return v;
        case Kind::Power: return std::pow(v, 1.0 / params_[0]);
        case Kind::LogShift: return std::expm1(v);
        case Kind::Exp: return std::log(v);
        case Kind::Affine: return (v - params_[1]) / params_[0];
    }
    return v;
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(double T, std::size_t N, double r, PsiScale psi) {
    if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::InvalidArgument, "grid needs T > 0");
    if (N < 1) throw Error(ErrorCode::InvalidArgument, "grid needs N >= 1");
    if (!(r >= 1.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "grid needs r >= 1");

    const double psi0 = psi(0.0);
    const double span = psi(T) - psi0;
    std::vector<double> t(N + 1), u(N + 1);
    t[0] = 0.0;
    u[0] = 0.0;
    for (std::size_t j = 1; j < N; ++j) {
        const double frac = std::pow(static_cast<double>(j) / static_cast<double>(N), r);
        u[j] = frac * span;
        t[j] = psi.inverse(psi0 + u[j]);
    }
    t[N] = T;
    u[N] = span;
    for (std::size_t j = 1; j <= N; ++j) {
        if (!(t[j] > t[j - 1]) || !(u[j] > u[j - 1]))
            throw Error(ErrorCode::InvalidArgument, "grid nodes are not strictly increasing (N too large for T?)");
    }
    data_ = std::make_shared<const Data>(Data{T, N, r, std::move(psi), std::move(t), std::move(u)});
}

bool Grid::operator==(const Grid& other) const {
    if (data_ == other.data_) return true;
    return data_->T == other.data_->T && data_->N == other.data_->N && data_->r == other.data_->r &&
           data_->psi == other.data_->psi;
}

Grid make_grid(double T, std::size_t N, double r, const PsiScale& psi) { return Grid(T, N, r, psi); }

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(Grid grid, std::size_t dim)
    : grid_(std::move(grid)), dim_(dim), values_(grid_.size() * dim, 0.0) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "grid function needs dim >= 1");
}

GridFunction::GridFunction(Grid grid, std::size_t dim, std::vector<double> values)
    : grid_(std::move(grid)), dim_(dim), values_(std::move(values)) {
    if (dim == 0) throw Error(ErrorCode::InvalidArgument, "grid function needs dim >= 1");
    if (values_.size() != grid_.size() * dim_)
        throw Error(ErrorCode::InvalidArgument, "grid function value count does not match (N+1) x dim");
}

void GridFunction::require_compatible(const GridFunction& other) const {
    if (dim_ != other.dim_ || !(grid_ == other.grid_))
        throw Error(ErrorCode::GridMismatch, "grid functions live on different grids or dimensions");
}

void GridFunction::require_finite() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream os;
            os << "non-finite value at node " << i / dim_ << " (t=" << grid_.node(i / dim_) << ")";
            throw Error(ErrorCode::InvalidArgument, os.str());
        }
    }
}

double GridFunction::magnitude(std::size_t j) const {
    double m = 0.0;
    for (double v : row(j)) m = std::max(m, std::abs(v));
    return m;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_compatible(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double c, GridFunction a) { return a *= c; }

// ---------------------------------------------------------------------------
// Params and weights

void FractionalParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "beta must lie in [0, 1]");
}

double weight(double shifted, double gamma) {
    if (gamma >= 1.0) return 1.0;
    if (shifted <= 0.0) return 0.0;
    return std::pow(shifted, 1.0 - gamma);
}

GridFunction weighted_profile(const GridFunction& f, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1]");
    const Grid& grid = f.grid();
    GridFunction out(grid, 1);
    for (std::size_t j = 0; j < grid.size(); ++j) out.at(j) = weight(grid.shifted(j), gamma) * f.magnitude(j);
    return out;
}

double weighted_norm(const GridFunction& f, double gamma) {
    const GridFunction p = weighted_profile(f, gamma);
    double m = 0.0;
    for (double v : p.values()) m = std::max(m, v);
    return m;
}

void MetricKind::validate() const {
    if (phi.dim() != 1) throw Error(ErrorCode::InvalidArgument, "phi must be scalar");
    for (std::size_t j = 0; j < phi.size(); ++j) {
        if (!(phi.at(j) > 0.0) || !std::isfinite(phi.at(j)))
            throw Error(ErrorCode::InvalidArgument, "phi must be strictly positive and finite");
    }
}

GridFunction metric_profile(const GridFunction& x, const GridFunction& y, const MetricKind& metric,
                            const FractionalParams& params, std::span<const double> weighted_initial) {
    x.require_compatible(y);
    if (!(metric.phi.grid() == x.grid())) throw Error(ErrorCode::GridMismatch, "phi lives on a different grid");
    const double gamma = params.gamma();
    const GridFunction diff = x - y;
    GridFunction profile = weighted_profile(diff, gamma);
    if (metric.kind == MetricKind::Kind::IDE) {
        // The operator is linear, so D x - D y = D (x - y); this keeps d(x, y)
        // and d(y, x) bitwise equal.
        const GridFunction deriv = hilfer_derivative(diff, params, weighted_initial);
        profile += weighted_profile(deriv, gamma);
    }
    return profile;
}

ExtendedDistance phi_distance(const GridFunction& x, const GridFunction& y, const MetricKind& metric,
                              const FractionalParams& params, std::span<const double> weighted_initial) {
    metric.validate();
    const GridFunction profile = metric_profile(x, y, metric, params, weighted_initial);
    double c = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
        const double ratio = profile.at(j) / metric.phi.at(j);
        if (!std::isfinite(ratio)) return ExtendedDistance::infinity();
        c = std::max(c, ratio);
    }
    return ExtendedDistance(c);
}

}  // namespace psivolterra
