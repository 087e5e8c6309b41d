#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sadp {

struct SplineFitOptions {
    // Upper bound on interior knots; the residual floor is the least-squares
    // fit with this many knots placed at data quantiles.
    std::size_t max_interior_knots = 64;
};

struct SplineFitDiagnostics {
    double residual = 0.0;        // weighted residual sum of squares
    double smoothing_weight = 0;  // penalty multiplier selected (0 = pure LS, inf = cubic)
    double effective_dof = 0.0;   // trace of the hat matrix
    std::size_t interior_knots = 0;
};

/// Cubic B-spline f(x) = sum_i c_i B_i(x) with clamped boundary knots.
/// Outside [knots.front(), knots.back()] the end polynomial pieces extend.
class SmoothingSpline {
public:
    SmoothingSpline() = default;
    SmoothingSpline(std::vector<double> knots, std::vector<double> coefficients);

    /// Smoothing fit with FITPACK budget semantics: the weighted residual
    /// sum_k w_k (y_k - f(x_k))^2 stays within `s`, and among all fits on the knot set
    /// that meet it the one with the smallest sum of squared third-derivative
    /// jumps at interior knots is returned. A budget at or above the residual
    /// of the least-squares cubic returns that cubic. Throws FitError if `s`
    /// is below the residual floor.
    static SmoothingSpline fit(std::span<const double> x, std::span<const double> y,
                               std::span<const double> weights, double s,
                               const SplineFitOptions& options = {});
    static SmoothingSpline fit(std::span<const double> x, std::span<const double> y, double s,
                               const SplineFitOptions& options = {});

    double operator()(double x) const;
    double derivative(double x, int order) const;

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<double>& coefficients() const noexcept { return coefs_; }
    const SplineFitDiagnostics& diagnostics() const noexcept { return diag_; }
    void set_diagnostics(const SplineFitDiagnostics& d) { diag_ = d; }

    bool empty() const noexcept { return coefs_.empty(); }

private:
    std::vector<double> knots_;
    std::vector<double> coefs_;
    SplineFitDiagnostics diag_;
};

namespace spline_detail {

inline constexpr int kDegree = 3;

// Index of the knot span containing x, clamped to the valid range.
std::size_t find_span(std::span<const double> knots, std::size_t n_basis, double x);

// Values and derivatives (up to `n_derivs`) of the kDegree + 1 basis
// functions non-zero on span `span`: out[d][r] is the d-th derivative of
// basis function span - kDegree + r.
void basis_derivatives(std::span<const double> knots, std::size_t span, double x, int n_derivs,
                       std::vector<std::vector<double>>& out);

}  // namespace spline_detail

}  // namespace sadp
