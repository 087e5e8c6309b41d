#include "sadp/spline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sadp/error.hpp"

namespace sadp {

namespace spline_detail {

std::size_t find_span(std::span<const double> knots, std::size_t n_basis, double x) {
    const std::size_t last = n_basis - 1;
    if (x >= knots[last + 1]) return last;
    if (x <= knots[kDegree]) return kDegree;
    std::size_t lo = kDegree;
    std::size_t hi = last + 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (x < knots[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return lo;
}

// Piegl & Tiller, "The NURBS Book", algorithm A2.3. Knot differences never
// depend on x, so the same expressions extrapolate the end pieces.
void basis_derivatives(std::span<const double> knots, std::size_t span, double x, int n_derivs,
                       std::vector<std::vector<double>>& out) {
    constexpr int p = kDegree;
    double ndu[p + 1][p + 1];
    double left[p + 1];
    double right[p + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    out.assign(n_derivs + 1, std::vector<double>(p + 1, 0.0));
    for (int j = 0; j <= p; ++j) out[0][j] = ndu[j][p];

    double a[2][p + 1];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= n_derivs && k <= p; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= n_derivs && k <= p; ++k) {
        for (int j = 0; j <= p; ++j) out[k][j] *= factor;
        factor *= (p - k);
    }
}

}  // namespace spline_detail

using spline_detail::kDegree;

SmoothingSpline::SmoothingSpline(std::vector<double> knots, std::vector<double> coefficients)
    : knots_(std::move(knots)), coefs_(std::move(coefficients)) {
    if (coefs_.size() < kDegree + 1 || knots_.size() != coefs_.size() + kDegree + 1) {
        throw ShapeError("spline: need n_coef >= 4 and n_knots == n_coef + 4 (got " +
                         std::to_string(knots_.size()) + " knots, " +
                         std::to_string(coefs_.size()) + " coefficients)");
    }
    for (std::size_t k = 1; k < knots_.size(); ++k) {
        if (!(knots_[k] >= knots_[k - 1])) throw ShapeError("spline: knots must be non-decreasing");
    }
    if (!(knots_[kDegree + 1] > knots_[kDegree]) ||
        !(knots_[coefs_.size()] > knots_[coefs_.size() - 1])) {
        throw ShapeError("spline: degenerate boundary interval");
    }
}

double SmoothingSpline::derivative(double x, int order) const {
    if (coefs_.empty()) throw ShapeError("spline: evaluating an empty spline");
    if (order > kDegree) return 0.0;
    const std::size_t span = spline_detail::find_span(knots_, coefs_.size(), x);
    thread_local std::vector<std::vector<double>> ders;
    spline_detail::basis_derivatives(knots_, span, x, order, ders);
    double v = 0.0;
    for (int r = 0; r <= kDegree; ++r) v += ders[order][r] * coefs_[span - kDegree + r];
    return v;
}

double SmoothingSpline::operator()(double x) const { return derivative(x, 0); }

namespace {

struct Problem {
    Eigen::MatrixXd basis;   // sqrt(w)-scaled design, n x m
    Eigen::VectorXd target;  // sqrt(w)-scaled y
    Eigen::MatrixXd gram;    // B^T W B
    Eigen::VectorXd rhs;     // B^T W y
    Eigen::MatrixXd penalty; // D^T D, third-derivative jumps
    std::vector<double> knots;
};

std::vector<double> make_knots(std::span<const double> x, std::size_t interior) {
    const std::size_t n = x.size();
    std::vector<double> knots(kDegree + 1, x.front());
    for (std::size_t k = 1; k <= interior; ++k) {
        const double pos = static_cast<double>(k) * static_cast<double>(n - 1) /
                           static_cast<double>(interior + 1);
        knots.push_back(x[static_cast<std::size_t>(std::lround(pos))]);
    }
    knots.insert(knots.end(), kDegree + 1, x.back());
    return knots;
}

Problem build_problem(std::span<const double> x, std::span<const double> y,
                      std::span<const double> w, std::size_t interior) {
    Problem pr;
    pr.knots = make_knots(x, interior);
    const std::size_t n = x.size();
    const std::size_t m = interior + kDegree + 1;
    pr.basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    pr.target.resize(static_cast<Eigen::Index>(n));
    std::vector<std::vector<double>> ders;
    for (std::size_t r = 0; r < n; ++r) {
        const double sw = std::sqrt(w[r]);
        const std::size_t span = spline_detail::find_span(pr.knots, m, x[r]);
        spline_detail::basis_derivatives(pr.knots, span, x[r], 0, ders);
        for (int k = 0; k <= kDegree; ++k) {
            pr.basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(span - kDegree + k)) =
                sw * ders[0][k];
        }
        pr.target(static_cast<Eigen::Index>(r)) = sw * y[r];
    }
    pr.gram = pr.basis.transpose() * pr.basis;
    pr.rhs = pr.basis.transpose() * pr.target;

    Eigen::MatrixXd jumps = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(interior),
                                                  static_cast<Eigen::Index>(m));
    for (std::size_t q = 0; q < interior; ++q) {
        const std::size_t right_span = kDegree + 1 + q;
        const std::size_t left_span = right_span - 1;
        for (std::size_t span : {left_span, right_span}) {
            const double mid = 0.5 * (pr.knots[span] + pr.knots[span + 1]);
            spline_detail::basis_derivatives(pr.knots, span, mid, kDegree, ders);
            const double sign = span == right_span ? 1.0 : -1.0;
            for (int k = 0; k <= kDegree; ++k) {
                jumps(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(span - kDegree + k)) +=
                    sign * ders[kDegree][k];
            }
        }
    }
    pr.penalty = jumps.transpose() * jumps;
    return pr;
}

struct Solution {
    Eigen::VectorXd coefs;
    double residual = 0.0;
    double dof = 0.0;
};

Solution solve(const Problem& pr, double weight) {
    Eigen::MatrixXd lhs = pr.gram + weight * pr.penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    Solution sol;
    sol.coefs = ldlt.solve(pr.rhs);
    sol.residual = (pr.target - pr.basis * sol.coefs).squaredNorm();
    sol.dof = ldlt.solve(pr.gram).trace();
    if (!sol.coefs.allFinite()) throw NumericError("spline: singular normal equations");
    return sol;
}

SmoothingSpline make_spline(const Problem& pr, const Solution& sol, double weight,
                            std::size_t interior) {
    SmoothingSpline out(pr.knots, {sol.coefs.data(), sol.coefs.data() + sol.coefs.size()});
    out.set_diagnostics({sol.residual, weight, sol.dof, interior});
    return out;
}

}  // namespace

SmoothingSpline SmoothingSpline::fit(std::span<const double> x, std::span<const double> y,
                                     double s, const SplineFitOptions& options) {
    std::vector<double> ones(x.size(), 1.0);
    return fit(x, y, ones, s, options);
}

SmoothingSpline SmoothingSpline::fit(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> weights, double s,
                                     const SplineFitOptions& options) {
    const std::size_t n = x.size();
    if (y.size() != n || weights.size() != n) {
        throw ShapeError("spline fit: x, y and weights must have equal length");
    }
    if (n < kDegree + 1) {
        throw FitError("spline fit: need at least 4 points, got " + std::to_string(n), 0.0);
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(x[k]) || !std::isfinite(y[k]) || !(weights[k] > 0.0)) {
            throw DomainError("spline fit: non-finite data or non-positive weight at " +
                              std::to_string(k));
        }
        if (k > 0 && !(x[k] > x[k - 1])) {
            throw DomainError("spline fit: x must be strictly increasing (index " +
                              std::to_string(k) + ")");
        }
    }
    if (!(s >= 0.0)) throw DomainError("spline fit: smoothing budget must be >= 0");

    double energy = 0.0;
    for (std::size_t k = 0; k < n; ++k) energy += weights[k] * y[k] * y[k];
    const double tol = 1e-12 * std::max(1.0, energy);

    // Smoothest admissible candidate: a single cubic.
    const Problem cubic = build_problem(x, y, weights, 0);
    const Solution cubic_sol = solve(cubic, 0.0);
    if (s + tol >= cubic_sol.residual) {
        return make_spline(cubic, cubic_sol, std::numeric_limits<double>::infinity(), 0);
    }

    const std::size_t interior = std::min(options.max_interior_knots, n - (kDegree + 1));
    if (interior == 0) {
        throw FitError("spline fit: budget " + std::to_string(s) +
                           " below least-squares cubic residual " +
                           std::to_string(cubic_sol.residual),
                       cubic_sol.residual);
    }
    const Problem pr = build_problem(x, y, weights, interior);
    const Solution floor_sol = solve(pr, 0.0);
    if (s + tol < floor_sol.residual) {
        throw FitError("spline fit: budget " + std::to_string(s) + " below residual floor " +
                           std::to_string(floor_sol.residual) + " with " +
                           std::to_string(interior) + " interior knots",
                       floor_sol.residual);
    }

    // Residual is increasing in the penalty weight; bracket the weight where
    // it reaches the budget in log space, then bisect keeping residual <= s.
    const double scale = pr.gram.trace() / std::max(pr.penalty.trace(), 1e-300);
    double lo = -30.0;
    double hi = 30.0;
    Solution lo_sol = solve(pr, scale * std::pow(10.0, lo));
    if (lo_sol.residual > s) {
        lo_sol = floor_sol;
        lo = -std::numeric_limits<double>::infinity();
    }
    if (solve(pr, scale * std::pow(10.0, hi)).residual <= s) {
        lo = hi;
        lo_sol = solve(pr, scale * std::pow(10.0, hi));
    } else {
        if (!std::isfinite(lo)) lo = -60.0;
        for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            Solution mid_sol = solve(pr, scale * std::pow(10.0, mid));
            if (mid_sol.residual <= s) {
                lo = mid;
                lo_sol = std::move(mid_sol);
            } else {
                hi = mid;
            }
        }
    }
    const double weight = std::isfinite(lo) ? scale * std::pow(10.0, lo) : 0.0;
    return make_spline(pr, lo_sol, weight, interior);
}

}  // namespace sadp
