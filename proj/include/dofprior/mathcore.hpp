#pragma once

#include <functional>
#include <limits>

#include <Eigen/Core>

#include "dofprior/errors.hpp"

namespace dofprior {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Special functions

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

// Regularized incomplete beta I_x(a, b). `y` must equal 1 - x; passing it
// separately keeps precision when x is close to one.
double incomplete_beta(double a, double b, double x, double y);

// ---------------------------------------------------------------------------
// Quadrature

struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_subdivisions = 2000;

    void validate() const;
};

struct QuadratureResult {
    double value = 0.0;
    double est_error = 0.0;
    int subdivisions = 0;
};

// Thrown when the adaptive scheme runs out of subdivisions; carries the best
// estimate reached.
class QuadratureError : public NumericError {
public:
    QuadratureError(double best, double err);
    double best_estimate;
    double est_error;
};

// Integral of f over [a, b] by globally adaptive 15-point Gauss-Kronrod.
QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureSpec& spec = {});

// Integral of f over (0, inf) after the substitution t = u / (1 - u). The
// upper half of the unit interval is parametrised by s = 1 - u so that nodes
// near t = inf are resolved in full precision.
QuadratureResult integrate_halfline(const std::function<double(double)>& f,
                                    const QuadratureSpec& spec = {});

// ---------------------------------------------------------------------------
// Small dense linear algebra

// Lower Cholesky factor of a symmetric matrix; throws NotPositiveDefinite on a
// non-positive pivot.
Matrix cholesky(const Matrix& m);

// Symmetric positive-definite matrix together with its Cholesky factor.
class SpdMatrix {
public:
    explicit SpdMatrix(Matrix m);
    static SpdMatrix identity(int d);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    const Matrix& chol() const { return l_; }
    double log_det() const { return log_det_; }

    // (x)^T M^{-1} (x)
    double quad_form(const Vector& x) const;
    // L^{-1} x
    Vector whiten(const Vector& x) const;

    static bool is_spd(const Matrix& m);

private:
    Matrix m_;
    Matrix l_;
    double log_det_ = 0.0;
};

// ---------------------------------------------------------------------------
// Univariate Student-t and Normal

double t_logpdf(double x, double nu);
double t_cdf(double x, double nu);
// P(T <= -|x|); never loses relative precision in the tail.
double t_tail(double x, double nu);
double t_quantile(double p, double nu);
// Quantile for a lower-tail probability q in (0, 0.5]; the result is <= 0.
// A negative finite `start` replaces the default initial guess.
double t_quantile_lower(double q, double nu, double start = std::numeric_limits<double>::quiet_NaN());

double normal_cdf(double x);
double normal_quantile(double p);

// Maps a standard-t(from) score to the standard-t(to) score with the same
// CDF value, working through tail probabilities. `to` or `from` equal to
// +infinity denotes the standard Normal.
double t_transfer(double x, double nu_from, double nu_to);

}  // namespace dofprior
