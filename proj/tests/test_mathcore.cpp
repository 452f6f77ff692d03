#include <Eigen/LU>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dofprior/errors.hpp"
#include "dofprior/mathcore.hpp"

using namespace dofprior;
using doctest::Approx;

namespace {
constexpr double kEuler = 0.57721566490153286061;
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_CASE("log_gamma known values") {
    CHECK(log_gamma(1.0) == Approx(0.0).epsilon(1e-14));
    CHECK(log_gamma(0.5) == Approx(0.5723649429247001).epsilon(1e-13));
    CHECK(log_gamma(5.0) == Approx(std::log(24.0)).epsilon(1e-13));
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(log_gamma(-1.5), DomainError);
}

TEST_CASE("digamma identities and boost agreement") {
    CHECK(digamma(1.0) == Approx(-kEuler).epsilon(1e-12));
    CHECK(digamma(0.5) == Approx(-kEuler - 2.0 * std::log(2.0)).epsilon(1e-12));
    for (double x : {1e3, 1e5, 1e7}) CHECK(std::fabs(digamma(x) - (std::log(x) - 0.5 / x)) < 1.0 / (x * x));
    for (double x = 0.05; x < 60.0; x *= 1.37)
        CHECK(digamma(x) == Approx(boost::math::digamma(x)).epsilon(1e-11));
    // finite differences of log_gamma
    const double h = 1e-5;
    for (double x : {0.7, 2.0, 9.5})
        CHECK(digamma(x) == Approx((log_gamma(x + h) - log_gamma(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK_THROWS_AS(digamma(0.0), DomainError);
}

TEST_CASE("trigamma identities, finite differences and boost agreement") {
    CHECK(trigamma(1.0) == Approx(kPi * kPi / 6.0).epsilon(1e-12));
    CHECK(trigamma(0.5) == Approx(kPi * kPi / 2.0).epsilon(1e-12));
    const double h = 1e-5;
    for (double x = 0.1; x < 50.0; x += 0.37) {
        const double fd = (digamma(x + h) - digamma(x - h)) / (2 * h);
        CHECK(std::fabs(trigamma(x) - fd) < 1e-6);
        CHECK(trigamma(x) == Approx(boost::math::trigamma(x)).epsilon(1e-11));
    }
    CHECK_THROWS_AS(trigamma(-2.0), DomainError);
}

TEST_CASE("half-line quadrature on analytic integrals") {
    const QuadratureSpec spec;
    struct Case {
        std::function<double(double)> f;
        double exact;
    };
    const Case cases[] = {
        {[](double t) { return std::exp(-t); }, 1.0},
        {[](double t) { return t * std::exp(-t); }, 1.0},
        {[](double t) { return std::exp(-0.5 * t) / std::sqrt(t); }, std::sqrt(2.0 * kPi)},
        {[](double t) { return 1.0 / (1.0 + t * t); }, 0.5 * kPi},
        {[](double t) { return std::pow(1.0 + t, -2.5); }, 1.0 / 1.5},
    };
    for (const auto& c : cases) {
        const auto r = integrate_halfline(c.f, spec);
        CHECK(r.value == Approx(c.exact).epsilon(1e-10));
        // the reported error bounds the true error
        CHECK(std::fabs(r.value - c.exact) <= std::max(r.est_error, 1e-14 * c.exact));
        CHECK(r.est_error <= std::max(spec.abs_tol, spec.rel_tol * std::fabs(r.value)));
    }
}

TEST_CASE("finite-interval quadrature") {
    const auto r = integrate_interval([](double x) { return std::sin(x); }, 0.0, kPi);
    CHECK(r.value == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("quadrature non-convergence carries best estimate") {
    QuadratureSpec spec;
    spec.max_subdivisions = 2;
    spec.abs_tol = 1e-15;
    spec.rel_tol = 1e-15;
    try {
        integrate_halfline([](double t) { return std::sin(1.0 / (t + 1e-3)) / (1 + t * t); }, spec);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(std::isfinite(e.best_estimate));
        CHECK(e.est_error > 0.0);
    }
}

TEST_CASE("QuadratureSpec validation") {
    QuadratureSpec spec;
    spec.abs_tol = 0.0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
    spec = {};
    spec.max_subdivisions = 0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
}

TEST_CASE("cholesky examples") {
    Matrix id = Matrix::Identity(2, 2);
    CHECK((cholesky(id) - id).norm() == 0.0);
    Matrix m(2, 2);
    m << 4, 2, 2, 3;
    const Matrix l = cholesky(m);
    CHECK(l(0, 0) == Approx(2.0));
    CHECK(l(1, 0) == Approx(1.0));
    CHECK(l(1, 1) == Approx(std::sqrt(2.0)));
    CHECK(l(0, 1) == 0.0);
    CHECK((l * l.transpose() - m).norm() < 1e-14);
    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(cholesky(bad), NotPositiveDefinite);
    CHECK_FALSE(SpdMatrix::is_spd(bad));
}

TEST_CASE("cholesky round trip on random SPD matrices") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 1 + rep % 6;
        Matrix a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = n01(rng);
        Matrix m = a.transpose() * a + 1e-3 * Matrix::Identity(d, d);
        const SpdMatrix s(m);
        const Matrix& l = s.chol();
        CHECK((l * l.transpose() - m).norm() <= 1e-10 * m.norm());
        CHECK(s.log_det() == Approx(std::log(m.determinant())).epsilon(1e-8));
        Vector x = Vector::NullaryExpr(d, [&] { return n01(rng); });
        CHECK(s.quad_form(x) == Approx(x.dot(m.inverse() * x)).epsilon(1e-7));
    }
}

TEST_CASE("SpdMatrix rejects asymmetric input") {
    Matrix m(2, 2);
    m << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(SpdMatrix{m}, DomainError);
}

TEST_CASE("t_cdf examples and boost agreement") {
    for (double nu : {0.5, 1.0, 3.0, 30.0}) CHECK(t_cdf(0.0, nu) == 0.5);
    CHECK(t_cdf(1.0, 1.0) == Approx(0.75).epsilon(1e-14));
    CHECK(t_cdf(1.8856, 2.0) == Approx(0.90).epsilon(1e-4));
    const double x2 = 1.8856;
    CHECK(t_cdf(x2, 2.0) == Approx(0.5 + x2 / (2.0 * std::sqrt(2.0 + x2 * x2))).epsilon(1e-13));
    for (double nu : {0.7, 1.0, 2.0, 3.0, 4.5, 7.0, 29.0, 31.0, 250.0, 1000.0}) {
        boost::math::students_t dist(nu);
        for (double x = -40.0; x <= 40.0; x += 0.73) {
            const double ref = boost::math::cdf(dist, x);
            CHECK(t_cdf(x, nu) == Approx(ref).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(t_cdf(0.3, 0.0), DomainError);
}

TEST_CASE("t_cdf symmetry and monotonicity") {
    for (int nu = 1; nu <= 30; ++nu) {
        double prev = 0.0;
        for (double x = -20.0; x <= 20.0; x += 0.1) {
            const double c = t_cdf(x, nu);
            CHECK(c >= prev);
            prev = c;
            CHECK(std::fabs(t_cdf(-x, nu) + c - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("t_quantile examples and round trip") {
    CHECK(t_quantile(0.5, 3.0) == 0.0);
    CHECK(t_quantile(0.75, 1.0) == Approx(1.0).epsilon(1e-13));
    for (int nu = 1; nu <= 30; ++nu)
        for (int x = -5; x <= 5; ++x) CHECK(t_quantile(t_cdf(x, nu), nu) == Approx(x).epsilon(1e-8).scale(1.0));
    for (double nu : {0.6, 2.5, 12.0, 700.0}) {
        boost::math::students_t dist(nu);
        for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9}) {
            const double ref = boost::math::quantile(dist, p);
            CHECK(t_quantile(p, nu) == Approx(ref).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(t_quantile(0.0, 2.0), DomainError);
    CHECK_THROWS_AS(t_quantile(1.0, 2.0), DomainError);
}

TEST_CASE("t_quantile is monotone in p") {
    for (double nu : {1.0, 4.0, 30.0}) {
        double prev = -INFINITY;
        for (double p = 0.001; p < 1.0; p += 0.001) {
            const double q = t_quantile(p, nu);
            CHECK(q > prev);
            prev = q;
        }
    }
}

TEST_CASE("normal limit functions") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-14));
    CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-14));
    CHECK(t_cdf(1.3, INFINITY) == Approx(normal_cdf(1.3)).epsilon(1e-15));
    CHECK(t_quantile(0.1, INFINITY) == Approx(normal_quantile(0.1)).epsilon(1e-15));
}

TEST_CASE("t_transfer maps through equal tail probabilities") {
    for (double x : {-30.0, -3.0, -0.2, 0.0, 1.5, 12.0}) {
        const double y = t_transfer(x, 2.0, 7.0);
        CHECK(t_cdf(y, 7.0) == Approx(t_cdf(x, 2.0)).epsilon(1e-11));
        CHECK(t_transfer(x, 5.0, 5.0) == x);
        const double z = t_transfer(x, 3.0, INFINITY);
        CHECK(normal_cdf(z) == Approx(t_cdf(x, 3.0)).epsilon(1e-11));
    }
}

TEST_CASE("t_logpdf matches boost") {
    for (double nu : {1.0, 2.0, 5.5, 40.0}) {
        boost::math::students_t dist(nu);
        for (double x : {-7.0, -1.0, 0.0, 0.3, 25.0})
            CHECK(t_logpdf(x, nu) == Approx(std::log(boost::math::pdf(dist, x))).epsilon(1e-12));
    }
}
