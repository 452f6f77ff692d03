#include "dofprior/mathcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/erf.hpp>

namespace dofprior {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

[[noreturn]] void throw_not_positive(const char* what) {
    throw DomainError(std::string(what) + ": argument must be positive");
}

inline void require_positive(double x, const char* what) {
    if (!(x > 0.0)) [[unlikely]]
        throw_not_positive(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Special functions

double log_gamma(double x) {
    require_positive(x, "log_gamma");
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double digamma(double x) {
    require_positive(x, "digamma");
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    // Bernoulli-number asymptotic series
    const double series =
        r * (1.0 / 12 -
             r * (1.0 / 120 -
                  r * (1.0 / 252 -
                       r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r * (1.0 / 12)))))));
    return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
    require_positive(x, "trigamma");
    double acc = 0.0;
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / (x * x);
    const double series =
        1.0 / 6 -
        r * (1.0 / 30 -
             r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * (7.0 / 6))))));
    return acc + 1.0 / x + 0.5 * r + series * r / x;
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x, double y) {
    require_positive(a, "incomplete_beta(a)");
    require_positive(b, "incomplete_beta(b)");
    if (x < 0.0 || y < 0.0) throw DomainError("incomplete_beta: x outside [0, 1]");
    if (x == 0.0) return 0.0;
    if (y == 0.0) return 1.0;
    const double log_front =
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

// ---------------------------------------------------------------------------
// Quadrature

void QuadratureSpec::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1)
        throw DomainError("QuadratureSpec: tolerances must be positive and max_subdivisions >= 1");
}

QuadratureError::QuadratureError(double best, double err)
    : NumericError("quadrature did not converge (best estimate " + std::to_string(best) +
                   ", error estimate " + std::to_string(err) + ")"),
      best_estimate(best),
      est_error(err) {}

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    int tag;
    bool operator<(const Panel& o) const { return error < o.error; }
};

// One GK15 application with the QUADPACK error heuristic.
template <class F>
Panel gk15(const F& f, double a, double b, int tag) {
    const double centr = 0.5 * (a + b);
    const double hlgth = 0.5 * (b - a);
    const double fc = f(centr);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    double resabs = std::fabs(resk);
    std::array<double, 7> fv1{};
    std::array<double, 7> fv2{};
    for (int j = 0; j < 7; ++j) {
        const double absc = hlgth * kXgk[j];
        fv1[j] = f(centr - absc);
        fv2[j] = f(centr + absc);
        const double sum = fv1[j] + fv2[j];
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * sum;
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[7] * std::fabs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
    const double result = resk * hlgth;
    resabs *= std::fabs(hlgth);
    resasc *= std::fabs(hlgth);
    double abserr = std::fabs((resk - resg) * hlgth);
    if (resasc != 0.0 && abserr != 0.0)
        abserr = resasc * std::min(1.0, std::pow(200.0 * abserr / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
        abserr = std::max(kEps * 50.0 * resabs, abserr);
    if (!std::isfinite(result)) throw NumericError("quadrature: integrand is not finite");
    return {a, b, result, abserr, tag};
}

// Globally adaptive bisection over a set of initial panels. Each panel carries
// a tag selecting the integrand used on it.
template <class F>
QuadratureResult adapt(const F& f, std::vector<std::pair<double, double>> init, int first_tag,
                       const QuadratureSpec& spec) {
    spec.validate();
    std::priority_queue<Panel> heap;
    double total = 0.0;
    double err = 0.0;
    int tag = first_tag;
    for (auto [a, b] : init) {
        Panel p = gk15([&](double x) { return f(x, tag); }, a, b, tag);
        total += p.value;
        err += p.error;
        heap.push(p);
        ++tag;
    }
    int count = static_cast<int>(heap.size());
    double frozen_err = 0.0;
    while (err > std::max(spec.abs_tol, spec.rel_tol * std::fabs(total))) {
        if (heap.empty() || count >= spec.max_subdivisions) throw QuadratureError(total, err);
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // cannot bisect further in double precision
            frozen_err += worst.error;
            continue;
        }
        const int t = worst.tag;
        Panel left = gk15([&](double x) { return f(x, t); }, worst.a, mid, t);
        Panel right = gk15([&](double x) { return f(x, t); }, mid, worst.b, t);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
        if (frozen_err > std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)))
            throw QuadratureError(total, err);
    }
    // Recompute the sums from the panels to shed accumulated rounding.
    double value = 0.0;
    double error = frozen_err;
    std::vector<Panel> panels;
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(),
              [](const Panel& x, const Panel& y) { return x.tag != y.tag ? x.tag < y.tag : x.a < y.a; });
    for (const auto& p : panels) {
        value += p.value;
        error += p.error;
    }
    return {value, error, count};
}

}  // namespace

QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureSpec& spec) {
    return adapt([&](double x, int) { return f(x); }, {{a, b}}, 0, spec);
}

QuadratureResult integrate_halfline(const std::function<double(double)>& f,
                                    const QuadratureSpec& spec) {
    // tag 0: u in [0, 1/2], t = u / (1 - u), dt = du / (1 - u)^2
    // tag 1: s in [0, 1/2], t = (1 - s) / s,  dt = ds / s^2
    auto g = [&](double x, int tag) {
        if (tag == 0) {
            const double w = 1.0 - x;
            return f(x / w) / (w * w);
        }
        const double v = f((1.0 - x) / x) / (x * x);
        return std::isfinite(v) ? v : 0.0;
    };
    return adapt(g, {{0.0, 0.5}, {0.0, 0.5}}, 0, spec);
}

// ---------------------------------------------------------------------------
// Linear algebra

Matrix cholesky(const Matrix& m) {
    const auto n = m.rows();
    if (m.cols() != n) throw DomainError("cholesky: matrix is not square");
    Matrix l = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) throw NotPositiveDefinite();
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

namespace {

void check_symmetric(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("SpdMatrix: not a square matrix");
    const double scale = m.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-12 * scale)
                throw DomainError("SpdMatrix: matrix is not symmetric");
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
    check_symmetric(m_);
    l_ = cholesky(m_);
    log_det_ = 2.0 * l_.diagonal().array().log().sum();
}

SpdMatrix SpdMatrix::identity(int d) { return SpdMatrix(Matrix::Identity(d, d)); }

Vector SpdMatrix::whiten(const Vector& x) const {
    if (x.size() != m_.rows()) throw DomainError("dimension mismatch");
    return l_.triangularView<Eigen::Lower>().solve(x);
}

double SpdMatrix::quad_form(const Vector& x) const { return whiten(x).squaredNorm(); }

bool SpdMatrix::is_spd(const Matrix& m) {
    try {
        check_symmetric(m);
        cholesky(m);
        return true;
    } catch (const DomainError&) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// Student-t and Normal

double t_logpdf(double x, double nu) {
    require_positive(nu, "t_logpdf(nu)");
    return log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * std::log(nu * kPi) -
           0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

namespace {

constexpr double kSeriesMaxNu = 400.0;

bool integer_nu(double nu) { return nu == std::floor(nu) && nu <= kSeriesMaxNu; }

// Lower tail of the standard t at -a (a >= 0) by the incomplete beta.
double tail_by_beta(double a, double nu) {
    const double denom = nu + a * a;
    return 0.5 * incomplete_beta(0.5 * nu, 0.5, nu / denom, a * a / denom);
}

// Lower tail at -a (a >= 0) for integer nu via the finite trigonometric
// series for P(|T| <= a).
double tail_by_series(double a, int nu) {
    if (nu == 1) return std::atan2(1.0, a) / kPi;
    const double r = std::sqrt(nu + a * a);
    if (nu == 2) return 1.0 / (r * (r + a));
    const double c2 = nu / (r * r);
    const double s = a / r;
    const double c = std::sqrt(c2);
    double central;
    if (nu % 2 == 1) {
        double term = c;
        double sum = c;
        for (int k = 1; k <= (nu - 3) / 2; ++k) {
            term *= c2 * (2.0 * k) / (2.0 * k + 1.0);
            sum += term;
        }
        central = (2.0 / kPi) * (std::atan2(a, std::sqrt(static_cast<double>(nu))) + s * sum);
    } else {
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k <= (nu - 2) / 2; ++k) {
            term *= c2 * (2.0 * k - 1.0) / (2.0 * k);
            sum += term;
        }
        central = s * sum;
    }
    const double tail = 0.5 * (1.0 - central);
    // Subtraction costs relative accuracy once the tail is small.
    if (tail < 1e-3) return tail_by_beta(a, nu);
    return tail;
}

}  // namespace

double t_tail(double x, double nu) {
    require_positive(nu, "t_tail(nu)");
    const double a = std::fabs(x);
    if (std::isinf(nu)) return 0.5 * std::erfc(a / std::numbers::sqrt2);
    if (integer_nu(nu)) return tail_by_series(a, static_cast<int>(nu));
    return tail_by_beta(a, nu);
}

double t_cdf(double x, double nu) {
    if (std::isnan(x)) throw DomainError("t_cdf: NaN argument");
    const double tail = t_tail(x, nu);
    return x < 0.0 ? tail : 1.0 - tail;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

// Hill (1970) approximation to the upper quantile for two-sided tail
// probability p2; used only as a Newton starting point.
double hill_start(double p2, double nu) {
    const double a = 1.0 / (nu - 0.5);
    const double b = 48.0 / (a * a);
    double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    const double d = ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * kPi / 2.0) * nu;
    double x = d * p2;
    double y = std::pow(x, 2.0 / nu);
    if (y > 0.05 + a) {
        x = normal_quantile(0.5 * p2);
        y = x * x;
        if (nu < 5.0) c += 0.3 * (nu - 4.5) * (x + 0.6);
        c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = std::expm1(a * y * y);
    } else {
        y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0) +
              0.5 / (nu + 4.0)) *
                 y -
             1.0) *
                (nu + 1.0) / (nu + 2.0) +
            1.0 / y;
    }
    return std::sqrt(nu * y);
}

}  // namespace

namespace {

double t_log_norm(double nu) {
    // the samplers call this with a handful of distinct nu values in a row
    thread_local double cached_nu = -1.0;
    thread_local double cached = 0.0;
    if (nu != cached_nu) {
        cached = log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * std::log(nu * kPi);
        cached_nu = nu;
    }
    return cached;
}

}  // namespace

double t_quantile_lower(double q, double nu, double start) {
    require_positive(nu, "t_quantile(nu)");
    if (!(q > 0.0 && q <= 0.5)) throw DomainError("t_quantile_lower: q must lie in (0, 0.5]");
    if (q == 0.5) return 0.0;
    if (std::isinf(nu)) return normal_quantile(q);
    if (nu == 1.0) return -1.0 / std::tan(kPi * q);
    if (nu == 2.0) return -(1.0 - 2.0 * q) / std::sqrt(2.0 * q * (1.0 - q));

    // Newton on log F(x) - log q over the bracket [lo, 0].
    double x = start;
    if (!(std::isfinite(x) && x < 0.0)) {
        x = -hill_start(2.0 * q, nu);
        if (!std::isfinite(x) || x >= 0.0) x = normal_quantile(q);
    }
    const double log_q = std::log(q);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = 0.0;
    const double log_norm = t_log_norm(nu);
    for (int it = 0; it < 100; ++it) {
        const double tail = t_tail(x, nu);
        const double log_tail = std::log(tail);
        const double g = log_tail - log_q;
        if (g > 0.0) hi = x; else lo = x;
        if (g == 0.0) return x;
        const double log_pdf = log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
        // Halley on g(x) = log F(x) - log q, with r = f / F = g'
        const double r = std::exp(log_pdf - log_tail);
        const double curv = -(nu + 1.0) * x / (nu + x * x) - r;  // g'' / g'
        const double newton = g / r;
        const double denom = 1.0 - 0.5 * newton * curv;
        double step = denom > 0.5 ? newton / denom : newton;
        double next = x - step;
        if (!(next > lo && next < hi)) {
            next = std::isinf(lo) ? 2.0 * std::min(x, -1.0) : 0.5 * (lo + hi);
            step = x - next;
        }
        x = next;
        // cubic convergence: once a step is this small the new iterate is
        // already at rounding level
        if (std::fabs(step) <= 2e-5 * std::fabs(x)) break;
    }
    return x;
}

double t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0, 1)");
    if (p <= 0.5) return t_quantile_lower(p, nu);
    return -t_quantile_lower(1.0 - p, nu);
}

double t_transfer(double x, double nu_from, double nu_to) {
    if (nu_from == nu_to) return x;
    if (x == 0.0) return 0.0;
    double tail = t_tail(x, nu_from);
    tail = std::max(tail, std::numeric_limits<double>::min());
    const double z = t_quantile_lower(tail, nu_to);
    return x < 0.0 ? z : -z;
}

}  // namespace dofprior
