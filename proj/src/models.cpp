#include "dofprior/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace dofprior {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

DofSupport::DofSupport(int nu_max) : nu_max_(nu_max) {
    if (nu_max < 3) throw DomainError("DofSupport: nu_max must be at least 3");
}

double DofSupport::df(int nu) const {
    if (!contains(nu)) throw DomainError("degrees of freedom outside the support");
    return is_normal(nu) ? kInf : static_cast<double>(nu);
}

MvtParams::MvtParams(Vector mu_, SpdMatrix sigma_, int nu_, int nu_max_)
    : mu(std::move(mu_)), sigma(std::move(sigma_)), nu(nu_), nu_max(nu_max_) {
    if (mu.size() != sigma.dim()) throw DomainError("MvtParams: mu and sigma dimensions differ");
    if (!DofSupport(nu_max).contains(nu)) throw DomainError("MvtParams: nu outside the support");
}

CopulaModel::CopulaModel(SpdMatrix corr, int nu, std::vector<MarginSpec> margins, int nu_max)
    : corr_(std::move(corr)), nu_(nu), nu_max_(nu_max), margins_(std::move(margins)) {
    const DofSupport support(nu_max);
    if (!support.contains(nu)) throw DomainError("CopulaModel: nu outside the support");
    for (Eigen::Index i = 0; i < corr_.matrix().rows(); ++i)
        if (std::fabs(corr_.matrix()(i, i) - 1.0) > 1e-12)
            throw DomainError("CopulaModel: correlation matrix needs a unit diagonal");
    if (static_cast<int>(margins_.size()) != corr_.dim())
        throw DomainError("CopulaModel: one margin per dimension required");
    for (const auto& m : margins_) {
        if (!(m.sigma > 0.0)) throw DomainError("CopulaModel: margin scale must be positive");
        if (!support.contains(m.nu)) throw DomainError("CopulaModel: margin nu outside the support");
    }
}

namespace {
SpdMatrix corr2(double rho) {
    if (!(std::fabs(rho) < 1.0)) throw DomainError("correlation must lie in (-1, 1)");
    Matrix r(2, 2);
    r << 1.0, rho, rho, 1.0;
    return SpdMatrix(r);
}
}  // namespace

CopulaModel CopulaModel::bivariate(double rho, int nu, std::vector<MarginSpec> margins, int nu_max) {
    return CopulaModel(corr2(rho), nu, std::move(margins), nu_max);
}

CopulaModel CopulaModel::bivariate(double rho, int nu, int nu_max) {
    const MarginSpec std_margin{0.0, 1.0, nu_max};
    return CopulaModel(corr2(rho), nu, {std_margin, std_margin}, nu_max);
}

double CopulaModel::rho() const {
    if (dim() != 2) throw DomainError("CopulaModel::rho: only defined for d = 2");
    return corr_.matrix()(0, 1);
}

// ---------------------------------------------------------------------------
// Densities

double log_mvt_const(int d, double nu) {
    return log_gamma(0.5 * (nu + d)) - log_gamma(0.5 * nu) - 0.5 * d * std::log(std::numbers::pi * nu);
}

double logpdf_mvt(const Vector& x, const Vector& mu, const SpdMatrix& sigma, double nu) {
    if (x.size() != mu.size() || mu.size() != sigma.dim()) throw DomainError("logpdf_mvt: dimension mismatch");
    if (!(nu > 0.0)) throw DomainError("logpdf_mvt: nu must be positive");
    const int d = sigma.dim();
    const double q = sigma.quad_form(x - mu);
    return log_mvt_const(d, nu) - 0.5 * sigma.log_det() - 0.5 * (nu + d) * std::log1p(q / nu);
}

double logpdf_mvnormal(const Vector& x, const Vector& mu, const SpdMatrix& sigma) {
    if (x.size() != mu.size() || mu.size() != sigma.dim())
        throw DomainError("logpdf_mvnormal: dimension mismatch");
    const int d = sigma.dim();
    return -0.5 * d * kLogTwoPi - 0.5 * sigma.log_det() - 0.5 * sigma.quad_form(x - mu);
}

double logpdf_mvt(const Vector& x, const MvtParams& p) {
    if (p.is_normal()) return logpdf_mvnormal(x, p.mu, p.sigma);
    return logpdf_mvt(x, p.mu, p.sigma, p.nu);
}

double log_copula_density_scores(const Vector& y, const SpdMatrix& corr, double df) {
    const int d = corr.dim();
    if (y.size() != d) throw DomainError("copula density: dimension mismatch");
    const double q = corr.quad_form(y);
    if (std::isinf(df)) return -0.5 * corr.log_det() - 0.5 * (q - y.squaredNorm());
    double margins = 0.0;
    for (int j = 0; j < d; ++j) margins += std::log1p(y[j] * y[j] / df);
    return log_mvt_const(d, df) - d * log_mvt_const(1, df) - 0.5 * corr.log_det() -
           0.5 * (df + d) * std::log1p(q / df) + 0.5 * (df + 1.0) * margins;
}

CopulaKernel::CopulaKernel(const SpdMatrix& corr, double df)
    : d_(corr.dim()), df_(df), rinv_(corr.chol().triangularView<Eigen::Lower>().solve(Matrix::Identity(corr.dim(), corr.dim()))) {
    rinv_ = rinv_.transpose() * rinv_;
    constant_ = -0.5 * corr.log_det();
    if (!std::isinf(df)) constant_ += log_mvt_const(d_, df) - d_ * log_mvt_const(1, df);
}

double CopulaKernel::operator()(const double* y) const {
    double q = 0.0;
    double ss = 0.0;
    for (int i = 0; i < d_; ++i) {
        double row = 0.0;
        for (int j = 0; j < d_; ++j) row += rinv_(i, j) * y[j];
        q += y[i] * row;
        ss += y[i] * y[i];
    }
    if (std::isinf(df_)) return constant_ - 0.5 * (q - ss);
    double margins = 0.0;
    for (int i = 0; i < d_; ++i) margins += std::log1p(y[i] * y[i] / df_);
    return constant_ - 0.5 * (df_ + d_) * std::log1p(q / df_) + 0.5 * (df_ + 1.0) * margins;
}

double log_copula_density(const Vector& u, const CopulaModel& c) {
    if (u.size() != c.dim()) throw DomainError("log_copula_density: dimension mismatch");
    const double df = c.support().df(c.nu());
    Vector y(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        if (!(u[j] > 0.0 && u[j] < 1.0)) throw DomainError("log_copula_density: u must lie in (0, 1)");
        y[j] = t_quantile(u[j], df);
    }
    return log_copula_density_scores(y, c.corr(), df);
}

namespace {

double std_logpdf(double z, double df) {
    if (std::isinf(df)) return -0.5 * kLogTwoPi - 0.5 * z * z;
    return t_logpdf(z, df);
}

}  // namespace

double loglik_mvt(const Matrix& data, const MvtParams& p) {
    if (data.cols() != p.dim()) throw DomainError("loglik_mvt: dimension mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) total += logpdf_mvt(data.row(i).transpose(), p);
    return total;
}

double loglik_copula_full(const Matrix& data, const CopulaModel& c) {
    const int d = c.dim();
    if (data.cols() != d) throw DomainError("loglik_copula_full: dimension mismatch");
    const DofSupport support = c.support();
    const double df_c = support.df(c.nu());
    std::vector<double> df_m(d);
    for (int j = 0; j < d; ++j) df_m[j] = support.df(c.margins()[j].nu);
    double total = 0.0;
    Vector y(d);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (int j = 0; j < d; ++j) {
            const auto& m = c.margins()[j];
            const double z = (data(i, j) - m.mu) / m.sigma;
            total += std_logpdf(z, df_m[j]) - std::log(m.sigma);
            y[j] = t_transfer(z, df_m[j], df_c);
        }
        total += log_copula_density_scores(y, c.corr(), df_c);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Sampling

Matrix sample_mvt(const MvtParams& p, std::int64_t n, Rng& rng) {
    const int d = p.dim();
    Matrix out(n, d);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(p.is_normal() ? 1.0 : p.nu);
    const Matrix& l = p.sigma.chol();
    Vector z(d);
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z[j] = normal(rng);
        Vector x = l.triangularView<Eigen::Lower>() * z;
        if (!p.is_normal()) x *= std::sqrt(p.nu / chi2(rng));
        out.row(i) = (p.mu + x).transpose();
    }
    return out;
}

Matrix sample_mvt(const MvtParams& p, std::int64_t n, std::uint64_t seed) {
    Rng rng = make_stream(seed);
    return sample_mvt(p, n, rng);
}

Matrix sample_tcopula_scores(const SpdMatrix& corr, double df, std::int64_t n, Rng& rng) {
    const int d = corr.dim();
    Matrix out(n, d);
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(std::isinf(df) ? 1.0 : df);
    const Matrix& l = corr.chol();
    Vector z(d);
    for (std::int64_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) z[j] = normal(rng);
        Vector x = l.triangularView<Eigen::Lower>() * z;
        if (!std::isinf(df)) x *= std::sqrt(df / chi2(rng));
        out.row(i) = x.transpose();
    }
    return out;
}

namespace {

double score_to_uniform(double y, double df) {
    const double tail = std::max(t_tail(y, df), std::numeric_limits<double>::min());
    if (y < 0.0) return tail;
    return std::min(1.0 - tail, 1.0 - 0x1.0p-53);
}

}  // namespace

Matrix sample_tcopula(const SpdMatrix& corr, int nu, int nu_max, std::int64_t n, std::uint64_t seed) {
    const double df = DofSupport(nu_max).df(nu);
    Rng rng = make_stream(seed);
    Matrix y = sample_tcopula_scores(corr, df, n, rng);
    return y.unaryExpr([df](double v) { return score_to_uniform(v, df); });
}

Matrix sample_tcopula(double rho, int nu, int nu_max, std::int64_t n, std::uint64_t seed) {
    return sample_tcopula(corr2(rho), nu, nu_max, n, seed);
}

Matrix sample_copula_model(const CopulaModel& c, std::int64_t n, std::uint64_t seed) {
    const DofSupport support = c.support();
    const double df_c = support.df(c.nu());
    Rng rng = make_stream(seed);
    Matrix y = sample_tcopula_scores(c.corr(), df_c, n, rng);
    for (int j = 0; j < c.dim(); ++j) {
        const auto& m = c.margins()[j];
        const double df_m = support.df(m.nu);
        for (std::int64_t i = 0; i < n; ++i) y(i, j) = m.mu + m.sigma * t_transfer(y(i, j), df_c, df_m);
    }
    return y;
}

// ---------------------------------------------------------------------------
// Nuisance priors

double log_prior_nuisance_mvt(const MvtParams& p) { return -1.5 * p.sigma.log_det(); }

double log_normal_density(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double log_half_cauchy_density(double x, double scale) {
    if (!(x > 0.0)) throw DomainError("half-Cauchy: argument must be positive");
    const double z = x / scale;
    return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
}

double log_beta_half_density(double y) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError("Beta(1/2,1/2): argument must lie in (0, 1)");
    return -std::log(std::numbers::pi) - 0.5 * std::log(y) - 0.5 * std::log1p(-y);
}

double log_prior_nuisance_copula(const CopulaModel& c, const NuisanceHyper& hyper) {
    double total = 0.0;
    for (const auto& m : c.margins())
        total += log_normal_density(m.mu, 0.0, hyper.mu_sd) + log_half_cauchy_density(m.sigma, hyper.sigma_scale);
    for (int i = 0; i < c.dim(); ++i)
        for (int j = 0; j < i; ++j) total += log_beta_half_density(0.5 * (1.0 + c.corr().matrix()(i, j)));
    return total;
}

double sample_kendall_tau(const Matrix& data, int col_a, int col_b) {
    const auto n = data.rows();
    if (n < 2) throw DomainError("sample_kendall_tau: need at least two rows");
    long long concordant = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double s = (data(i, col_a) - data(j, col_a)) * (data(i, col_b) - data(j, col_b));
            concordant += (s > 0) - (s < 0);
        }
    return static_cast<double>(concordant) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace dofprior
