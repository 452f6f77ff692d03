#pragma once

#include <cstdint>
#include <vector>

#include "dofprior/mathcore.hpp"
#include "dofprior/rng.hpp"

namespace dofprior {

// Discrete, truncated degrees-of-freedom support {1, ..., nu_max}. The top
// value stands for the Normal (or Gaussian-copula) limit.
class DofSupport {
public:
    explicit DofSupport(int nu_max = 30);

    int nu_max() const { return nu_max_; }
    int size() const { return nu_max_; }
    bool contains(int nu) const { return nu >= 1 && nu <= nu_max_; }
    bool is_normal(int nu) const { return nu == nu_max_; }
    // Degrees of freedom to hand to univariate t routines (+inf at nu_max).
    double df(int nu) const;

private:
    int nu_max_;
};

struct MvtParams {
    Vector mu;
    SpdMatrix sigma;
    int nu;
    int nu_max = 30;

    MvtParams(Vector mu, SpdMatrix sigma, int nu, int nu_max = 30);
    int dim() const { return static_cast<int>(mu.size()); }
    bool is_normal() const { return nu == nu_max; }
};

struct MarginSpec {
    double mu = 0.0;
    double sigma = 1.0;
    int nu = 30;
};

// t-copula (Gaussian copula at nu == nu_max) with location-scale t margins.
class CopulaModel {
public:
    CopulaModel(SpdMatrix corr, int nu, std::vector<MarginSpec> margins, int nu_max = 30);
    static CopulaModel bivariate(double rho, int nu, std::vector<MarginSpec> margins, int nu_max = 30);
    // Bivariate copula with standard margins (mu 0, sigma 1, Normal).
    static CopulaModel bivariate(double rho, int nu, int nu_max = 30);

    int dim() const { return corr_.dim(); }
    const SpdMatrix& corr() const { return corr_; }
    double rho() const;
    int nu() const { return nu_; }
    int nu_max() const { return nu_max_; }
    const std::vector<MarginSpec>& margins() const { return margins_; }
    DofSupport support() const { return DofSupport(nu_max_); }

private:
    SpdMatrix corr_;
    int nu_;
    int nu_max_;
    std::vector<MarginSpec> margins_;
};

struct NuisanceHyper {
    double mu_sd = 100.0;
    double sigma_scale = 1.0;
};

// log K(d, nu), the normalising constant of the standard d-variate t.
double log_mvt_const(int d, double nu);

// Genuine t density for any nu > 0.
double logpdf_mvt(const Vector& x, const Vector& mu, const SpdMatrix& sigma, double nu);
// Branches to the Normal when p.nu == p.nu_max.
double logpdf_mvt(const Vector& x, const MvtParams& p);
double logpdf_mvnormal(const Vector& x, const Vector& mu, const SpdMatrix& sigma);

// Copula log density from scores y_j = F^{-1}(u_j) already on the copula's
// own marginal scale (df = +inf for the Gaussian copula).
double log_copula_density_scores(const Vector& y, const SpdMatrix& corr, double df);
double log_copula_density(const Vector& u, const CopulaModel& c);

// log_copula_density_scores with the correlation inverse and constants
// precomputed, for loops over many points.
class CopulaKernel {
public:
    CopulaKernel(const SpdMatrix& corr, double df);
    double operator()(const double* y) const;
    double df() const { return df_; }

private:
    int d_;
    double df_;
    Matrix rinv_;
    double constant_;
};

double loglik_mvt(const Matrix& data, const MvtParams& p);
double loglik_copula_full(const Matrix& data, const CopulaModel& c);

Matrix sample_mvt(const MvtParams& p, std::int64_t n, std::uint64_t seed);
Matrix sample_mvt(const MvtParams& p, std::int64_t n, Rng& rng);

// Draws from the copula on the score scale (rows ~ mvt(0, R, df)).
Matrix sample_tcopula_scores(const SpdMatrix& corr, double df, std::int64_t n, Rng& rng);
Matrix sample_tcopula(const SpdMatrix& corr, int nu, int nu_max, std::int64_t n, std::uint64_t seed);
Matrix sample_tcopula(double rho, int nu, int nu_max, std::int64_t n, std::uint64_t seed);
// Observations from the full copula model with its location-scale t margins.
Matrix sample_copula_model(const CopulaModel& c, std::int64_t n, std::uint64_t seed);

double log_prior_nuisance_mvt(const MvtParams& p);
double log_prior_nuisance_copula(const CopulaModel& c, const NuisanceHyper& hyper = {});

double log_normal_density(double x, double mean, double sd);
double log_half_cauchy_density(double x, double scale);
double log_beta_half_density(double y);

// Sample Kendall rank correlation of two columns (O(n^2), ties count zero).
double sample_kendall_tau(const Matrix& data, int col_a = 0, int col_b = 1);

}  // namespace dofprior
