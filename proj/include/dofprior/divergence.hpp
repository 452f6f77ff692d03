#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dofprior/mathcore.hpp"

namespace dofprior {

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
    // Kish effective sample size; equals n_samples for plain Monte Carlo.
    double ess = 0.0;
    // Set when the log-ratio sample kurtosis exceeds 100.
    bool heavy_tail = false;
};

// KL(t_d(nu) || t_d(nu')) between standard d-variate t densities. Accepts any
// positive degrees of freedom.
double kl_t_t(int d, double nu, double nu_prime, const QuadratureSpec& spec = {});

// KL(N_d || t_d(nu')).
double kl_normal_t(int d, double nu_prime, const QuadratureSpec& spec = {});

// E_{d,nu}[log(1 + x'x / nu')] by one-dimensional quadrature.
double expected_log_radial_t(int d, double nu, double nu_prime, const QuadratureSpec& spec = {});
// E_{N_d}[log(1 + x'x / nu')].
double expected_log_radial_normal(int d, double nu_prime, const QuadratureSpec& spec = {});

// Copula divergences. Degrees of freedom equal to nu_max denote the Gaussian
// copula. Samples are drawn in fixed-size chunks with one seeded stream per
// chunk and reduced in chunk order, so the result does not depend on
// `threads`.
McEstimate kl_copula_mc(int nu, int nu_prime, const SpdMatrix& corr, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max = 30, int threads = 1);
McEstimate kl_copula_mc(int nu, int nu_prime, double rho, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max = 30, int threads = 1);

// Self-normalised importance sampling with the copula of min(nu, nu') as
// proposal. Throws NumericError when the effective sample size falls below
// 1% of n_samples.
McEstimate kl_copula_is(int nu, int nu_prime, const SpdMatrix& corr, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max = 30, int threads = 1);
McEstimate kl_copula_is(int nu, int nu_prime, double rho, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max = 30, int threads = 1);

struct KLGridRow {
    int nu = 0;
    double dkl_prev = 0.0;  // KL(t(nu) || t(nu - 1)); NaN for nu = 1
    double dkl_next = 0.0;  // KL(t(nu) || t(nu + 1))
};

// Contiguous divergences for nu = 1..nu_max, all on the t-vs-t reading, plus
// the Normal entry KL(N_d || t(nu_max - 1)) kept separately.
struct KLGrid {
    int d = 1;
    int nu_max = 30;
    std::vector<KLGridRow> rows;
    double normal_entry = 0.0;
    std::string method = "quadrature";
    double tol = 1e-10;

    const KLGridRow& row(int nu) const;
};

KLGrid build_kl_grid(int d, int nu_max, const QuadratureSpec& spec = {}, int threads = 1);

// CSV with header "d,nu,dkl_prev,dkl_next,method,tol": one row per nu, then
// a final row with method "normal" carrying the Normal entry in dkl_prev.
void write_kl_grid_csv(const KLGrid& grid, std::ostream& out);
KLGrid read_kl_grid_csv(std::istream& in);

// Reads <cache_dir>/kl_grid_d<d>_numax<nu_max>_tol<tol>.csv when present,
// otherwise builds the grid and stores it there. Empty cache_dir disables
// caching.
KLGrid load_or_build_kl_grid(const std::string& cache_dir, int d, int nu_max,
                             const QuadratureSpec& spec = {}, int threads = 1);

}  // namespace dofprior
