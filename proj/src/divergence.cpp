#include "dofprior/divergence.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "dofprior/csv.hpp"
#include "dofprior/models.hpp"
#include "dofprior/parallel.hpp"
#include "dofprior/rng.hpp"

namespace dofprior {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log of pi^{d/2} / Gamma(d/2), the surface factor of the radial integral.
double log_sphere_factor(int d) { return 0.5 * d * std::log(std::numbers::pi) - log_gamma(0.5 * d); }

}  // namespace

double expected_log_radial_t(int d, double nu, double nu_prime, const QuadratureSpec& spec) {
    if (d < 1) throw DomainError("dimension must be positive");
    if (!(nu > 0.0) || !(nu_prime > 0.0)) throw DomainError("degrees of freedom must be positive");
    const double expo = -0.5 * (nu + d);
    const double power = 0.5 * d - 1.0;
    auto integrand = [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp(expo * std::log1p(t / nu) + power * std::log(t)) * std::log1p(t / nu_prime);
    };
    const auto r = integrate_halfline(integrand, spec);
    return std::exp(log_mvt_const(d, nu) + log_sphere_factor(d)) * r.value;
}

double expected_log_radial_normal(int d, double nu_prime, const QuadratureSpec& spec) {
    if (d < 1) throw DomainError("dimension must be positive");
    if (!(nu_prime > 0.0)) throw DomainError("degrees of freedom must be positive");
    const double power = 0.5 * d - 1.0;
    auto integrand = [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp(-0.5 * t + power * std::log(t)) * std::log1p(t / nu_prime);
    };
    const auto r = integrate_halfline(integrand, spec);
    return std::exp(-0.5 * d * std::log(2.0) - log_gamma(0.5 * d)) * r.value;
}

double kl_t_t(int d, double nu, double nu_prime, const QuadratureSpec& spec) {
    const double own = digamma(0.5 * (nu + d)) - digamma(0.5 * nu);
    const double cross = expected_log_radial_t(d, nu, nu_prime, spec);
    return log_mvt_const(d, nu) - log_mvt_const(d, nu_prime) - 0.5 * (nu + d) * own +
           0.5 * (nu_prime + d) * cross;
}

double kl_normal_t(int d, double nu_prime, const QuadratureSpec& spec) {
    const double cross = expected_log_radial_normal(d, nu_prime, spec);
    return -0.5 * d * kLogTwoPi - log_mvt_const(d, nu_prime) - 0.5 * d + 0.5 * (nu_prime + d) * cross;
}

// ---------------------------------------------------------------------------
// Copula Monte Carlo

namespace {

constexpr std::int64_t kChunk = 1 << 16;

struct ChunkSums {
    long double sw = 0, sw2 = 0, swr = 0, sw2r = 0, sw2r2 = 0;
    long double sr = 0, sr2 = 0, sr3 = 0, sr4 = 0;
    std::int64_t n = 0;
};

// Draws from the copula of `proposal` and accumulates weighted log-ratios
// log c(nu) - log c(nu') with weights c(nu) / c(proposal).
ChunkSums run_chunk(const SpdMatrix& corr, double df_target, double df_other, double df_prop,
                    std::int64_t count, std::uint64_t seed, std::uint64_t chunk) {
    const int d = corr.dim();
    const CopulaKernel k_target(corr, df_target);
    const CopulaKernel k_other(corr, df_other);
    const CopulaKernel k_prop(corr, df_prop);
    const Matrix& l = corr.chol();
    Rng rng = make_stream(seed, {chunk});
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(std::isinf(df_prop) ? 1.0 : df_prop);
    std::vector<double> z(d), y(d), yt(d), yo(d);
    ChunkSums s;
    for (std::int64_t i = 0; i < count; ++i) {
        for (int j = 0; j < d; ++j) z[j] = normal(rng);
        const double scale = std::isinf(df_prop) ? 1.0 : std::sqrt(df_prop / chi2(rng));
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k <= j; ++k) acc += l(j, k) * z[k];
            y[j] = acc * scale;
        }
        for (int j = 0; j < d; ++j) {
            yt[j] = t_transfer(y[j], df_prop, df_target);
            yo[j] = t_transfer(y[j], df_prop, df_other);
        }
        const double lt = k_target(yt.data());
        const double r = lt - k_other(yo.data());
        const double w = (df_prop == df_target) ? 1.0 : std::exp(lt - k_prop(y.data()));
        s.sw += w;
        s.sw2 += static_cast<long double>(w) * w;
        s.swr += static_cast<long double>(w) * r;
        s.sw2r += static_cast<long double>(w) * w * r;
        s.sw2r2 += static_cast<long double>(w) * w * r * r;
        const long double rr = static_cast<long double>(r) * r;
        s.sr += r;
        s.sr2 += rr;
        s.sr3 += rr * r;
        s.sr4 += rr * rr;
        ++s.n;
    }
    return s;
}

McEstimate estimate(int nu, int nu_prime, const SpdMatrix& corr, std::int64_t n_samples,
                    std::uint64_t seed, int nu_max, int threads, bool importance) {
    if (n_samples < 1000) throw DomainError("copula KL estimators need at least 1000 samples");
    const DofSupport support(nu_max);
    const double df_t = support.df(nu);
    const double df_o = support.df(nu_prime);
    const double df_p = importance ? support.df(std::min(nu, nu_prime)) : df_t;

    McEstimate out;
    out.n_samples = n_samples;
    out.seed = seed;
    if (nu == nu_prime) {
        out.ess = static_cast<double>(n_samples);
        return out;
    }
    const std::int64_t chunks = (n_samples + kChunk - 1) / kChunk;
    std::vector<ChunkSums> parts(chunks);
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
        const std::int64_t count = std::min<std::int64_t>(kChunk, n_samples - static_cast<std::int64_t>(c) * kChunk);
        parts[c] = run_chunk(corr, df_t, df_o, df_p, count, seed, c);
    });
    ChunkSums t;
    for (const auto& p : parts) {
        t.sw += p.sw;
        t.sw2 += p.sw2;
        t.swr += p.swr;
        t.sw2r += p.sw2r;
        t.sw2r2 += p.sw2r2;
        t.sr += p.sr;
        t.sr2 += p.sr2;
        t.sr3 += p.sr3;
        t.sr4 += p.sr4;
        t.n += p.n;
    }
    const long double n = static_cast<long double>(t.n);
    const long double est = t.swr / t.sw;
    out.value = static_cast<double>(est);
    out.ess = static_cast<double>(t.sw * t.sw / t.sw2);
    if (df_p == df_t) {
        const long double var = (t.sr2 - t.sr * t.sr / n) / (n - 1);
        out.std_error = static_cast<double>(std::sqrt(std::max<long double>(var, 0) / n));
    } else {
        const long double num = t.sw2r2 - 2 * est * t.sw2r + est * est * t.sw2;
        out.std_error = static_cast<double>(std::sqrt(std::max<long double>(num, 0)) / t.sw);
    }
    // excess-free kurtosis of the raw log-ratios
    const long double m = t.sr / n;
    const long double m2 = t.sr2 / n - m * m;
    const long double m4 = t.sr4 / n - 4 * m * t.sr3 / n + 6 * m * m * t.sr2 / n - 3 * m * m * m * m;
    out.heavy_tail = m2 > 0 && m4 / (m2 * m2) > 100.0L;
    if (importance && out.ess < 0.01 * static_cast<double>(n_samples))
        throw NumericError("importance sampling weights are degenerate (effective sample size " +
                           std::to_string(out.ess) + ")");
    return out;
}

SpdMatrix corr_from_rho(double rho) {
    if (!(std::fabs(rho) < 1.0)) throw DomainError("correlation must lie in (-1, 1)");
    Matrix r(2, 2);
    r << 1.0, rho, rho, 1.0;
    return SpdMatrix(r);
}

}  // namespace

McEstimate kl_copula_mc(int nu, int nu_prime, const SpdMatrix& corr, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max, int threads) {
    return estimate(nu, nu_prime, corr, n_samples, seed, nu_max, threads, false);
}

McEstimate kl_copula_mc(int nu, int nu_prime, double rho, std::int64_t n_samples, std::uint64_t seed,
                        int nu_max, int threads) {
    return kl_copula_mc(nu, nu_prime, corr_from_rho(rho), n_samples, seed, nu_max, threads);
}

McEstimate kl_copula_is(int nu, int nu_prime, const SpdMatrix& corr, std::int64_t n_samples,
                        std::uint64_t seed, int nu_max, int threads) {
    return estimate(nu, nu_prime, corr, n_samples, seed, nu_max, threads, true);
}

McEstimate kl_copula_is(int nu, int nu_prime, double rho, std::int64_t n_samples, std::uint64_t seed,
                        int nu_max, int threads) {
    return kl_copula_is(nu, nu_prime, corr_from_rho(rho), n_samples, seed, nu_max, threads);
}

// ---------------------------------------------------------------------------
// Grid

const KLGridRow& KLGrid::row(int nu) const {
    if (nu < 1 || nu > static_cast<int>(rows.size())) throw DomainError("KLGrid: nu outside the grid");
    return rows[nu - 1];
}

KLGrid build_kl_grid(int d, int nu_max, const QuadratureSpec& spec, int threads) {
    DofSupport{nu_max};
    spec.validate();
    KLGrid grid;
    grid.d = d;
    grid.nu_max = nu_max;
    grid.tol = spec.abs_tol;
    grid.rows.resize(nu_max);
    // 2 * nu_max quadrature jobs plus the Normal entry
    const std::size_t jobs = 2 * static_cast<std::size_t>(nu_max) + 1;
    std::vector<double> values(jobs, kNaN);
    parallel_for(jobs, threads, [&](std::size_t k) {
        if (k == jobs - 1) {
            values[k] = kl_normal_t(d, nu_max - 1, spec);
            return;
        }
        const int nu = static_cast<int>(k / 2) + 1;
        if (k % 2 == 0) {
            if (nu > 1) values[k] = kl_t_t(d, nu, nu - 1, spec);
        } else {
            values[k] = kl_t_t(d, nu, nu + 1, spec);
        }
    });
    for (int nu = 1; nu <= nu_max; ++nu)
        grid.rows[nu - 1] = {nu, values[2 * (nu - 1)], values[2 * (nu - 1) + 1]};
    grid.normal_entry = values[jobs - 1];
    return grid;
}

void write_kl_grid_csv(const KLGrid& grid, std::ostream& out) {
    out << "d,nu,dkl_prev,dkl_next,method,tol\n";
    for (const auto& r : grid.rows)
        out << grid.d << ',' << r.nu << ',' << format_double(r.dkl_prev) << ',' << format_double(r.dkl_next)
            << ',' << grid.method << ',' << format_double(grid.tol) << '\n';
    out << grid.d << ',' << grid.nu_max << ',' << format_double(grid.normal_entry) << ','
        << format_double(kNaN) << ",normal," << format_double(grid.tol) << '\n';
}

KLGrid read_kl_grid_csv(std::istream& in) {
    const auto table = read_csv_table(in);
    const std::vector<std::string> expected = {"d", "nu", "dkl_prev", "dkl_next", "method", "tol"};
    if (table.header != expected) throw DataError("KL grid CSV: unexpected header");
    KLGrid grid;
    bool have_normal = false;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const int line = static_cast<int>(i) + 2;
        grid.d = static_cast<int>(parse_double(row[0], line));
        const int nu = static_cast<int>(parse_double(row[1], line));
        if (row[4] == "normal") {
            grid.normal_entry = parse_double(row[2], line);
            grid.nu_max = nu;
            have_normal = true;
            continue;
        }
        grid.method = row[4];
        grid.tol = parse_double(row[5], line);
        grid.rows.push_back({nu, parse_double(row[2], line), parse_double(row[3], line)});
    }
    if (!have_normal) throw DataError("KL grid CSV: missing normal row");
    if (static_cast<int>(grid.rows.size()) != grid.nu_max) throw DataError("KL grid CSV: row count mismatch");
    return grid;
}

KLGrid load_or_build_kl_grid(const std::string& cache_dir, int d, int nu_max, const QuadratureSpec& spec,
                             int threads) {
    if (cache_dir.empty()) return build_kl_grid(d, nu_max, spec, threads);
    std::ostringstream name;
    name << "kl_grid_d" << d << "_numax" << nu_max << "_tol" << spec.abs_tol << ".csv";
    const auto path = std::filesystem::path(cache_dir) / name.str();
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        auto grid = read_kl_grid_csv(in);
        if (grid.d == d && grid.nu_max == nu_max && grid.tol == spec.abs_tol) return grid;
    }
    auto grid = build_kl_grid(d, nu_max, spec, threads);
    std::filesystem::create_directories(cache_dir);
    std::ofstream out(path);
    write_kl_grid_csv(grid, out);
    return grid;
}

}  // namespace dofprior
