#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "dofprior/errors.hpp"
#include "dofprior/mcmc.hpp"

using namespace dofprior;
using doctest::Approx;

namespace {

Matrix mvt_data(int nu, int n, std::uint64_t seed) {
    Matrix s(2, 2);
    s << 1.0, 0.4, 0.4, 2.0;
    Vector mu(2);
    mu << 0.5, -1.0;
    return sample_mvt(MvtParams(mu, SpdMatrix(s), nu), n, seed);
}

const PriorTable& mvt_prior2() {
    static const PriorTable p = build_prior_mvt(2, 30, build_kl_grid(2, 30));
    return p;
}

McmcConfig short_config(std::uint64_t seed) {
    McmcConfig c;
    c.n_keep = 300;
    c.burn_in = 500;
    c.thin = 5;
    c.seed = seed;
    return c;
}

double chi2_stat(const std::vector<double>& counts, const std::vector<double>& probs, double total) {
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * total;
        s += (counts[i] - e) * (counts[i] - e) / e;
    }
    return s;
}

}  // namespace

TEST_CASE("gibbs draw: degenerate, uniform and shift invariant") {
    Rng rng = make_stream(1, {});
    std::vector<double> one(30, -INFINITY);
    one[6] = -3.0;
    for (int i = 0; i < 100; ++i) CHECK(gibbs_nu_draw(one, rng) == 7);
    CHECK_THROWS(gibbs_nu_draw(std::vector<double>(30, -INFINITY), rng));

    std::vector<double> flat(10, 2.0);
    std::vector<double> counts(10, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[gibbs_nu_draw(flat, rng) - 1] += 1.0;
    const double se = std::sqrt(0.1 * 0.9 / n);
    for (double c : counts) CHECK(std::fabs(c / n - 0.1) < 4.0 * se);

    std::vector<double> lv = {0.1, -2.0, 1.5, 0.0}, shifted = lv;
    for (auto& v : shifted) v += 700.0;
    Rng a = make_stream(9, {}), b = make_stream(9, {});
    for (int i = 0; i < 1000; ++i) CHECK(gibbs_nu_draw(lv, a) == gibbs_nu_draw(shifted, b));

    const DofSupport sup(30);
    Rng c = make_stream(4, {});
    CHECK(gibbs_nu_draw([](int nu) { return nu == 12 ? 0.0 : -INFINITY; }, sup, c) == 12);
}

TEST_CASE("metropolis step: constant target, domains and NaN handling") {
    Rng rng = make_stream(2, {});
    double x = 0.0;
    int acc = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto s = rw_metropolis_step(x, [](double) { return 1.0; }, 0.7, rng);
        acc += s.accepted;
        x = s.value;
    }
    CHECK(acc == 1000);

    double p = 0.01;
    for (int i = 0; i < 10000; ++i) {
        p = rw_metropolis_step(p, [](double v) { return -v; }, 2.0, rng, ParamDomain::positive).value;
        REQUIRE(p > 0.0);
    }
    double r = 0.99;
    for (int i = 0; i < 10000; ++i) {
        r = rw_metropolis_step(r, [](double) { return 0.0; }, 1.5, rng, ParamDomain::unit_interval).value;
        REQUIRE(std::fabs(r) < 1.0);
    }
    const auto s = rw_metropolis_step(0.3, 0.0, [](double) { return std::nan(""); }, 0.1, rng);
    CHECK(s.nan);
    CHECK_FALSE(s.accepted);
    CHECK(s.value == 0.3);
    CHECK_THROWS_AS(rw_metropolis_step(0.0, [](double) { return 0.0; }, 0.0, rng), DomainError);
}

namespace {

// Runs a chain on a 1-d target, bins thinned draws and compares the histogram
// with the exact bin probabilities.
void check_stationary(ParamDomain domain, double start, double scale, const std::function<double(double)>& logpdf,
                      const std::vector<double>& edges, const std::function<double(double)>& cdf) {
    Rng rng = make_stream(77, {static_cast<std::uint64_t>(domain)});
    const int thin = 25, kept = 100000;
    std::vector<double> counts(edges.size() - 1, 0.0);
    double x = start, lp = logpdf(start);
    for (int k = 0; k < kept; ++k) {
        for (int t = 0; t < thin; ++t) {
            const auto s = rw_metropolis_step(x, lp, logpdf, scale, rng, domain);
            x = s.value;
            lp = s.logpost;
        }
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
            if (x >= edges[b] && x < edges[b + 1]) counts[b] += 1.0;
    }
    std::vector<double> probs(counts.size());
    for (std::size_t b = 0; b < probs.size(); ++b) probs[b] = cdf(edges[b + 1]) - cdf(edges[b]);
    const double stat = chi2_stat(counts, probs, kept);
    boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    CHECK(stat < boost::math::quantile(dist, 0.99));
}

}  // namespace

TEST_CASE("metropolis step leaves truncated targets invariant") {
    // Exp(1) on the half line; a large scale makes truncation matter near zero
    std::vector<double> e = {0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 1e300};
    check_stationary(ParamDomain::positive, 1.0, 1.5, [](double v) { return -v; }, e,
                     [](double v) { return v >= 1e300 ? 1.0 : -std::expm1(-v); });
    // density proportional to (1 + x)^3 on (-1, 1)
    std::vector<double> u = {-1.0, -0.5, 0.0, 0.25, 0.5, 0.7, 0.85, 0.95, 1.0};
    check_stationary(ParamDomain::unit_interval, 0.0, 0.8, [](double v) { return 3.0 * std::log1p(v); }, u,
                     [](double v) { return std::pow(1.0 + v, 4) / 16.0; });
}

TEST_CASE("adaptation multiplies scales by exp(rate - target)") {
    ChainOutput pilot;
    pilot.accept_rates = {{"a", 0.30}, {"b", 0.9}, {"c", 0.05}};
    pilot.config.proposal_scales = {{"a", 1.0}, {"b", 1.0}, {"c", 2.0}};
    McmcConfig c;
    const McmcConfig out = adapt_scales(pilot, c);
    CHECK(out.proposal_scales.at("a") == 1.0);
    CHECK(out.proposal_scales.at("b") == Approx(std::exp(0.6)));
    CHECK(out.proposal_scales.at("c") < 2.0);
}

TEST_CASE("config validation") {
    McmcConfig c;
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.proposal_scales["mu1"] = -1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.n_keep = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("summaries") {
    ChainOutput c;
    c.names = {"x", "nu"};
    c.discrete = {false, true};
    c.draws = {std::vector<double>(50, 2.5), std::vector<double>(50, 4.0)};
    c.log_posterior_trace.assign(50, 0.0);
    auto s = summarize(c);
    CHECK(s.get("x").median == 2.5);
    CHECK(s.get("x").lower == 2.5);
    CHECK(s.get("x").upper == 2.5);
    CHECK(s.get("nu").map == 4);
    CHECK(s.get("nu").credible_set == std::vector<int>{4});

    // 2..6 with masses .02 .48 .30 .17 .03
    std::vector<double> nu;
    const int m[] = {2, 48, 30, 17, 3};
    for (int k = 0; k < 5; ++k) nu.insert(nu.end(), m[k], k + 2.0);
    c.draws = {std::vector<double>(100, 0.0), nu};
    c.log_posterior_trace.assign(100, 0.0);
    s = summarize(c);
    CHECK(s.get("nu").map == 3);
    CHECK(s.get("nu").credible_set == std::vector<int>{3, 4, 5});
    CHECK(s.get("nu").credible_mass == Approx(0.95));
    CHECK(s.get("nu").lower <= s.get("nu").median);

    CHECK(sample_quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(sample_quantile({1, 2, 3, 4}, 0.25) == 1.75);
    c.draws = {{}, {}};
    CHECK_THROWS(summarize(c));
}

TEST_CASE("mvt sampler: point-mass prior pins nu") {
    const Matrix x = mvt_data(4, 100, 3);
    McmcConfig c = short_config(5);
    c.n_keep = 100;
    const auto out = run_mvt_sampler(x, point_mass_prior(7), c);
    for (double v : out.get("nu")) CHECK(v == 7.0);
    CHECK(out.names == mvt_parameter_names(2));
    CHECK(out.names == std::vector<std::string>{"mu1", "mu2", "sigma11", "sigma22", "sigma12", "nu"});
}

TEST_CASE("mvt sampler: prior recovery with empty data") {
    McmcConfig c;
    c.n_keep = 100000;
    c.burn_in = 0;
    c.thin = 1;
    c.update_nuisance = false;
    c.seed = 11;
    const PriorTable& p = mvt_prior2();
    const auto out = run_mvt_sampler(Matrix(0, 2), p, c);
    std::vector<double> freq(30, 0.0);
    for (double v : out.get("nu")) freq[static_cast<int>(v) - 1] += 1.0 / c.n_keep;
    for (int nu = 1; nu <= 30; ++nu) {
        const double se = std::sqrt(p.prob(nu) * (1.0 - p.prob(nu)) / c.n_keep);
        CHECK(std::fabs(freq[nu - 1] - p.prob(nu)) <= 4.0 * se + 1e-12);
    }
    McmcConfig bad = c;
    bad.update_nuisance = true;
    CHECK_THROWS_AS(run_mvt_sampler(Matrix(0, 2), p, bad), DomainError);
}

TEST_CASE("mvt sampler: errors") {
    CHECK_THROWS_AS(run_mvt_sampler(mvt_data(4, 3, 1), mvt_prior2(), short_config(1)), DomainError);
    McmcConfig c = short_config(1);
    c.init = {{"sigma12", 5.0}};
    CHECK_THROWS_AS(run_mvt_sampler(mvt_data(4, 50, 1), mvt_prior2(), c), NotPositiveDefinite);
}

TEST_CASE("mvt sampler: determinism, SPD safety and recovery") {
    const Matrix x = mvt_data(4, 250, 21);
    const auto a = run_mvt_sampler(x, mvt_prior2(), short_config(8));
    const auto b = run_mvt_sampler(x, mvt_prior2(), short_config(8));
    CHECK(a.draws == b.draws);
    CHECK(a.log_posterior_trace == b.log_posterior_trace);
    for (std::size_t k = 0; k < a.size(); ++k) {
        Matrix s(2, 2);
        s << a.get("sigma11")[k], a.get("sigma12")[k], a.get("sigma12")[k], a.get("sigma22")[k];
        REQUIRE(SpdMatrix::is_spd(s));
    }
    for (const auto& [name, rate] : a.accept_rates) {
        CHECK(rate > 0.1);
        CHECK(rate < 0.6);
    }

    McmcConfig pos = short_config(8);
    pos.offdiag = OffdiagProposal::positive;
    const auto cpos = run_mvt_sampler(x, mvt_prior2(), pos);
    for (double v : cpos.get("sigma12")) CHECK(v > 0.0);

    int hits = 0;
    for (int r = 0; r < 20; ++r) {
        const Matrix xr = mvt_data(4, 250, 1000 + r);
        const auto out = run_mvt_sampler(xr, mvt_prior2(), short_config(50 + r));
        const double med = summarize(out).get("nu").median;
        hits += med >= 3.0 && med <= 6.0;
    }
    CHECK(hits >= 18);
}

TEST_CASE("chain CSV and summary JSON") {
    const Matrix x = mvt_data(4, 60, 2);
    McmcConfig c = short_config(3);
    c.n_keep = 40;
    const auto out = run_mvt_sampler(x, mvt_prior2(), c);
    std::stringstream ss;
    write_chain_csv(out, ss);
    const auto back = read_chain_csv(ss);
    CHECK(back.names == out.names);
    CHECK(back.draws == out.draws);
    CHECK(back.discrete == out.discrete);
    const std::string js = summary_to_json(summarize(out), out);
    CHECK(js.find("\"credible_set\"") != std::string::npos);
    CHECK(js.find("\"accept_rates\"") != std::string::npos);
}

TEST_CASE("copula sampler: support and determinism") {
    const PriorTable marg = marginal_prior();
    const PriorTable nu_prior = build_prior_mvt(2, 30, build_kl_grid(2, 30));
    CHECK_THROWS_AS(run_copula_sampler(Matrix::Zero(5, 2), nu_prior, {marg, marg}, short_config(1)), DomainError);

    auto model = [](std::uint64_t seed) {
        return sample_copula_model(CopulaModel::bivariate(0.5, 5, {{0.0, 1.0, 3}, {0.0, 1.0, 3}}), 250, seed);
    };
    McmcConfig c = short_config(4);
    c.n_keep = 100;
    c.burn_in = 200;
    c.thin = 2;
    const Matrix x = model(31);
    const auto a = run_copula_sampler(x, nu_prior, {marg, marg}, c);
    const auto b = run_copula_sampler(x, nu_prior, {marg, marg}, c);
    CHECK(a.draws == b.draws);
    CHECK(a.names == copula_parameter_names());
    for (double r : a.get("rho")) REQUIRE(std::fabs(r) < 1.0);
    for (const char* n : {"nu", "nu1", "nu2"})
        for (double v : a.get(n)) REQUIRE((v >= 1.0 && v <= 30.0 && v == std::floor(v)));
    for (double s : a.get("sigma1")) REQUIRE(s > 0.0);
}

namespace {

struct RhoRecovery {
    int hits = 0;
    double worst_gap = 0.0;  // largest |posterior median - rank-based estimate|
};

const RhoRecovery& rho_recovery() {
    static const RhoRecovery out = [] {
        RhoRecovery r;
        const PriorTable marg = marginal_prior();
        const PriorTable nu_prior = build_prior_mvt(2, 30, build_kl_grid(2, 30));
        for (int k = 0; k < 20; ++k) {
            const Matrix x =
                sample_copula_model(CopulaModel::bivariate(0.5, 5, {{0.0, 1.0, 3}, {0.0, 1.0, 3}}), 250, 2000 + k);
            McmcConfig c;
            c.n_keep = 200;
            c.burn_in = 300;
            c.thin = 3;
            c.seed = 70 + k;
            const double med = summarize(run_copula_sampler(x, nu_prior, {marg, marg}, c)).get("rho").median;
            r.hits += std::fabs(med - 0.5) <= 0.1;
            const double rank_est = std::sin(0.5 * M_PI * sample_kendall_tau(x));
            r.worst_gap = std::max(r.worst_gap, std::fabs(med - rank_est));
        }
        return r;
    }();
    return out;
}

}  // namespace

TEST_CASE("copula sampler: rho posterior tracks the data") { CHECK(rho_recovery().worst_gap < 0.03); }

// The sampling spread of the rank-based estimate at n = 250 is about 0.06, so a
// +-0.1 window around the truth holds in roughly 90% of data sets.
TEST_CASE("copula sampler: rho within 0.1 of the truth in 18 of 20 runs" * doctest::may_fail()) {
    MESSAGE("hits: " << rho_recovery().hits << " of 20");
    CHECK(rho_recovery().hits >= 18);
}

TEST_CASE("copula sampler: prior recovery and rho-dependent lookup") {
    const PriorTable marg = marginal_prior();
    const PriorTable p = build_prior_mvt(2, 30, build_kl_grid(2, 30));
    McmcConfig c;
    c.n_keep = 20000;
    c.burn_in = 0;
    c.thin = 1;
    c.update_nuisance = false;
    c.init = {{"rho", 0.3}};
    const auto out = run_copula_sampler(Matrix(0, 2), p, {marg, marg}, c);
    std::vector<double> freq(30, 0.0);
    for (double v : out.get("nu")) freq[static_cast<int>(v) - 1] += 1.0 / c.n_keep;
    for (int nu = 1; nu <= 30; ++nu)
        CHECK(std::fabs(freq[nu - 1] - p.prob(nu)) <= 4.0 * std::sqrt(p.prob(nu) * (1 - p.prob(nu)) / c.n_keep) + 1e-12);
    for (double r : out.get("rho")) CHECK(r == 0.3);

    const PriorTable pin = point_mass_prior(9);
    CopulaPriorSet set{p, {marg, marg}, {}, [&](double) -> const PriorTable& { return pin; }};
    c.n_keep = 50;
    const auto o2 = run_copula_sampler(Matrix(0, 2), set, c);
    for (double v : o2.get("nu")) CHECK(v == 9.0);
}
