// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,5,9] [--threads N]
//
// Exit status is 0 when every failing criterion is one of the documented
// known deviations (printed as "FAIL (known)"), 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dofprior/app.hpp"
#include "dofprior/csv.hpp"
#include "dofprior/divergence.hpp"
#include "dofprior/mcmc.hpp"
#include "dofprior/models.hpp"
#include "dofprior/priors.hpp"
#include "dofprior/reference.hpp"
#include "dofprior/rng.hpp"

using namespace dofprior;
namespace fs = std::filesystem;

namespace {

int g_threads = 1;

struct Outcome {
    bool pass = true;
    bool known = false;  // documented deviation
    std::string detail;
};

void fail(Outcome& o, const std::string& why) {
    if (o.pass) o.detail.clear();
    o.pass = false;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += why;
}

std::string fmt(double x, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << x;
    return s.str();
}

bool within(double computed, double printed) {
    return std::fabs(computed - printed) <= std::max(0.005 * std::fabs(printed), 1e-7);
}

// ---------------------------------------------------------------------------

Outcome published_divergences() {
    Outcome o;
    int cells = 0, bad = 0;
    for (int d = 1; d <= 3; ++d) {
        for (int nu = 1; nu <= 29; ++nu) {
            const double prev = reference::kl_table_prev(d, nu), next = reference::kl_table_next(d, nu);
            if (!std::isnan(prev)) {
                ++cells;
                if (!within(kl_t_t(d, nu, nu - 1), prev)) {
                    ++bad;
                    fail(o, "d=" + std::to_string(d) + " nu=" + std::to_string(nu) + " prev");
                }
            }
            ++cells;
            if (!within(kl_t_t(d, nu, nu + 1), next)) {
                ++bad;
                fail(o, "d=" + std::to_string(d) + " nu=" + std::to_string(nu) + " next");
            }
        }
        const double printed = reference::kl_table_prev(d, 30);
        const double as_t = kl_t_t(d, 30, 29), as_normal = kl_normal_t(d, 29);
        if (!within(as_t, printed) && !within(as_normal, printed)) fail(o, "last row d=" + std::to_string(d));
    }
    if (o.pass) o.detail = std::to_string(cells) + " cells within tolerance, last row matches the t reading";
    else o.detail = std::to_string(bad) + " of " + std::to_string(cells) + " cells off: " + o.detail;
    return o;
}

const PriorTable& copula_table() {
    static const PriorTable t = build_prior_copula(2, 30, RhoBucket::at(0.0), 1000000, 1, CopulaEstimator::is, g_threads);
    return t;
}

Outcome copula_prior_table() {
    Outcome o;
    const auto& t = copula_table();
    const double expect[4] = {0.804, 0.129, 0.0368, 0.014};
    const double tol[4] = {0.02, 0.01, 0.005, 0.003};
    std::string got;
    for (int nu = 1; nu <= 4; ++nu) {
        got += (nu > 1 ? " " : "") + fmt(t.prob(nu), 4);
        if (std::fabs(t.prob(nu) - expect[nu - 1]) > tol[nu - 1]) fail(o, "pi(" + std::to_string(nu) + ")");
    }
    o.detail = (o.pass ? "pi(1..4) = " : o.detail + "; pi(1..4) = ") + got;
    return o;
}

Outcome prior_laws() {
    Outcome o;
    std::vector<PriorTable> tables;
    std::vector<PriorTable> mvt;
    for (int d = 1; d <= 3; ++d) {
        const auto grid = build_kl_grid(d, 30);
        mvt.push_back(build_prior_mvt(d, 30, grid));
        tables.push_back(mvt.back());
        tables.push_back(build_prior_mvt(d, 30, grid, MvtPriorMode::generic_min));
        for (const char* name : {"anscombe", "jeffreys", "relles_rogers"}) tables.push_back(competitor_prior(name, d));

        // masses proportional to expm1 of the minimum divergence
        const auto kl = mvt_min_divergences(grid);
        for (int nu = 2; nu <= 30; ++nu) {
            const double ratio = mvt.back().prob(nu) / mvt.back().prob(1);
            const double want = std::expm1(kl[nu - 1]) / std::expm1(kl[0]);
            if (std::fabs(ratio - want) > 1e-12 * want) fail(o, "mass ratio d=" + std::to_string(d));
        }
    }
    tables.push_back(copula_table());
    tables.push_back(marginal_prior(30));
    tables.push_back(uniform_prior(30));
    double worst_sum = 0.0;
    for (const auto& t : tables) {
        double s = 0.0;
        for (double p : t.probs) s += p;
        worst_sum = std::max(worst_sum, std::fabs(s - 1.0));
    }
    if (worst_sum > 1e-12) fail(o, "sum off by " + fmt(worst_sum));

    // the Normal at nu_max carries more mass than t(nu_max - 1) under the
    // default rule; any other violation is unexpected
    std::string monotone;
    bool interior_violation = false;
    for (int d = 1; d <= 3; ++d) {
        for (int nu = 2; nu <= 30; ++nu) {
            const auto& t = mvt[d - 1];
            if (!(t.prob(nu) < t.prob(nu - 1))) {
                monotone += " d=" + std::to_string(d) + ":pi(" + std::to_string(nu) + ")=" + fmt(t.prob(nu)) +
                            ">pi(" + std::to_string(nu - 1) + ")=" + fmt(t.prob(nu - 1));
                interior_violation |= nu != 30;
            }
        }
    }

    std::mt19937_64 g(20);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> kl(30), raw(30);
        for (int k = 0; k < 30; ++k) {
            kl[k] = u(g);
            raw[k] = loss_based_mass(kl[k]);
            if (raw[k] != std::expm1(kl[k]) || std::fabs(raw[k] - (std::exp(kl[k]) - 1.0)) > 1e-15)
                fail(o, "transform at " + fmt(kl[k]));
        }
        const auto t = normalize_on_support(raw);
        for (int k = 1; k < 30; ++k)
            if (std::fabs(t.probs[k] / t.probs[0] - raw[k] / raw[0]) > 1e-12 * raw[k] / raw[0])
                fail(o, "normalisation");
    }

    if (!monotone.empty()) {
        const bool others_ok = o.pass;
        fail(o, "not strictly decreasing:" + monotone);
        o.known = others_ok && !interior_violation;
    } else if (o.pass) {
        o.detail = "sums within 1e-12, strictly decreasing, transform exact";
    }
    return o;
}

Outcome nearest_neighbour() {
    Outcome o;
    for (int d = 1; d <= 3; ++d)
        for (int nu = 2; nu <= 29; ++nu)
            if (!(kl_t_t(d, nu, nu + 1) < kl_t_t(d, nu, nu - 1)))
                fail(o, "d=" + std::to_string(d) + " nu=" + std::to_string(nu));
    if (o.pass) o.detail = "next neighbour closer for d=1..3, nu=2..29";
    return o;
}

Outcome location_scale() {
    Outcome o;
    const double exact = kl_t_t(2, 3, 4);
    std::mt19937_64 g(5);
    std::normal_distribution<double> z;
    std::string zs;
    for (int rep = 0; rep < 5; ++rep) {
        Vector mu(2);
        mu << 3.0 * z(g), 3.0 * z(g);
        Matrix a(2, 2);
        a << z(g), z(g), z(g), z(g);
        Matrix s = a * a.transpose() + 0.2 * Matrix::Identity(2, 2);
        const SpdMatrix sigma(s);
        const std::int64_t n = 1000000;
        const Matrix x = sample_mvt(MvtParams(mu, sigma, 3), n, 100 + rep);
        double sum = 0.0, sq = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const Vector xi = x.row(i).transpose();
            const double r = logpdf_mvt(xi, mu, sigma, 3) - logpdf_mvt(xi, mu, sigma, 4);
            sum += r;
            sq += r * r;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sq / n - mean * mean) / n);
        const double score = (mean - exact) / se;
        zs += (rep ? " " : "") + fmt(score, 3);
        if (std::fabs(score) > 3.0) fail(o, "draw set " + std::to_string(rep) + " off by " + fmt(score, 3) + " SE");
    }
    o.detail = (o.pass ? "" : o.detail + "; ") + "z-scores " + zs;
    return o;
}

Outcome estimator_agreement() {
    Outcome o;
    double worst = 0.0;
    for (double rho : {0.0, 0.5})
        for (int nu = 1; nu <= 10; ++nu) {
            const auto mc = kl_copula_mc(nu, nu + 1, rho, 100000, 1000 + nu, 30, g_threads);
            const auto is = kl_copula_is(nu, nu + 1, rho, 100000, 2000 + nu, 30, g_threads);
            const double se = std::hypot(mc.std_error, is.std_error);
            const double score = std::fabs(mc.value - is.value) / se;
            worst = std::max(worst, score);
            if (score > 3.0) fail(o, "rho=" + fmt(rho) + " nu=" + std::to_string(nu) + " " + fmt(score, 3) + " SE");
        }
    o.detail = (o.pass ? "" : o.detail + "; ") + "largest gap " + fmt(worst, 3) + " combined SE";
    return o;
}

Outcome prior_recovery() {
    Outcome o;
    const auto prior = build_prior_mvt(2, 30, build_kl_grid(2, 30));
    McmcConfig c;
    c.n_keep = 100000;
    c.burn_in = 0;
    c.thin = 1;
    c.seed = 7;
    c.update_nuisance = false;
    const auto chain = run_mvt_sampler(Matrix(0, 2), prior, c);
    std::vector<double> counts(30, 0.0);
    for (double v : chain.get("nu")) counts[static_cast<int>(v) - 1] += 1.0;
    double worst = 0.0;
    for (int nu = 1; nu <= 30; ++nu) {
        const double p = prior.prob(nu);
        const double se = std::sqrt(p * (1.0 - p) / c.n_keep);
        const double z = std::fabs(counts[nu - 1] / c.n_keep - p) / se;
        worst = std::max(worst, z);
        if (z > 4.0) fail(o, "nu=" + std::to_string(nu) + " " + fmt(z, 3) + " SE");
    }
    o.detail = (o.pass ? "" : o.detail + "; ") + "largest cell deviation " + fmt(worst, 3) + " SE over 1e5 draws";
    return o;
}

struct BandRow {
    int nu = 0;
    double coverage = 0.0;
    double rmse = 0.0;
};

// coverage at 3 and 18, and rmse rising from nu = 3 to an interior peak;
// returns the failed sub-checks
std::vector<std::string> band_failures(const std::vector<BandRow>& rows) {
    std::vector<std::string> bad;
    std::map<int, BandRow> by;
    for (const auto& r : rows) by[r.nu] = r;
    if (!(by.at(3).coverage >= 0.85 && by.at(3).coverage <= 1.0)) bad.push_back("coverage at 3");
    if (!(by.at(18).coverage >= 0.95)) bad.push_back("coverage at 18");
    std::size_t peak = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].rmse > rows[peak].rmse) peak = i;
    if (peak == 0 || peak + 1 == rows.size()) bad.push_back("rmse peak not interior");
    for (std::size_t i = 1; i <= peak; ++i)
        if (!(rows[i - 1].rmse < rows[i].rmse)) {
            bad.push_back("rmse not increasing up to the peak");
            break;
        }
    return bad;
}

std::string band_text(const std::vector<BandRow>& rows) {
    std::string t;
    for (const auto& r : rows) t += " " + std::to_string(r.nu) + ":" + fmt(r.coverage, 3) + "/" + fmt(r.rmse, 3);
    return t;
}

// Same data sets, but the exact posterior of nu given the true location and
// scale (no sampler involved).
std::vector<BandRow> conditional_bands(const ScenarioSpec& s, const PriorTable& prior) {
    std::vector<BandRow> rows;
    for (int nu : s.nu_grid) {
        int covered = 0;
        double sq = 0.0;
        for (int r = 0; r < s.replicates; ++r) {
            const auto data_seed = derive_seed(s.seed, {static_cast<std::uint64_t>(nu), static_cast<std::uint64_t>(r), 0});
            const MvtParams truth(Vector::Zero(s.d), SpdMatrix::identity(s.d), nu, s.nu_max);
            const Matrix x = sample_mvt(truth, s.n, data_seed);
            std::vector<double> lp(s.nu_max);
            for (int k = 1; k <= s.nu_max; ++k)
                lp[k - 1] = loglik_mvt(x, MvtParams(Vector::Zero(s.d), SpdMatrix::identity(s.d), k, s.nu_max)) +
                            prior.log_prob(k);
            const double mx = *std::max_element(lp.begin(), lp.end());
            double z = 0.0;
            for (double& v : lp) z += (v = std::exp(v - mx));
            double cum = 0.0;
            int lo = 0, med = 0, hi = 0;
            for (int k = 1; k <= s.nu_max; ++k) {
                cum += lp[k - 1] / z;
                if (!lo && cum >= 0.025) lo = k;
                if (!med && cum >= 0.5) med = k;
                if (!hi && cum >= 0.975) hi = k;
            }
            covered += lo <= nu && nu <= hi;
            sq += double(med - nu) * (med - nu);
        }
        rows.push_back({nu, double(covered) / s.replicates, std::sqrt(sq / s.replicates)});
    }
    return rows;
}

Outcome frequentist_bands() {
    Outcome o;
    ScenarioSpec s;
    s.model = "mvt";
    s.d = 2;
    s.n = 250;
    s.nu_grid = {3, 5, 7, 10, 14, 18};
    s.replicates = 100;
    s.prior = "lbp";
    s.seed = 2024;
    const auto rep = run_frequentist_study(s, g_threads);
    std::vector<BandRow> rows;
    for (const auto& r : rep.rows) rows.push_back({r.nu, r.coverage, r.rmse});
    if (!rep.failures.empty()) fail(o, std::to_string(rep.failures.size()) + " replicates failed");
    const auto bad = band_failures(rows);
    for (const auto& b : bad) fail(o, b);
    o.detail = (o.pass ? "" : o.detail + ";") + " nu:coverage/rmse" + band_text(rows);
    if (!bad.empty() && rep.failures.empty()) {
        // a failure the exact conditional posterior shares is a property of
        // the prior and the data, not of the sampler
        const auto cond = conditional_bands(s, build_prior_mvt(2, 30, build_kl_grid(2, 30)));
        const auto cond_bad = band_failures(cond);
        o.known = std::all_of(bad.begin(), bad.end(), [&](const std::string& b) {
            return std::find(cond_bad.begin(), cond_bad.end(), b) != cond_bad.end();
        });
        o.detail += "; exact posterior at the true location/scale:" + band_text(cond);
    }
    return o;
}

Outcome application_fixtures() {
    Outcome o;
    const fs::path data_dir = DOFPRIOR_DATA_DIR;
    std::string info;
    bool copula_data_prefers_map = false;
    {
        AnalysisConfig cfg;
        cfg.threads = g_threads;
        cfg.grid_size = 40;
        const auto rep = run_mvt_analysis((data_dir / "synthetic_mvt.csv").string(), cfg);
        for (const auto& prior : cfg.priors) {
            const auto& nu = rep.summaries.at(prior).get("nu");
            info += " mvt/" + prior + ":map=" + std::to_string(nu.map) + ",set={";
            for (std::size_t i = 0; i < nu.credible_set.size(); ++i)
                info += (i ? "," : "") + std::to_string(nu.credible_set[i]);
            info += "}";
            if (std::find(nu.credible_set.begin(), nu.credible_set.end(), reference::mvt_fixture::nu) ==
                nu.credible_set.end())
                fail(o, "mvt " + prior + " set misses the generating nu");
        }
    }
    {
        AnalysisConfig cfg;
        cfg.threads = g_threads;
        cfg.grid_size = 40;
        const auto rep = run_copula_analysis((data_dir / "synthetic_copula.csv").string(), cfg);
        const auto& s = rep.summaries.at("lbp");
        const auto& nu = s.get("nu");
        const double rho = s.get("rho").median, tau = s.get("tau").median, lam = s.get("lambda").median;
        info += " copula:map=" + std::to_string(nu.map) + ",set={";
        for (std::size_t i = 0; i < nu.credible_set.size(); ++i)
            info += (i ? "," : "") + std::to_string(nu.credible_set[i]);
        info += "},rho=" + fmt(rho) + ",tau=" + fmt(tau) + ",lambda=" + fmt(lam);
        namespace f = reference::copula_fixture;
        if (std::find(nu.credible_set.begin(), nu.credible_set.end(), f::nu) == nu.credible_set.end()) {
            fail(o, "copula set misses the generating nu");
            // does the data set itself prefer the MAP at the generating values?
            const Matrix x = read_numeric_csv_file((data_dir / "synthetic_copula.csv").string());
            auto ll = [&](int v) {
                return loglik_copula_full(
                    x, CopulaModel::bivariate(f::rho, v, {{f::mu1, f::sigma1, f::nu1}, {f::mu2, f::sigma2, f::nu2}}));
            };
            const double gap = ll(nu.map) - ll(f::nu);
            copula_data_prefers_map = gap > 0.0;
            info += ",loglik(map)-loglik(generating) at generating values=" + fmt(gap, 3);
        }
        if (std::fabs(rho - f::rho) > 0.03) fail(o, "rho median " + fmt(rho));
        if (std::fabs(tau - 0.49) > 0.03) fail(o, "tau median " + fmt(tau));
        if (!(lam > 0.0 && lam < 1.0)) fail(o, "lambda outside (0,1)");
    }
    o.detail = (o.pass ? "" : o.detail + ";") + info;
    o.known = copula_data_prefers_map && o.detail.rfind("copula set misses the generating nu;", 0) == 0;
    return o;
}

Outcome dependence_formulas() {
    Outcome o;
    const double lam = tail_lambda(3.93, 0.69), tau = kendall_tau(0.69);
    if (std::fabs(lam - 0.38) > 0.01) fail(o, "lambda");
    if (std::fabs(tau - 0.487) > 0.005) fail(o, "tau");
    o.detail = (o.pass ? "" : o.detail + "; ") + "lambda=" + fmt(lam) + " tau=" + fmt(tau);
    return o;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dofprior");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink;
    auto* old = std::cout.rdbuf(sink.rdbuf());
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old);
    return rc;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome thread_determinism() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "dofprior_acceptance_threads";
    fs::remove_all(root);
    const std::string mvt_csv = (fs::path(DOFPRIOR_DATA_DIR) / "synthetic_mvt.csv").string();
    const std::string cop_csv = (fs::path(DOFPRIOR_DATA_DIR) / "synthetic_copula.csv").string();
    const std::vector<std::vector<std::string>> runs = {
        {"kl", "grid", "--d", "3"},
        {"prior", "build", "--model", "copula", "--rho", "0.5", "--n", "20000"},
        {"study", "frequentist", "--n", "60", "--nu", "2", "6", "--replicates", "4", "--n-keep", "50", "--burn-in",
         "50", "--thin", "2"},
        {"study", "frequentist", "--model", "copula", "--n", "50", "--nu", "4", "--replicates", "3", "--prior-samples",
         "5000", "--n-keep", "20", "--burn-in", "20", "--thin", "1"},
        {"fit", "mvt", mvt_csv, "--n-keep", "60", "--burn-in", "60", "--thin", "1", "--grid-size", "15"},
        {"fit", "copula", cop_csv, "--n-keep", "20", "--burn-in", "20", "--thin", "1", "--prior-samples", "5000",
         "--grid-size", "10", "--contour-draws", "10"},
    };
    std::vector<fs::path> dirs;
    for (int threads : {1, 2, 4}) {
        const fs::path dir = root / ("t" + std::to_string(threads));
        dirs.push_back(dir);
        for (auto args : runs) {
            args.insert(args.begin(), {"--seed", "31", "--threads", std::to_string(threads), "--out-dir", dir.string(),
                                       "--cache-dir", (dir / "cache").string()});
            if (const int rc = cli(args); rc != 0) fail(o, args[8] + " exited with " + std::to_string(rc));
        }
    }
    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dirs[0]);
        ++files;
        const std::string ref = slurp(entry.path());
        for (std::size_t k = 1; k < dirs.size(); ++k)
            if (!fs::exists(dirs[k] / rel) || slurp(dirs[k] / rel) != ref) fail(o, rel.string() + " differs");
    }
    if (o.pass) o.detail = std::to_string(files) + " files identical across 1, 2 and 4 threads";
    fs::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    g_threads = std::max(1u, std::thread::hardware_concurrency());
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) {
            g_threads = std::max(1, std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--only 1,2,...] [--threads N]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"published contiguous divergences", published_divergences},
        {"copula prior table", copula_prior_table},
        {"prior table laws", prior_laws},
        {"nearest neighbour is the next one", nearest_neighbour},
        {"location-scale invariance", location_scale},
        {"copula estimators agree", estimator_agreement},
        {"sampler recovers the prior", prior_recovery},
        {"frequentist bands", frequentist_bands},
        {"synthetic application fits", application_fixtures},
        {"tail dependence formulas", dependence_formulas},
        {"thread-count determinism", thread_determinism},
    };

    int unexpected = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.known = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* verdict = o.pass ? "PASS" : (o.known ? "FAIL (known)" : "FAIL");
        if (!o.pass && !o.known) ++unexpected;
        std::cout << "criterion " << id << " [" << criteria[k].first << "]: " << verdict << " (" << fmt(secs, 3)
                  << " s) " << o.detail << std::endl;
    }
    return unexpected == 0 ? 0 : 1;
}
