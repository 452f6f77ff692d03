#include "dofprior/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "dofprior/errors.hpp"
#include "dofprior/parallel.hpp"
#include "dofprior/rng.hpp"
#include "json.hpp"

namespace dofprior {

double PriorTable::log_prob(int nu) const {
    const double p = prob(nu);
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Correlation grid

std::vector<RhoBucket> RhoBucket::grid() {
    std::vector<RhoBucket> out;
    out.push_back({-1.0, -0.975, -0.9875});
    for (int k = 0; k < 39; ++k) {
        const double mid = -0.95 + 0.05 * k;
        // round to the nearest 1e-12 so representatives print cleanly
        const double clean = std::round(mid * 1e12) / 1e12;
        out.push_back({clean - 0.025, clean + 0.025, clean});
    }
    out.push_back({0.975, 1.0, 0.9875});
    return out;
}

RhoBucket RhoBucket::containing(double rho) {
    if (!(std::fabs(rho) < 1.0)) throw DomainError("correlation must lie in (-1, 1)");
    const auto g = grid();
    for (const auto& b : g)
        if (rho < b.upper || &b == &g.back()) return b;
    return g.back();
}

// ---------------------------------------------------------------------------

double loss_based_mass(double kl) {
    if (!(kl >= 0.0)) throw DomainError("divergence must be nonnegative");
    return std::expm1(kl);
}

PriorTable normalize_on_support(const std::vector<double>& raw, PriorMeta meta) {
    if (raw.size() < 3) throw DomainError("support needs at least three values");
    double total = 0.0;
    for (double r : raw) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("raw prior masses must be finite and nonnegative");
        total += r;
    }
    if (!(total > 0.0)) throw DomainError("raw prior masses are all zero");
    PriorTable t{DofSupport(static_cast<int>(raw.size())), {}, std::move(meta)};
    t.probs.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) t.probs[i] = raw[i] / total;
    return t;
}

std::vector<double> mvt_min_divergences(const KLGrid& grid, MvtPriorMode mode) {
    const int m = grid.nu_max;
    if (static_cast<int>(grid.rows.size()) != m) throw DomainError("KL grid is incomplete");
    std::vector<double> kl(m);
    for (int nu = 1; nu <= m; ++nu) {
        const auto& r = grid.row(nu);
        if (mode == MvtPriorMode::three_case) {
            if (nu <= m - 2)
                kl[nu - 1] = r.dkl_next;
            else if (nu == m - 1)
                kl[nu - 1] = r.dkl_prev;
            else
                kl[nu - 1] = grid.normal_entry;
        } else {
            // t(nu_max - 1) against the Normal is not tabulated; its previous
            // neighbour is always nearer, so the minimum is unaffected
            if (nu == m)
                kl[nu - 1] = grid.normal_entry;
            else if (nu == 1)
                kl[nu - 1] = r.dkl_next;
            else if (nu == m - 1)
                kl[nu - 1] = r.dkl_prev;
            else
                kl[nu - 1] = std::min(r.dkl_prev, r.dkl_next);
        }
    }
    return kl;
}

PriorTable build_prior_mvt(int d, int nu_max, const KLGrid& grid, MvtPriorMode mode) {
    if (grid.d != d || grid.nu_max != nu_max) throw DomainError("KL grid does not match (d, nu_max)");
    DofSupport{nu_max};
    const auto kl = mvt_min_divergences(grid, mode);
    std::vector<double> raw(kl.size());
    for (std::size_t i = 0; i < kl.size(); ++i) raw[i] = loss_based_mass(kl[i]);
    PriorMeta meta;
    meta.kind = "mvt";
    meta.d = d;
    meta.estimator = mode == MvtPriorMode::three_case ? "quadrature" : "quadrature_generic_min";
    return normalize_on_support(raw, meta);
}

PriorTable build_prior_copula(int d, int nu_max, const RhoBucket& bucket, std::int64_t n_samples,
                              std::uint64_t seed, CopulaEstimator estimator, int threads,
                              CopulaPriorDiagnostics* diagnostics) {
    if (d != 2) throw DomainError("copula priors are available for d = 2 only");
    DofSupport{nu_max};
    const double rho = bucket.representative;
    Matrix r(2, 2);
    r << 1.0, rho, rho, 1.0;
    const SpdMatrix corr(r);

    // job 2(nu-1) is nu against nu-1, job 2(nu-1)+1 is nu against nu+1
    const std::size_t jobs = 2 * static_cast<std::size_t>(nu_max);
    std::vector<McEstimate> est(jobs);
    std::vector<bool> used(jobs, false);
    for (int nu = 1; nu <= nu_max; ++nu) {
        used[2 * (nu - 1)] = nu > 1;
        used[2 * (nu - 1) + 1] = nu < nu_max;
    }
    parallel_for(jobs, threads, [&](std::size_t k) {
        if (!used[k]) return;
        const int nu = static_cast<int>(k / 2) + 1;
        const int other = (k % 2 == 0) ? nu - 1 : nu + 1;
        const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(nu), static_cast<std::uint64_t>(other)});
        est[k] = estimator == CopulaEstimator::is ? kl_copula_is(nu, other, corr, n_samples, s, nu_max, 1)
                                                  : kl_copula_mc(nu, other, corr, n_samples, s, nu_max, 1);
    });

    std::vector<double> raw(nu_max), min_kl(nu_max), min_se(nu_max);
    std::vector<int> arg(nu_max);
    for (int nu = 1; nu <= nu_max; ++nu) {
        double best = std::numeric_limits<double>::infinity();
        double best_se = 0.0;
        int best_nu = 0;
        for (int side = 0; side < 2; ++side) {
            const std::size_t k = 2 * (nu - 1) + side;
            if (!used[k]) continue;
            if (est[k].value < best) {
                best = est[k].value;
                best_se = est[k].std_error;
                best_nu = side == 0 ? nu - 1 : nu + 1;
            }
        }
        // a non-positive estimate is noise around a tiny divergence; use its
        // standard error as the floor
        double v = best;
        if (!(v > 0.0)) v = best_se > 0.0 ? best_se : std::numeric_limits<double>::min();
        min_kl[nu - 1] = v;
        min_se[nu - 1] = best_se;
        arg[nu - 1] = best_nu;
        raw[nu - 1] = loss_based_mass(v);
    }
    if (diagnostics) *diagnostics = {min_kl, min_se, arg};
    PriorMeta meta;
    meta.kind = "copula";
    meta.d = d;
    meta.rho_bucket = rho;
    meta.estimator = estimator == CopulaEstimator::is ? "is" : "mc";
    meta.n_samples = n_samples;
    meta.seed = seed;
    return normalize_on_support(raw, meta);
}

// ---------------------------------------------------------------------------
// Competitors

double prior_anscombe(double nu) {
    if (!(nu >= 1.0)) throw DomainError("Anscombe prior is defined for nu >= 1");
    return std::pow(nu + 1.0, -1.5);
}

double prior_jeffreys_mvt(double nu, int d) {
    if (!(nu >= 1.0)) throw DomainError("Jeffreys prior is evaluated for nu >= 1");
    if (d < 1) throw DomainError("dimension must be positive");
    const double dd = d;
    const double bracket = trigamma(0.5 * nu) - trigamma(0.5 * (nu + dd)) -
                           2.0 * dd * (nu + dd + 4.0) / (nu * (nu + dd) * (nu + dd + 2.0));
    if (!(bracket > 0.0)) throw DomainError("Jeffreys bracket is not positive at nu = " + std::to_string(nu));
    return std::sqrt(bracket);
}

double prior_relles_rogers(double nu) {
    if (!(nu >= 1.0)) throw DomainError("Relles-Rogers prior is defined for nu >= 1");
    return 1.0 / (nu * nu);
}

PriorTable competitor_prior(const std::string& name, int d, int nu_max) {
    DofSupport{nu_max};
    std::vector<double> raw(nu_max);
    for (int nu = 1; nu <= nu_max; ++nu) {
        if (name == "anscombe")
            raw[nu - 1] = prior_anscombe(nu);
        else if (name == "jeffreys")
            raw[nu - 1] = prior_jeffreys_mvt(nu, d);
        else if (name == "relles_rogers")
            raw[nu - 1] = prior_relles_rogers(nu);
        else
            throw DomainError("unknown competitor prior '" + name + "'");
    }
    PriorMeta meta;
    meta.kind = name;
    meta.d = d;
    meta.estimator = "closed_form";
    return normalize_on_support(raw, meta);
}

PriorTable point_mass_prior(int nu, int nu_max) {
    const DofSupport s(nu_max);
    if (!s.contains(nu)) throw DomainError("point mass outside the support");
    PriorTable t{s, std::vector<double>(nu_max, 0.0), {}};
    t.probs[nu - 1] = 1.0;
    t.meta.kind = "point";
    t.meta.estimator = "closed_form";
    return t;
}

PriorTable uniform_prior(int nu_max) {
    PriorMeta meta;
    meta.kind = "uniform";
    meta.estimator = "closed_form";
    return normalize_on_support(std::vector<double>(nu_max, 1.0), meta);
}

PriorTable marginal_prior(int nu_max, const QuadratureSpec& spec) {
    return build_prior_mvt(1, nu_max, build_kl_grid(1, nu_max, spec), MvtPriorMode::three_case);
}

double total_variation(const PriorTable& a, const PriorTable& b) {
    if (a.probs.size() != b.probs.size()) throw DomainError("tables have different supports");
    double s = 0.0;
    for (std::size_t i = 0; i < a.probs.size(); ++i) s += std::fabs(a.probs[i] - b.probs[i]);
    return 0.5 * s;
}

// ---------------------------------------------------------------------------
// JSON

std::string prior_to_json(const PriorTable& t) {
    nlohmann::ordered_json j;
    j["kind"] = t.meta.kind;
    j["d"] = t.meta.d;
    j["nu_max"] = t.support.nu_max();
    if (t.meta.rho_bucket)
        j["rho_bucket"] = *t.meta.rho_bucket;
    else
        j["rho_bucket"] = nullptr;
    j["estimator"] = t.meta.estimator;
    j["n_samples"] = t.meta.n_samples;
    j["seed"] = t.meta.seed;
    j["probs"] = t.probs;
    return j.dump(2);
}

PriorTable prior_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw DataError(std::string("prior JSON: ") + e.what());
    }
    try {
        PriorMeta meta;
        meta.kind = j.at("kind").get<std::string>();
        meta.d = j.at("d").get<int>();
        if (!j.at("rho_bucket").is_null()) meta.rho_bucket = j.at("rho_bucket").get<double>();
        meta.estimator = j.at("estimator").get<std::string>();
        meta.n_samples = j.at("n_samples").get<std::int64_t>();
        meta.seed = j.at("seed").get<std::uint64_t>();
        const int nu_max = j.at("nu_max").get<int>();
        auto probs = j.at("probs").get<std::vector<double>>();
        if (static_cast<int>(probs.size()) != nu_max) throw DataError("prior JSON: probs length differs from nu_max");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw DataError("prior JSON: negative probability");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-9) throw DataError("prior JSON: probabilities do not sum to one");
        return PriorTable{DofSupport(nu_max), std::move(probs), std::move(meta)};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("prior JSON: ") + e.what());
    }
}

void write_prior_json(const PriorTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << prior_to_json(table) << '\n';
}

PriorTable read_prior_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path + " (file not found)");
    std::stringstream ss;
    ss << in.rdbuf();
    return prior_from_json(ss.str());
}

}  // namespace dofprior
