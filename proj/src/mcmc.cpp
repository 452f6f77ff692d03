#include "dofprior/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dofprior/csv.hpp"
#include "dofprior/errors.hpp"
#include "json.hpp"

namespace dofprior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double median_of(std::vector<double> v) { return sample_quantile(std::move(v), 0.5); }

double mad_scale(const std::vector<double>& v) {
    const double m = median_of(v);
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::fabs(v[i] - m);
    return 1.4826 * median_of(std::move(dev));
}

std::vector<double> column(const Matrix& data, int j) {
    return std::vector<double>(data.col(j).data(), data.col(j).data() + data.rows());
}

// Extrapolates a quantile chain linearly in 1/df from the two previous values.
double extrapolate(double prev1, double prev2, int l) {
    if (!std::isfinite(prev2) || l < 3) return prev1;
    const double h = 1.0 / l, h1 = 1.0 / (l - 1), h2 = 1.0 / (l - 2);
    const double x = prev1 + (prev1 - prev2) * (h - h1) / (h1 - h2);
    return (std::isfinite(x) && x < 0.0) ? x : prev1;
}

// Lower-tail quantile at probability q for df (inf = Normal).
double lower_quantile(double q, double df, double start) {
    q = std::max(q, std::numeric_limits<double>::min());
    if (std::isinf(df)) return normal_quantile(q);
    return t_quantile_lower(q, df, start);
}

struct Acceptance {
    std::int64_t batch_acc = 0, batch_n = 0, keep_acc = 0, keep_n = 0;
    void record(bool accepted, bool keeping) {
        if (keeping) {
            keep_acc += accepted;
            ++keep_n;
        } else {
            batch_acc += accepted;
            ++batch_n;
        }
    }
};

// Shared iteration bookkeeping for both samplers.
class Driver {
public:
    Driver(const McmcConfig& config, std::vector<std::string> names, std::vector<bool> discrete)
        : config_(config) {
        out_.names = std::move(names);
        out_.discrete = std::move(discrete);
        out_.draws.assign(out_.names.size(), {});
        for (auto& d : out_.draws) d.reserve(config.n_keep);
        out_.log_posterior_trace.reserve(config.n_keep);
    }

    std::int64_t total() const {
        return static_cast<std::int64_t>(config_.burn_in) + static_cast<std::int64_t>(config_.n_keep) * config_.thin;
    }
    bool keeping(std::int64_t it) const { return it >= config_.burn_in; }

    void record(const std::string& name, bool accepted, bool nan, std::int64_t it) {
        acc_[name].record(accepted, keeping(it));
        if (nan) ++out_.nan_proposals;
    }

    // Called at the end of iteration `it`; adapts scales and stores draws.
    void end_iteration(std::int64_t it, std::map<std::string, double>& scales, const std::vector<double>& state,
                       double logpost) {
        if (!keeping(it)) {
            if (config_.adapt && config_.adapt_batch > 0 && (it + 1) % config_.adapt_batch == 0) {
                for (auto& [name, a] : acc_) {
                    if (a.batch_n == 0) continue;
                    const double rate = static_cast<double>(a.batch_acc) / a.batch_n;
                    scales[name] *= std::exp(rate - config_.target_accept);
                    a.batch_acc = a.batch_n = 0;
                }
            }
            return;
        }
        if ((it - config_.burn_in + 1) % config_.thin != 0) return;
        for (std::size_t p = 0; p < state.size(); ++p) out_.draws[p].push_back(state[p]);
        out_.log_posterior_trace.push_back(logpost);
    }

    ChainOutput finish(const std::map<std::string, double>& scales) {
        for (const auto& [name, a] : acc_)
            out_.accept_rates[name] = a.keep_n ? static_cast<double>(a.keep_acc) / a.keep_n : 0.0;
        out_.config = config_;
        out_.config.proposal_scales = scales;
        return std::move(out_);
    }

private:
    McmcConfig config_;
    ChainOutput out_;
    std::map<std::string, Acceptance> acc_;
};

double scale_or(const McmcConfig& c, const std::string& name, double fallback) {
    auto it = c.proposal_scales.find(name);
    return it != c.proposal_scales.end() ? it->second : fallback;
}

double init_or(const McmcConfig& c, const std::string& name, double fallback) {
    auto it = c.init.find(name);
    return it != c.init.end() ? it->second : fallback;
}

int init_nu(const McmcConfig& c, const std::string& name, int nu_max) {
    const double v = init_or(c, name, std::max(1, nu_max / 2));
    const int nu = static_cast<int>(std::lround(v));
    if (nu < 1 || nu > nu_max) throw DomainError("initial " + name + " outside the support");
    return nu;
}

}  // namespace

// ---------------------------------------------------------------------------

void McmcConfig::validate() const {
    if (n_keep < 1) throw DomainError("n_keep must be at least 1");
    if (thin < 1) throw DomainError("thin must be at least 1");
    if (burn_in < 0) throw DomainError("burn_in must be nonnegative");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw DomainError("target_accept must lie in (0, 1)");
    for (const auto& [name, s] : proposal_scales)
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("proposal scale for " + name + " must be positive");
}

std::size_t ChainOutput::index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw DomainError("no parameter named " + name);
}

const std::vector<double>& ChainOutput::get(const std::string& name) const { return draws[index(name)]; }

const ParamSummary& PosteriorSummary::get(const std::string& name) const {
    for (const auto& p : params)
        if (p.name == name) return p;
    throw DomainError("no parameter named " + name);
}

double sample_quantile(std::vector<double> v, double prob) {
    if (v.empty()) throw DomainError("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    std::sort(v.begin(), v.end());
    const double h = (v.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

int gibbs_nu_draw(const std::vector<double>& log_values, Rng& rng) {
    double mx = kNegInf;
    for (double v : log_values)
        if (!std::isnan(v)) mx = std::max(mx, v);
    if (!std::isfinite(mx)) throw NumericError("all candidate log-posterior values are -inf");
    std::vector<double> w(log_values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = std::isnan(log_values[i]) ? 0.0 : std::exp(log_values[i] - mx);
        total += w[i];
    }
    const double u = uniform_open(rng) * total;
    double acc = 0.0;
    int last = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        acc += w[i];
        last = static_cast<int>(i) + 1;
        if (u < acc) return last;
    }
    return last;
}

int gibbs_nu_draw(const std::function<double(int)>& logpost_at, const DofSupport& support, Rng& rng) {
    std::vector<double> lv(support.size());
    for (int nu = 1; nu <= support.nu_max(); ++nu) lv[nu - 1] = logpost_at(nu);
    return gibbs_nu_draw(lv, rng);
}

namespace {

// log P(proposal stays in the domain | centre x)
double log_truncation_mass(double x, double scale, ParamDomain domain) {
    switch (domain) {
        case ParamDomain::positive:
            return std::log(normal_cdf(x / scale));
        case ParamDomain::unit_interval:
            return std::log1p(-normal_cdf(-(1.0 - x) / scale) - normal_cdf((-1.0 - x) / scale));
        default:
            return 0.0;
    }
}

bool in_domain(double x, ParamDomain domain) {
    switch (domain) {
        case ParamDomain::positive:
            return x > 0.0;
        case ParamDomain::unit_interval:
            return x > -1.0 && x < 1.0;
        default:
            return std::isfinite(x);
    }
}

}  // namespace

MhStep rw_metropolis_step(double current, double current_logpost, const std::function<double(double)>& logpost,
                          double scale, Rng& rng, ParamDomain domain) {
    if (!(scale > 0.0)) throw DomainError("proposal scale must be positive");
    if (!in_domain(current, domain)) throw DomainError("current value outside the parameter domain");
    std::normal_distribution<double> n01;
    double prop = current + scale * n01(rng);
    int tries = 1;
    while (!in_domain(prop, domain)) {
        if (++tries > 100000) throw NumericError("truncated proposal could not be drawn");
        prop = current + scale * n01(rng);
    }
    const double hastings =
        domain == ParamDomain::real ? 0.0
                                    : log_truncation_mass(current, scale, domain) - log_truncation_mass(prop, scale, domain);
    const double lp = logpost(prop);
    MhStep out{current, current_logpost, false, false};
    if (std::isnan(lp)) {
        out.nan = true;
        return out;
    }
    const double log_alpha = lp - current_logpost + hastings;
    if (log_alpha >= 0.0 || std::log(uniform_open(rng)) < log_alpha) {
        out.value = prop;
        out.logpost = lp;
        out.accepted = true;
    }
    return out;
}

MhStep rw_metropolis_step(double current, const std::function<double(double)>& logpost, double scale, Rng& rng,
                          ParamDomain domain) {
    return rw_metropolis_step(current, logpost(current), logpost, scale, rng, domain);
}

McmcConfig adapt_scales(const ChainOutput& pilot, const McmcConfig& config) {
    McmcConfig out = config;
    for (const auto& [name, rate] : pilot.accept_rates) {
        auto it = pilot.config.proposal_scales.find(name);
        const double base = it != pilot.config.proposal_scales.end() ? it->second : scale_or(config, name, 1.0);
        out.proposal_scales[name] = base * std::exp(rate - config.target_accept);
    }
    return out;
}

std::vector<std::string> mvt_parameter_names(int d) {
    std::vector<std::string> names;
    auto idx = [d](int j, int k) {
        return d <= 9 ? std::to_string(j) + std::to_string(k) : std::to_string(j) + "_" + std::to_string(k);
    };
    for (int j = 1; j <= d; ++j) names.push_back("mu" + std::to_string(j));
    for (int j = 1; j <= d; ++j) names.push_back("sigma" + idx(j, j));
    for (int j = 1; j <= d; ++j)
        for (int k = j + 1; k <= d; ++k) names.push_back("sigma" + idx(j, k));
    names.push_back("nu");
    return names;
}

std::vector<std::string> copula_parameter_names() {
    return {"mu1", "mu2", "sigma1", "sigma2", "rho", "nu1", "nu2", "nu"};
}

// ---------------------------------------------------------------------------
// Multivariate t

ChainOutput run_mvt_sampler(const Matrix& data, const PriorTable& prior, const McmcConfig& config) {
    config.validate();
    const int d = static_cast<int>(data.cols());
    const int n = static_cast<int>(data.rows());
    if (d < 1) throw DomainError("data must have at least one column");
    if (n == 0) {
        if (config.update_nuisance) throw DomainError("empty data is only allowed with fixed nuisance parameters");
    } else if (n <= d + 1) {
        throw DomainError("need more than d + 1 observations");
    }
    const int nu_max = prior.support.nu_max();
    const auto names = mvt_parameter_names(d);

    // starting values: medians and a rank-based scale matrix
    Vector mu = Vector::Zero(d);
    Matrix sig = Matrix::Identity(d, d);
    if (n > 0) {
        std::vector<double> sd(d);
        for (int j = 0; j < d; ++j) {
            const auto col = column(data, j);
            mu(j) = median_of(col);
            sd[j] = mad_scale(col);
            if (!(sd[j] > 0.0)) sd[j] = std::max(1e-12, std::sqrt((data.col(j).array() - data.col(j).mean()).square().mean()));
        }
        for (int j = 0; j < d; ++j) {
            sig(j, j) = sd[j] * sd[j] + 1e-8;
            for (int k = j + 1; k < d; ++k) {
                const double r = std::sin(0.5 * std::numbers::pi * sample_kendall_tau(data, j, k));
                sig(j, k) = sig(k, j) = r * sd[j] * sd[k];
            }
        }
    }
    for (int j = 0; j < d; ++j) mu(j) = init_or(config, names[j], mu(j));
    {
        int p = d;
        for (int j = 0; j < d; ++j) sig(j, j) = init_or(config, names[p++], sig(j, j));
        for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k) sig(j, k) = sig(k, j) = init_or(config, names[p++], sig(j, k));
    }
    if (!SpdMatrix::is_spd(sig)) throw NotPositiveDefinite();
    int nu = init_nu(config, "nu", nu_max);

    std::vector<double> log_k(nu_max + 1, 0.0);
    for (int l = 1; l < nu_max; ++l) log_k[l] = log_mvt_const(d, l);
    std::vector<double> log_prior(nu_max);
    for (int l = 1; l <= nu_max; ++l) log_prior[l - 1] = prior.log_prob(l);

    // q_i = (x_i - mu)' Sigma^{-1} (x_i - mu); returns false when Sigma is not SPD
    auto quad_forms = [&](const Vector& m, const Matrix& s, std::vector<double>& q, double& logdet) {
        Matrix l;
        try {
            l = cholesky(s);
        } catch (const NotPositiveDefinite&) {
            return false;
        }
        logdet = 0.0;
        for (int j = 0; j < d; ++j) logdet += 2.0 * std::log(l(j, j));
        q.resize(n);
        std::vector<double> w(d);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) {
                double v = data(i, j) - m(j);
                for (int k = 0; k < j; ++k) v -= l(j, k) * w[k];
                w[j] = v / l(j, j);
                acc += w[j] * w[j];
            }
            q[i] = acc;
        }
        return true;
    };
    auto loglik = [&](int l, const std::vector<double>& q, double logdet) {
        if (n == 0) return 0.0;
        if (l == nu_max) {
            double s = 0.0;
            for (double v : q) s += v;
            return n * (-0.5 * d * kLogTwoPi - 0.5 * logdet) - 0.5 * s;
        }
        double s = 0.0;
        for (double v : q) s += std::log1p(v / l);
        return n * (log_k[l] - 0.5 * logdet) - 0.5 * (l + d) * s;
    };

    std::vector<double> q;
    double logdet = 0.0;
    quad_forms(mu, sig, q, logdet);

    // default scales
    std::map<std::string, double> scales;
    {
        const double nn = std::max(n, 1);
        int p = 0;
        for (int j = 0; j < d; ++j) scales[names[p++]] = scale_or(config, names[j], 2.4 * std::sqrt(sig(j, j) / nn));
        for (int j = 0; j < d; ++j, ++p) scales[names[p]] = scale_or(config, names[p], 2.4 * sig(j, j) * std::sqrt(2.0 / nn));
        for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k, ++p)
                scales[names[p]] = scale_or(config, names[p],
                                            2.4 * std::sqrt((sig(j, j) * sig(k, k) + sig(j, k) * sig(j, k)) / nn));
    }

    Driver driver(config, names, std::vector<bool>(names.size(), false));
    Rng rng = make_stream(config.seed, {0x6d7674ULL});
    std::vector<double> state(names.size());
    std::vector<double> q_prop;
    double logdet_prop = 0.0;
    std::vector<double> lv(nu_max);

    for (std::int64_t it = 0; it < driver.total(); ++it) {
        // 1. degrees of freedom
        for (int l = 1; l <= nu_max; ++l)
            lv[l - 1] = log_prior[l - 1] == kNegInf ? kNegInf : loglik(l, q, logdet) + log_prior[l - 1];
        nu = gibbs_nu_draw(lv, rng);

        if (config.update_nuisance) {
            double cur = loglik(nu, q, logdet) - 1.5 * logdet;
            // 2. locations
            for (int j = 0; j < d; ++j) {
                Vector m = mu;
                auto lp = [&](double v) {
                    m(j) = v;
                    quad_forms(m, sig, q_prop, logdet_prop);
                    return loglik(nu, q_prop, logdet_prop) - 1.5 * logdet_prop;
                };
                const auto step = rw_metropolis_step(mu(j), cur, lp, scales[names[j]], rng, ParamDomain::real);
                driver.record(names[j], step.accepted, step.nan, it);
                if (step.accepted) {
                    mu(j) = step.value;
                    q.swap(q_prop);
                    logdet = logdet_prop;
                    cur = step.logpost;
                }
            }
            // 3. scale matrix entries
            int p = d;
            auto update_entry = [&](int j, int k, ParamDomain dom) {
                const std::string& name = names[p++];
                Matrix s = sig;
                auto lp = [&](double v) {
                    s(j, k) = s(k, j) = v;
                    if (!quad_forms(mu, s, q_prop, logdet_prop)) return kNegInf;
                    return loglik(nu, q_prop, logdet_prop) - 1.5 * logdet_prop;
                };
                if (!in_domain(sig(j, k), dom)) dom = ParamDomain::real;
                const auto step = rw_metropolis_step(sig(j, k), cur, lp, scales[name], rng, dom);
                driver.record(name, step.accepted, step.nan, it);
                if (step.accepted) {
                    sig(j, k) = sig(k, j) = step.value;
                    q.swap(q_prop);
                    logdet = logdet_prop;
                    cur = step.logpost;
                }
            };
            for (int j = 0; j < d; ++j) update_entry(j, j, ParamDomain::positive);
            const ParamDomain off =
                config.offdiag == OffdiagProposal::positive ? ParamDomain::positive : ParamDomain::real;
            for (int j = 0; j < d; ++j)
                for (int k = j + 1; k < d; ++k) update_entry(j, k, off);
        }

        int p = 0;
        for (int j = 0; j < d; ++j) state[p++] = mu(j);
        for (int j = 0; j < d; ++j) state[p++] = sig(j, j);
        for (int j = 0; j < d; ++j)
            for (int k = j + 1; k < d; ++k) state[p++] = sig(j, k);
        state[p] = nu;
        const double logpost = loglik(nu, q, logdet) + log_prior[nu - 1] - 1.5 * logdet;
        driver.end_iteration(it, scales, state, logpost);
    }
    auto out = driver.finish(scales);
    out.discrete.back() = true;
    return out;
}

// ---------------------------------------------------------------------------
// Bivariate t-copula with t margins

namespace {

struct MarginState {
    double mu = 0.0, sigma = 1.0;
    int nu = 15;
    std::vector<double> z, tail;
    double margin_ll = 0.0;    // sum of log f(z | nu) - n log sigma
    std::vector<double> y;     // scores on the copula scale at the current copula df
    std::vector<std::vector<double>> cand;  // scores for every copula df candidate
    bool cand_valid = false;
};

class CopulaSampler {
public:
    CopulaSampler(const Matrix& data, const CopulaPriorSet& priors, const McmcConfig& config)
        : x_(data), priors_(priors), config_(config), n_(static_cast<int>(data.rows())),
          nu_max_(priors.nu.support.nu_max()), support_(nu_max_) {
        if (data.cols() != 2) throw DomainError("the copula sampler needs exactly two columns");
        if (n_ == 0) {
            if (config.update_nuisance) throw DomainError("empty data is only allowed with fixed nuisance parameters");
        } else if (n_ < 10) {
            throw DomainError("the copula sampler needs at least 10 observations");
        }
        if (priors.margins.size() != 2) throw DomainError("two marginal priors are required");
        for (const auto& m : priors.margins)
            if (m.support.nu_max() != nu_max_) throw DomainError("marginal priors must share the copula support");
        log_c_.assign(nu_max_ + 1, 0.0);
        log_k1_.assign(nu_max_ + 1, -0.5 * kLogTwoPi);
        for (int l = 1; l < nu_max_; ++l) {
            log_k1_[l] = log_mvt_const(1, l);
            log_c_[l] = log_mvt_const(2, l) - 2.0 * log_k1_[l];
        }
    }

    ChainOutput run() {
        initialise();
        const auto names = copula_parameter_names();
        std::vector<bool> discrete = {false, false, false, false, false, true, true, true};
        Driver driver(config_, names, discrete);
        Rng rng = make_stream(config_.seed, {0x636f70ULL});
        std::vector<double> state(names.size());

        for (std::int64_t it = 0; it < driver.total(); ++it) {
            if (n_ > 0) {
                update_margin_nu(0, rng);
                update_margin_nu(1, rng);
            }
            if (config_.update_nuisance) {
                for (int j = 0; j < 2; ++j) {
                    update_location_scale(j, true, rng, driver, it);
                    update_location_scale(j, false, rng, driver, it);
                }
            }
            update_copula_nu(rng);
            if (config_.update_nuisance) update_rho(rng, driver, it);

            state = {m_[0].mu,          m_[1].mu,          m_[0].sigma,  m_[1].sigma, rho_,
                     double(m_[0].nu), double(m_[1].nu), double(nu_)};
            driver.end_iteration(it, scales_, state, log_posterior());
        }
        return driver.finish(scales_);
    }

private:
    double df(int l) const { return support_.df(l); }

    double margin_logpdf(double z, int l) const {
        if (l == nu_max_) return log_k1_[l] - 0.5 * z * z;
        return log_k1_[l] - 0.5 * (l + 1.0) * std::log1p(z * z / l);
    }

    const PriorTable& nu_prior(double rho) const {
        return priors_.nu_given_rho ? priors_.nu_given_rho(rho) : priors_.nu;
    }

    double log_prior_nuisance(const MarginState& a, const MarginState& b, double rho) const {
        return log_normal_density(a.mu, 0.0, priors_.hyper.mu_sd) + log_normal_density(b.mu, 0.0, priors_.hyper.mu_sd) +
               log_half_cauchy_density(a.sigma, priors_.hyper.sigma_scale) +
               log_half_cauchy_density(b.sigma, priors_.hyper.sigma_scale) + log_beta_half_density(0.5 * (1.0 + rho));
    }

    double log_posterior() const {
        return m_[0].margin_ll + m_[1].margin_ll + copula_ll_ + priors_.margins[0].log_prob(m_[0].nu) +
               priors_.margins[1].log_prob(m_[1].nu) + nu_prior(rho_).log_prob(nu_) +
               log_prior_nuisance(m_[0], m_[1], rho_);
    }

    // Copula log-likelihood of score vectors at copula df index l and correlation rho.
    double copula_ll(const std::vector<double>& y1, const std::vector<double>& y2, int l, double rho) const {
        if (n_ == 0) return 0.0;
        const double one_m = 1.0 - rho * rho;
        double s = 0.0;
        if (l == nu_max_) {
            for (int i = 0; i < n_; ++i) {
                const double a = y1[i], b = y2[i];
                s += (a * a - 2.0 * rho * a * b + b * b) / one_m - a * a - b * b;
            }
            return -0.5 * n_ * std::log(one_m) - 0.5 * s;
        }
        const double nu = l;
        double t = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double a = y1[i], b = y2[i];
            const double q = (a * a - 2.0 * rho * a * b + b * b) / one_m;
            s += std::log1p(q / nu);
            t += std::log1p(a * a / nu) + std::log1p(b * b / nu);
        }
        return n_ * (log_c_[l] - 0.5 * std::log(one_m)) - 0.5 * (nu + 2.0) * s + 0.5 * (nu + 1.0) * t;
    }

    // Fills z, tail, margin_ll and y for a margin at (mu, sigma, nu) and copula df nu_c.
    void evaluate_margin(MarginState& m, int j, int nu_c, const std::vector<double>* warm) const {
        const double md = df(m.nu), cd = df(nu_c);
        m.z.resize(n_);
        m.tail.resize(n_);
        m.y.resize(n_);
        double ll = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double z = (x_(i, j) - m.mu) / m.sigma;
            m.z[i] = z;
            m.tail[i] = t_tail(z, md);
            ll += margin_logpdf(z, m.nu);
            if (md == cd) {
                m.y[i] = z;
            } else {
                const double start = warm ? -std::fabs((*warm)[i]) : std::numeric_limits<double>::quiet_NaN();
                const double lo = lower_quantile(m.tail[i], cd, start);
                m.y[i] = z < 0.0 ? lo : -lo;
            }
        }
        m.margin_ll = ll - n_ * std::log(m.sigma);
    }

    void fill_candidates(MarginState& m) {
        if (m.cand_valid) return;
        const double md = df(m.nu);
        m.cand.assign(nu_max_, std::vector<double>(n_));
        for (int i = 0; i < n_; ++i) {
            const double z = m.z[i];
            double p1 = std::numeric_limits<double>::quiet_NaN(), p2 = p1;
            for (int l = 1; l <= nu_max_; ++l) {
                const double cd = df(l);
                double lo;
                if (cd == md)
                    lo = -std::fabs(z);
                else if (z == 0.0)
                    lo = 0.0;
                else
                    lo = lower_quantile(m.tail[i], cd, extrapolate(p1, p2, l));
                m.cand[l - 1][i] = z < 0.0 ? lo : -lo;
                p2 = p1;
                p1 = lo < 0.0 ? lo : std::numeric_limits<double>::quiet_NaN();
            }
        }
        m.cand_valid = true;
    }

    void initialise() {
        for (int j = 0; j < 2; ++j) {
            auto& m = m_[j];
            if (n_ > 0) {
                const auto col = column(x_, j);
                m.mu = median_of(col);
                m.sigma = mad_scale(col);
                if (!(m.sigma > 0.0)) m.sigma = 1.0;
            }
            const std::string k = std::to_string(j + 1);
            m.mu = init_or(config_, "mu" + k, m.mu);
            m.sigma = init_or(config_, "sigma" + k, m.sigma);
            if (!(m.sigma > 0.0)) throw DomainError("initial margin scale must be positive");
            m.nu = init_nu(config_, "nu" + k, nu_max_);
        }
        rho_ = n_ > 1 ? std::sin(0.5 * std::numbers::pi * sample_kendall_tau(x_, 0, 1)) : 0.0;
        rho_ = std::clamp(init_or(config_, "rho", rho_), -0.99, 0.99);
        nu_ = init_nu(config_, "nu", nu_max_);
        for (int j = 0; j < 2; ++j) evaluate_margin(m_[j], j, nu_, nullptr);
        copula_ll_ = copula_ll(m_[0].y, m_[1].y, nu_, rho_);

        const double nn = std::max(n_, 1);
        for (int j = 0; j < 2; ++j) {
            const std::string k = std::to_string(j + 1);
            scales_["mu" + k] = scale_or(config_, "mu" + k, 2.4 * m_[j].sigma / std::sqrt(nn));
            scales_["sigma" + k] = scale_or(config_, "sigma" + k, 2.4 * m_[j].sigma / std::sqrt(2.0 * nn));
        }
        scales_["rho"] = scale_or(config_, "rho", std::min(0.5, 2.4 * (1.0 - rho_ * rho_) / std::sqrt(nn)));
    }

    void update_margin_nu(int j, Rng& rng) {
        auto& m = m_[j];
        const auto& other = m_[1 - j];
        const double cd = df(nu_);
        buf_.assign(nu_max_, std::vector<double>(n_));
        std::vector<double> margin(nu_max_, 0.0);
        for (int i = 0; i < n_; ++i) {
            const double z = m.z[i];
            double p1 = std::numeric_limits<double>::quiet_NaN(), p2 = p1;
            for (int l = 1; l <= nu_max_; ++l) {
                const double md = df(l);
                margin[l - 1] += margin_logpdf(z, l);
                double lo;
                if (md == cd)
                    lo = -std::fabs(z);
                else if (z == 0.0)
                    lo = 0.0;
                else
                    lo = lower_quantile(t_tail(z, md), cd, extrapolate(p1, p2, l));
                buf_[l - 1][i] = z < 0.0 ? lo : -lo;
                p2 = p1;
                p1 = lo < 0.0 ? lo : std::numeric_limits<double>::quiet_NaN();
            }
        }
        std::vector<double> lv(nu_max_);
        const double log_sigma = n_ * std::log(m.sigma);
        for (int l = 1; l <= nu_max_; ++l) {
            const double lp = priors_.margins[j].log_prob(l);
            if (lp == kNegInf) {
                lv[l - 1] = kNegInf;
                continue;
            }
            const double cl = j == 0 ? copula_ll(buf_[l - 1], other.y, nu_, rho_) : copula_ll(other.y, buf_[l - 1], nu_, rho_);
            lv[l - 1] = margin[l - 1] - log_sigma + cl + lp;
        }
        const int pick = gibbs_nu_draw(lv, rng);
        if (pick != m.nu) {
            m.nu = pick;
            m.cand_valid = false;
            const double md = df(pick);
            for (int i = 0; i < n_; ++i) m.tail[i] = t_tail(m.z[i], md);
        }
        m.y = buf_[pick - 1];
        m.margin_ll = margin[pick - 1] - log_sigma;
        copula_ll_ = copula_ll(m_[0].y, m_[1].y, nu_, rho_);
    }

    void update_location_scale(int j, bool location, Rng& rng, Driver& driver, std::int64_t it) {
        auto& m = m_[j];
        const std::string name = (location ? "mu" : "sigma") + std::to_string(j + 1);
        MarginState prop;
        const double cur = log_posterior();
        auto lp = [&](double v) {
            prop.mu = location ? v : m.mu;
            prop.sigma = location ? m.sigma : v;
            prop.nu = m.nu;
            evaluate_margin(prop, j, nu_, &m.y);
            const double cl = j == 0 ? copula_ll(prop.y, m_[1].y, nu_, rho_) : copula_ll(m_[0].y, prop.y, nu_, rho_);
            const MarginState& a = j == 0 ? prop : m_[0];
            const MarginState& b = j == 0 ? m_[1] : prop;
            return a.margin_ll + b.margin_ll + cl + priors_.margins[0].log_prob(m_[0].nu) +
                   priors_.margins[1].log_prob(m_[1].nu) + nu_prior(rho_).log_prob(nu_) +
                   log_prior_nuisance(a, b, rho_);
        };
        const auto step = rw_metropolis_step(location ? m.mu : m.sigma, cur, lp, scales_[name], rng,
                                             location ? ParamDomain::real : ParamDomain::positive);
        driver.record(name, step.accepted, step.nan, it);
        if (step.accepted) {
            m.mu = prop.mu;
            m.sigma = prop.sigma;
            m.z.swap(prop.z);
            m.tail.swap(prop.tail);
            m.y.swap(prop.y);
            m.margin_ll = prop.margin_ll;
            m.cand_valid = false;
            copula_ll_ = copula_ll(m_[0].y, m_[1].y, nu_, rho_);
        }
    }

    void update_copula_nu(Rng& rng) {
        if (n_ > 0) {
            fill_candidates(m_[0]);
            fill_candidates(m_[1]);
        }
        const PriorTable& prior = nu_prior(rho_);
        std::vector<double> lv(nu_max_);
        for (int l = 1; l <= nu_max_; ++l) {
            const double lp = prior.log_prob(l);
            lv[l - 1] = lp == kNegInf ? kNegInf
                                      : (n_ > 0 ? copula_ll(m_[0].cand[l - 1], m_[1].cand[l - 1], l, rho_) : 0.0) + lp;
        }
        nu_ = gibbs_nu_draw(lv, rng);
        if (n_ > 0) {
            m_[0].y = m_[0].cand[nu_ - 1];
            m_[1].y = m_[1].cand[nu_ - 1];
        }
        copula_ll_ = copula_ll(m_[0].y, m_[1].y, nu_, rho_);
    }

    void update_rho(Rng& rng, Driver& driver, std::int64_t it) {
        double new_cl = 0.0;
        auto lp = [&](double r) {
            new_cl = copula_ll(m_[0].y, m_[1].y, nu_, r);
            return new_cl + nu_prior(r).log_prob(nu_) + log_beta_half_density(0.5 * (1.0 + r));
        };
        const double cur = copula_ll_ + nu_prior(rho_).log_prob(nu_) + log_beta_half_density(0.5 * (1.0 + rho_));
        const auto step = rw_metropolis_step(rho_, cur, lp, std::min(scales_["rho"], 2.0), rng, ParamDomain::unit_interval);
        driver.record("rho", step.accepted, step.nan, it);
        if (step.accepted) {
            rho_ = step.value;
            copula_ll_ = new_cl;
        }
    }

    const Matrix& x_;
    const CopulaPriorSet& priors_;
    McmcConfig config_;
    int n_;
    int nu_max_;
    DofSupport support_;
    std::vector<double> log_c_, log_k1_;
    MarginState m_[2];
    double rho_ = 0.0;
    int nu_ = 15;
    double copula_ll_ = 0.0;
    std::map<std::string, double> scales_;
    std::vector<std::vector<double>> buf_;
};

}  // namespace

ChainOutput run_copula_sampler(const Matrix& data, const CopulaPriorSet& priors, const McmcConfig& config) {
    config.validate();
    CopulaSampler sampler(data, priors, config);
    return sampler.run();
}

ChainOutput run_copula_sampler(const Matrix& data, const PriorTable& prior_nu,
                               const std::vector<PriorTable>& marginal_priors, const McmcConfig& config) {
    CopulaPriorSet set{prior_nu, marginal_priors, {}, {}};
    return run_copula_sampler(data, set, config);
}

// ---------------------------------------------------------------------------
// Summaries and output

PosteriorSummary summarize(const ChainOutput& chain) {
    PosteriorSummary s;
    for (std::size_t p = 0; p < chain.names.size(); ++p) {
        const auto& v = chain.draws[p];
        if (v.empty()) throw DomainError("cannot summarise an empty chain");
        ParamSummary ps;
        ps.name = chain.names[p];
        ps.discrete = chain.discrete[p];
        ps.median = sample_quantile(v, 0.5);
        ps.lower = sample_quantile(v, 0.025);
        ps.upper = sample_quantile(v, 0.975);
        ps.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        if (ps.discrete) {
            const int top = static_cast<int>(*std::max_element(v.begin(), v.end()));
            ps.pmf.assign(top, 0.0);
            for (double x : v) ps.pmf[static_cast<int>(x) - 1] += 1.0 / v.size();
            ps.map = static_cast<int>(std::max_element(ps.pmf.begin(), ps.pmf.end()) - ps.pmf.begin()) + 1;
            // smallest contiguous block with mass >= 0.95; ties go to the larger mass
            int best_a = 1, best_b = top;
            double best_mass = 2.0;
            for (int a = 1; a <= top; ++a) {
                double mass = 0.0;
                for (int b = a; b <= top; ++b) {
                    mass += ps.pmf[b - 1];
                    if (mass >= 0.95 - 1e-12) {
                        const int len = b - a + 1, best_len = best_b - best_a + 1;
                        if (len < best_len || (len == best_len && mass > best_mass) || best_mass > 1.5) {
                            best_a = a;
                            best_b = b;
                            best_mass = mass;
                        }
                        break;
                    }
                }
            }
            for (int k = best_a; k <= best_b; ++k) ps.credible_set.push_back(k);
            ps.credible_mass = std::min(best_mass, 1.0);
        }
        s.params.push_back(std::move(ps));
    }
    return s;
}

void write_chain_csv(const ChainOutput& chain, std::ostream& out) {
    for (const auto& n : chain.names) out << n << ',';
    out << "log_posterior\n";
    for (std::size_t k = 0; k < chain.size(); ++k) {
        for (std::size_t p = 0; p < chain.names.size(); ++p) out << format_double(chain.draws[p][k]) << ',';
        out << format_double(chain.log_posterior_trace[k]) << '\n';
    }
}

ChainOutput read_chain_csv(std::istream& in) {
    const auto t = read_csv_table(in);
    if (t.header.empty() || t.header.back() != "log_posterior") throw DataError("chain CSV: missing log_posterior column");
    ChainOutput c;
    c.names.assign(t.header.begin(), t.header.end() - 1);
    for (const auto& n : c.names) c.discrete.push_back(n.rfind("nu", 0) == 0);
    c.draws.assign(c.names.size(), {});
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const int line = static_cast<int>(i) + 2;
        for (std::size_t p = 0; p < c.names.size(); ++p) c.draws[p].push_back(parse_double(t.rows[i][p], line));
        c.log_posterior_trace.push_back(parse_double(t.rows[i].back(), line));
    }
    return c;
}

std::string summary_to_json(const PosteriorSummary& summary, const ChainOutput& chain) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& p : summary.params) {
        nlohmann::ordered_json e;
        e["median"] = p.median;
        e["lower"] = p.lower;
        e["upper"] = p.upper;
        e["mean"] = p.mean;
        if (p.discrete) {
            e["map"] = p.map;
            e["credible_set"] = p.credible_set;
            e["credible_mass"] = p.credible_mass;
        }
        params[p.name] = e;
    }
    j["parameters"] = params;
    j["accept_rates"] = chain.accept_rates;
    j["proposal_scales"] = chain.config.proposal_scales;
    j["n_keep"] = chain.config.n_keep;
    j["burn_in"] = chain.config.burn_in;
    j["thin"] = chain.config.thin;
    j["seed"] = chain.config.seed;
    j["nan_proposals"] = chain.nan_proposals;
    return j.dump(2);
}

}  // namespace dofprior
