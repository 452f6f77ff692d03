#include "dofprior/app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include "dofprior/csv.hpp"
#include "dofprior/errors.hpp"
#include "dofprior/parallel.hpp"
#include "dofprior/reference.hpp"

namespace dofprior {

namespace fs = std::filesystem;

double tail_lambda(double nu, double rho) {
    if (!(nu >= 1.0)) throw DomainError("tail_lambda: nu must be at least 1");
    if (!(std::fabs(rho) < 1.0)) throw DomainError("tail_lambda: |rho| must be below 1");
    if (std::isinf(nu)) return 0.0;
    const double arg = -std::sqrt(nu + 1.0) * std::sqrt(1.0 - rho) / std::sqrt(1.0 + rho);
    return 2.0 * t_cdf(arg, nu + 1.0);
}

double kendall_tau(double rho) {
    if (!(std::fabs(rho) <= 1.0)) throw DomainError("kendall_tau: |rho| must not exceed 1");
    return 2.0 / std::numbers::pi * std::asin(rho);
}

TailDependence tail_dependence(double nu, double rho) { return {tail_lambda(nu, rho), kendall_tau(rho)}; }

// ---------------------------------------------------------------------------

namespace {

std::string tag_double(double x) {
    std::string s = format_double(x);
    std::replace(s.begin(), s.end(), '-', 'm');
    return s;
}

const char* estimator_name(CopulaEstimator e) { return e == CopulaEstimator::mc ? "mc" : "is"; }

// FNV-1a, stable across platforms
std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

PriorTable resolve_prior(const PriorRequest& r) {
    if (r.name.rfind("point:", 0) == 0) return point_mass_prior(std::stoi(r.name.substr(6)), r.nu_max);
    if (r.name == "uniform") return uniform_prior(r.nu_max);
    if (r.name == "lbp") {
        if (r.model == "mvt") {
            QuadratureSpec spec;
            spec.abs_tol = spec.rel_tol = r.tol;
            const KLGrid grid = load_or_build_kl_grid(r.cache_dir, r.d, r.nu_max, spec, r.threads);
            return build_prior_mvt(r.d, r.nu_max, grid, r.mode);
        }
        if (r.model == "copula") {
            const RhoBucket bucket = RhoBucket::at(r.rho);
            fs::path cache;
            if (!r.cache_dir.empty()) {
                cache = fs::path(r.cache_dir) /
                        ("copula_prior_d" + std::to_string(r.d) + "_numax" + std::to_string(r.nu_max) + "_rho" +
                         tag_double(bucket.representative) + "_n" + std::to_string(r.copula_samples) + "_seed" +
                         std::to_string(r.seed) + "_" + estimator_name(r.estimator) + ".json");
                if (fs::exists(cache)) return read_prior_json(cache.string());
            }
            PriorTable t = build_prior_copula(r.d, r.nu_max, bucket, r.copula_samples, r.seed, r.estimator, r.threads);
            if (!cache.empty()) {
                fs::create_directories(cache.parent_path());
                write_prior_json(t, cache.string());
            }
            return t;
        }
        throw DomainError("unknown model: " + r.model);
    }
    if (r.model == "copula") throw DomainError("prior " + r.name + " is not available for the copula");
    return competitor_prior(r.name, r.d, r.nu_max);
}

// ---------------------------------------------------------------------------
// Frequentist study

std::vector<int> ScenarioSpec::grid() const {
    if (!nu_grid.empty()) return nu_grid;
    std::vector<int> g;
    for (int nu = 1; nu <= 20; ++nu) g.push_back(nu);
    return g;
}

void ScenarioSpec::validate() const {
    if (model != "mvt" && model != "copula") throw DomainError("model must be mvt or copula");
    if (replicates < 1) throw DomainError("replicates must be at least 1");
    if (d < 1) throw DomainError("d must be at least 1");
    if (model == "copula" && d != 2) throw DomainError("the copula study is bivariate");
    if (n < 1) throw DomainError("n must be positive");
    for (int nu : grid())
        if (nu < 1 || nu > nu_max) throw DomainError("nu grid must lie in the support");
    if (model == "copula" && !(std::fabs(rho) < 1.0)) throw DomainError("rho must lie in (-1, 1)");
    if (margin_nu < 1 || margin_nu > nu_max) throw DomainError("margin_nu must lie in the support");
    mcmc.validate();
}

FrequentistReport run_frequentist_study(const ScenarioSpec& spec, const PriorTable& prior, const PriorTable& marginal,
                                        int threads) {
    spec.validate();
    const auto grid = spec.grid();
    const std::size_t reps = spec.replicates;
    struct Outcome {
        bool ok = false;
        bool covered = false;
        double sqerr = 0.0;
        std::string error;
    };
    std::vector<Outcome> out(grid.size() * reps);
    const bool mvt = spec.model == "mvt";

    parallel_for(out.size(), threads, [&](std::size_t k) {
        const int nu = grid[k / reps];
        const std::uint64_t r = k % reps;
        Outcome& o = out[k];
        try {
            const std::uint64_t data_seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(nu), r, 0});
            Matrix x;
            if (mvt) {
                x = sample_mvt(MvtParams(Vector::Zero(spec.d), SpdMatrix::identity(spec.d), nu, spec.nu_max), spec.n,
                               data_seed);
            } else {
                const MarginSpec m{0.0, 1.0, spec.margin_nu};
                x = sample_copula_model(CopulaModel::bivariate(spec.rho, nu, {m, m}, spec.nu_max), spec.n, data_seed);
            }
            McmcConfig c = spec.mcmc;
            c.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(nu), r, 1});
            const ChainOutput chain =
                mvt ? run_mvt_sampler(x, prior, c) : run_copula_sampler(x, prior, {marginal, marginal}, c);
            const auto& draws = chain.get("nu");
            const double lo = sample_quantile(draws, 0.025), hi = sample_quantile(draws, 0.975);
            const double med = sample_quantile(draws, 0.5);
            o.covered = lo <= nu && nu <= hi;
            o.sqerr = (med - nu) * (med - nu);
            o.ok = true;
        } catch (const std::exception& e) {
            o.error = "nu=" + std::to_string(nu) + " replicate=" + std::to_string(r) + ": " + e.what();
        }
    });

    FrequentistReport rep;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        FrequentistRow row;
        row.model = spec.model;
        row.d = spec.d;
        row.n = spec.n;
        row.rho = mvt ? std::nan("") : spec.rho;
        row.prior = spec.prior;
        row.nu = grid[g];
        int ok = 0, covered = 0;
        double sq = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const Outcome& o = out[g * reps + r];
            if (!o.ok) {
                rep.failures.push_back(o.error);
                continue;
            }
            ++ok;
            covered += o.covered;
            sq += o.sqerr;
        }
        row.n_effective = ok;
        row.coverage = ok ? static_cast<double>(covered) / ok : std::nan("");
        row.rmse = ok ? std::sqrt(sq / ok) : std::nan("");
        row.relative_rmse = row.rmse / row.nu;
        rep.rows.push_back(row);
    }
    return rep;
}

FrequentistReport run_frequentist_study(const ScenarioSpec& spec, int threads, const std::string& cache_dir) {
    spec.validate();
    PriorRequest req;
    req.name = spec.prior;
    req.model = spec.model;
    req.d = spec.d;
    req.nu_max = spec.nu_max;
    req.copula_samples = spec.copula_prior_samples;
    req.seed = spec.seed;
    req.cache_dir = cache_dir;
    req.threads = threads;
    const PriorTable prior = resolve_prior(req);
    const PriorTable marginal = spec.model == "copula" ? marginal_prior(spec.nu_max) : uniform_prior(spec.nu_max);
    return run_frequentist_study(spec, prior, marginal, threads);
}

void write_frequentist_csv(const FrequentistReport& report, std::ostream& out) {
    out << "model,d,n,rho,prior,nu,coverage,rmse,relative_rmse,n_effective\n";
    for (const auto& r : report.rows)
        out << r.model << ',' << r.d << ',' << r.n << ',' << format_double(r.rho) << ',' << r.prior << ',' << r.nu
            << ',' << format_double(r.coverage) << ',' << format_double(r.rmse) << ','
            << format_double(r.relative_rmse) << ',' << r.n_effective << '\n';
}

FrequentistReport read_frequentist_csv(std::istream& in) {
    const auto t = read_csv_table(in);
    if (t.header.size() != 10 || t.header[0] != "model") throw DataError("not a frequentist report CSV");
    FrequentistReport rep;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const int line = static_cast<int>(i) + 2;
        FrequentistRow r;
        r.model = f[0];
        r.d = static_cast<int>(parse_double(f[1], line));
        r.n = static_cast<int>(parse_double(f[2], line));
        r.rho = parse_double(f[3], line);
        r.prior = f[4];
        r.nu = static_cast<int>(parse_double(f[5], line));
        r.coverage = parse_double(f[6], line);
        r.rmse = parse_double(f[7], line);
        r.relative_rmse = parse_double(f[8], line);
        r.n_effective = static_cast<int>(parse_double(f[9], line));
        rep.rows.push_back(r);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Pipelines

std::vector<double> default_contour_levels(const std::string& model) {
    std::vector<double> lv;
    if (model == "mvt") lv.push_back(0.55);
    for (double v = 1.0; v <= 2048.0; v *= 2.0)
        if (model == "mvt" || v >= 2.0) lv.push_back(v);
    return lv;
}

namespace {

std::string credible_text(const std::vector<int>& set) {
    std::string s = "{";
    for (std::size_t i = 0; i < set.size(); ++i) s += (i ? "," : "") + std::to_string(set[i]);
    return s + "}";
}

void append_rows(std::vector<EstimateRow>& rows, const PosteriorSummary& s, const std::string& prior) {
    for (const auto& p : s.params) {
        EstimateRow r;
        r.parameter = p.name;
        r.prior = prior;
        r.lower = p.lower;
        r.upper = p.upper;
        if (p.discrete) {
            r.estimate = p.map;
            r.credible_set = credible_text(p.credible_set);
        } else {
            r.estimate = p.median;
        }
        rows.push_back(r);
    }
}

std::vector<double> axis(const Matrix& data, int j, int size) {
    std::vector<double> col(data.col(j).data(), data.col(j).data() + data.rows());
    double lo = sample_quantile(col, 0.005), hi = sample_quantile(col, 0.995);
    const double pad = 0.1 * (hi - lo);
    lo -= pad;
    hi += pad;
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    std::vector<double> a(size);
    for (int i = 0; i < size; ++i) a[i] = lo + (hi - lo) * i / (size - 1);
    return a;
}

std::vector<std::size_t> draw_indices(std::size_t n, int max_draws) {
    const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, max_draws)));
    std::vector<std::size_t> idx(m);
    for (std::size_t k = 0; k < m; ++k) idx[k] = k * n / m;
    return idx;
}

Matrix load_csv(const std::string& path, std::vector<std::string>* header) {
    return read_numeric_csv_file(path, header);
}

}  // namespace

ContourGrid mvt_predictive_grid(const Matrix& data, const ChainOutput& chain, int grid_size, int max_draws,
                                int nu_max) {
    if (data.cols() != 2) throw DomainError("contour data needs two columns");
    if (grid_size < 2) throw DomainError("grid_size must be at least 2");
    ContourGrid g;
    g.x = axis(data, 0, grid_size);
    g.y = axis(data, 1, grid_size);
    g.density = Matrix::Zero(grid_size, grid_size);
    const auto idx = draw_indices(chain.size(), max_draws);
    const auto &m1 = chain.get("mu1"), &m2 = chain.get("mu2"), &s11 = chain.get("sigma11"),
               &s22 = chain.get("sigma22"), &s12 = chain.get("sigma12"), &nus = chain.get("nu");
    for (std::size_t k : idx) {
        Matrix s(2, 2);
        s << s11[k], s12[k], s12[k], s22[k];
        const SpdMatrix sig(s);
        const int nu = static_cast<int>(nus[k]);
        const double logk = nu == nu_max ? -std::log(2.0 * std::numbers::pi) : log_mvt_const(2, nu);
        for (int i = 0; i < grid_size; ++i)
            for (int j = 0; j < grid_size; ++j) {
                Vector v(2);
                v << g.x[i] - m1[k], g.y[j] - m2[k];
                const double q = sig.quad_form(v);
                const double core = nu == nu_max ? -0.5 * q : -0.5 * (nu + 2.0) * std::log1p(q / nu);
                g.density(i, j) += std::exp(logk - 0.5 * sig.log_det() + core);
            }
    }
    g.density /= static_cast<double>(idx.size());
    return g;
}

ContourGrid copula_predictive_grid(const Matrix& data, const ChainOutput& chain, int grid_size, int max_draws,
                                   int nu_max) {
    if (data.cols() != 2) throw DomainError("contour data needs two columns");
    if (grid_size < 2) throw DomainError("grid_size must be at least 2");
    ContourGrid g;
    g.x = axis(data, 0, grid_size);
    g.y = axis(data, 1, grid_size);
    g.density = Matrix::Zero(grid_size, grid_size);
    const DofSupport sup(nu_max);
    const auto idx = draw_indices(chain.size(), max_draws);
    const std::vector<double>* mu[2] = {&chain.get("mu1"), &chain.get("mu2")};
    const std::vector<double>* sd[2] = {&chain.get("sigma1"), &chain.get("sigma2")};
    const std::vector<double>* mnu[2] = {&chain.get("nu1"), &chain.get("nu2")};
    const auto &rho = chain.get("rho"), &nus = chain.get("nu");
    std::vector<double> lm[2], sc[2];
    for (std::size_t k : idx) {
        const double cdf = sup.df(static_cast<int>(nus[k]));
        for (int a = 0; a < 2; ++a) {
            const std::vector<double>& pts = a == 0 ? g.x : g.y;
            const double mdf = sup.df(static_cast<int>((*mnu[a])[k]));
            lm[a].resize(grid_size);
            sc[a].resize(grid_size);
            for (int i = 0; i < grid_size; ++i) {
                const double z = (pts[i] - (*mu[a])[k]) / (*sd[a])[k];
                const double lp = std::isinf(mdf) ? -0.5 * (std::log(2.0 * std::numbers::pi) + z * z) : t_logpdf(z, mdf);
                lm[a][i] = lp - std::log((*sd[a])[k]);
                sc[a][i] = t_transfer(z, mdf, cdf);
            }
        }
        Matrix r(2, 2);
        r << 1.0, rho[k], rho[k], 1.0;
        const CopulaKernel kernel(SpdMatrix(r), cdf);
        for (int i = 0; i < grid_size; ++i)
            for (int j = 0; j < grid_size; ++j) {
                const double y[2] = {sc[0][i], sc[1][j]};
                g.density(i, j) += std::exp(lm[0][i] + lm[1][j] + kernel(y));
            }
    }
    g.density /= static_cast<double>(idx.size());
    return g;
}

ChainOutput add_tail_dependence(const ChainOutput& chain, int nu_max) {
    ChainOutput out = chain;
    const DofSupport sup(nu_max);
    const auto &rho = chain.get("rho"), &nu = chain.get("nu");
    std::vector<double> lam(chain.size()), tau(chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) {
        lam[k] = tail_lambda(sup.df(static_cast<int>(nu[k])), rho[k]);
        tau[k] = kendall_tau(rho[k]);
    }
    out.names.push_back("lambda");
    out.names.push_back("tau");
    out.discrete.push_back(false);
    out.discrete.push_back(false);
    out.draws.push_back(std::move(lam));
    out.draws.push_back(std::move(tau));
    return out;
}

namespace {

// Columns are fed to the samplers in a canonical order (lexicographic by
// values) and the output is relabelled, so permuting the input columns
// permutes the summaries exactly.
std::vector<int> canonical_order(const Matrix& data) {
    const int d = static_cast<int>(data.cols());
    std::vector<std::vector<double>> cols(d);
    for (int j = 0; j < d; ++j) cols[j].assign(data.col(j).data(), data.col(j).data() + data.rows());
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return cols[a] < cols[b]; });
    return perm;
}

Matrix permute_columns(const Matrix& data, const std::vector<int>& perm) {
    Matrix out(data.rows(), data.cols());
    for (std::size_t j = 0; j < perm.size(); ++j) out.col(j) = data.col(perm[j]);
    return out;
}

// labels[i] is the original-order name of canonical parameter i
std::vector<std::string> mvt_labels(const std::vector<int>& perm) {
    const int d = static_cast<int>(perm.size());
    const auto names = mvt_parameter_names(d);
    auto off = [d](int a, int b) {
        int pos = 2 * d;
        for (int i = 0; i < a; ++i) pos += d - 1 - i;
        return pos + (b - a - 1);
    };
    std::vector<std::string> labels(names.size());
    for (int j = 0; j < d; ++j) {
        labels[j] = names[perm[j]];
        labels[d + j] = names[d + perm[j]];
        for (int k = j + 1; k < d; ++k)
            labels[off(j, k)] = names[off(std::min(perm[j], perm[k]), std::max(perm[j], perm[k]))];
    }
    labels.back() = "nu";
    return labels;
}

std::vector<std::string> copula_labels(const std::vector<int>& perm) {
    if (perm[0] == 0) return copula_parameter_names();
    return {"mu2", "mu1", "sigma2", "sigma1", "rho", "nu2", "nu1", "nu"};
}

template <class T>
std::map<std::string, T> rename_keys(const std::map<std::string, T>& in, const std::vector<std::string>& from,
                                     const std::vector<std::string>& to) {
    std::map<std::string, T> out;
    for (const auto& [k, v] : in) {
        const auto it = std::find(from.begin(), from.end(), k);
        out[it == from.end() ? k : to[it - from.begin()]] = v;
    }
    return out;
}

McmcConfig to_canonical(const McmcConfig& c, const std::vector<std::string>& names,
                        const std::vector<std::string>& labels) {
    McmcConfig out = c;
    out.init = rename_keys(c.init, labels, names);
    out.proposal_scales = rename_keys(c.proposal_scales, labels, names);
    return out;
}

// Back to original labels, with parameters in their standard order.
ChainOutput relabel(const ChainOutput& c, const std::vector<std::string>& labels) {
    ChainOutput out = c;
    for (std::size_t i = 0; i < c.names.size(); ++i) {
        const std::size_t dest = c.index(labels[i]);
        out.draws[dest] = c.draws[i];
        out.discrete[dest] = c.discrete[i];
    }
    out.accept_rates = rename_keys(c.accept_rates, c.names, labels);
    out.config.init = rename_keys(c.config.init, c.names, labels);
    out.config.proposal_scales = rename_keys(c.config.proposal_scales, c.names, labels);
    return out;
}

}  // namespace

AnalysisReport run_mvt_analysis(const Matrix& data, const AnalysisConfig& config) {
    if (config.priors.empty()) throw DomainError("at least one prior is required");
    const int d = static_cast<int>(data.cols());
    AnalysisReport rep;
    rep.model = "mvt";
    std::vector<PriorTable> priors;
    for (const auto& name : config.priors) {
        PriorRequest req;
        req.name = name;
        req.model = "mvt";
        req.d = d;
        req.nu_max = config.nu_max;
        req.cache_dir = config.cache_dir;
        req.threads = config.threads;
        priors.push_back(resolve_prior(req));
    }
    const auto perm = canonical_order(data);
    const Matrix canonical = permute_columns(data, perm);
    const auto names = mvt_parameter_names(d);
    const auto labels = mvt_labels(perm);
    std::vector<ChainOutput> chains(priors.size());
    parallel_for(priors.size(), config.threads, [&](std::size_t i) {
        McmcConfig c = to_canonical(config.mcmc, names, labels);
        if (i > 0) c.seed = derive_seed(config.mcmc.seed, {name_hash(config.priors[i])});
        chains[i] = relabel(run_mvt_sampler(canonical, priors[i], c), labels);
    });
    for (std::size_t i = 0; i < priors.size(); ++i) {
        const auto s = summarize(chains[i]);
        append_rows(rep.rows, s, config.priors[i]);
        rep.summaries[config.priors[i]] = s;
        rep.chains[config.priors[i]] = std::move(chains[i]);
    }
    if (d == 2) {
        rep.contour = mvt_predictive_grid(data, rep.chains.at(config.priors[0]), config.grid_size,
                                          config.contour_draws, config.nu_max);
        rep.contour.levels = config.levels.empty() ? default_contour_levels("mvt") : config.levels;
    }
    return rep;
}

AnalysisReport run_mvt_analysis(const std::string& csv_path, const AnalysisConfig& config) {
    std::vector<std::string> header;
    const Matrix data = load_csv(csv_path, &header);
    AnalysisReport rep = run_mvt_analysis(data, config);
    rep.columns = header;
    return rep;
}

AnalysisReport run_copula_analysis(const Matrix& data, const AnalysisConfig& config) {
    if (data.cols() != 2) throw DomainError("the copula analysis needs exactly two columns");
    AnalysisReport rep;
    rep.model = "copula";
    PriorRequest req;
    req.name = "lbp";
    req.model = "copula";
    req.d = 2;
    req.nu_max = config.nu_max;
    req.copula_samples = config.copula_prior_samples;
    req.seed = config.prior_seed;
    req.cache_dir = config.cache_dir;
    req.threads = config.threads;
    CopulaPriorSet set{resolve_prior(req), {marginal_prior(config.nu_max), marginal_prior(config.nu_max)}, {}, {}};
    if (config.rho_dependent_prior) {
        // tables are built on first use of each bucket
        auto cache = std::make_shared<std::map<double, PriorTable>>();
        set.nu_given_rho = [cache, req](double rho) -> const PriorTable& {
            const double key = RhoBucket::containing(rho).representative;
            auto it = cache->find(key);
            if (it == cache->end()) {
                PriorRequest r = req;
                r.rho = key;
                it = cache->emplace(key, resolve_prior(r)).first;
            }
            return it->second;
        };
    }
    const auto perm = canonical_order(data);
    const auto labels = copula_labels(perm);
    const McmcConfig mc = to_canonical(config.mcmc, copula_parameter_names(), labels);
    const ChainOutput chain = add_tail_dependence(
        relabel(run_copula_sampler(permute_columns(data, perm), set, mc), labels), config.nu_max);
    const auto s = summarize(chain);
    append_rows(rep.rows, s, "lbp");
    rep.summaries["lbp"] = s;
    rep.chains["lbp"] = chain;
    rep.contour = copula_predictive_grid(data, chain, config.grid_size, config.contour_draws, config.nu_max);
    rep.contour.levels = config.levels.empty() ? default_contour_levels("copula") : config.levels;
    return rep;
}

AnalysisReport run_copula_analysis(const std::string& csv_path, const AnalysisConfig& config) {
    std::vector<std::string> header;
    const Matrix data = load_csv(csv_path, &header);
    AnalysisReport rep = run_copula_analysis(data, config);
    rep.columns = header;
    return rep;
}

void write_estimates_csv(const std::vector<EstimateRow>& rows, std::ostream& out) {
    out << "parameter,prior,estimate,lower,upper,credible_set\n";
    for (const auto& r : rows)
        out << r.parameter << ',' << r.prior << ',' << format_double(r.estimate) << ',' << format_double(r.lower)
            << ',' << format_double(r.upper) << ",\"" << r.credible_set << "\"\n";
}

std::vector<EstimateRow> read_estimates_csv(std::istream& in) {
    const auto t = read_csv_table(in);
    if (t.header.size() != 6 || t.header[0] != "parameter") throw DataError("not an estimates CSV");
    std::vector<EstimateRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const int line = static_cast<int>(i) + 2;
        rows.push_back({f[0], f[1], parse_double(f[2], line), parse_double(f[3], line), parse_double(f[4], line), f[5]});
    }
    return rows;
}

void write_contour_csv(const ContourGrid& grid, std::ostream& out) {
    out << "x,y,density\n";
    for (std::size_t i = 0; i < grid.x.size(); ++i)
        for (std::size_t j = 0; j < grid.y.size(); ++j)
            out << format_double(grid.x[i]) << ',' << format_double(grid.y[j]) << ','
                << format_double(grid.density(i, j)) << '\n';
}

void write_levels_csv(const std::vector<double>& levels, std::ostream& out) {
    out << "level\n";
    for (double v : levels) out << format_double(v) << '\n';
}

std::vector<std::string> write_analysis_outputs(const AnalysisReport& report, const std::string& out_dir,
                                                const std::string& tag) {
    fs::create_directories(out_dir);
    std::vector<std::string> paths;
    auto open = [&](const std::string& name) {
        const std::string p = (fs::path(out_dir) / (tag + "_" + name)).string();
        paths.push_back(p);
        std::ofstream f(p);
        if (!f) throw DataError("cannot write " + p);
        return f;
    };
    {
        auto f = open("estimates.csv");
        write_estimates_csv(report.rows, f);
    }
    if (!report.contour.x.empty()) {
        auto f = open("contour.csv");
        write_contour_csv(report.contour, f);
        auto g = open("levels.csv");
        write_levels_csv(report.contour.levels, g);
    }
    for (const auto& [prior, chain] : report.chains) {
        auto f = open("chain_" + prior + ".csv");
        write_chain_csv(chain, f);
        auto g = open("summary_" + prior + ".json");
        g << summary_to_json(report.summaries.at(prior), chain) << '\n';
    }
    return paths;
}

Matrix synthetic_mvt_fixture(std::uint64_t seed) {
    namespace f = reference::mvt_fixture;
    Vector mu(2);
    mu << f::mu1, f::mu2;
    Matrix s(2, 2);
    s << f::s11, f::s12, f::s12, f::s22;
    return sample_mvt(MvtParams(mu, SpdMatrix(s), f::nu), f::n, seed);
}

Matrix synthetic_copula_fixture(std::uint64_t seed) {
    namespace f = reference::copula_fixture;
    const CopulaModel m =
        CopulaModel::bivariate(f::rho, f::nu, {{f::mu1, f::sigma1, f::nu1}, {f::mu2, f::sigma2, f::nu2}});
    return sample_copula_model(m, f::n, seed);
}

}  // namespace dofprior
