#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dofprior/app.hpp"
#include "dofprior/divergence.hpp"
#include "dofprior/errors.hpp"
#include "dofprior/mcmc.hpp"
#include "dofprior/models.hpp"
#include "dofprior/priors.hpp"

namespace py = pybind11;
using namespace dofprior;

namespace {

McmcConfig chain_config(int n_keep, int burn_in, int thin, std::uint64_t seed, bool positive_offdiag) {
    McmcConfig c;
    c.n_keep = n_keep;
    c.burn_in = burn_in;
    c.thin = thin;
    c.seed = seed;
    c.offdiag = positive_offdiag ? OffdiagProposal::positive : OffdiagProposal::unrestricted;
    return c;
}

py::dict estimate_to_dict(const McEstimate& e) {
    py::dict d;
    d["value"] = e.value;
    d["std_error"] = e.std_error;
    d["n_samples"] = e.n_samples;
    d["seed"] = e.seed;
    d["ess"] = e.ess;
    d["heavy_tail"] = e.heavy_tail;
    return d;
}

py::dict chain_to_dict(const ChainOutput& c) {
    py::dict draws;
    for (std::size_t i = 0; i < c.names.size(); ++i)
        draws[py::str(c.names[i])] = py::array_t<double>(c.draws[i].size(), c.draws[i].data());
    py::dict out;
    out["draws"] = draws;
    out["accept_rates"] = c.accept_rates;
    out["log_posterior"] = py::array_t<double>(c.log_posterior_trace.size(), c.log_posterior_trace.data());
    out["proposal_scales"] = c.config.proposal_scales;
    out["nan_proposals"] = c.nan_proposals;
    return out;
}

py::dict summary_to_dict(const PosteriorSummary& s) {
    py::dict out;
    for (const auto& p : s.params) {
        py::dict d;
        d["median"] = p.median;
        d["lower"] = p.lower;
        d["upper"] = p.upper;
        d["mean"] = p.mean;
        if (p.discrete) {
            d["map"] = p.map;
            d["credible_set"] = p.credible_set;
            d["credible_mass"] = p.credible_mass;
        }
        out[py::str(p.name)] = d;
    }
    return out;
}

py::dict report_to_dict(const AnalysisReport& r) {
    py::list rows;
    for (const auto& e : r.rows) {
        py::dict d;
        d["parameter"] = e.parameter;
        d["prior"] = e.prior;
        d["estimate"] = e.estimate;
        d["lower"] = e.lower;
        d["upper"] = e.upper;
        d["credible_set"] = e.credible_set;
        rows.append(d);
    }
    py::dict summaries, chains;
    for (const auto& [name, s] : r.summaries) summaries[py::str(name)] = summary_to_dict(s);
    for (const auto& [name, c] : r.chains) chains[py::str(name)] = chain_to_dict(c);
    py::dict out;
    out["model"] = r.model;
    out["estimates"] = rows;
    out["summaries"] = summaries;
    out["chains"] = chains;
    if (!r.contour.x.empty()) {
        py::dict g;
        g["x"] = r.contour.x;
        g["y"] = r.contour.y;
        g["density"] = r.contour.density;
        g["levels"] = r.contour.levels;
        out["contour"] = g;
    }
    return out;
}

AnalysisConfig analysis_config(int n_keep, int burn_in, int thin, std::uint64_t seed, std::vector<std::string> priors,
                               int threads, std::string cache_dir, std::int64_t prior_samples, int grid_size) {
    AnalysisConfig cfg;
    cfg.mcmc = chain_config(n_keep, burn_in, thin, seed, false);
    if (!priors.empty()) cfg.priors = std::move(priors);
    cfg.threads = threads;
    cfg.cache_dir = std::move(cache_dir);
    cfg.copula_prior_samples = prior_samples;
    cfg.grid_size = grid_size;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Objective priors for Student-t degrees of freedom";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("kl_t_t", [](int d, double nu, double nu_prime) { return kl_t_t(d, nu, nu_prime); }, py::arg("d"),
          py::arg("nu"), py::arg("nu_prime"));
    m.def("kl_normal_t", [](int d, double nu_prime) { return kl_normal_t(d, nu_prime); }, py::arg("d"),
          py::arg("nu_prime"));
    m.def(
        "kl_copula",
        [](int nu, int nu_prime, double rho, std::int64_t n, std::uint64_t seed, const std::string& estimator,
           int threads) {
            if (estimator != "mc" && estimator != "is") throw DomainError("estimator must be mc or is");
            return estimate_to_dict(estimator == "mc" ? kl_copula_mc(nu, nu_prime, rho, n, seed, 30, threads)
                                                      : kl_copula_is(nu, nu_prime, rho, n, seed, 30, threads));
        },
        py::arg("nu"), py::arg("nu_prime"), py::arg("rho") = 0.0, py::arg("n") = 100000, py::arg("seed") = 1,
        py::arg("estimator") = "is", py::arg("threads") = 1);
    m.def(
        "kl_grid",
        [](int d, int nu_max) {
            const auto g = build_kl_grid(d, nu_max);
            std::vector<std::tuple<int, double, double>> rows;
            for (const auto& r : g.rows) rows.emplace_back(r.nu, r.dkl_prev, r.dkl_next);
            return rows;
        },
        py::arg("d"), py::arg("nu_max") = 30, "(nu, KL to nu-1, KL to nu+1) rows");
    m.def("loss_based_mass", &loss_based_mass, py::arg("kl"));

    py::class_<PriorTable>(m, "PriorTable")
        .def_property_readonly("nu_max", [](const PriorTable& t) { return t.support.nu_max(); })
        .def_readonly("probs", &PriorTable::probs)
        .def_property_readonly("kind", [](const PriorTable& t) { return t.meta.kind; })
        .def("prob", &PriorTable::prob, py::arg("nu"))
        .def("log_prob", &PriorTable::log_prob, py::arg("nu"))
        .def("to_json", &prior_to_json)
        .def_static("from_json", &prior_from_json, py::arg("text"))
        .def("__len__", [](const PriorTable& t) { return t.probs.size(); })
        .def("__repr__", [](const PriorTable& t) {
            return "<PriorTable kind=" + t.meta.kind + " nu_max=" + std::to_string(t.support.nu_max()) + ">";
        });

    m.def(
        "prior",
        [](const std::string& name, const std::string& model, int d, int nu_max, double rho, std::int64_t n,
           std::uint64_t seed, int threads, const std::string& cache_dir) {
            PriorRequest r;
            r.name = name;
            r.model = model;
            r.d = d;
            r.nu_max = nu_max;
            r.rho = rho;
            r.copula_samples = n;
            r.seed = seed;
            r.threads = threads;
            r.cache_dir = cache_dir;
            return resolve_prior(r);
        },
        py::arg("name") = "lbp", py::arg("model") = "mvt", py::arg("d") = 2, py::arg("nu_max") = 30,
        py::arg("rho") = 0.0, py::arg("n") = 100000, py::arg("seed") = 1, py::arg("threads") = 1,
        py::arg("cache_dir") = "",
        "lbp, anscombe, jeffreys, relles_rogers, uniform or point:K for the mvt or copula model");
    m.def("marginal_prior", [](int nu_max) { return marginal_prior(nu_max); }, py::arg("nu_max") = 30);

    m.def(
        "sample_mvt",
        [](const Vector& mu, const Matrix& sigma, int nu, std::int64_t n, std::uint64_t seed, int nu_max) {
            return sample_mvt(MvtParams(mu, SpdMatrix(sigma), nu, nu_max), n, seed);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("nu"), py::arg("n"), py::arg("seed") = 1, py::arg("nu_max") = 30);
    m.def(
        "sample_copula_model",
        [](double rho, int nu, std::vector<std::tuple<double, double, int>> margins, std::int64_t n,
           std::uint64_t seed) {
            std::vector<MarginSpec> ms;
            for (auto [mu, sigma, df] : margins) ms.push_back({mu, sigma, df});
            return sample_copula_model(CopulaModel::bivariate(rho, nu, ms), n, seed);
        },
        py::arg("rho"), py::arg("nu"), py::arg("margins"), py::arg("n"), py::arg("seed") = 1,
        "margins: [(mu, sigma, nu), (mu, sigma, nu)]");

    m.def(
        "run_mvt_sampler",
        [](const Matrix& data, const PriorTable& prior, int n_keep, int burn_in, int thin, std::uint64_t seed,
           bool positive_offdiag) {
            const auto c = run_mvt_sampler(data, prior, chain_config(n_keep, burn_in, thin, seed, positive_offdiag));
            py::dict out = chain_to_dict(c);
            out["summary"] = summary_to_dict(summarize(c));
            return out;
        },
        py::arg("data"), py::arg("prior"), py::arg("n_keep") = 500, py::arg("burn_in") = 1000, py::arg("thin") = 10,
        py::arg("seed") = 1, py::arg("positive_offdiag") = false);
    m.def(
        "run_copula_sampler",
        [](const Matrix& data, const PriorTable& prior, int n_keep, int burn_in, int thin, std::uint64_t seed) {
            const PriorTable marginal = marginal_prior(prior.support.nu_max());
            const auto c = add_tail_dependence(
                run_copula_sampler(data, prior, {marginal, marginal}, chain_config(n_keep, burn_in, thin, seed, false)),
                prior.support.nu_max());
            py::dict out = chain_to_dict(c);
            out["summary"] = summary_to_dict(summarize(c));
            return out;
        },
        py::arg("data"), py::arg("prior"), py::arg("n_keep") = 500, py::arg("burn_in") = 1000, py::arg("thin") = 10,
        py::arg("seed") = 1);

    m.def("tail_lambda", &tail_lambda, py::arg("nu"), py::arg("rho"));
    m.def("kendall_tau", &kendall_tau, py::arg("rho"));

    m.def(
        "run_frequentist_study",
        [](const std::string& model, int d, int n, std::vector<int> nu_grid, double rho, int replicates,
           const std::string& prior, std::uint64_t seed, int n_keep, int burn_in, int thin, int threads,
           std::int64_t prior_samples, const std::string& cache_dir) {
            ScenarioSpec s;
            s.model = model;
            s.d = d;
            s.n = n;
            s.nu_grid = std::move(nu_grid);
            s.rho = rho;
            s.replicates = replicates;
            s.prior = prior;
            s.seed = seed;
            s.mcmc = chain_config(n_keep, burn_in, thin, seed, false);
            s.copula_prior_samples = prior_samples;
            const auto rep = run_frequentist_study(s, threads, cache_dir);
            py::list rows;
            for (const auto& r : rep.rows) {
                py::dict row;
                row["nu"] = r.nu;
                row["coverage"] = r.coverage;
                row["rmse"] = r.rmse;
                row["relative_rmse"] = r.relative_rmse;
                row["n_effective"] = r.n_effective;
                rows.append(row);
            }
            return py::make_tuple(rows, rep.failures);
        },
        py::arg("model") = "mvt", py::arg("d") = 2, py::arg("n") = 250, py::arg("nu_grid") = std::vector<int>{},
        py::arg("rho") = 0.5, py::arg("replicates") = 100, py::arg("prior") = "lbp", py::arg("seed") = 1,
        py::arg("n_keep") = 500, py::arg("burn_in") = 1000, py::arg("thin") = 10, py::arg("threads") = 1,
        py::arg("prior_samples") = 100000, py::arg("cache_dir") = "", "returns (rows, failure messages)");

    m.def(
        "run_mvt_analysis",
        [](const Matrix& data, int n_keep, int burn_in, int thin, std::uint64_t seed, std::vector<std::string> priors,
           int threads, std::string cache_dir, int grid_size) {
            return report_to_dict(run_mvt_analysis(
                data, analysis_config(n_keep, burn_in, thin, seed, std::move(priors), threads, std::move(cache_dir),
                                      100000, grid_size)));
        },
        py::arg("data"), py::arg("n_keep") = 500, py::arg("burn_in") = 1000, py::arg("thin") = 10, py::arg("seed") = 1,
        py::arg("priors") = std::vector<std::string>{}, py::arg("threads") = 1, py::arg("cache_dir") = "",
        py::arg("grid_size") = 60);
    m.def(
        "run_copula_analysis",
        [](const Matrix& data, int n_keep, int burn_in, int thin, std::uint64_t seed, std::int64_t prior_samples,
           int threads, std::string cache_dir, int grid_size) {
            return report_to_dict(run_copula_analysis(
                data, analysis_config(n_keep, burn_in, thin, seed, {}, threads, std::move(cache_dir), prior_samples,
                                      grid_size)));
        },
        py::arg("data"), py::arg("n_keep") = 500, py::arg("burn_in") = 1000, py::arg("thin") = 10, py::arg("seed") = 1,
        py::arg("prior_samples") = 100000, py::arg("threads") = 1, py::arg("cache_dir") = "",
        py::arg("grid_size") = 60);

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "dofprior");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "run the command line with the given arguments; returns the exit code");
}
