#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dofprior/mcmc.hpp"
#include "dofprior/priors.hpp"

namespace dofprior {

// Upper tail dependence of the bivariate t-copula; zero for the Gaussian
// copula (nu = +inf).
double tail_lambda(double nu, double rho);
// Kendall's tau of an elliptical copula with correlation rho.
double kendall_tau(double rho);

struct TailDependence {
    double lambda = 0.0;
    double tau = 0.0;
};
TailDependence tail_dependence(double nu, double rho);

// ---------------------------------------------------------------------------
// Prior lookup shared by the CLI, the study harness and the pipelines.

struct PriorRequest {
    // "lbp", "anscombe", "jeffreys", "relles_rogers", "uniform"
    std::string name = "lbp";
    // "mvt" or "copula"
    std::string model = "mvt";
    int d = 2;
    int nu_max = 30;
    double rho = 0.0;  // copula bucket
    std::int64_t copula_samples = 100000;
    CopulaEstimator estimator = CopulaEstimator::is;
    MvtPriorMode mode = MvtPriorMode::three_case;
    std::uint64_t seed = 1;
    double tol = 1e-10;
    // KL grids and copula tables are cached here when non-empty.
    std::string cache_dir;
    int threads = 1;
};

PriorTable resolve_prior(const PriorRequest& request);

// ---------------------------------------------------------------------------
// Frequentist study

struct ScenarioSpec {
    std::string model = "mvt";
    int d = 2;
    int n = 250;
    std::vector<int> nu_grid;  // empty means 1..20
    double rho = 0.5;          // copula only
    int margin_nu = 3;         // copula only
    int replicates = 100;
    std::string prior = "lbp";
    std::uint64_t seed = 1;
    int nu_max = 30;
    McmcConfig mcmc;  // seed field unused; chains get derived seeds
    std::int64_t copula_prior_samples = 100000;

    std::vector<int> grid() const;
    void validate() const;
};

struct FrequentistRow {
    std::string model;
    int d = 2;
    int n = 0;
    double rho = 0.0;  // nan for the multivariate t
    std::string prior;
    int nu = 0;
    double coverage = 0.0;
    double rmse = 0.0;
    double relative_rmse = 0.0;  // rmse / nu
    int n_effective = 0;
};

struct FrequentistReport {
    std::vector<FrequentistRow> rows;
    std::vector<std::string> failures;  // one message per excluded replicate
};

FrequentistReport run_frequentist_study(const ScenarioSpec& spec, int threads = 1, const std::string& cache_dir = "");
// Variant with explicit priors (marginal only used for the copula).
FrequentistReport run_frequentist_study(const ScenarioSpec& spec, const PriorTable& prior,
                                        const PriorTable& marginal, int threads = 1);

void write_frequentist_csv(const FrequentistReport& report, std::ostream& out);
FrequentistReport read_frequentist_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Data analysis pipelines

struct AnalysisConfig {
    McmcConfig mcmc;
    // mvt: priors to run; the first one drives the contour plot data
    std::vector<std::string> priors = {"lbp", "anscombe", "jeffreys", "relles_rogers"};
    int threads = 1;
    std::string cache_dir;
    int nu_max = 30;
    std::int64_t copula_prior_samples = 100000;
    std::uint64_t prior_seed = 1;
    // copula: look up the rho-bucket table of the current rho draw
    bool rho_dependent_prior = false;
    int grid_size = 60;
    // draws used for the predictive density (evenly spaced over the chain)
    int contour_draws = 200;
    std::vector<double> levels;  // empty means the model's default levels
};

std::vector<double> default_contour_levels(const std::string& model);

struct EstimateRow {
    std::string parameter;
    std::string prior;
    double estimate = 0.0;  // median, or MAP for degrees of freedom
    double lower = 0.0;
    double upper = 0.0;
    std::string credible_set;  // "{4,5,6}" for degrees of freedom, else empty
};

struct ContourGrid {
    std::vector<double> x;
    std::vector<double> y;
    Matrix density;  // density(i, j) at (x[i], y[j])
    std::vector<double> levels;
};

struct AnalysisReport {
    std::string model;
    std::vector<std::string> columns;
    std::vector<EstimateRow> rows;
    std::map<std::string, ChainOutput> chains;  // by prior name
    std::map<std::string, PosteriorSummary> summaries;
    ContourGrid contour;
};

AnalysisReport run_mvt_analysis(const Matrix& data, const AnalysisConfig& config);
AnalysisReport run_mvt_analysis(const std::string& csv_path, const AnalysisConfig& config);
AnalysisReport run_copula_analysis(const Matrix& data, const AnalysisConfig& config);
AnalysisReport run_copula_analysis(const std::string& csv_path, const AnalysisConfig& config);

// lambda and tau for every kept draw of a copula chain
ChainOutput add_tail_dependence(const ChainOutput& chain, int nu_max = 30);

// Predictive density averaged over posterior draws on a regular grid.
ContourGrid mvt_predictive_grid(const Matrix& data, const ChainOutput& chain, int grid_size, int max_draws,
                                int nu_max = 30);
ContourGrid copula_predictive_grid(const Matrix& data, const ChainOutput& chain, int grid_size, int max_draws,
                                   int nu_max = 30);

void write_estimates_csv(const std::vector<EstimateRow>& rows, std::ostream& out);
std::vector<EstimateRow> read_estimates_csv(std::istream& in);
void write_contour_csv(const ContourGrid& grid, std::ostream& out);
void write_levels_csv(const std::vector<double>& levels, std::ostream& out);

// Writes estimates, contour, levels, chain CSVs and summary JSONs into out_dir
// with file names prefixed by `tag`. Returns the written paths.
std::vector<std::string> write_analysis_outputs(const AnalysisReport& report, const std::string& out_dir,
                                                const std::string& tag);

// Synthetic data sets built from the published fit values.
Matrix synthetic_mvt_fixture(std::uint64_t seed);
Matrix synthetic_copula_fixture(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Command line; returns the process exit code (0 ok, 1 usage, 2 data, 3 numeric).
int run_cli(int argc, const char* const* argv);

}  // namespace dofprior
