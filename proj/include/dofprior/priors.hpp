#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dofprior/divergence.hpp"
#include "dofprior/models.hpp"

namespace dofprior {

struct PriorMeta {
    // "mvt", "copula", "anscombe", "jeffreys", "relles_rogers", "uniform", "point"
    std::string kind = "mvt";
    int d = 1;
    std::optional<double> rho_bucket;
    // "quadrature", "mc", "is" or "closed_form"
    std::string estimator = "quadrature";
    std::int64_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct PriorTable {
    DofSupport support;
    std::vector<double> probs;  // probs[nu - 1]
    PriorMeta meta;

    double prob(int nu) const { return probs.at(nu - 1); }
    double log_prob(int nu) const;
};

// One cell of the correlation grid (-1,-0.975), (-0.975,-0.925), ..., (0.975,1).
struct RhoBucket {
    double lower = 0.0;
    double upper = 0.0;
    double representative = 0.0;

    static std::vector<RhoBucket> grid();
    static RhoBucket containing(double rho);
    // Bucket whose representative is closest to rho (used for rho = 0 etc.).
    static RhoBucket at(double rho) { return containing(rho); }
};

enum class MvtPriorMode {
    // nu <= nu_max-2 uses the next neighbour, nu_max-1 the previous one and
    // nu_max the Normal against t(nu_max-1)
    three_case,
    // minimum over both neighbours, the Normal standing in for t(nu_max)
    generic_min,
};

enum class CopulaEstimator { mc, is };

// exp(kl) - 1, the unnormalised mass for a minimum divergence kl.
double loss_based_mass(double kl);

PriorTable normalize_on_support(const std::vector<double>& raw, PriorMeta meta = {});

PriorTable build_prior_mvt(int d, int nu_max, const KLGrid& grid, MvtPriorMode mode = MvtPriorMode::three_case);
// Minimum-neighbour divergences used for each nu (before the transform).
std::vector<double> mvt_min_divergences(const KLGrid& grid, MvtPriorMode mode = MvtPriorMode::three_case);

struct CopulaPriorDiagnostics {
    std::vector<double> min_kl;
    std::vector<double> min_kl_se;
    std::vector<int> argmin_neighbour;
};

PriorTable build_prior_copula(int d, int nu_max, const RhoBucket& bucket, std::int64_t n_samples,
                              std::uint64_t seed, CopulaEstimator estimator = CopulaEstimator::is,
                              int threads = 1, CopulaPriorDiagnostics* diagnostics = nullptr);

double prior_anscombe(double nu);
double prior_jeffreys_mvt(double nu, int d);
double prior_relles_rogers(double nu);

// Competitor priors discretised onto {1, ..., nu_max}.
PriorTable competitor_prior(const std::string& name, int d, int nu_max = 30);
PriorTable point_mass_prior(int nu, int nu_max = 30);
PriorTable uniform_prior(int nu_max = 30);

// Loss-based prior for a univariate t margin (the d = 1 multivariate rule).
PriorTable marginal_prior(int nu_max = 30, const QuadratureSpec& spec = {});

double total_variation(const PriorTable& a, const PriorTable& b);

// JSON: {"kind","d","nu_max","rho_bucket","estimator","n_samples","seed","probs"}
std::string prior_to_json(const PriorTable& table);
PriorTable prior_from_json(const std::string& text);
void write_prior_json(const PriorTable& table, const std::string& path);
PriorTable read_prior_json(const std::string& path);

}  // namespace dofprior
