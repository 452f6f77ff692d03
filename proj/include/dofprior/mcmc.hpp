#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dofprior/models.hpp"
#include "dofprior/priors.hpp"
#include "dofprior/rng.hpp"

namespace dofprior {

enum class ParamDomain { real, positive, unit_interval };

enum class OffdiagProposal {
    // Normal random walk, proposals that break positive definiteness rejected
    unrestricted,
    // positive-truncated proposal as for the variances (forbids negative covariance)
    positive,
};

struct McmcConfig {
    int n_keep = 500;
    int burn_in = 1000;
    int thin = 10;
    // Per-parameter random-walk standard deviations; missing entries get a
    // data-driven default.
    std::map<std::string, double> proposal_scales;
    double target_accept = 0.30;
    std::uint64_t seed = 1;
    // Scales are adapted after every batch of this many burn-in iterations.
    int adapt_batch = 50;
    bool adapt = true;
    // false keeps every continuous parameter at its initial value
    bool update_nuisance = true;
    OffdiagProposal offdiag = OffdiagProposal::unrestricted;
    // Optional starting values by parameter name.
    std::map<std::string, double> init;

    void validate() const;
};

struct ChainOutput {
    std::vector<std::string> names;
    std::vector<bool> discrete;
    std::vector<std::vector<double>> draws;  // draws[p][k]
    std::map<std::string, double> accept_rates;
    std::vector<double> log_posterior_trace;
    McmcConfig config;  // echo with the frozen proposal scales
    std::int64_t nan_proposals = 0;

    std::size_t index(const std::string& name) const;
    const std::vector<double>& get(const std::string& name) const;
    std::size_t size() const { return log_posterior_trace.size(); }
};

struct ParamSummary {
    std::string name;
    bool discrete = false;
    double median = 0.0;
    double lower = 0.0;  // 2.5% quantile
    double upper = 0.0;  // 97.5% quantile
    double mean = 0.0;
    // discrete parameters only
    int map = 0;
    std::vector<int> credible_set;
    double credible_mass = 0.0;
    std::vector<double> pmf;  // pmf[v - 1] over 1..max draw
};

struct PosteriorSummary {
    std::vector<ParamSummary> params;
    const ParamSummary& get(const std::string& name) const;
};

// Type-7 sample quantile.
double sample_quantile(std::vector<double> values, double prob);

// Categorical draw from softmax(log_values); index + 1 is returned.
int gibbs_nu_draw(const std::vector<double>& log_values, Rng& rng);
int gibbs_nu_draw(const std::function<double(int)>& logpost_at, const DofSupport& support, Rng& rng);

struct MhStep {
    double value = 0.0;
    double logpost = 0.0;
    bool accepted = false;
    bool nan = false;
};

// Random-walk Metropolis-Hastings step. On restricted domains the proposal is
// a Normal truncated to the domain and the Hastings ratio of the truncation
// normalisers is applied.
MhStep rw_metropolis_step(double current, double current_logpost, const std::function<double(double)>& logpost,
                          double scale, Rng& rng, ParamDomain domain = ParamDomain::real);
MhStep rw_metropolis_step(double current, const std::function<double(double)>& logpost, double scale, Rng& rng,
                          ParamDomain domain = ParamDomain::real);

// Multiplies each scale by exp(rate - target) using the pilot's acceptance rates.
McmcConfig adapt_scales(const ChainOutput& pilot, const McmcConfig& config);

ChainOutput run_mvt_sampler(const Matrix& data, const PriorTable& prior, const McmcConfig& config);

struct CopulaPriorSet {
    PriorTable nu;
    std::vector<PriorTable> margins;
    NuisanceHyper hyper;
    // When set, the copula nu prior is looked up for the current rho draw
    // instead of using `nu`.
    std::function<const PriorTable&(double rho)> nu_given_rho;
};

ChainOutput run_copula_sampler(const Matrix& data, const CopulaPriorSet& priors, const McmcConfig& config);
ChainOutput run_copula_sampler(const Matrix& data, const PriorTable& prior_nu,
                               const std::vector<PriorTable>& marginal_priors, const McmcConfig& config);

PosteriorSummary summarize(const ChainOutput& chain);

void write_chain_csv(const ChainOutput& chain, std::ostream& out);
ChainOutput read_chain_csv(std::istream& in);
std::string summary_to_json(const PosteriorSummary& summary, const ChainOutput& chain);

// Parameter names used by the samplers.
std::vector<std::string> mvt_parameter_names(int d);
std::vector<std::string> copula_parameter_names();

}  // namespace dofprior
