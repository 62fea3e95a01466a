#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metaunc/rng.hpp"
#include "metaunc/simplex.hpp"

namespace metaunc::models {

struct BinaryData {
    std::vector<int> y;  // entries in {0, 1}
};

struct RegressionData {
    // Shared predictor pool; each candidate model selects its own columns.
    Eigen::MatrixXd predictors;  // N x pool_dim
    Eigen::VectorXd y;           // length N
};

struct CountData {
    std::vector<long> y;  // daily counts, y[t-1] observed at day t
};

using Observations = std::variant<BinaryData, RegressionData, CountData>;

struct Dataset {
    Observations obs;
    int n_obs = 0;
};

/// A generative Bayesian candidate model: simulate draws theta from the
/// prior and then data from the likelihood; log_marginal integrates the
/// parameters out. Implementations are immutable and shareable across
/// threads; all randomness comes through the explicit Rng.
class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;
    virtual const std::string& name() const noexcept = 0;
    virtual Dataset simulate(Rng& rng, int n_obs) const = 0;
    virtual double log_marginal(const Dataset& data) const = 0;
};

// ---------------------------------------------------------------------------
// Beta-Bernoulli conjugate pair

double beta_bernoulli_log_marginal(double alpha, double beta, const BinaryData& y);

class BetaBernoulliModel final : public GenerativeModel {
public:
    BetaBernoulliModel(std::string name, double alpha, double beta);
    const std::string& name() const noexcept override { return name_; }
    Dataset simulate(Rng& rng, int n_obs) const override;
    double log_marginal(const Dataset& data) const override;
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }

private:
    std::string name_;
    double alpha_;
    double beta_;
};

// ---------------------------------------------------------------------------
// Normal-Inverse-Gamma conjugate linear regression

struct NigPosterior {
    double a_n = 0.0;
    double b_n = 0.0;
    Eigen::VectorXd mu_n;
    Eigen::MatrixXd lambda_n;
};

NigPosterior nig_posterior_update(double a0, double b0, const Eigen::VectorXd& mu0,
                                  const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y);

/// Closed-form log marginal likelihood of the NIG regression model,
/// evaluated fully in log space.
double nig_log_marginal(double a0, double b0, const Eigen::VectorXd& mu0,
                        const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y);

class NigRegressionModel final : public GenerativeModel {
public:
    /// `columns` selects this model's design columns (0-based) out of a
    /// predictor pool of width pool_dim shared by the candidate set.
    NigRegressionModel(std::string name, double a0, double b0, Eigen::VectorXd mu0,
                       Eigen::MatrixXd lambda0, int pool_dim, std::vector<int> columns);

    const std::string& name() const noexcept override { return name_; }
    Dataset simulate(Rng& rng, int n_obs) const override;
    double log_marginal(const Dataset& data) const override;

    Eigen::MatrixXd design_for(const RegressionData& data) const;
    int pool_dim() const noexcept { return pool_dim_; }
    double a0() const noexcept { return a0_; }
    double b0() const noexcept { return b0_; }
    const Eigen::VectorXd& mu0() const noexcept { return mu0_; }
    const Eigen::MatrixXd& lambda0() const noexcept { return lambda0_; }

private:
    std::string name_;
    double a0_;
    double b0_;
    Eigen::VectorXd mu0_;
    Eigen::MatrixXd lambda0_;
    Eigen::MatrixXd lambda0_chol_;  // for prior draws of beta
    int pool_dim_;
    std::vector<int> columns_;
};

// ---------------------------------------------------------------------------
// SIR / SEIR compartment models with count likelihoods

enum class Compartments { Sir, Seir };
enum class CountLikelihood { Poisson, NegativeBinomial };

struct HalfNormalPrior {
    double mean = 0.0;
    double sd = 1.0;
};

struct EpidemicSettings {
    Compartments compartments = Compartments::Sir;
    CountLikelihood likelihood = CountLikelihood::Poisson;
    HalfNormalPrior beta_prior;
    HalfNormalPrior gamma_prior;
    std::optional<HalfNormalPrior> eta_prior;  // required for SEIR
    std::optional<HalfNormalPrior> phi_prior;  // required for NegativeBinomial
    long population = 763;
    int horizon = 14;  // days
    int initial_infected = 1;
    int n_is = 20000;
    std::uint64_t estimator_seed = 0;
};

/// Deterministic RK4 trajectory of the infected compartment sampled at
/// integer days 1..horizon. Step size shrinks automatically below the
/// nominal 0.05/day when rates are large; throws on step-size underflow.
std::vector<double> epidemic_integrate(const EpidemicSettings& settings, double beta,
                                       double gamma, double eta);
std::vector<double> epidemic_integrate(const EpidemicSettings& settings, double beta,
                                       double gamma, double eta, int horizon);

struct LogMarginalEstimate {
    double log_value = 0.0;
    bool all_weights_neg_inf = false;
};

/// Prior importance-sampling estimate of the log marginal likelihood:
/// logsumexp_s log p(y | theta_s) - log S with theta_s drawn from the
/// half-normal priors. Deterministic given the seed.
LogMarginalEstimate epidemic_log_marginal(const EpidemicSettings& settings, const CountData& y,
                                          int n_is, std::uint64_t seed);

class EpidemicModel final : public GenerativeModel {
public:
    EpidemicModel(std::string name, EpidemicSettings settings);
    const std::string& name() const noexcept override { return name_; }
    Dataset simulate(Rng& rng, int n_obs) const override;
    double log_marginal(const Dataset& data) const override;
    const EpidemicSettings& settings() const noexcept { return settings_; }

private:
    struct TrajectoryTable {
        std::vector<std::vector<double>> infected;  // n_is trajectories
        std::vector<double> phi;                    // per-draw dispersion
    };
    const TrajectoryTable& table_for(int horizon) const;

    std::string name_;
    EpidemicSettings settings_;
    mutable std::mutex cache_mutex_;
    mutable std::vector<std::pair<int, std::shared_ptr<TrajectoryTable>>> cache_;
};

// ---------------------------------------------------------------------------
// Externally computed PMPs (e.g. amortized approximators)

struct ExternalPmpRecord {
    PmpVector pmps;
    int true_model = 0;  // 1-based label; 0 when the file has no label column
};

struct ExternalPmpSource {
    std::vector<ExternalPmpRecord> records;
    int n_models = 0;
    bool has_labels = false;
};

/// CSV with header pi_1,...,pi_J[,true_model]. Rows off the simplex by at
/// most 1e-6 are renormalized; anything worse is rejected with its row
/// number.
ExternalPmpSource load_external_pmps(const std::string& path);

/// CSV with header day,in_bed.
CountData load_daily_counts_csv(const std::string& path);

}  // namespace metaunc::models
