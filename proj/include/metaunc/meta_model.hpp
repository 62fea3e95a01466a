#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "metaunc/rng.hpp"
#include "metaunc/simplex.hpp"

namespace metaunc::meta {

enum class MetaFamily { Dirichlet, LogisticNormal };

struct MetaModelConfig {
    MetaFamily family = MetaFamily::LogisticNormal;
    // weakly informative priors on the unconstrained parameterization
    double mu_scale = 5.0;         // normal sd on logistic-normal means
    double sigma_scale = 2.5;      // half-normal on Cholesky diagonals, normal on off-diagonals
    double alpha_log_scale = 3.0;  // normal sd on log concentrations
    int n_warmup = 1000;
    int n_draws = 2000;  // D, total retained draws
    int n_chains = 4;
    double target_accept = 0.3;
    double epsilon_clamp = kDefaultClampEpsilon;
    int threads = 0;  // chain-level parallelism only
};

/// Parameters of one meta-model draw: concentrations for the Dirichlet
/// family, (mu, Cholesky of Sigma) for the logistic normal.
using MetaParams = std::variant<DirichletParams, LogisticNormalParams>;

struct ChainDiagnostics {
    std::vector<double> acceptance_rate;  // per chain
    std::vector<double> split_rhat;       // per unconstrained coordinate
    std::vector<double> ess;              // per unconstrained coordinate
    double max_split_rhat() const;
};

struct MetaPosterior {
    MetaFamily family = MetaFamily::LogisticNormal;
    int n_components = 0;  // J
    std::vector<MetaParams> draws;
    ChainDiagnostics diagnostics;
    MetaModelConfig config;
    std::uint64_t seed = 0;
    bool degenerate = false;  // all group members identical after clamping
};

/// Density of the family at an interior point for a given parameter draw.
double family_logpdf(const MetaParams& params, const InteriorPmpVector& p);
PmpVector family_sample(const MetaParams& params, Rng& rng);

/// Log prior of a parameter value under the config, including the Jacobian
/// of the unconstrained parameterization used by the sampler.
double log_prior(const MetaParams& params, const MetaModelConfig& config);

/// Unnormalized log posterior: clamped group log-likelihood plus log_prior.
/// This is exactly the density the sampler targets.
double log_posterior(const MetaParams& params, std::span<const PmpVector> group,
                     const MetaModelConfig& config);

/// Fit the meta-model on one group of model-implied PMPs with adaptive
/// random-walk Metropolis. Deterministic given the seed; chains may run in
/// parallel without affecting the draws.
MetaPosterior fit(std::span<const PmpVector> group, const MetaModelConfig& config,
                  std::uint64_t seed);

/// Monte-Carlo posterior predictive density: logsumexp over the D draws of
/// the family density minus log D.
double posterior_predictive_logpdf(const MetaPosterior& posterior, const PmpVector& p);

/// Summary of a posterior by C parameter-space centers with occupancy
/// weights; the cheap stand-in for the full draw set.
struct Embedding {
    MetaFamily family = MetaFamily::LogisticNormal;
    std::vector<MetaParams> centers;
    std::vector<double> weights;  // positive, sum to 1
};

/// C = 1 embedding: coordinate-wise mean of the draws (Cholesky factors are
/// averaged entrywise and re-multiplied for Sigma).
Embedding mean_embedding(const MetaPosterior& posterior);

/// k-means (k-means++ seeding, restarts) over the draws in parameter
/// coordinates; centers plus cluster occupancy fractions. C = D returns the
/// draws themselves.
Embedding cluster_embedding(const MetaPosterior& posterior, int n_clusters, std::uint64_t seed);

double embedding_logpdf(const Embedding& embedding, const InteriorPmpVector& p);

/// Precomputed per-draw constants for repeated density evaluation (grids,
/// quadrature). Produces exactly the same values as the plain entry points.
class DensityEvaluator {
public:
    static DensityEvaluator for_posterior(const MetaPosterior& posterior);
    static DensityEvaluator for_embedding(const Embedding& embedding, double epsilon_clamp);

    double logpdf_interior(const InteriorPmpVector& p) const;
    double logpdf(const PmpVector& p) const;
    int n_components() const noexcept { return n_components_; }

private:
    DensityEvaluator() = default;
    void reserve_terms(Eigen::Index count);
    void add_term(const MetaParams& params, double log_weight);

    MetaFamily family_ = MetaFamily::LogisticNormal;
    int n_components_ = 0;
    double epsilon_clamp_ = kDefaultClampEpsilon;
    // Dirichlet terms: row of (alpha - 1) plus cached log normalizer
    Eigen::MatrixXd alpha_minus_one_;
    Eigen::VectorXd dir_log_norm_;
    Eigen::Index dir_count_ = 0;
    // logistic-normal terms
    std::vector<Eigen::MatrixXd> chol_inv_;
    Eigen::MatrixXd mu_;
    Eigen::VectorXd ln_log_norm_;
    Eigen::VectorXd log_weight_;
};

}  // namespace metaunc::meta
