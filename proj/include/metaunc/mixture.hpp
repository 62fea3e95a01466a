#pragma once

#include <cstdint>
#include <vector>

#include "metaunc/meta_model.hpp"
#include "metaunc/simplex.hpp"

namespace metaunc::mix {

enum class MixtureMode { FullPosterior, Embedded };

/// The predictive mixture over PMPs for new data: component j is the
/// posterior predictive (or its embedding) of meta-model j, weighted by the
/// observed PMP of model j.
struct PredictiveMixture {
    explicit PredictiveMixture(PmpVector observed) : weights(std::move(observed)) {}

    PmpVector weights;  // observed PMPs
    MixtureMode mode = MixtureMode::FullPosterior;
    std::vector<meta::MetaPosterior> posteriors;  // full mode
    std::vector<meta::Embedding> embeddings;      // embedded mode
    std::vector<meta::DensityEvaluator> evaluators;
    double epsilon_clamp = kDefaultClampEpsilon;
    std::uint64_t moment_seed = 0;
    int n_moment_draws = 100000;
    int n_clusters = 0;  // embedded mode only

    std::size_t size() const noexcept { return weights.dim(); }
};

/// Assemble the mixture from the observed PMPs and the per-model meta fits.
/// Embedded mode precomputes C-cluster embeddings of every component.
PredictiveMixture build_mixture(const PmpVector& observed,
                                std::vector<meta::MetaPosterior> fits, MixtureMode mode,
                                int n_clusters, std::uint64_t seed);

/// logsumexp_j ( ln w_j + component log-density at p ); zero weights are
/// skipped so one-hot weights select a single component exactly.
double mixture_logpdf(const PredictiveMixture& m, const PmpVector& p);

struct ComponentMoments {
    std::vector<double> mean;
    double second_moment_trace = 0.0;  // E[sum_j pi_j^2]
    double mc_stderr = 0.0;            // 0 for analytic (Dirichlet) moments
};

/// Mean and second moment of one mixture component. Dirichlet components are
/// analytic; logistic-normal components use fixed-seed Monte Carlo.
ComponentMoments component_moments(const PredictiveMixture& m, std::size_t j);

/// sum_j w_j E[component_j]; the mixture-mean "linear transformation" of the
/// observed PMPs.
PmpVector mixture_mean(const PredictiveMixture& m);

/// Trace of the mixture covariance via the law of total variance.
double mixture_variance_trace(const PredictiveMixture& m);

/// Draw a PMP vector from the mixture.
PmpVector sample_mixture(const PredictiveMixture& m, Rng& rng);

/// Fraction of mixture mass within L1 distance `radius` of the one-hot
/// vertex `vertex` (0-based), estimated from n_draws fixed-seed samples.
double mass_within_l1(const PredictiveMixture& m, std::size_t vertex, double radius,
                      int n_draws, std::uint64_t seed);

/// Mixture log-density on the barycentric lattice; 3-component sets only.
SimplexDensityGrid density_grid(const PredictiveMixture& m, int resolution, int threads = 0);

}  // namespace metaunc::mix
