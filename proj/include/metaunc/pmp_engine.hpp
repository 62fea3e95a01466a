#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "metaunc/models.hpp"
#include "metaunc/simplex.hpp"

namespace metaunc::engine {

/// The candidate set: J generative models plus prior model probabilities.
struct ModelSet {
    std::vector<std::shared_ptr<const models::GenerativeModel>> models;
    PmpVector prior;

    ModelSet(std::vector<std::shared_ptr<const models::GenerativeModel>> models_in,
             PmpVector prior_in);
    static ModelSet uniform_prior(
        std::vector<std::shared_ptr<const models::GenerativeModel>> models_in);

    std::size_t size() const noexcept { return models.size(); }
    std::vector<std::string> names() const;
};

/// Posterior model probabilities of the data under the set: normalized
/// exponentiation of log marginal + log prior per model.
PmpVector compute_pmps(const ModelSet& set, const models::Dataset& data);

/// Output of the level-2 simulation loop: K PMP vectors labeled with the
/// true generating model (1-based), reproducible from (set, K, N, seed).
struct LabeledPmpSample {
    std::vector<PmpVector> pmps;
    std::vector<int> labels;
    int n_obs = 0;
    std::uint64_t seed = 0;
};

struct Level2Options {
    bool stratified = false;  // balanced K/J allocation instead of M* ~ p(M)
    int threads = 0;
};

/// For each k: draw the true model, simulate N observations from it, and
/// compute the PMPs of the simulated data under the whole set. Data-parallel
/// over k with one derived RNG stream per dataset; the result is identical
/// for any thread count.
LabeledPmpSample run_level2(const ModelSet& set, int n_sims, int n_obs, std::uint64_t seed,
                            const Level2Options& options = {});

/// Partition the sample by true model, preserving within-group order.
/// Returns J groups; empty groups are legal here and rejected downstream.
std::vector<std::vector<PmpVector>> group_by_true_model(const LabeledPmpSample& sample);

}  // namespace metaunc::engine
