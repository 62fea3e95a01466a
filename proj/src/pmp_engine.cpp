#include "metaunc/pmp_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "metaunc/numerics.hpp"
#include "metaunc/parallel.hpp"

namespace metaunc::engine {

ModelSet::ModelSet(std::vector<std::shared_ptr<const models::GenerativeModel>> models_in,
                   PmpVector prior_in)
    : models(std::move(models_in)), prior(std::move(prior_in)) {
    if (models.size() < 2) throw std::invalid_argument("a model set needs at least 2 models");
    if (prior.dim() != models.size()) {
        throw std::invalid_argument("prior length must match the number of models");
    }
    for (const auto& m : models) {
        if (!m) throw std::invalid_argument("null model in set");
    }
}

ModelSet ModelSet::uniform_prior(
    std::vector<std::shared_ptr<const models::GenerativeModel>> models_in) {
    const std::size_t J = models_in.size();
    if (J < 2) throw std::invalid_argument("a model set needs at least 2 models");
    std::vector<double> p(J, 1.0 / static_cast<double>(J));
    return ModelSet(std::move(models_in), PmpVector(std::move(p)));
}

std::vector<std::string> ModelSet::names() const {
    std::vector<std::string> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(m->name());
    return out;
}

PmpVector compute_pmps(const ModelSet& set, const models::Dataset& data) {
    std::vector<double> lw(set.size());
    for (std::size_t j = 0; j < set.size(); ++j) {
        const double lm = set.models[j]->log_marginal(data);
        if (std::isnan(lm)) {
            throw std::runtime_error("model '" + set.models[j]->name() +
                                     "' returned NaN log marginal");
        }
        lw[j] = lm + (set.prior[j] > 0.0 ? std::log(set.prior[j]) : kNegInf);
    }
    return normalize_from_log(lw);
}

namespace {

int draw_model_index(const PmpVector& prior, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t j = 0; j < prior.dim(); ++j) {
        acc += prior[j];
        if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(prior.dim()) - 1;
}

}  // namespace

LabeledPmpSample run_level2(const ModelSet& set, int n_sims, int n_obs, std::uint64_t seed,
                            const Level2Options& options) {
    if (n_sims < 1) throw std::invalid_argument("n_sims must be >= 1");
    if (n_obs < 1) throw std::invalid_argument("n_obs must be >= 1");
    const int J = static_cast<int>(set.size());

    LabeledPmpSample sample;
    sample.n_obs = n_obs;
    sample.seed = seed;
    sample.labels.assign(n_sims, 0);
    std::vector<std::optional<PmpVector>> pmps(n_sims);

    parallel_for(static_cast<std::size_t>(n_sims), options.threads, [&](std::size_t k) {
        Rng rng(derive_seed(seed, k));
        int idx;
        if (options.stratified) {
            idx = static_cast<int>(k) % J;
        } else {
            idx = draw_model_index(set.prior, rng);
        }
        try {
            const models::Dataset data = set.models[idx]->simulate(rng, n_obs);
            pmps[k] = compute_pmps(set, data);
        } catch (const std::exception& e) {
            throw std::runtime_error("dataset k=" + std::to_string(k + 1) + " (model '" +
                                     set.models[idx]->name() + "'): " + e.what());
        }
        sample.labels[k] = idx + 1;
    });

    sample.pmps.reserve(n_sims);
    for (int k = 0; k < n_sims; ++k) sample.pmps.push_back(std::move(*pmps[k]));
    return sample;
}

std::vector<std::vector<PmpVector>> group_by_true_model(const LabeledPmpSample& sample) {
    if (sample.pmps.empty()) throw std::invalid_argument("empty sample");
    if (sample.pmps.size() != sample.labels.size()) {
        throw std::invalid_argument("sample pmps/labels length mismatch");
    }
    const int J = static_cast<int>(sample.pmps.front().dim());
    std::vector<std::vector<PmpVector>> groups(J);
    for (std::size_t k = 0; k < sample.pmps.size(); ++k) {
        const int label = sample.labels[k];
        if (label < 1 || label > J) throw std::invalid_argument("label out of 1..J");
        groups[label - 1].push_back(sample.pmps[k]);
    }
    return groups;
}

}  // namespace metaunc::engine
