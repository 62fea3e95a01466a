#include "metaunc/mixture.hpp"

#include <cmath>
#include <stdexcept>

#include "metaunc/numerics.hpp"
#include "metaunc/parallel.hpp"

namespace metaunc::mix {

PredictiveMixture build_mixture(const PmpVector& observed,
                                std::vector<meta::MetaPosterior> fits, MixtureMode mode,
                                int n_clusters, std::uint64_t seed) {
    if (fits.size() != observed.dim()) {
        throw std::invalid_argument("need one meta fit per observed PMP component");
    }
    for (std::size_t j = 0; j < fits.size(); ++j) {
        if (fits[j].draws.empty()) {
            throw std::invalid_argument("component " + std::to_string(j + 1) +
                                        " has no posterior draws (empty simulation group?)");
        }
        if (static_cast<std::size_t>(fits[j].n_components) != observed.dim()) {
            throw std::invalid_argument("component dimension mismatch");
        }
    }
    PredictiveMixture m{observed};
    m.mode = mode;
    m.epsilon_clamp = fits.front().config.epsilon_clamp;
    m.moment_seed = derive_seed(seed, 0x4D4F4D00ull);
    if (mode == MixtureMode::Embedded) {
        m.n_clusters = n_clusters;
        for (std::size_t j = 0; j < fits.size(); ++j) {
            m.embeddings.push_back(
                meta::cluster_embedding(fits[j], n_clusters, derive_seed(seed, j)));
            m.evaluators.push_back(
                meta::DensityEvaluator::for_embedding(m.embeddings.back(), m.epsilon_clamp));
        }
    } else {
        for (const auto& fit : fits) {
            m.evaluators.push_back(meta::DensityEvaluator::for_posterior(fit));
        }
    }
    m.posteriors = std::move(fits);
    return m;
}

double mixture_logpdf(const PredictiveMixture& m, const PmpVector& p) {
    if (p.dim() != m.size()) throw std::invalid_argument("dimension mismatch");
    const InteriorPmpVector interior = clamp_to_interior(p, m.epsilon_clamp);
    LogSumExpAcc acc;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (m.weights[j] <= 0.0) continue;
        acc.add(std::log(m.weights[j]) + m.evaluators[j].logpdf_interior(interior));
    }
    return acc.value();
}

namespace {

ComponentMoments dirichlet_component_moments(const PredictiveMixture& m, std::size_t j) {
    // weighted average of analytic Dirichlet moments over draws or centers
    const std::size_t J = m.size();
    ComponentMoments out;
    out.mean.assign(J, 0.0);
    auto accumulate = [&](const std::vector<double>& alpha, double weight) {
        double alpha0 = 0.0;
        for (double a : alpha) alpha0 += a;
        for (std::size_t i = 0; i < J; ++i) {
            const double mi = alpha[i] / alpha0;
            out.mean[i] += weight * mi;
            out.second_moment_trace += weight * mi * (alpha[i] + 1.0) / (alpha0 + 1.0);
        }
    };
    if (m.mode == MixtureMode::Embedded) {
        const meta::Embedding& emb = m.embeddings[j];
        for (std::size_t c = 0; c < emb.centers.size(); ++c) {
            accumulate(std::get<DirichletParams>(emb.centers[c]).alpha, emb.weights[c]);
        }
    } else {
        const auto& draws = m.posteriors[j].draws;
        const double w = 1.0 / static_cast<double>(draws.size());
        for (const meta::MetaParams& draw : draws) {
            accumulate(std::get<DirichletParams>(draw).alpha, w);
        }
    }
    return out;
}

ComponentMoments logistic_normal_component_moments(const PredictiveMixture& m, std::size_t j) {
    const std::size_t J = m.size();
    ComponentMoments out;
    out.mean.assign(J, 0.0);
    Rng rng(derive_seed(m.moment_seed, j));
    const int n = m.n_moment_draws;
    std::vector<double> sum(J, 0.0);
    std::vector<double> sum_sq(J, 0.0);
    double trace_sum = 0.0;
    double trace_sum_sq = 0.0;

    const auto& embeddings = m.embeddings;
    for (int i = 0; i < n; ++i) {
        PmpVector draw = [&]() {
            if (m.mode == MixtureMode::Embedded) {
                const meta::Embedding& emb = embeddings[j];
                double u = rng.uniform();
                std::size_t c = 0;
                for (; c + 1 < emb.centers.size(); ++c) {
                    u -= emb.weights[c];
                    if (u < 0.0) break;
                }
                return meta::family_sample(emb.centers[c], rng);
            }
            const auto& draws = m.posteriors[j].draws;
            const std::size_t d = static_cast<std::size_t>(i) % draws.size();
            return meta::family_sample(draws[d], rng);
        }();
        double sq = 0.0;
        for (std::size_t a = 0; a < J; ++a) {
            sum[a] += draw[a];
            sum_sq[a] += draw[a] * draw[a];
            sq += draw[a] * draw[a];
        }
        trace_sum += sq;
        trace_sum_sq += sq * sq;
    }
    double max_se = 0.0;
    for (std::size_t a = 0; a < J; ++a) {
        out.mean[a] = sum[a] / n;
        const double var = std::max(0.0, sum_sq[a] / n - out.mean[a] * out.mean[a]);
        max_se = std::max(max_se, std::sqrt(var / n));
    }
    out.second_moment_trace = trace_sum / n;
    const double trace_var =
        std::max(0.0, trace_sum_sq / n - out.second_moment_trace * out.second_moment_trace);
    max_se = std::max(max_se, std::sqrt(trace_var / n));
    out.mc_stderr = max_se;
    return out;
}

}  // namespace

ComponentMoments component_moments(const PredictiveMixture& m, std::size_t j) {
    if (j >= m.size()) throw std::invalid_argument("component index out of range");
    const meta::MetaFamily family = m.mode == MixtureMode::Embedded
                                        ? m.embeddings[j].family
                                        : m.posteriors[j].family;
    return family == meta::MetaFamily::Dirichlet ? dirichlet_component_moments(m, j)
                                                 : logistic_normal_component_moments(m, j);
}

PmpVector mixture_mean(const PredictiveMixture& m) {
    const std::size_t J = m.size();
    std::vector<double> mean(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        if (m.weights[j] == 0.0) continue;
        const ComponentMoments mom = component_moments(m, j);
        for (std::size_t a = 0; a < J; ++a) mean[a] += m.weights[j] * mom.mean[a];
    }
    // component means sum to one up to MC rounding; tidy the residual
    double sum = 0.0;
    for (double v : mean) sum += v;
    for (double& v : mean) v /= sum;
    return PmpVector(std::move(mean));
}

double mixture_variance_trace(const PredictiveMixture& m) {
    const std::size_t J = m.size();
    std::vector<double> mean(J, 0.0);
    double smt = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        if (m.weights[j] == 0.0) continue;
        const ComponentMoments mom = component_moments(m, j);
        for (std::size_t a = 0; a < J; ++a) mean[a] += m.weights[j] * mom.mean[a];
        smt += m.weights[j] * mom.second_moment_trace;
    }
    double mean_norm = 0.0;
    for (double v : mean) mean_norm += v * v;
    return smt - mean_norm;
}

PmpVector sample_mixture(const PredictiveMixture& m, Rng& rng) {
    double u = rng.uniform();
    std::size_t j = 0;
    for (; j + 1 < m.size(); ++j) {
        u -= m.weights[j];
        if (u < 0.0) break;
    }
    if (m.mode == MixtureMode::Embedded) {
        const meta::Embedding& emb = m.embeddings[j];
        double v = rng.uniform();
        std::size_t c = 0;
        for (; c + 1 < emb.centers.size(); ++c) {
            v -= emb.weights[c];
            if (v < 0.0) break;
        }
        return meta::family_sample(emb.centers[c], rng);
    }
    const auto& draws = m.posteriors[j].draws;
    return meta::family_sample(draws[rng.uniform_index(draws.size())], rng);
}

double mass_within_l1(const PredictiveMixture& m, std::size_t vertex, double radius,
                      int n_draws, std::uint64_t seed) {
    if (vertex >= m.size()) throw std::invalid_argument("vertex index out of range");
    Rng rng(seed);
    long hits = 0;
    for (int i = 0; i < n_draws; ++i) {
        const PmpVector draw = sample_mixture(m, rng);
        double dist = 0.0;
        for (std::size_t a = 0; a < m.size(); ++a) {
            const double target = a == vertex ? 1.0 : 0.0;
            dist += std::abs(draw[a] - target);
        }
        if (dist <= radius) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_draws);
}

SimplexDensityGrid density_grid(const PredictiveMixture& m, int resolution, int threads) {
    if (m.size() != 3) {
        throw std::invalid_argument("density grids are only defined for 3-model sets");
    }
    SimplexDensityGrid grid = barycentric_grid(resolution, m.epsilon_clamp, 3);
    grid.log_density.resize(grid.points.size());
    parallel_for(grid.points.size(), threads, [&](std::size_t i) {
        grid.log_density[i] = mixture_logpdf(m, grid.points[i]);
    });
    return grid;
}

}  // namespace metaunc::mix
