#include "metaunc/meta_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metaunc/numerics.hpp"
#include "metaunc/rwm.hpp"

namespace metaunc::meta {

namespace {

// Support box of the unconstrained parameterization. The lower bound on the
// Cholesky log-diagonals keeps the posterior proper when a group collapses
// to a single point (clamped one-hot PMPs); such fits pile up at the bound.
constexpr double kLogDiagMin = -18.420680743952367;  // ln 1e-8
constexpr double kLogDiagMax = 18.420680743952367;   // ln 1e8
constexpr double kLogAlphaMin = -30.0;
constexpr double kLogAlphaMax = 12.0;
constexpr double kLocBound = 1e6;

int ln_dim(int J) { return (J - 1) + (J - 1) + (J - 1) * (J - 2) / 2; }

Eigen::VectorXd to_unconstrained(const MetaParams& params) {
    if (const auto* d = std::get_if<DirichletParams>(&params)) {
        Eigen::VectorXd u(d->alpha.size());
        for (std::size_t j = 0; j < d->alpha.size(); ++j) u(j) = std::log(d->alpha[j]);
        return u;
    }
    const auto& ln = std::get<LogisticNormalParams>(params);
    const Eigen::Index d = ln.mu.size();
    Eigen::VectorXd u(ln_dim(static_cast<int>(d) + 1));
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < d; ++i) u(pos++) = ln.mu(i);
    for (Eigen::Index i = 0; i < d; ++i) u(pos++) = std::log(ln.chol(i, i));
    for (Eigen::Index i = 1; i < d; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) u(pos++) = ln.chol(i, j);
    }
    return u;
}

MetaParams from_unconstrained(MetaFamily family, int n_components, const Eigen::VectorXd& u) {
    if (family == MetaFamily::Dirichlet) {
        std::vector<double> alpha(n_components);
        for (int j = 0; j < n_components; ++j) alpha[j] = std::exp(u(j));
        return DirichletParams(std::move(alpha));
    }
    const int d = n_components - 1;
    Eigen::VectorXd mu(d);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(d, d);
    Eigen::Index pos = 0;
    for (int i = 0; i < d; ++i) mu(i) = u(pos++);
    for (int i = 0; i < d; ++i) chol(i, i) = std::exp(u(pos++));
    for (int i = 1; i < d; ++i) {
        for (int j = 0; j < i; ++j) chol(i, j) = u(pos++);
    }
    return LogisticNormalParams::from_cholesky(std::move(mu), std::move(chol));
}

bool inside_box(MetaFamily family, int n_components, const Eigen::VectorXd& u) {
    if (family == MetaFamily::Dirichlet) {
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            if (u(j) < kLogAlphaMin || u(j) > kLogAlphaMax) return false;
        }
        return true;
    }
    const int d = n_components - 1;
    for (int i = 0; i < d; ++i) {
        if (std::abs(u(i)) > kLocBound) return false;
    }
    for (int i = 0; i < d; ++i) {
        const double v = u(d + i);
        if (v < kLogDiagMin || v > kLogDiagMax) return false;
    }
    for (Eigen::Index i = 2 * d; i < u.size(); ++i) {
        if (std::abs(u(i)) > kLocBound) return false;
    }
    return true;
}

double log_prior_unconstrained(MetaFamily family, int n_components, const Eigen::VectorXd& u,
                               const MetaModelConfig& config) {
    if (!inside_box(family, n_components, u)) return kNegInf;
    double lp = 0.0;
    if (family == MetaFamily::Dirichlet) {
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            lp += log_normal_pdf(u(j), 0.0, config.alpha_log_scale);
        }
        return lp;
    }
    const int d = n_components - 1;
    for (int i = 0; i < d; ++i) lp += log_normal_pdf(u(i), 0.0, config.mu_scale);
    for (int i = 0; i < d; ++i) {
        const double diag = std::exp(u(d + i));
        // half-normal on the constrained diagonal plus the exp Jacobian
        lp += log_half_normal_pdf(diag, config.sigma_scale) + u(d + i);
    }
    for (Eigen::Index i = 2 * d; i < u.size(); ++i) {
        lp += log_normal_pdf(u(i), 0.0, config.sigma_scale);
    }
    return lp;
}

// Sufficient statistics of a clamped group; the meta likelihood is O(1) in
// the group size once these are in hand.
struct GroupStats {
    int n_components = 0;
    double n = 0.0;
    Eigen::VectorXd log_prob_sums;  // per component: sum_k ln p_kj (Dirichlet)
    Eigen::VectorXd sum_z;          // logistic normal: sum of ALR coordinates
    Eigen::MatrixXd sum_zz;
    double jacobian_sum = 0.0;  // sum_k sum_j ln p_kj
};

GroupStats build_stats(std::span<const InteriorPmpVector> group) {
    GroupStats stats;
    const int J = static_cast<int>(group.front().dim());
    stats.n_components = J;
    stats.n = static_cast<double>(group.size());
    stats.log_prob_sums = Eigen::VectorXd::Zero(J);
    stats.sum_z = Eigen::VectorXd::Zero(J - 1);
    stats.sum_zz = Eigen::MatrixXd::Zero(J - 1, J - 1);
    for (const InteriorPmpVector& p : group) {
        Eigen::VectorXd z(J - 1);
        const double log_ref = std::log(p[J - 1]);
        for (int j = 0; j < J; ++j) {
            const double lp = std::log(p[j]);
            stats.log_prob_sums(j) += lp;
            stats.jacobian_sum += lp;
            if (j < J - 1) z(j) = lp - log_ref;
        }
        stats.sum_z += z;
        stats.sum_zz += z * z.transpose();
    }
    return stats;
}

double log_lik_from_stats(MetaFamily family, const GroupStats& stats, const Eigen::VectorXd& u) {
    if (family == MetaFamily::Dirichlet) {
        double alpha0 = 0.0;
        double lp = 0.0;
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            const double a = std::exp(u(j));
            alpha0 += a;
            lp += (a - 1.0) * stats.log_prob_sums(j) - stats.n * std::lgamma(a);
        }
        return lp + stats.n * std::lgamma(alpha0);
    }
    const int d = stats.n_components - 1;
    Eigen::VectorXd mu(d);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(d, d);
    Eigen::Index pos = 0;
    double log_det_half = 0.0;
    for (int i = 0; i < d; ++i) mu(i) = u(pos++);
    for (int i = 0; i < d; ++i) {
        chol(i, i) = std::exp(u(pos));
        log_det_half += u(pos);
        ++pos;
    }
    for (int i = 1; i < d; ++i) {
        for (int j = 0; j < i; ++j) chol(i, j) = u(pos++);
    }
    // sum_k (z_k - mu)' Sigma^-1 (z_k - mu) = tr(Sigma^-1 M)
    const Eigen::MatrixXd m = stats.sum_zz - stats.sum_z * mu.transpose() -
                              mu * stats.sum_z.transpose() + stats.n * mu * mu.transpose();
    const Eigen::MatrixXd chol_inv =
        chol.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd sigma_inv = chol_inv.transpose() * chol_inv;
    const double quad = sigma_inv.cwiseProduct(m).sum();
    return -0.5 * stats.n * static_cast<double>(d) * std::log(2.0 * kPi) -
           stats.n * log_det_half - 0.5 * quad - stats.jacobian_sum;
}

std::vector<InteriorPmpVector> clamp_group(std::span<const PmpVector> group, double epsilon) {
    if (group.empty()) throw std::invalid_argument("empty meta-model group");
    const std::size_t J = group.front().dim();
    std::vector<InteriorPmpVector> clamped;
    clamped.reserve(group.size());
    for (const PmpVector& p : group) {
        if (p.dim() != J) throw std::invalid_argument("group members have mixed dimensions");
        clamped.push_back(clamp_to_interior(p, epsilon));
    }
    return clamped;
}

bool is_degenerate(std::span<const InteriorPmpVector> group) {
    const std::size_t J = group.front().dim();
    for (std::size_t j = 0; j < J; ++j) {
        double lo = group.front()[j];
        double hi = lo;
        for (const InteriorPmpVector& p : group) {
            lo = std::min(lo, p[j]);
            hi = std::max(hi, p[j]);
        }
        if (hi - lo > 1e-12) return false;
    }
    return true;
}

Eigen::VectorXd initial_point(MetaFamily family, const GroupStats& stats) {
    const int J = stats.n_components;
    if (family == MetaFamily::Dirichlet) {
        // moment-matched concentrations from the mean log-probabilities
        Eigen::VectorXd mean_lp = stats.log_prob_sums / stats.n;
        Eigen::VectorXd u(J);
        double mean_sum = 0.0;
        std::vector<double> mean_p(J);
        for (int j = 0; j < J; ++j) {
            mean_p[j] = std::exp(mean_lp(j));
            mean_sum += mean_p[j];
        }
        for (int j = 0; j < J; ++j) {
            const double a = std::clamp(5.0 * mean_p[j] / mean_sum * J, 1e-3, 1e4);
            u(j) = std::clamp(std::log(a), kLogAlphaMin + 1.0, kLogAlphaMax - 1.0);
        }
        return u;
    }
    const int d = J - 1;
    const Eigen::VectorXd mean_z = stats.sum_z / stats.n;
    Eigen::MatrixXd cov =
        stats.sum_zz / stats.n - mean_z * mean_z.transpose() + 1e-8 * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    Eigen::MatrixXd chol;
    if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
    } else {
        chol = Eigen::MatrixXd::Identity(d, d);
        for (int i = 0; i < d; ++i) chol(i, i) = std::sqrt(std::max(cov(i, i), 1e-8));
    }
    Eigen::VectorXd u(ln_dim(J));
    Eigen::Index pos = 0;
    for (int i = 0; i < d; ++i) u(pos++) = std::clamp(mean_z(i), -kLocBound / 2, kLocBound / 2);
    for (int i = 0; i < d; ++i) {
        u(pos++) = std::clamp(std::log(chol(i, i)), kLogDiagMin + 0.5, kLogDiagMax - 0.5);
    }
    for (int i = 1; i < d; ++i) {
        for (int j = 0; j < i; ++j) u(pos++) = chol(i, j);
    }
    return u;
}

Eigen::MatrixXd flatten_draws(const MetaPosterior& posterior) {
    const std::size_t D = posterior.draws.size();
    const Eigen::Index dim = posterior.family == MetaFamily::Dirichlet
                                 ? posterior.n_components
                                 : (posterior.n_components - 1) * (posterior.n_components + 2) / 2;
    Eigen::MatrixXd out(D, dim);
    for (std::size_t i = 0; i < D; ++i) {
        if (posterior.family == MetaFamily::Dirichlet) {
            const auto& dp = std::get<DirichletParams>(posterior.draws[i]);
            for (int j = 0; j < posterior.n_components; ++j) out(i, j) = dp.alpha[j];
        } else {
            const auto& ln = std::get<LogisticNormalParams>(posterior.draws[i]);
            const Eigen::Index d = ln.mu.size();
            Eigen::Index pos = 0;
            for (Eigen::Index a = 0; a < d; ++a) out(i, pos++) = ln.mu(a);
            for (Eigen::Index a = 0; a < d; ++a) {
                for (Eigen::Index b = 0; b <= a; ++b) out(i, pos++) = ln.chol(a, b);
            }
        }
    }
    return out;
}

MetaParams unflatten_center(MetaFamily family, int n_components, const Eigen::VectorXd& v) {
    if (family == MetaFamily::Dirichlet) {
        std::vector<double> alpha(n_components);
        for (int j = 0; j < n_components; ++j) alpha[j] = v(j);
        return DirichletParams(std::move(alpha));
    }
    const int d = n_components - 1;
    Eigen::VectorXd mu(d);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(d, d);
    Eigen::Index pos = 0;
    for (int i = 0; i < d; ++i) mu(i) = v(pos++);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) chol(i, j) = v(pos++);
    }
    return LogisticNormalParams::from_cholesky(std::move(mu), std::move(chol));
}

struct KmeansOutput {
    Eigen::MatrixXd centers;
    std::vector<int> counts;
    double inertia = 0.0;
};

KmeansOutput kmeans_once(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();

    // k-means++ seeding
    Eigen::MatrixXd centers(k, d);
    centers.row(0) = points.row(rng.uniform_index(static_cast<std::size_t>(n)));
    Eigen::VectorXd dist2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = dist2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2(i);
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n)));
        }
        centers.row(c) = points.row(pick);
        dist2 = dist2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assignment(n, -1);
    std::vector<int> counts(k, 0);
    for (int iter = 0; iter < 200; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double dd = (points.row(i) - centers.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        centers.setZero();
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            centers.row(assignment[i]) += points.row(i);
            ++counts[assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) /= static_cast<double>(counts[c]);
            } else {
                // reseed an empty cluster at the point farthest from its center
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double dd = (points.row(i) - centers.row(assignment[i])).squaredNorm();
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                centers.row(c) = points.row(far);
                assignment[far] = c;
                counts[c] = 1;
            }
        }
    }

    KmeansOutput out;
    out.centers = centers;
    out.counts.assign(k, 0);
    out.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        double best_d = (points.row(i) - centers.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double dd = (points.row(i) - centers.row(c)).squaredNorm();
            if (dd < best_d) {
                best_d = dd;
                best = c;
            }
        }
        ++out.counts[best];
        out.inertia += best_d;
    }
    return out;
}

}  // namespace

double ChainDiagnostics::max_split_rhat() const {
    double m = 0.0;
    for (double r : split_rhat) m = std::max(m, r);
    return m;
}

double family_logpdf(const MetaParams& params, const InteriorPmpVector& p) {
    if (const auto* d = std::get_if<DirichletParams>(&params)) return dirichlet_logpdf(p, *d);
    return logistic_normal_logpdf(p, std::get<LogisticNormalParams>(params));
}

PmpVector family_sample(const MetaParams& params, Rng& rng) {
    if (const auto* d = std::get_if<DirichletParams>(&params)) return dirichlet_sample(*d, rng);
    const auto& ln = std::get<LogisticNormalParams>(params);
    Eigen::VectorXd xi(ln.mu.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    const Eigen::VectorXd z = ln.mu + ln.chol * xi;
    return alr_inv(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

double log_prior(const MetaParams& params, const MetaModelConfig& config) {
    const int J = std::holds_alternative<DirichletParams>(params)
                      ? static_cast<int>(std::get<DirichletParams>(params).dim())
                      : static_cast<int>(std::get<LogisticNormalParams>(params).dim());
    const MetaFamily family = std::holds_alternative<DirichletParams>(params)
                                  ? MetaFamily::Dirichlet
                                  : MetaFamily::LogisticNormal;
    return log_prior_unconstrained(family, J, to_unconstrained(params), config);
}

double log_posterior(const MetaParams& params, std::span<const PmpVector> group,
                     const MetaModelConfig& config) {
    if (group.empty()) throw std::invalid_argument("empty meta-model group");
    const std::vector<InteriorPmpVector> clamped = clamp_group(group, config.epsilon_clamp);
    const GroupStats stats = build_stats(clamped);
    const MetaFamily family = std::holds_alternative<DirichletParams>(params)
                                  ? MetaFamily::Dirichlet
                                  : MetaFamily::LogisticNormal;
    const Eigen::VectorXd u = to_unconstrained(params);
    const double prior = log_prior_unconstrained(family, stats.n_components, u, config);
    if (prior == kNegInf) return kNegInf;
    return log_lik_from_stats(family, stats, u) + prior;
}

MetaPosterior fit(std::span<const PmpVector> group, const MetaModelConfig& config,
                  std::uint64_t seed) {
    if (group.size() < 2) {
        throw std::invalid_argument("meta-model fit needs a group of at least 2 PMP vectors");
    }
    const std::vector<InteriorPmpVector> clamped = clamp_group(group, config.epsilon_clamp);
    const GroupStats stats = build_stats(clamped);
    const int J = stats.n_components;

    MetaPosterior posterior;
    posterior.family = config.family;
    posterior.n_components = J;
    posterior.config = config;
    posterior.seed = seed;
    posterior.degenerate = is_degenerate(clamped);

    const auto target = [&](const Eigen::VectorXd& u) {
        const double prior = log_prior_unconstrained(config.family, J, u, config);
        if (prior == kNegInf) return kNegInf;
        return log_lik_from_stats(config.family, stats, u) + prior;
    };

    const Eigen::VectorXd init = initial_point(config.family, stats);
    // jitter on the posterior-sd scale so chains start distinct but warm
    const double root_n = std::sqrt(stats.n);
    Eigen::VectorXd jitter = Eigen::VectorXd::Constant(init.size(), 2.0 / root_n);

    rwm::Options opt;
    opt.n_chains = config.n_chains;
    opt.n_warmup = config.n_warmup;
    opt.n_retain_total = config.n_draws;
    opt.target_accept = config.target_accept;
    opt.threads = config.threads;
    const rwm::Result result = rwm::sample(target, init, jitter, opt, seed);

    posterior.draws.reserve(config.n_draws);
    for (int i = 0; i < result.draws.rows(); ++i) {
        posterior.draws.push_back(
            from_unconstrained(config.family, J, result.draws.row(i).transpose()));
    }
    posterior.diagnostics.acceptance_rate = result.acceptance_rate;
    posterior.diagnostics.split_rhat = result.split_rhat;
    posterior.diagnostics.ess = result.ess;
    return posterior;
}

double posterior_predictive_logpdf(const MetaPosterior& posterior, const PmpVector& p) {
    if (static_cast<int>(p.dim()) != posterior.n_components) {
        throw std::invalid_argument("dimension mismatch");
    }
    if (posterior.draws.empty()) throw std::invalid_argument("posterior has no draws");
    const InteriorPmpVector interior = clamp_to_interior(p, posterior.config.epsilon_clamp);
    LogSumExpAcc acc;
    if (posterior.family == MetaFamily::LogisticNormal) {
        const std::vector<double> zs = alr(interior);
        const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zs.data(), zs.size());
        double log_prob_sum = 0.0;
        for (std::size_t j = 0; j < interior.dim(); ++j) log_prob_sum += std::log(interior[j]);
        for (const MetaParams& draw : posterior.draws) {
            acc.add(logistic_normal_logpdf_alr(z, log_prob_sum,
                                               std::get<LogisticNormalParams>(draw)));
        }
    } else {
        for (const MetaParams& draw : posterior.draws) {
            acc.add(dirichlet_logpdf(interior, std::get<DirichletParams>(draw)));
        }
    }
    return acc.value() - std::log(static_cast<double>(posterior.draws.size()));
}

Embedding mean_embedding(const MetaPosterior& posterior) {
    if (posterior.draws.empty()) throw std::invalid_argument("posterior has no draws");
    const Eigen::MatrixXd flat = flatten_draws(posterior);
    const Eigen::VectorXd mean = flat.colwise().mean();
    Embedding emb;
    emb.family = posterior.family;
    emb.centers.push_back(unflatten_center(posterior.family, posterior.n_components, mean));
    emb.weights.push_back(1.0);
    return emb;
}

Embedding cluster_embedding(const MetaPosterior& posterior, int n_clusters, std::uint64_t seed) {
    const int D = static_cast<int>(posterior.draws.size());
    if (n_clusters < 1 || n_clusters > D) {
        throw std::invalid_argument("cluster count must lie in 1..D");
    }
    Embedding emb;
    emb.family = posterior.family;
    if (n_clusters == D) {
        emb.centers = posterior.draws;
        emb.weights.assign(D, 1.0 / static_cast<double>(D));
        return emb;
    }
    const Eigen::MatrixXd flat = flatten_draws(posterior);
    Rng rng(derive_seed(seed, 0x6B6D6561ull));
    KmeansOutput best;
    best.inertia = std::numeric_limits<double>::infinity();
    const int restarts = n_clusters == 1 ? 1 : 50;
    for (int r = 0; r < restarts; ++r) {
        KmeansOutput run = kmeans_once(flat, n_clusters, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    for (int c = 0; c < n_clusters; ++c) {
        emb.centers.push_back(
            unflatten_center(posterior.family, posterior.n_components, best.centers.row(c)));
        emb.weights.push_back(static_cast<double>(best.counts[c]) / static_cast<double>(D));
    }
    return emb;
}

double embedding_logpdf(const Embedding& embedding, const InteriorPmpVector& p) {
    LogSumExpAcc acc;
    for (std::size_t c = 0; c < embedding.centers.size(); ++c) {
        if (embedding.weights[c] <= 0.0) continue;
        acc.add(std::log(embedding.weights[c]) + family_logpdf(embedding.centers[c], p));
    }
    return acc.value();
}

void DensityEvaluator::add_term(const MetaParams& params, double log_weight) {
    const Eigen::Index i = static_cast<Eigen::Index>(chol_inv_.size());
    if (family_ == MetaFamily::Dirichlet) {
        const auto& d = std::get<DirichletParams>(params);
        const Eigen::Index row = dir_count_;
        double alpha0 = 0.0;
        double norm = 0.0;
        for (int j = 0; j < n_components_; ++j) {
            alpha_minus_one_(row, j) = d.alpha[j] - 1.0;
            alpha0 += d.alpha[j];
            norm -= std::lgamma(d.alpha[j]);
        }
        dir_log_norm_(row) = norm + std::lgamma(alpha0);
        log_weight_(row) = log_weight;
        ++dir_count_;
    } else {
        const auto& ln = std::get<LogisticNormalParams>(params);
        const Eigen::Index d = ln.mu.size();
        chol_inv_.push_back(
            ln.chol.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d)));
        mu_.row(i) = ln.mu.transpose();
        double log_det = 0.0;
        for (Eigen::Index a = 0; a < d; ++a) log_det += std::log(ln.chol(a, a));
        ln_log_norm_(i) = -0.5 * static_cast<double>(d) * std::log(2.0 * kPi) - log_det;
        log_weight_(i) = log_weight;
    }
}

void DensityEvaluator::reserve_terms(Eigen::Index count) {
    log_weight_.resize(count);
    if (family_ == MetaFamily::Dirichlet) {
        alpha_minus_one_.resize(count, n_components_);
        dir_log_norm_.resize(count);
    } else {
        chol_inv_.reserve(count);
        mu_.resize(count, n_components_ - 1);
        ln_log_norm_.resize(count);
    }
}

DensityEvaluator DensityEvaluator::for_posterior(const MetaPosterior& posterior) {
    if (posterior.draws.empty()) throw std::invalid_argument("posterior has no draws");
    DensityEvaluator ev;
    ev.family_ = posterior.family;
    ev.n_components_ = posterior.n_components;
    ev.epsilon_clamp_ = posterior.config.epsilon_clamp;
    ev.reserve_terms(static_cast<Eigen::Index>(posterior.draws.size()));
    const double lw = -std::log(static_cast<double>(posterior.draws.size()));
    for (const MetaParams& draw : posterior.draws) ev.add_term(draw, lw);
    return ev;
}

DensityEvaluator DensityEvaluator::for_embedding(const Embedding& embedding,
                                                 double epsilon_clamp) {
    if (embedding.centers.empty()) throw std::invalid_argument("embedding has no centers");
    DensityEvaluator ev;
    ev.family_ = embedding.family;
    ev.n_components_ = std::holds_alternative<DirichletParams>(embedding.centers.front())
                           ? static_cast<int>(std::get<DirichletParams>(embedding.centers.front()).dim())
                           : static_cast<int>(std::get<LogisticNormalParams>(embedding.centers.front()).dim());
    ev.epsilon_clamp_ = epsilon_clamp;
    Eigen::Index active = 0;
    for (double w : embedding.weights) {
        if (w > 0.0) ++active;
    }
    ev.reserve_terms(active);
    for (std::size_t c = 0; c < embedding.centers.size(); ++c) {
        if (embedding.weights[c] <= 0.0) continue;
        ev.add_term(embedding.centers[c], std::log(embedding.weights[c]));
    }
    return ev;
}

double DensityEvaluator::logpdf_interior(const InteriorPmpVector& p) const {
    if (static_cast<int>(p.dim()) != n_components_) {
        throw std::invalid_argument("dimension mismatch");
    }
    LogSumExpAcc acc;
    if (family_ == MetaFamily::Dirichlet) {
        Eigen::VectorXd lp(n_components_);
        for (int j = 0; j < n_components_; ++j) lp(j) = std::log(p[j]);
        const Eigen::VectorXd scores = alpha_minus_one_ * lp + dir_log_norm_ + log_weight_;
        for (Eigen::Index i = 0; i < scores.size(); ++i) acc.add(scores(i));
        return acc.value();
    }
    const int d = n_components_ - 1;
    Eigen::VectorXd z(d);
    double log_prob_sum = 0.0;
    const double log_ref = std::log(p[static_cast<std::size_t>(d)]);
    for (int j = 0; j <= d; ++j) {
        const double lp = std::log(p[j]);
        log_prob_sum += lp;
        if (j < d) z(j) = lp - log_ref;
    }
    for (std::size_t i = 0; i < chol_inv_.size(); ++i) {
        const Eigen::VectorXd v = chol_inv_[i] * (z - mu_.row(i).transpose());
        acc.add(ln_log_norm_(i) - 0.5 * v.squaredNorm() - log_prob_sum + log_weight_(i));
    }
    return acc.value();
}

double DensityEvaluator::logpdf(const PmpVector& p) const {
    return logpdf_interior(clamp_to_interior(p, epsilon_clamp_));
}

}  // namespace metaunc::meta
