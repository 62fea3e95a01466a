#include "metaunc/rwm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "metaunc/numerics.hpp"
#include "metaunc/parallel.hpp"
#include "metaunc/rng.hpp"

namespace metaunc::rwm {

namespace {

struct ChainOutput {
    Eigen::MatrixXd draws;  // retained x dim
    double acceptance = 0.0;
};

ChainOutput run_chain(const std::function<double(const Eigen::VectorXd&)>& log_density,
                      const Eigen::VectorXd& init, const Eigen::VectorXd& init_jitter,
                      const Options& opt, int retain, std::uint64_t chain_seed) {
    const Eigen::Index dim = init.size();
    Rng rng(chain_seed);

    Eigen::VectorXd x = init;
    for (Eigen::Index i = 0; i < dim; ++i) x(i) += init_jitter(i) * rng.normal();
    double lp = log_density(x);
    if (!std::isfinite(lp)) {
        // fall back to the undisturbed init, which callers guarantee valid
        x = init;
        lp = log_density(x);
        if (!std::isfinite(lp)) throw std::runtime_error("invalid sampler initialization");
    }

    double log_step = std::log(opt.initial_step);
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
    Eigen::VectorXd run_mean = x;
    Eigen::VectorXd run_m2 = Eigen::VectorXd::Zero(dim);
    long run_n = 1;

    Eigen::VectorXd proposal(dim);
    const int post_iters = retain * opt.thin;
    ChainOutput out;
    out.draws.resize(retain, dim);
    long accepted_post = 0;
    int kept = 0;

    const int total = opt.n_warmup + post_iters;
    for (int it = 0; it < total; ++it) {
        const bool warming = it < opt.n_warmup;
        const double step = std::exp(log_step);
        for (Eigen::Index i = 0; i < dim; ++i) {
            proposal(i) = x(i) + step * scale(i) * rng.normal();
        }
        const double lp_prop = log_density(proposal);
        double accept_prob = 0.0;
        if (lp_prop > kNegInf) {
            accept_prob = std::min(1.0, std::exp(lp_prop - lp));
        }
        if (rng.uniform() < accept_prob) {
            x = proposal;
            lp = lp_prop;
            if (!warming) ++accepted_post;
        }

        if (warming) {
            // Robbins-Monro on the global log step toward the target rate.
            const double eta = 1.0 / std::pow(it + 1.0, 0.6);
            log_step += eta * (accept_prob - opt.target_accept);
            // Welford running spread drives the per-coordinate scales after
            // a short settling period.
            ++run_n;
            for (Eigen::Index i = 0; i < dim; ++i) {
                const double delta = x(i) - run_mean(i);
                run_mean(i) += delta / static_cast<double>(run_n);
                run_m2(i) += delta * (x(i) - run_mean(i));
            }
            if (it >= 200) {
                for (Eigen::Index i = 0; i < dim; ++i) {
                    const double sd = std::sqrt(run_m2(i) / static_cast<double>(run_n - 1));
                    scale(i) = std::max(sd, 1e-8);
                }
            }
        } else {
            const int post_it = it - opt.n_warmup;
            if ((post_it + 1) % opt.thin == 0 && kept < retain) {
                out.draws.row(kept++) = x.transpose();
            }
        }
    }
    out.acceptance =
        post_iters > 0 ? static_cast<double>(accepted_post) / static_cast<double>(post_iters) : 0.0;
    return out;
}

double sequence_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sequence_var(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        const std::size_t n = c.size() / 2;
        if (n < 2) throw std::invalid_argument("chains too short for split R-hat");
        halves.emplace_back(c.begin(), c.begin() + n);
        halves.emplace_back(c.end() - n, c.end());
    }
    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(halves.front().size());
    std::vector<double> means(halves.size());
    double w = 0.0;
    for (std::size_t i = 0; i < halves.size(); ++i) {
        means[i] = sequence_mean(halves[i]);
        w += sequence_var(halves[i], means[i]);
    }
    w /= m;
    const double grand = sequence_mean(means);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= n / (m - 1.0);
    const double var_plus = (n - 1.0) / n * w + b / n;
    if (var_plus < 1e-300 && w < 1e-300) return 1.0;  // constant coordinate
    if (w < 1e-300) return std::numeric_limits<double>::infinity();
    return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    if (n < 4) throw std::invalid_argument("chains too short for ESS");

    std::vector<double> means(m);
    std::vector<double> vars(m);
    for (std::size_t c = 0; c < m; ++c) {
        means[c] = sequence_mean(chains[c]);
        vars[c] = sequence_var(chains[c], means[c]);
    }
    const double w = sequence_mean(vars);
    const double grand = sequence_mean(means);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b = m > 1 ? b * static_cast<double>(n) / static_cast<double>(m - 1) : 0.0;
    const double var_plus =
        (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w + (m > 1 ? b / n : 0.0);
    if (var_plus < 1e-300) return static_cast<double>(m * n);

    // average per-chain autocovariances, then Geyer initial positive sequence
    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t t = lag; t < n; ++t) {
                s += (chains[c][t] - means[c]) * (chains[c][t - lag] - means[c]);
            }
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };

    double rho_sum = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t lag = 1; lag + 1 < n; lag += 2) {
        const double rho_a = 1.0 - (w - autocov(lag)) / var_plus;
        const double rho_b = 1.0 - (w - autocov(lag + 1)) / var_plus;
        double pair = rho_a + rho_b;
        if (pair < 0.0) break;
        pair = std::min(pair, prev_pair);  // enforce monotone decrease
        prev_pair = pair;
        rho_sum += pair;
    }
    const double tau = 1.0 + 2.0 * rho_sum;
    const double ess = static_cast<double>(m * n) / tau;
    return std::min(ess, static_cast<double>(m * n));
}

Result sample(const std::function<double(const Eigen::VectorXd&)>& log_density,
              const Eigen::VectorXd& init, const Eigen::VectorXd& init_jitter,
              const Options& options, std::uint64_t seed) {
    if (options.n_chains < 1) throw std::invalid_argument("need at least one chain");
    if (options.n_retain_total < options.n_chains) {
        throw std::invalid_argument("n_retain_total must be >= n_chains");
    }
    if (options.thin < 1 || options.n_warmup < 0) throw std::invalid_argument("bad sampler options");
    const Eigen::Index dim = init.size();

    std::vector<int> retained(options.n_chains, options.n_retain_total / options.n_chains);
    for (int c = 0; c < options.n_retain_total % options.n_chains; ++c) ++retained[c];

    std::vector<ChainOutput> outputs(options.n_chains);
    parallel_for(static_cast<std::size_t>(options.n_chains), options.threads, [&](std::size_t c) {
        outputs[c] = run_chain(log_density, init, init_jitter, options, retained[c],
                               derive_seed(seed, 0xC0FFEE00ull + c));
    });

    Result result;
    result.retained_per_chain = retained;
    result.draws.resize(options.n_retain_total, dim);
    int offset = 0;
    for (int c = 0; c < options.n_chains; ++c) {
        result.draws.middleRows(offset, retained[c]) = outputs[c].draws;
        offset += retained[c];
        result.acceptance_rate.push_back(outputs[c].acceptance);
    }

    const int common = *std::min_element(retained.begin(), retained.end());
    result.split_rhat.resize(dim);
    result.ess.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        std::vector<std::vector<double>> per_chain;
        for (int c = 0; c < options.n_chains; ++c) {
            std::vector<double> seq(common);
            for (int t = 0; t < common; ++t) seq[t] = outputs[c].draws(t, i);
            per_chain.push_back(std::move(seq));
        }
        result.split_rhat[i] = split_rhat(per_chain);
        result.ess[i] = effective_sample_size(per_chain);
    }
    return result;
}

}  // namespace metaunc::rwm
