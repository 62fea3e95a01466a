#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace metaunc::rwm {

struct Options {
    int n_chains = 4;
    int n_warmup = 1000;
    int n_retain_total = 2000;  // retained draws summed over chains
    int thin = 5;               // post-warmup iterations kept 1-in-thin
    double target_accept = 0.3;
    double initial_step = 0.5;
    int threads = 0;  // chain-level parallelism; draws do not depend on it
};

struct Result {
    Eigen::MatrixXd draws;             // n_retain_total x dim, chains concatenated
    std::vector<int> retained_per_chain;
    std::vector<double> acceptance_rate;  // per chain, post-warmup
    std::vector<double> split_rhat;       // per coordinate
    std::vector<double> ess;              // per coordinate, multi-chain
};

/// Adaptive random-walk Metropolis: diagonal Gaussian proposal whose global
/// scale is driven toward target_accept during warmup (Robbins-Monro) while
/// per-coordinate scales track the running posterior spread. Adaptation
/// freezes at the end of warmup. Chains jitter their start points with
/// chain-derived noise; everything is deterministic given the seed.
Result sample(const std::function<double(const Eigen::VectorXd&)>& log_density,
              const Eigen::VectorXd& init, const Eigen::VectorXd& init_jitter,
              const Options& options, std::uint64_t seed);

/// Split-R-hat over per-chain sequences of one coordinate.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Multi-chain effective sample size (Geyer initial positive sequence).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace metaunc::rwm
