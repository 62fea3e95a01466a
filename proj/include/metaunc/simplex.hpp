#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace metaunc {

inline constexpr double kDefaultClampEpsilon = 1e-9;
inline constexpr double kSimplexSumTol = 1e-12;

/// Point on the probability simplex: J >= 2 non-negative weights summing
/// to one. Construction validates; instances are immutable.
class PmpVector {
public:
    explicit PmpVector(std::vector<double> probs);

    /// Normalized exponentiation of log weights (stable for magnitudes down
    /// to -1e6). Throws on degenerate all -inf input.
    static PmpVector from_log_weights(std::span<const double> log_weights);

    std::size_t dim() const noexcept { return probs_.size(); }
    double operator[](std::size_t j) const { return probs_[j]; }
    const std::vector<double>& probs() const noexcept { return probs_; }

    std::size_t argmax() const;
    double max_coord() const;
    double l1_distance(const PmpVector& other) const;

private:
    std::vector<double> probs_;
};

/// Simplex point bounded away from the boundary, the domain of the ALR
/// transform. Only clamp_to_interior produces one.
class InteriorPmpVector {
public:
    std::size_t dim() const noexcept { return probs_.size(); }
    double operator[](std::size_t j) const { return probs_[j]; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    PmpVector as_pmp() const { return PmpVector(probs_); }

private:
    friend InteriorPmpVector clamp_to_interior(const PmpVector&, double);
    explicit InteriorPmpVector(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<double> probs_;
};

PmpVector normalize_from_log(std::span<const double> log_weights);

/// max(epsilon, p_j) componentwise followed by one renormalization.
/// Identity on points already in the interior; after renormalization the
/// floor is epsilon/(1 + J*epsilon).
InteriorPmpVector clamp_to_interior(const PmpVector& p, double epsilon = kDefaultClampEpsilon);

/// Additive log-ratio transform with the last component as reference:
/// z_i = ln(p_i / p_J), i = 1..J-1.
std::vector<double> alr(const InteriorPmpVector& p);

/// Inverse ALR: softmax of (z, 0).
PmpVector alr_inv(std::span<const double> z);

struct DirichletParams {
    std::vector<double> alpha;
    explicit DirichletParams(std::vector<double> a);
    std::size_t dim() const noexcept { return alpha.size(); }
};

struct LogisticNormalParams {
    Eigen::VectorXd mu;      // length J-1
    Eigen::MatrixXd sigma;   // (J-1)x(J-1) SPD
    Eigen::MatrixXd chol;    // lower Cholesky factor of sigma

    /// Validates symmetry to 1e-10 and positive definiteness via Cholesky.
    LogisticNormalParams(Eigen::VectorXd mu_in, const Eigen::MatrixXd& sigma_in);
    /// Builds from a lower-triangular factor with positive diagonal.
    static LogisticNormalParams from_cholesky(Eigen::VectorXd mu_in, Eigen::MatrixXd chol_lower);
    std::size_t dim() const noexcept { return static_cast<std::size_t>(mu.size()) + 1; }

private:
    LogisticNormalParams() = default;
};

double dirichlet_logpdf(const InteriorPmpVector& p, const DirichletParams& params);
double logistic_normal_logpdf(const InteriorPmpVector& p, const LogisticNormalParams& params);

/// Fast path when the ALR coordinates of the point are already available;
/// `log_prob_sum` is sum_j ln p_j (the negated Jacobian).
double logistic_normal_logpdf_alr(const Eigen::VectorXd& z, double log_prob_sum,
                                  const LogisticNormalParams& params);

PmpVector dirichlet_mean(const DirichletParams& params);
PmpVector dirichlet_sample(const DirichletParams& params, class Rng& rng);

/// Regular barycentric lattice at a given subdivision count with log-density
/// values attached; the serializable output behind simplex density plots.
struct SimplexDensityGrid {
    int resolution = 0;
    std::vector<PmpVector> points;
    std::vector<double> log_density;

    /// CSV with header p1,p2,p3,log_density (3-component grids only),
    /// round-trip decimal formatting.
    void write_csv(std::ostream& out) const;
};

/// Lattice points (i1/R, ..., iJ/R), sum i = R, clamped to the interior.
/// log_density is left empty. For J = 3 the count is (R+1)(R+2)/2.
SimplexDensityGrid barycentric_grid(int resolution, double epsilon = kDefaultClampEpsilon,
                                    int n_components = 3);

}  // namespace metaunc
