#include "metaunc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "metaunc/numerics.hpp"
#include "metaunc/rng.hpp"

namespace metaunc {

PmpVector::PmpVector(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2) throw std::invalid_argument("PmpVector needs at least 2 components");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("PmpVector entry outside [0, 1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexSumTol) {
        throw std::invalid_argument("PmpVector does not sum to 1 within 1e-12");
    }
}

PmpVector PmpVector::from_log_weights(std::span<const double> log_weights) {
    if (log_weights.size() < 2) {
        throw std::invalid_argument("need at least 2 log weights");
    }
    double m = kNegInf;
    for (double lw : log_weights) {
        if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
            throw std::invalid_argument("log weight must be finite or -inf");
        }
        m = std::max(m, lw);
    }
    if (m == kNegInf) throw std::invalid_argument("degenerate weights");
    std::vector<double> w(log_weights.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = std::exp(log_weights[j] - m);
        sum += w[j];
    }
    for (double& x : w) x /= sum;
    return PmpVector(std::move(w));
}

std::size_t PmpVector::argmax() const {
    return static_cast<std::size_t>(
        std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double PmpVector::max_coord() const { return *std::max_element(probs_.begin(), probs_.end()); }

double PmpVector::l1_distance(const PmpVector& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("dimension mismatch");
    double d = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) d += std::abs(probs_[j] - other.probs_[j]);
    return d;
}

PmpVector normalize_from_log(std::span<const double> log_weights) {
    return PmpVector::from_log_weights(log_weights);
}

InteriorPmpVector clamp_to_interior(const PmpVector& p, double epsilon) {
    const std::size_t J = p.dim();
    if (!(epsilon > 0.0 && epsilon < 1.0 / static_cast<double>(J))) {
        throw std::invalid_argument("clamp epsilon must lie in (0, 1/J)");
    }
    std::vector<double> q(J);
    double sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        q[j] = std::max(epsilon, p[j]);
        sum += q[j];
    }
    for (double& x : q) x /= sum;
    return InteriorPmpVector(std::move(q));
}

std::vector<double> alr(const InteriorPmpVector& p) {
    const std::size_t J = p.dim();
    std::vector<double> z(J - 1);
    const double log_ref = std::log(p[J - 1]);
    for (std::size_t j = 0; j + 1 < J; ++j) z[j] = std::log(p[j]) - log_ref;
    return z;
}

PmpVector alr_inv(std::span<const double> z) {
    std::vector<double> lw(z.size() + 1);
    for (std::size_t j = 0; j < z.size(); ++j) lw[j] = z[j];
    lw[z.size()] = 0.0;
    return PmpVector::from_log_weights(lw);
}

DirichletParams::DirichletParams(std::vector<double> a) : alpha(std::move(a)) {
    if (alpha.size() < 2) throw std::invalid_argument("Dirichlet needs at least 2 components");
    for (double x : alpha) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument("Dirichlet concentration must be positive");
        }
    }
}

LogisticNormalParams::LogisticNormalParams(Eigen::VectorXd mu_in, const Eigen::MatrixXd& sigma_in) {
    if (sigma_in.rows() != sigma_in.cols() || sigma_in.rows() != mu_in.size() || mu_in.size() < 1) {
        throw std::invalid_argument("logistic normal dimension mismatch");
    }
    if ((sigma_in - sigma_in.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw std::invalid_argument("covariance not symmetric within 1e-10");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_in);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("covariance not positive definite");
    }
    mu = std::move(mu_in);
    sigma = sigma_in;
    chol = llt.matrixL();
}

LogisticNormalParams LogisticNormalParams::from_cholesky(Eigen::VectorXd mu_in,
                                                         Eigen::MatrixXd chol_lower) {
    if (chol_lower.rows() != chol_lower.cols() || chol_lower.rows() != mu_in.size()) {
        throw std::invalid_argument("logistic normal dimension mismatch");
    }
    for (Eigen::Index i = 0; i < chol_lower.rows(); ++i) {
        if (!(chol_lower(i, i) > 0.0)) {
            throw std::invalid_argument("Cholesky diagonal must be positive");
        }
    }
    LogisticNormalParams out;
    out.mu = std::move(mu_in);
    out.chol = chol_lower.triangularView<Eigen::Lower>();
    out.sigma = out.chol * out.chol.transpose();
    return out;
}

double dirichlet_logpdf(const InteriorPmpVector& p, const DirichletParams& params) {
    if (p.dim() != params.dim()) throw std::invalid_argument("dimension mismatch");
    double alpha0 = 0.0;
    double lp = 0.0;
    for (std::size_t j = 0; j < p.dim(); ++j) {
        const double a = params.alpha[j];
        alpha0 += a;
        lp += (a - 1.0) * std::log(p[j]) - std::lgamma(a);
    }
    return lp + std::lgamma(alpha0);
}

double logistic_normal_logpdf_alr(const Eigen::VectorXd& z, double log_prob_sum,
                                  const LogisticNormalParams& params) {
    const Eigen::Index d = params.mu.size();
    if (z.size() != d) throw std::invalid_argument("dimension mismatch");
    const Eigen::VectorXd u =
        params.chol.triangularView<Eigen::Lower>().solve(z - params.mu);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) log_det += std::log(params.chol(i, i));
    const double mvn = -0.5 * static_cast<double>(d) * std::log(2.0 * kPi) - log_det -
                       0.5 * u.squaredNorm();
    return mvn - log_prob_sum;
}

double logistic_normal_logpdf(const InteriorPmpVector& p, const LogisticNormalParams& params) {
    if (p.dim() != params.dim()) throw std::invalid_argument("dimension mismatch");
    const std::vector<double> zs = alr(p);
    Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zs.data(), zs.size());
    double log_prob_sum = 0.0;
    for (std::size_t j = 0; j < p.dim(); ++j) log_prob_sum += std::log(p[j]);
    return logistic_normal_logpdf_alr(z, log_prob_sum, params);
}

PmpVector dirichlet_mean(const DirichletParams& params) {
    double alpha0 = 0.0;
    for (double a : params.alpha) alpha0 += a;
    std::vector<double> m(params.alpha.size());
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = params.alpha[j] / alpha0;
    return PmpVector(std::move(m));
}

PmpVector dirichlet_sample(const DirichletParams& params, Rng& rng) {
    std::vector<double> g(params.alpha.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = rng.gamma(params.alpha[j], 1.0);
        sum += g[j];
    }
    if (sum <= 0.0) {
        // all gammas underflowed; fall back to the mean direction
        return dirichlet_mean(params);
    }
    for (double& x : g) x /= sum;
    return PmpVector(std::move(g));
}

void SimplexDensityGrid::write_csv(std::ostream& out) const {
    if (points.empty() || points.front().dim() != 3) {
        throw std::invalid_argument("grid CSV output requires 3 components");
    }
    if (log_density.size() != points.size()) {
        throw std::invalid_argument("grid has no density values");
    }
    out << "p1,p2,p3,log_density\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const PmpVector& p = points[i];
        out << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2])
            << ',' << format_double(log_density[i]) << '\n';
    }
}

namespace {

void enumerate_lattice(int remaining, int slots, int resolution, std::vector<int>& partial,
                       double epsilon, std::vector<PmpVector>& out) {
    if (slots == 1) {
        partial.push_back(remaining);
        std::vector<double> coords(partial.size());
        for (std::size_t j = 0; j < partial.size(); ++j) {
            coords[j] = static_cast<double>(partial[j]) / static_cast<double>(resolution);
        }
        out.push_back(clamp_to_interior(PmpVector(std::move(coords)), epsilon).as_pmp());
        partial.pop_back();
        return;
    }
    for (int i = 0; i <= remaining; ++i) {
        partial.push_back(i);
        enumerate_lattice(remaining - i, slots - 1, resolution, partial, epsilon, out);
        partial.pop_back();
    }
}

}  // namespace

SimplexDensityGrid barycentric_grid(int resolution, double epsilon, int n_components) {
    if (resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
    if (n_components < 2) throw std::invalid_argument("grid needs at least 2 components");
    SimplexDensityGrid grid;
    grid.resolution = resolution;
    std::vector<int> partial;
    enumerate_lattice(resolution, n_components, resolution, partial, epsilon, grid.points);
    return grid;
}

}  // namespace metaunc
