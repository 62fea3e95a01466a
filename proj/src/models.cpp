#include "metaunc/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "metaunc/numerics.hpp"

namespace metaunc::models {

namespace {

const BinaryData& as_binary(const Dataset& data) {
    const auto* b = std::get_if<BinaryData>(&data.obs);
    if (!b) throw std::invalid_argument("dataset does not hold binary observations");
    return *b;
}

const RegressionData& as_regression(const Dataset& data) {
    const auto* r = std::get_if<RegressionData>(&data.obs);
    if (!r) throw std::invalid_argument("dataset does not hold regression observations");
    return *r;
}

const CountData& as_counts(const Dataset& data) {
    const auto* c = std::get_if<CountData>(&data.obs);
    if (!c) throw std::invalid_argument("dataset does not hold count observations");
    return *c;
}

double log_poisson_pmf(long y, double mean) {
    if (!(mean > 0.0)) return y == 0 ? 0.0 : kNegInf;
    const double yd = static_cast<double>(y);
    return yd * std::log(mean) - mean - std::lgamma(yd + 1.0);
}

double log_neg_binomial_pmf(long y, double mean, double phi) {
    if (!(mean > 0.0)) return y == 0 ? 0.0 : kNegInf;
    const double yd = static_cast<double>(y);
    return std::lgamma(yd + phi) - std::lgamma(phi) - std::lgamma(yd + 1.0) +
           phi * std::log(phi / (phi + mean)) + yd * std::log(mean / (phi + mean));
}

}  // namespace

// ---------------------------------------------------------------------------
// Beta-Bernoulli

double beta_bernoulli_log_marginal(double alpha, double beta, const BinaryData& y) {
    if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("Beta parameters must be positive");
    long s = 0;
    for (int v : y.y) {
        if (v != 0 && v != 1) throw std::invalid_argument("binary data must contain only 0 or 1");
        s += v;
    }
    const double n = static_cast<double>(y.y.size());
    const double sd = static_cast<double>(s);
    return log_beta(alpha + sd, beta + n - sd) - log_beta(alpha, beta);
}

BetaBernoulliModel::BetaBernoulliModel(std::string name, double alpha, double beta)
    : name_(std::move(name)), alpha_(alpha), beta_(beta) {
    if (!(alpha_ > 0.0 && beta_ > 0.0)) {
        throw std::invalid_argument("Beta parameters must be positive");
    }
}

Dataset BetaBernoulliModel::simulate(Rng& rng, int n_obs) const {
    if (n_obs < 1) throw std::invalid_argument("n_obs must be >= 1");
    const double theta = rng.beta(alpha_, beta_);
    BinaryData data;
    data.y.resize(n_obs);
    for (int i = 0; i < n_obs; ++i) data.y[i] = rng.bernoulli(theta);
    return Dataset{std::move(data), n_obs};
}

double BetaBernoulliModel::log_marginal(const Dataset& data) const {
    return beta_bernoulli_log_marginal(alpha_, beta_, as_binary(data));
}

// ---------------------------------------------------------------------------
// NIG regression

NigPosterior nig_posterior_update(double a0, double b0, const Eigen::VectorXd& mu0,
                                  const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& y) {
    const Eigen::Index p = mu0.size();
    if (lambda0.rows() != p || lambda0.cols() != p) {
        throw std::invalid_argument("prior precision dimension mismatch");
    }
    if (X.cols() != p || X.rows() != y.size()) {
        throw std::invalid_argument("design dimension mismatch");
    }
    const double n = static_cast<double>(X.rows());
    NigPosterior post;
    post.lambda_n = X.transpose() * X + lambda0;
    // Lambda_n is SPD whenever Lambda_0 is, so the solve below cannot fail;
    // this form of the mean update also covers rank-deficient X'X.
    Eigen::LLT<Eigen::MatrixXd> llt(post.lambda_n);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("posterior precision not positive definite");
    }
    post.mu_n = llt.solve(X.transpose() * y + lambda0 * mu0);
    post.a_n = a0 + 0.5 * n;
    post.b_n = b0 + 0.5 * (y.squaredNorm() + mu0.dot(lambda0 * mu0) -
                           post.mu_n.dot(post.lambda_n * post.mu_n));
    return post;
}

double nig_log_marginal(double a0, double b0, const Eigen::VectorXd& mu0,
                        const Eigen::MatrixXd& lambda0, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y) {
    const NigPosterior post = nig_posterior_update(a0, b0, mu0, lambda0, X, y);
    const double n = static_cast<double>(X.rows());
    const double log_det_l0 = Eigen::LLT<Eigen::MatrixXd>(lambda0)
                                  .matrixL()
                                  .toDenseMatrix()
                                  .diagonal()
                                  .array()
                                  .log()
                                  .sum() *
                              2.0;
    const double log_det_ln = Eigen::LLT<Eigen::MatrixXd>(post.lambda_n)
                                  .matrixL()
                                  .toDenseMatrix()
                                  .diagonal()
                                  .array()
                                  .log()
                                  .sum() *
                              2.0;
    return -0.5 * n * std::log(2.0 * kPi) + 0.5 * (log_det_l0 - log_det_ln) +
           a0 * std::log(b0) - post.a_n * std::log(post.b_n) + std::lgamma(post.a_n) -
           std::lgamma(a0);
}

NigRegressionModel::NigRegressionModel(std::string name, double a0, double b0,
                                       Eigen::VectorXd mu0, Eigen::MatrixXd lambda0,
                                       int pool_dim, std::vector<int> columns)
    : name_(std::move(name)),
      a0_(a0),
      b0_(b0),
      mu0_(std::move(mu0)),
      lambda0_(std::move(lambda0)),
      pool_dim_(pool_dim),
      columns_(std::move(columns)) {
    if (!(a0_ > 0.0 && b0_ > 0.0)) throw std::invalid_argument("a0, b0 must be positive");
    if (columns_.empty()) throw std::invalid_argument("model needs at least one design column");
    if (static_cast<Eigen::Index>(columns_.size()) != mu0_.size()) {
        throw std::invalid_argument("mu0 length must match the number of design columns");
    }
    for (int c : columns_) {
        if (c < 0 || c >= pool_dim_) throw std::invalid_argument("design column out of range");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lambda0_);
    if (lambda0_.rows() != mu0_.size() || llt.info() != Eigen::Success) {
        throw std::invalid_argument("lambda0 must be SPD and match mu0");
    }
    lambda0_chol_ = llt.matrixL();
}

Eigen::MatrixXd NigRegressionModel::design_for(const RegressionData& data) const {
    if (data.predictors.cols() != pool_dim_) {
        throw std::invalid_argument("predictor pool width mismatch");
    }
    Eigen::MatrixXd X(data.predictors.rows(), columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        X.col(j) = data.predictors.col(columns_[j]);
    }
    return X;
}

Dataset NigRegressionModel::simulate(Rng& rng, int n_obs) const {
    if (n_obs < 1) throw std::invalid_argument("n_obs must be >= 1");
    RegressionData data;
    data.predictors.resize(n_obs, pool_dim_);
    for (int i = 0; i < n_obs; ++i) {
        for (int j = 0; j < pool_dim_; ++j) data.predictors(i, j) = rng.normal();
    }
    // sigma^2 ~ InvGamma(a0, b0), beta | sigma^2 ~ N(mu0, sigma^2 Lambda0^-1)
    const double sigma2 = b0_ / rng.gamma(a0_, 1.0);
    const double sigma = std::sqrt(sigma2);
    Eigen::VectorXd z(mu0_.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
    const Eigen::VectorXd beta =
        mu0_ + sigma * lambda0_chol_.transpose().triangularView<Eigen::Upper>().solve(z);
    const Eigen::MatrixXd X = design_for(data);
    data.y.resize(n_obs);
    for (int i = 0; i < n_obs; ++i) data.y(i) = X.row(i).dot(beta) + sigma * rng.normal();
    return Dataset{std::move(data), n_obs};
}

double NigRegressionModel::log_marginal(const Dataset& data) const {
    const RegressionData& reg = as_regression(data);
    return nig_log_marginal(a0_, b0_, mu0_, lambda0_, design_for(reg), reg.y);
}

// ---------------------------------------------------------------------------
// Epidemic models

namespace {

struct CompartmentState {
    double s = 0.0, e = 0.0, i = 0.0, r = 0.0;
};

CompartmentState derivative(const CompartmentState& x, bool seir, double beta, double gamma,
                            double eta, double population) {
    CompartmentState d;
    const double infection = beta * x.s * x.i / population;
    if (seir) {
        d.s = -infection;
        d.e = infection - eta * x.e;
        d.i = eta * x.e - gamma * x.i;
        d.r = gamma * x.i;
    } else {
        d.s = -infection;
        d.i = infection - gamma * x.i;
        d.r = gamma * x.i;
    }
    return d;
}

CompartmentState axpy(const CompartmentState& x, double h, const CompartmentState& d) {
    return {x.s + h * d.s, x.e + h * d.e, x.i + h * d.i, x.r + h * d.r};
}

}  // namespace

std::vector<double> epidemic_integrate(const EpidemicSettings& settings, double beta,
                                       double gamma, double eta, int horizon) {
    if (!(beta >= 0.0 && gamma >= 0.0 && eta >= 0.0)) {
        throw std::invalid_argument("epidemic rates must be non-negative");
    }
    if (horizon < 2) throw std::invalid_argument("horizon must be >= 2 days");
    if (settings.initial_infected < 1 || settings.population < settings.initial_infected) {
        throw std::invalid_argument("population must be >= initial_infected >= 1");
    }
    const bool seir = settings.compartments == Compartments::Seir;
    // Nominal step 0.05/day, refined so the stiffest rate stays well inside
    // the RK4 stability region.
    const double max_rate = std::max({beta, gamma, seir ? eta : 0.0, 1.0});
    double target = std::min(0.05, 0.5 / max_rate);
    if (target < 1e-9) throw std::runtime_error("epidemic step-size underflow: rates too large");
    const int steps_per_day = static_cast<int>(std::ceil(1.0 / target));
    const double h = 1.0 / static_cast<double>(steps_per_day);

    CompartmentState x;
    x.i = static_cast<double>(settings.initial_infected);
    x.s = static_cast<double>(settings.population) - x.i;

    std::vector<double> infected(horizon);
    for (int day = 1; day <= horizon; ++day) {
        for (int s = 0; s < steps_per_day; ++s) {
            const CompartmentState k1 = derivative(x, seir, beta, gamma, eta,
                                                   static_cast<double>(settings.population));
            const CompartmentState k2 = derivative(axpy(x, 0.5 * h, k1), seir, beta, gamma, eta,
                                                   static_cast<double>(settings.population));
            const CompartmentState k3 = derivative(axpy(x, 0.5 * h, k2), seir, beta, gamma, eta,
                                                   static_cast<double>(settings.population));
            const CompartmentState k4 = derivative(axpy(x, h, k3), seir, beta, gamma, eta,
                                                   static_cast<double>(settings.population));
            x.s += h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
            x.e += h / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
            x.i += h / 6.0 * (k1.i + 2.0 * k2.i + 2.0 * k3.i + k4.i);
            x.r += h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
            x.s = std::max(x.s, 0.0);
            x.e = std::max(x.e, 0.0);
            x.i = std::max(x.i, 0.0);
            x.r = std::max(x.r, 0.0);
        }
        infected[day - 1] = x.i;
    }
    return infected;
}

std::vector<double> epidemic_integrate(const EpidemicSettings& settings, double beta,
                                       double gamma, double eta) {
    return epidemic_integrate(settings, beta, gamma, eta, settings.horizon);
}

namespace {

struct EpidemicDraw {
    double beta = 0.0, gamma = 0.0, eta = 0.0, phi = 0.0;
};

EpidemicDraw draw_epidemic_params(const EpidemicSettings& settings, Rng& rng) {
    EpidemicDraw d;
    d.beta = rng.folded_normal(settings.beta_prior.mean, settings.beta_prior.sd);
    d.gamma = rng.folded_normal(settings.gamma_prior.mean, settings.gamma_prior.sd);
    if (settings.compartments == Compartments::Seir) {
        if (!settings.eta_prior) throw std::invalid_argument("SEIR model needs an eta prior");
        d.eta = rng.folded_normal(settings.eta_prior->mean, settings.eta_prior->sd);
    }
    if (settings.likelihood == CountLikelihood::NegativeBinomial) {
        if (!settings.phi_prior) {
            throw std::invalid_argument("negative binomial likelihood needs a phi prior");
        }
        d.phi = rng.folded_normal(settings.phi_prior->mean, settings.phi_prior->sd);
    }
    return d;
}

double count_log_likelihood(const EpidemicSettings& settings, const CountData& y,
                            const std::vector<double>& infected, double phi) {
    double lp = 0.0;
    for (std::size_t t = 0; t < y.y.size(); ++t) {
        if (settings.likelihood == CountLikelihood::Poisson) {
            lp += log_poisson_pmf(y.y[t], infected[t]);
        } else {
            lp += log_neg_binomial_pmf(y.y[t], infected[t], phi);
        }
        if (lp == kNegInf) break;
    }
    return lp;
}

}  // namespace

LogMarginalEstimate epidemic_log_marginal(const EpidemicSettings& settings, const CountData& y,
                                          int n_is, std::uint64_t seed) {
    if (n_is < 1000) throw std::invalid_argument("n_is must be >= 1000");
    const int horizon = static_cast<int>(y.y.size());
    if (horizon < 2) throw std::invalid_argument("need at least 2 observed days");
    Rng rng(seed);
    LogSumExpAcc acc;
    for (int s = 0; s < n_is; ++s) {
        const EpidemicDraw d = draw_epidemic_params(settings, rng);
        const std::vector<double> infected =
            epidemic_integrate(settings, d.beta, d.gamma, d.eta, horizon);
        acc.add(count_log_likelihood(settings, y, infected, d.phi));
    }
    LogMarginalEstimate est;
    if (acc.value() == kNegInf) {
        est.log_value = kNegInf;
        est.all_weights_neg_inf = true;
        return est;
    }
    est.log_value = acc.value() - std::log(static_cast<double>(n_is));
    return est;
}

EpidemicModel::EpidemicModel(std::string name, EpidemicSettings settings)
    : name_(std::move(name)), settings_(std::move(settings)) {
    if (!(settings_.beta_prior.sd > 0.0 && settings_.gamma_prior.sd > 0.0)) {
        throw std::invalid_argument("prior scales must be positive");
    }
    if (settings_.eta_prior && !(settings_.eta_prior->sd > 0.0)) {
        throw std::invalid_argument("prior scales must be positive");
    }
    if (settings_.phi_prior && !(settings_.phi_prior->sd > 0.0)) {
        throw std::invalid_argument("prior scales must be positive");
    }
    if (settings_.horizon < 2) throw std::invalid_argument("horizon must be >= 2");
    if (settings_.compartments == Compartments::Seir && !settings_.eta_prior) {
        throw std::invalid_argument("SEIR model needs an eta prior");
    }
    if (settings_.likelihood == CountLikelihood::NegativeBinomial && !settings_.phi_prior) {
        throw std::invalid_argument("negative binomial likelihood needs a phi prior");
    }
}

Dataset EpidemicModel::simulate(Rng& rng, int n_obs) const {
    if (n_obs < 2) throw std::invalid_argument("epidemic simulation needs >= 2 days");
    const EpidemicDraw d = draw_epidemic_params(settings_, rng);
    const std::vector<double> infected =
        epidemic_integrate(settings_, d.beta, d.gamma, d.eta, n_obs);
    CountData data;
    data.y.resize(n_obs);
    for (int t = 0; t < n_obs; ++t) {
        const double mean = std::max(infected[t], 1e-12);
        data.y[t] = settings_.likelihood == CountLikelihood::Poisson
                        ? rng.poisson(mean)
                        : rng.neg_binomial(mean, d.phi);
    }
    return Dataset{std::move(data), n_obs};
}

const EpidemicModel::TrajectoryTable& EpidemicModel::table_for(int horizon) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (const auto& [h, table] : cache_) {
        if (h == horizon) return *table;
    }
    auto table = std::make_shared<TrajectoryTable>();
    table->infected.reserve(settings_.n_is);
    table->phi.reserve(settings_.n_is);
    Rng rng(settings_.estimator_seed);
    for (int s = 0; s < settings_.n_is; ++s) {
        const EpidemicDraw d = draw_epidemic_params(settings_, rng);
        table->infected.push_back(epidemic_integrate(settings_, d.beta, d.gamma, d.eta, horizon));
        table->phi.push_back(d.phi);
    }
    cache_.emplace_back(horizon, table);
    return *cache_.back().second;
}

double EpidemicModel::log_marginal(const Dataset& data) const {
    const CountData& y = as_counts(data);
    const int horizon = static_cast<int>(y.y.size());
    if (horizon < 2) throw std::invalid_argument("need at least 2 observed days");
    const TrajectoryTable& table = table_for(horizon);
    LogSumExpAcc acc;
    for (int s = 0; s < settings_.n_is; ++s) {
        acc.add(count_log_likelihood(settings_, y, table.infected[s], table.phi[s]));
    }
    if (acc.value() == kNegInf) return kNegInf;
    return acc.value() - std::log(static_cast<double>(settings_.n_is));
}

// ---------------------------------------------------------------------------
// External PMPs

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ExternalPmpSource load_external_pmps(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open external PMP file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("external PMP file is empty: " + path);
    const std::vector<std::string> header = split_csv_line(strip(line));
    int n_models = 0;
    bool has_labels = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = strip(header[c]);
        if (name == "pi_" + std::to_string(c + 1)) {
            ++n_models;
        } else if (name == "true_model" && c + 1 == header.size()) {
            has_labels = true;
        } else {
            throw std::runtime_error("unexpected external PMP column: " + name);
        }
    }
    if (n_models < 2) throw std::runtime_error("external PMP file needs at least pi_1,pi_2");

    ExternalPmpSource source;
    source.n_models = n_models;
    source.has_labels = has_labels;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        const std::string trimmed = strip(line);
        if (trimmed.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(trimmed);
        const std::size_t expected = static_cast<std::size_t>(n_models) + (has_labels ? 1 : 0);
        if (fields.size() != expected) {
            throw std::runtime_error("row " + std::to_string(row) + ": expected " +
                                     std::to_string(expected) + " fields");
        }
        std::vector<double> probs(n_models);
        double sum = 0.0;
        for (int j = 0; j < n_models; ++j) {
            try {
                probs[j] = std::stod(fields[j]);
            } catch (const std::exception&) {
                throw std::runtime_error("row " + std::to_string(row) + ": malformed value '" +
                                         fields[j] + "'");
            }
            if (!(probs[j] >= 0.0) || !std::isfinite(probs[j])) {
                throw std::runtime_error("row " + std::to_string(row) +
                                         ": PMP entries must be finite and non-negative");
            }
            sum += probs[j];
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::runtime_error("row " + std::to_string(row) +
                                     ": PMPs sum to " + format_double(sum) +
                                     ", outside the 1e-6 tolerance");
        }
        for (double& p : probs) p /= sum;
        ExternalPmpRecord record{PmpVector(std::move(probs)), 0};
        if (has_labels) {
            int label = 0;
            try {
                label = std::stoi(fields[n_models]);
            } catch (const std::exception&) {
                throw std::runtime_error("row " + std::to_string(row) + ": malformed label");
            }
            if (label < 1 || label > n_models) {
                throw std::runtime_error("row " + std::to_string(row) + ": label out of 1..J");
            }
            record.true_model = label;
        }
        source.records.push_back(std::move(record));
    }
    return source;
}

CountData load_daily_counts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open counts file: " + path);
    std::string line;
    if (!std::getline(in, line) || strip(line) != "day,in_bed") {
        throw std::runtime_error("counts file must start with header day,in_bed");
    }
    CountData data;
    int expected_day = 1;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        const std::string trimmed = strip(line);
        if (trimmed.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(trimmed);
        if (fields.size() != 2) {
            throw std::runtime_error("row " + std::to_string(row) + ": expected day,in_bed");
        }
        const int day = std::stoi(fields[0]);
        if (day != expected_day) {
            throw std::runtime_error("row " + std::to_string(row) + ": days must be 1,2,...");
        }
        data.y.push_back(std::stol(fields[1]));
        ++expected_day;
    }
    if (data.y.size() < 2) throw std::runtime_error("counts file needs at least 2 days");
    return data;
}

}  // namespace metaunc::models
