#include <doctest.h>

#include <cmath>
#include <sstream>

#include "metaunc/quadrature.hpp"
#include "metaunc/rng.hpp"
#include "metaunc/simplex.hpp"

using namespace metaunc;

TEST_SUITE("simplex") {

TEST_CASE("pmp vector validates at construction") {
    CHECK_THROWS(PmpVector({1.0}));
    CHECK_THROWS(PmpVector({0.5, 0.6}));
    CHECK_THROWS(PmpVector({-0.1, 1.1}));
    const PmpVector p({0.25, 0.75});
    CHECK(p.dim() == 2);
    CHECK(p.argmax() == 1);
}

TEST_CASE("normalize_from_log matches analytic values") {
    const PmpVector uniform = normalize_from_log(std::vector<double>{0.0, 0.0, 0.0});
    for (std::size_t j = 0; j < 3; ++j) CHECK(uniform[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const PmpVector two_thirds = normalize_from_log(std::vector<double>{std::log(2.0), 0.0});
    CHECK(two_thirds[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(two_thirds[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("normalize_from_log: large negative magnitudes") {
    // oracle: renormalized long-double evaluation of e^0, e^-1, e^-2
    const long double e0 = 1.0L;
    const long double e1 = std::expl(-1.0L);
    const long double e2 = std::expl(-2.0L);
    const long double total = e0 + e1 + e2;
    const PmpVector p = normalize_from_log(std::vector<double>{-1000.0, -1001.0, -1002.0});
    CHECK(p[0] == doctest::Approx(static_cast<double>(e0 / total)).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(static_cast<double>(e1 / total)).epsilon(1e-14));
    CHECK(p[2] == doctest::Approx(static_cast<double>(e2 / total)).epsilon(1e-14));

    // still finite at the stated -1e6 magnitude
    const PmpVector q = normalize_from_log(std::vector<double>{-1e6, -1e6 - 1.0});
    CHECK(q[0] == doctest::Approx(static_cast<double>(e0 / (e0 + e1))).epsilon(1e-12));
}

TEST_CASE("normalize_from_log rejects degenerate input") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH(normalize_from_log(std::vector<double>{-inf, -inf}),
                      doctest::Contains("degenerate"));
    // one -inf entry is fine
    const PmpVector p = normalize_from_log(std::vector<double>{0.0, -inf});
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);
}

TEST_CASE("normalize_from_log is shift invariant") {
    Rng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> lw(4);
        for (double& x : lw) x = rng.normal(0.0, 10.0);
        std::vector<double> shifted = lw;
        const double c = rng.normal(0.0, 100.0);
        for (double& x : shifted) x += c;
        const PmpVector a = normalize_from_log(lw);
        const PmpVector b = normalize_from_log(shifted);
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
    }
}

TEST_CASE("clamp_to_interior") {
    const InteriorPmpVector a = clamp_to_interior(PmpVector({1.0, 0.0}), 1e-9);
    CHECK(a[0] < 1.0);
    CHECK(a[0] == doctest::Approx(1.0 / (1.0 + 1e-9)).epsilon(1e-15));
    CHECK(a[1] > 0.0);

    // identity on interior points
    const InteriorPmpVector b = clamp_to_interior(PmpVector({0.5, 0.5}), 1e-9);
    CHECK(b[0] == 0.5);
    CHECK(b[1] == 0.5);

    // hand renormalization: (1, .01, .01) / 1.02
    const InteriorPmpVector c = clamp_to_interior(PmpVector({1.0, 0.0, 0.0}), 0.01);
    CHECK(c[0] == doctest::Approx(1.0 / 1.02).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(0.01 / 1.02).epsilon(1e-12));
    CHECK(c[2] == doctest::Approx(0.01 / 1.02).epsilon(1e-12));

    CHECK_THROWS(clamp_to_interior(PmpVector({0.5, 0.5}), 0.6));
    CHECK_THROWS(clamp_to_interior(PmpVector({0.5, 0.5}), 0.0));
}

TEST_CASE("alr basics") {
    const InteriorPmpVector uniform = clamp_to_interior(
        PmpVector({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}), 1e-9);
    const std::vector<double> z0 = alr(uniform);
    CHECK(z0[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(z0[1] == doctest::Approx(0.0).epsilon(1e-14));

    const InteriorPmpVector p = clamp_to_interior(PmpVector({0.5, 0.25, 0.25}), 1e-9);
    const std::vector<double> z = alr(p);
    CHECK(z[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(z[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("alr inverse") {
    const PmpVector uniform = alr_inv(std::vector<double>{0.0, 0.0});
    for (std::size_t j = 0; j < 3; ++j) CHECK(uniform[j] == doctest::Approx(1.0 / 3.0));

    // long-double softmax oracle for (10, -10, 0)
    const long double a = std::expl(10.0L), b = std::expl(-10.0L), c = 1.0L;
    const long double total = a + b + c;
    const PmpVector p = alr_inv(std::vector<double>{10.0, -10.0});
    CHECK(p[0] == doctest::Approx(static_cast<double>(a / total)).epsilon(1e-13));
    CHECK(p[1] == doctest::Approx(static_cast<double>(b / total)).epsilon(1e-13));
    CHECK(p[2] == doctest::Approx(static_cast<double>(c / total)).epsilon(1e-13));
}

TEST_CASE("alr round trip on random interior points") {
    Rng rng(1234);
    const DirichletParams dir({1.0, 1.0, 1.0, 1.0});
    for (int rep = 0; rep < 1000; ++rep) {
        const PmpVector draw = dirichlet_sample(dir, rng);
        const InteriorPmpVector p = clamp_to_interior(draw, 1e-9);
        const PmpVector back = alr_inv(alr(p));
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(back[j] - p[j]) < 1e-12);
    }
}

TEST_CASE("dirichlet_logpdf analytic values") {
    const InteriorPmpVector p3 = clamp_to_interior(PmpVector({0.2, 0.5, 0.3}), 1e-9);
    CHECK(dirichlet_logpdf(p3, DirichletParams({1.0, 1.0, 1.0})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const InteriorPmpVector p2 = clamp_to_interior(PmpVector({0.5, 0.5}), 1e-9);
    CHECK(dirichlet_logpdf(p2, DirichletParams({2.0, 2.0})) ==
          doctest::Approx(std::log(1.5)).epsilon(1e-12));

    CHECK_THROWS(dirichlet_logpdf(p2, DirichletParams({1.0, 1.0, 1.0})));
    CHECK_THROWS(DirichletParams({1.0, 0.0}));
}

TEST_CASE("logistic_normal_logpdf analytic value") {
    Eigen::VectorXd mu(1);
    mu << 0.0;
    Eigen::MatrixXd sigma(1, 1);
    sigma << 1.0;
    const LogisticNormalParams params(mu, sigma);
    const InteriorPmpVector p = clamp_to_interior(PmpVector({0.5, 0.5}), 1e-9);
    const double expected = std::log(1.0 / std::sqrt(2.0 * kPi)) - std::log(0.25);
    CHECK(logistic_normal_logpdf(p, params) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("logistic_normal_logpdf symmetric under component swap") {
    Eigen::VectorXd mu(1);
    mu << 0.0;
    Eigen::MatrixXd sigma(1, 1);
    sigma << 0.49;
    const LogisticNormalParams params(mu, sigma);
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const double x = 0.05 + 0.9 * rng.uniform();
        const InteriorPmpVector p = clamp_to_interior(PmpVector({x, 1.0 - x}), 1e-9);
        const InteriorPmpVector q = clamp_to_interior(PmpVector({1.0 - x, x}), 1e-9);
        CHECK(logistic_normal_logpdf(p, params) ==
              doctest::Approx(logistic_normal_logpdf(q, params)).epsilon(1e-12));
    }
}

TEST_CASE("logistic normal params validation") {
    Eigen::VectorXd mu(2);
    mu << 0.0, 0.0;
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.5, 0.4999, 1.0;  // asymmetric beyond 1e-10
    CHECK_THROWS(LogisticNormalParams(mu, bad));
    Eigen::MatrixXd notpd(2, 2);
    notpd << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS(LogisticNormalParams(mu, notpd));
}

TEST_CASE("density normalization on the midpoint grid") {
    // grid quadrature oracle at R=400, tolerance 1e-3
    const DirichletParams dir3({3.0, 2.0, 4.0});
    const double i1 = integrate_density(3, 400, [&](const InteriorPmpVector& p) {
        return dirichlet_logpdf(p, dir3);
    });
    CHECK(std::abs(i1 - 1.0) < 1e-3);

    Eigen::VectorXd mu(2);
    mu << 0.3, -0.2;
    const LogisticNormalParams ln3(mu, Eigen::MatrixXd::Identity(2, 2));
    const double i2 = integrate_density(3, 400, [&](const InteriorPmpVector& p) {
        return logistic_normal_logpdf(p, ln3);
    });
    CHECK(std::abs(i2 - 1.0) < 1e-3);

    const DirichletParams dir2({2.0, 2.0});
    const double i3 = integrate_density(2, 400, [&](const InteriorPmpVector& p) {
        return dirichlet_logpdf(p, dir2);
    });
    CHECK(std::abs(i3 - 1.0) < 1e-3);

    Eigen::VectorXd mu1(1);
    mu1 << 0.4;
    Eigen::MatrixXd s1(1, 1);
    s1 << 0.8;
    const LogisticNormalParams ln2(mu1, s1);
    const double i4 = integrate_density(2, 400, [&](const InteriorPmpVector& p) {
        return logistic_normal_logpdf(p, ln2);
    });
    CHECK(std::abs(i4 - 1.0) < 1e-3);
}

TEST_CASE("dirichlet_mean") {
    const PmpVector m1 = dirichlet_mean(DirichletParams({2.0, 2.0, 2.0}));
    for (std::size_t j = 0; j < 3; ++j) CHECK(m1[j] == doctest::Approx(1.0 / 3.0));

    const PmpVector m2 = dirichlet_mean(DirichletParams({1.0, 3.0}));
    CHECK(m2[0] == doctest::Approx(0.25));
    CHECK(m2[1] == doctest::Approx(0.75));
}

TEST_CASE("dirichlet_mean matches Monte Carlo within 3 stderr") {
    const DirichletParams params({2.0, 5.0, 3.0});
    const PmpVector analytic = dirichlet_mean(params);
    Rng rng(99);
    const int n = 1000000;
    std::vector<double> sum(3, 0.0);
    std::vector<double> sum_sq(3, 0.0);
    for (int i = 0; i < n; ++i) {
        const PmpVector draw = dirichlet_sample(params, rng);
        for (std::size_t j = 0; j < 3; ++j) {
            sum[j] += draw[j];
            sum_sq[j] += draw[j] * draw[j];
        }
    }
    for (std::size_t j = 0; j < 3; ++j) {
        const double mc = sum[j] / n;
        const double var = sum_sq[j] / n - mc * mc;
        const double se = std::sqrt(var / n);
        CHECK(std::abs(mc - analytic[j]) < 3.0 * se);
    }
}

TEST_CASE("barycentric grid counts") {
    CHECK(barycentric_grid(1, 1e-9, 3).points.size() == 3);
    CHECK(barycentric_grid(2, 1e-9, 3).points.size() == 6);
    CHECK(barycentric_grid(400, 1e-9, 3).points.size() == 401u * 402u / 2u);
    CHECK(barycentric_grid(10, 1e-9, 2).points.size() == 11);
    CHECK_THROWS(barycentric_grid(0, 1e-9, 3));
}

TEST_CASE("grid csv serialization") {
    SimplexDensityGrid grid = barycentric_grid(1, 1e-9, 3);
    grid.log_density = {0.1, -0.25, 1.0 / 3.0};
    std::ostringstream out;
    grid.write_csv(out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "p1,p2,p3,log_density");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 3);
    // round-trip formatting: the exact double comes back
    CHECK(out.str().find(format_double(1.0 / 3.0)) != std::string::npos);

    SimplexDensityGrid no_density = barycentric_grid(1, 1e-9, 3);
    std::ostringstream sink;
    CHECK_THROWS(no_density.write_csv(sink));
}

}  // TEST_SUITE
