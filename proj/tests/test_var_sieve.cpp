#include <gtest/gtest.h>

#include <cmath>

#include "arsieve/sim.hpp"
#include "arsieve/var_sieve.hpp"
#include "test_util.hpp"

using namespace arsieve;
using testutil::error_kind_of;

namespace {

/// Path of f_t = sum_l A_l f_{t-l} + e_t with standard normal innovations.
Matrix simulate_var(const std::vector<Matrix>& A, Eigen::Index T, std::uint64_t seed) {
    const Eigen::Index r = A.front().rows();
    const auto p = static_cast<Eigen::Index>(A.size());
    SeededGenerator g(seed);
    const Eigen::Index burn = 500;
    Matrix path = Matrix::Zero(r, T + burn + p);
    for (Eigen::Index t = p; t < path.cols(); ++t) {
        for (Eigen::Index i = 0; i < r; ++i) path(i, t) = draw_standard_normal(g);
        for (Eigen::Index l = 1; l <= p; ++l) path.col(t) += A[static_cast<std::size_t>(l - 1)] * path.col(t - l);
    }
    return path.rightCols(T);
}

}  // namespace

TEST(FactorAutocov, Examples) {
    EXPECT_TRUE(factor_autocov(Matrix::Zero(2, 10), 1).isZero(0.0));
    Matrix f(1, 4);
    f << 1, -1, 1, -1;
    EXPECT_DOUBLE_EQ(factor_autocov(f, 1)(0, 0), -1.0);
    const Matrix g = testutil::gaussian(4, 50, 1);
    const Matrix c0 = factor_autocov(g, 0);
    EXPECT_LT((c0 - c0.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(c0).eigenvalues().minCoeff(), -1e-10);
    EXPECT_EQ(error_kind_of([&] { (void)factor_autocov(g, 49); }), ErrorKind::invalid_lag);
}

TEST(FactorAutocov, Orientation) {
    // Entry (i, j) pairs f_i at t with f_j at t + k.
    Matrix f(2, 3);
    f << 1, 2, 3, 10, 20, 30;
    const Matrix c = factor_autocov(f, 1);
    EXPECT_DOUBLE_EQ(c(0, 1), (1 * 20 + 2 * 30) / 2.0);
    EXPECT_DOUBLE_EQ(c(1, 0), (10 * 2 + 20 * 3) / 2.0);
}

TEST(YuleWalker, ScalarClosedForm) {
    std::vector<Matrix> gamma{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.5)};
    const auto sol = solve_yule_walker(gamma, 1);
    EXPECT_NEAR(sol.coeffs[0](0, 0), 0.5, 1e-9);
}

TEST(YuleWalker, ScalarAr2ClosedForm) {
    // rho1 = a1 / (1 - a2), rho2 = a1 rho1 + a2 for a1 = 0.6, a2 = -0.3.
    const double a1 = 0.6, a2 = -0.3;
    const double rho1 = a1 / (1 - a2), rho2 = a1 * rho1 + a2;
    std::vector<Matrix> gamma{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, rho1), Matrix::Constant(1, 1, rho2)};
    const auto sol = solve_yule_walker(gamma, 2);
    EXPECT_NEAR(sol.coeffs[0](0, 0), a1, 1e-8);
    EXPECT_NEAR(sol.coeffs[1](0, 0), a2, 1e-8);
}

TEST(YuleWalker, PopulationVar1RoundTrip) {
    // Population autocovariances of a non-symmetric VAR(1) recover A exactly,
    // which pins the transpose convention.
    Matrix A(2, 2);
    A << 0.5, 0.3, -0.1, 0.4;
    const Matrix S0 = discrete_lyapunov(A, Matrix::Identity(2, 2));
    // factor_autocov(k) = E f_t f_{t+k}^T = (A^k S0)^T
    std::vector<Matrix> gamma{S0, (A * S0).transpose()};
    const auto sol = solve_yule_walker(gamma, 1);
    EXPECT_LT((sol.coeffs[0] - A).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(YuleWalker, BlockToeplitzSymmetric) {
    const Matrix f = simulate_var({Matrix::Identity(3, 3) * 0.5}, 300, 2);
    std::vector<Matrix> gamma;
    for (Eigen::Index k = 0; k < 4; ++k) gamma.push_back(factor_autocov(f, k));
    const Matrix Pi = block_toeplitz(gamma, 4);
    EXPECT_LT((Pi - Pi.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(YuleWalker, WhiteNoiseCoefficientsSmall) {
    const Eigen::Index T = 2000;
    const Matrix f = testutil::gaussian(2, T, 3);
    const auto m = yule_walker_fit(FactorSeries(f), 2);
    for (const auto& A : m.coeffs) EXPECT_LT(A.cwiseAbs().maxCoeff(), 3.0 / std::sqrt(static_cast<double>(T)));
}

TEST(YuleWalker, ScalarAr1Consistency) {
    const Matrix f = testutil::ar1(1, 5000, 0.5, 4);
    const auto m = yule_walker_fit(FactorSeries(f), 1);
    EXPECT_NEAR(m.coeffs[0](0, 0), 0.5, 0.05);
}

TEST(YuleWalker, Var1RecoveryAcrossSeeds) {
    Matrix A(2, 2);
    A << 0.5, 0.2, -0.3, 0.4;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix f = simulate_var({A}, 20000, 100 + seed);
        const auto m = yule_walker_fit(FactorSeries(f), 1);
        EXPECT_LT((m.coeffs[0] - A).norm(), 0.05) << "seed " << seed;
    }
}

TEST(YuleWalker, ModelInvariants) {
    const Matrix f = simulate_var({Matrix::Identity(2, 2) * 0.6}, 400, 5) + Matrix::Constant(2, 400, 4.0);
    const auto m = yule_walker_fit(FactorSeries(f), 3);
    EXPECT_EQ(m.p, 3);
    EXPECT_EQ(m.residuals.cols(), 400 - 3);
    EXPECT_EQ(m.residuals.rows(), 2);
    EXPECT_NEAR(m.factor_mean(0), f.row(0).mean(), 1e-12);
    EXPECT_LT((m.residual_cov - m.residual_cov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(m.residual_cov).eigenvalues().minCoeff(), -1e-10);
    EXPECT_NEAR(m.spectral_radius, companion_spectral_radius(m.coeffs), 0.0);
    EXPECT_GT(m.ridge, 0.0);
}

TEST(YuleWalker, ResidualsNearlyOrthogonalToLags) {
    Matrix A(2, 2);
    A << 0.5, 0.1, 0.2, 0.3;
    const Matrix f = simulate_var({A}, 1000, 6);
    const Eigen::Index p = 2, T = f.cols();
    const auto m = yule_walker_fit(FactorSeries(f), p);
    const Matrix fc = f.colwise() - m.factor_mean;
    for (Eigen::Index l = 1; l <= p; ++l) {
        const Matrix cross = m.residuals * fc.middleCols(p - l, T - p).transpose() / static_cast<double>(T - p);
        EXPECT_LT(cross.cwiseAbs().maxCoeff(), 5.0 / std::sqrt(static_cast<double>(T)));
    }
}

TEST(YuleWalker, Errors) {
    const Matrix f = testutil::gaussian(2, 20, 7);
    EXPECT_EQ(error_kind_of([&] { (void)yule_walker_fit(FactorSeries(f), 5); }), ErrorKind::insufficient_sample);
    EXPECT_NO_THROW((void)yule_walker_fit(FactorSeries(f), 4));
    EXPECT_EQ(error_kind_of([&] { (void)yule_walker_fit(FactorSeries(Matrix::Zero(2, 50)), 1); }),
              ErrorKind::singular_system);
}

TEST(YuleWalker, RankDeficientGetsRidge) {
    // Two identical rows make Pi singular; the diagonal loading still yields a solution.
    Matrix f(2, 300);
    f.row(0) = testutil::ar1(1, 300, 0.5, 8);
    f.row(1) = f.row(0);
    const auto m = yule_walker_fit(FactorSeries(f), 1);
    EXPECT_TRUE(m.coeffs[0].allFinite());
}

TEST(SelectOrder, FixedPassthrough) {
    OrderSelection s;
    s.criterion = OrderCriterion::fixed;
    s.fixed_p = 3;
    const auto out = select_order(FactorSeries(testutil::gaussian(2, 100, 9)), s);
    EXPECT_EQ(out.chosen_p, 3);
    EXPECT_TRUE(out.scores.empty());
}

TEST(SelectOrder, RateRule) {
    EXPECT_EQ(rate_rule_order(1000), 2);
    EXPECT_EQ(rate_rule_order(1000), static_cast<Eigen::Index>(std::floor(std::pow(1000.0 / std::log(1000.0), 1.0 / 6.0))));
    EXPECT_EQ(rate_rule_order(10), 1);
    OrderSelection s;
    s.criterion = OrderCriterion::rate_rule;
    EXPECT_EQ(select_order(FactorSeries(testutil::gaussian(1, 1000, 10)), s).chosen_p, 2);
}

TEST(SelectOrder, ScRecoversAr1) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Matrix f = testutil::ar1(2, 1000, 0.7, 300 + seed);
        OrderSelection s;
        s.criterion = OrderCriterion::sc;
        s.p_max = 6;
        hits += select_order(FactorSeries(f), s).chosen_p == 1;
    }
    EXPECT_GE(hits, 90);
}

TEST(SelectOrder, AicAndScAlwaysPositive) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Matrix f = testutil::gaussian(2, 60, 400 + seed);
        for (auto c : {OrderCriterion::aic, OrderCriterion::sc}) {
            OrderSelection s;
            s.criterion = c;
            s.p_max = 5;
            const auto out = select_order(FactorSeries(f), s);
            EXPECT_GE(out.chosen_p, 1);
            EXPECT_LE(out.chosen_p, 5);
            EXPECT_EQ(out.scores.size(), 5u);
        }
    }
}

TEST(SelectOrder, PmaxTooLarge) {
    OrderSelection s;
    s.p_max = 10;
    EXPECT_EQ(error_kind_of([&] { (void)select_order(FactorSeries(testutil::gaussian(1, 40, 11)), s); }),
              ErrorKind::invalid_input);
    EXPECT_EQ(default_p_max(40), 8);
    EXPECT_EQ(default_p_max(21), 5);
    EXPECT_EQ(default_p_max(4), 1);
}

TEST(Stability, Examples) {
    const Vector zero = Vector::Zero(1);
    EXPECT_EQ(stability_check(make_var_model({Matrix::Constant(1, 1, 0.5)}, zero)), Stability::stable);
    EXPECT_NEAR(make_var_model({Matrix::Constant(1, 1, 0.5)}, zero).spectral_radius, 0.5, 1e-15);
    EXPECT_EQ(stability_check(make_var_model({Matrix::Constant(1, 1, 1.0)}, zero)), Stability::marginal);
    EXPECT_EQ(stability_check(make_var_model({Matrix::Constant(1, 1, 1.2)}, zero)), Stability::explosive);
    const auto ar2 = make_var_model({Matrix::Constant(1, 1, 1.2), Matrix::Constant(1, 1, -0.5)}, zero);
    EXPECT_NEAR(ar2.spectral_radius, std::sqrt(0.5), 1e-12);
    EXPECT_EQ(stability_check(ar2), Stability::stable);
}

TEST(Stability, ThreeFactorCoefficientRadius) {
    const auto m = make_var_model({three_factor_coefficient()}, Vector::Zero(3));
    EXPECT_NEAR(m.spectral_radius, 0.7, 1e-12);
    Eigen::EigenSolver<Matrix> es(three_factor_coefficient());
    std::vector<double> ev;
    for (Eigen::Index i = 0; i < 3; ++i) ev.push_back(es.eigenvalues()(i).real());
    std::sort(ev.begin(), ev.end());
    EXPECT_NEAR(ev[0], 0.4, 1e-12);
    EXPECT_NEAR(ev[1], 0.4, 1e-12);
    EXPECT_NEAR(ev[2], 0.7, 1e-12);
}
