/*
 * Copyright 2026 The gppta Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gppta/gp_prior.hpp"

using namespace gppta;

TEST(GpPrior, HyperparamValidation) {
    EXPECT_THROW(KernelHyperparams(0.0, 1.0), ParameterError);
    EXPECT_THROW(KernelHyperparams(1.0, -1.0), ParameterError);
    EXPECT_THROW(KernelHyperparams(INFINITY, 1.0), ParameterError);
    EXPECT_EQ(KernelHyperparams::defaults(), KernelHyperparams(20.0, 4.0));
}

TEST(GpPrior, KernelValues) {
    const KernelHyperparams hp(7.0, 1.5);
    EXPECT_EQ(kernel_eval(3.0, 3.0, hp), 49.0);
    EXPECT_DOUBLE_EQ(kernel_eval(3.0, 4.5, hp), 49.0 * std::exp(-0.5));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 25.0);
    for (int i = 0; i < 500; ++i) {
        const double a = u(rng), b = u(rng), t = u(rng);
        EXPECT_EQ(kernel_eval(a, b, hp), kernel_eval(b, a, hp));
        EXPECT_NEAR(kernel_eval(a + t, b + t, hp), kernel_eval(a, b, hp), 1e-12);
    }
}

TEST(GpPrior, MeanValues) {
    EXPECT_EQ(mean_eval(7.0, {0.0, 12.0}), 12.0);
    EXPECT_EQ(mean_eval(2.0, {5.0, 10.0}), 20.0);
    const LinearMeanParams m{1.7, -3.0};
    EXPECT_NEAR(mean_eval(2.0, m) + mean_eval(5.0, m), mean_eval(7.0, m) + m.intercept, 1e-12);
}

TEST(GpPrior, KernelMatrixSinglePoint) {
    const KernelHyperparams hp(20.0, 4.0);
    const double xs[] = {5.0};
    const auto fk = factorize_kernel(xs, hp);
    ASSERT_EQ(fk.matrix.rows(), 1);
    EXPECT_EQ(fk.matrix(0, 0), 400.0 + fk.jitter);
    EXPECT_EQ(fk.jitter, 1e-8 * 400.0);
    EXPECT_THROW(kernel_matrix(std::span<const double>{}, hp), ContractError);
}

TEST(GpPrior, DuplicatesStayFactorizable) {
    const KernelHyperparams hp(20.0, 4.0);
    const std::vector<double> xs{3.0, 3.0, 3.0, 8.0, 8.0};
    const auto fk = factorize_kernel(xs, hp);
    EXPECT_EQ(fk.llt.info(), Eigen::Success);
    EXPECT_GT(fk.jitter, 0.0);
    EXPECT_LE(fk.jitter, 1e-2 * hp.variance());
    EXPECT_EQ(fk.matrix, fk.matrix.transpose());
}

TEST(GpPrior, RandomSetsArePositiveDefinite) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(2.0, 22.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> xs(10);
        for (auto& x : xs) x = u(rng);
        const KernelHyperparams hp(5.0 + rep * 0.5, 0.5 + 0.1 * rep);
        const Eigen::MatrixXd k = kernel_matrix(xs, hp);
        EXPECT_EQ(k, k.transpose());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(GpPrior, LinearPriorExactCases) {
    const std::vector<AudiogramPoint> two{{500.0, 10.0}, {4000.0, 40.0}};
    const auto m = fit_linear_prior(two);
    EXPECT_NEAR(mean_eval(bark(500.0), m), 10.0, 1e-12);
    EXPECT_NEAR(mean_eval(bark(4000.0), m), 40.0, 1e-12);

    std::vector<AudiogramPoint> lin;
    for (double f : {250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0}) lin.push_back({f, 3.5 * bark(f) - 7.0});
    const auto ml = fit_linear_prior(AudiogramTable(lin));
    EXPECT_NEAR(ml.slope, 3.5, 1e-12);
    EXPECT_NEAR(ml.intercept, -7.0, 1e-11);

    const auto flat = fit_linear_prior(synthetic_flat_audiogram());
    EXPECT_NEAR(flat.slope, 0.0, 1e-14);
    EXPECT_NEAR(flat.intercept, 20.0, 1e-12);
}

TEST(GpPrior, LinearPriorMatchesNormalEquations) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> logf(std::log(125.0), std::log(12000.0)), t(-10.0, 90.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> fs(10);
        for (auto& f : fs) f = std::exp(logf(rng));
        std::sort(fs.begin(), fs.end());
        std::vector<AudiogramPoint> pts;
        for (double f : fs) pts.push_back({f, t(rng)});
        Eigen::MatrixXd a(10, 2);
        Eigen::VectorXd b(10);
        for (int i = 0; i < 10; ++i) {
            a(i, 0) = 6.0 * std::asinh(pts[i].frequency_hz / 600.0);
            a(i, 1) = 1.0;
            b(i) = pts[i].threshold_dbhl;
        }
        const Eigen::Vector2d ref = (a.transpose() * a).ldlt().solve(a.transpose() * b);
        const auto m = fit_linear_prior(pts);
        EXPECT_NEAR(m.slope, ref(0), 1e-9);
        EXPECT_NEAR(m.intercept, ref(1), 1e-9);

        std::shuffle(pts.begin(), pts.end(), rng);
        const auto m2 = fit_linear_prior(pts);
        EXPECT_NEAR(m2.slope, m.slope, 1e-12);
        EXPECT_NEAR(m2.intercept, m.intercept, 1e-11);
    }
}

TEST(GpPrior, LinearPriorNeedsTwoFrequencies) {
    const std::vector<AudiogramPoint> same{{1000.0, 10.0}, {1000.0, 20.0}};
    EXPECT_THROW(fit_linear_prior(same), ContractError);
    EXPECT_THROW(AudiogramTable({{1000.0, 10.0}}), ContractError);
    EXPECT_THROW(AudiogramTable({{1000.0, 10.0}, {500.0, 20.0}}), ContractError);
}
