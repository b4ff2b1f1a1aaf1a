#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace iqt;

TEST(Features, FiltersAreZeroDc) {
    for (const auto& f : feature_filters()) EXPECT_EQ(f.taps[0] + f.taps[1] + f.taps[2], 0.0);
}

TEST(Features, ConstantRegionGivesZero) {
    const Volume3D v({9, 9, 9}, 0.7f);
    const Eigen::VectorXd f = extract_lq_features(v, {2, 2, 2}, 5);
    ASSERT_EQ(f.size(), 6 * 125);
    EXPECT_EQ(f.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Features, RampAlongIOnlyHitsIGradient) {
    Volume3D v({9, 9, 9});
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j)
            for (std::size_t k = 0; k < 9; ++k) v(i, j, k) = 0.25f * static_cast<float>(i);
    const Eigen::VectorXd f = extract_lq_features(v, {2, 2, 2}, 5);
    for (Eigen::Index n = 0; n < 125; ++n) EXPECT_NEAR(f(n), 0.5, 1e-12);
    EXPECT_EQ(f.segment(125, 5 * 125).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Features, BlocksMatchDirectConvolution) {
    const Volume3D v = test::random_volume({10, 11, 12}, 31, -1.0f, 1.0f);
    const Index3 o{3, 4, 5};
    const std::size_t m = 4;
    const Eigen::VectorXd f = extract_lq_features(v, o, m);
    const double taps[2][3] = {{-1.0, 0.0, 1.0}, {1.0, -2.0, 1.0}};
    std::size_t n = 0;
    for (int order = 0; order < 2; ++order)
        for (int axis = 0; axis < 3; ++axis)
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    for (std::size_t k = 0; k < m; ++k, ++n) {
                        double expect = 0.0;
                        for (int t = -1; t <= 1; ++t) {
                            std::ptrdiff_t p[3] = {static_cast<std::ptrdiff_t>(o[0] + i),
                                                   static_cast<std::ptrdiff_t>(o[1] + j),
                                                   static_cast<std::ptrdiff_t>(o[2] + k)};
                            p[axis] += t;
                            expect += taps[order][t + 1] * v(static_cast<std::size_t>(p[0]), static_cast<std::size_t>(p[1]),
                                                             static_cast<std::size_t>(p[2]));
                        }
                        EXPECT_NEAR(f(static_cast<Eigen::Index>(n)), expect, 1e-12);
                    }
}

TEST(Features, GatheredVolumesMatchDirect) {
    const Volume3D v = test::random_volume({8, 9, 10}, 32);
    const FeatureVolumes fv(v);
    for (const Index3& o : {Index3{0, 0, 0}, Index3{3, 4, 5}, Index3{3, 4, 5}, Index3{3, 4, 5}}) {
        EXPECT_EQ(fv.gather(o, 5), extract_lq_features(v, o, 5));
    }
    // Boundary patches replicate edge voxels.
    EXPECT_EQ(fv.gather({3, 4, 5}, 5), extract_lq_features(v, {3, 4, 5}, 5));
}

TEST(Features, OutOfBoundsThrows) {
    const Volume3D v({6, 6, 6});
    EXPECT_THROW(extract_lq_features(v, {2, 0, 0}, 5), GeometryError);
    EXPECT_THROW(FeatureVolumes(v).gather({0, 0, 2}, 5), GeometryError);
}

TEST(Residual, IdentityAndLinearity) {
    const std::vector<float> a{1.0f, 2.0f, 3.0f}, e{0.5f, -0.25f, 0.0f};
    EXPECT_EQ(extract_hq_residual(a, a), Eigen::VectorXd::Zero(3));
    std::vector<float> b(3);
    for (int n = 0; n < 3; ++n) b[n] = a[n] + e[n];
    const Eigen::VectorXd r = extract_hq_residual(b, a);
    for (int n = 0; n < 3; ++n) EXPECT_EQ(r(n), e[n]);
    EXPECT_THROW(extract_hq_residual(a, std::vector<float>(2)), GeometryError);
}

TEST(Residual, PhantomResidualMeanNearZero) {
    PhantomSpec spec;
    spec.seed = 4;
    const Phantom ph = make_phantom(spec);
    DegradationParams dp;
    dp.blur_sigma = DegradationParams::default_blur(dp.scale);
    const Volume3D up = upsample_cubic(degrade(ph.volume, dp), dp.scale);
    PatchSpec ps;
    ps.size_m = 5;
    ps.overlap_p = 2;
    double sum = 0.0;
    std::size_t count = 0;
    std::vector<float> hp(125), lp(125);
    for (const auto& o : patch_origins(ph.volume.dims(), ps)) {
        gather_patch(ph.volume, o, 5, hp);
        gather_patch(up, o, 5, lp);
        sum += extract_hq_residual(hp, lp).sum();
        count += 125;
    }
    ASSERT_GT(count, 100000u);
    const double range = ph.volume.max_value() - ph.volume.min_value();
    EXPECT_LT(std::abs(sum / static_cast<double>(count)), 0.05 * range);
}

TEST(Pca, PlanarDataKeepsTwoComponents) {
    Rng rng(40);
    const Eigen::MatrixXd uv = test::random_matrix(7, 2, rng);
    const Eigen::MatrixXd coef = test::random_matrix(2, 50, rng);
    const Eigen::VectorXd offset = test::random_matrix(7, 1, rng);
    const Eigen::MatrixXd X = (uv * coef).colwise() + offset;
    const PcaProjection p = fit_pca(X, 0.9);
    EXPECT_EQ(p.reduced_dim(), 2);
    EXPECT_NEAR(p.explained_variance_ratio, 1.0, 1e-12);
    const PcaProjection q = fit_pca(uv * coef, 0.999, false);
    EXPECT_EQ(q.reduced_dim(), 2);
    EXPECT_EQ(q.mean, Eigen::VectorXd::Zero(7));
}

TEST(Pca, IsotropicDataKeepsCeilFraction) {
    for (Eigen::Index d : {5, 7, 10, 20, 33}) {
        // +-e_i samples: covariance exactly proportional to the identity.
        Eigen::MatrixXd X(d, 2 * d);
        X << Eigen::MatrixXd::Identity(d, d), -Eigen::MatrixXd::Identity(d, d);
        const PcaProjection p = fit_pca(X, 0.9);
        EXPECT_EQ(p.reduced_dim(), static_cast<Eigen::Index>(std::ceil(0.9 * static_cast<double>(d)))) << d;
        EXPECT_GE(p.explained_variance_ratio, 0.9 - 1e-12);
    }
}

TEST(Pca, OrthonormalRowsAndReconstructionError) {
    Rng rng(41);
    Eigen::MatrixXd X = test::random_matrix(30, 200, rng);
    // Anisotropic spectrum.
    for (Eigen::Index r = 0; r < 30; ++r) X.row(r) *= std::pow(0.85, static_cast<double>(r));
    for (bool center : {true, false}) {
        const PcaProjection p = fit_pca(X, 0.9, center);
        const Eigen::MatrixXd I = p.basis * p.basis.transpose();
        EXPECT_LE((I - Eigen::MatrixXd::Identity(p.reduced_dim(), p.reduced_dim())).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GE(p.explained_variance_ratio, 0.9);
        const Eigen::MatrixXd C = X.colwise() - p.mean;
        const Eigen::MatrixXd rec = p.basis.transpose() * (p.basis * C);
        EXPECT_LE((C - rec).squaredNorm(), 0.1 * C.squaredNorm() + 1e-9);
        EXPECT_NEAR(explained_variance(p, X), p.explained_variance_ratio, 1e-9);
        // One fewer component would fall short.
        const Eigen::MatrixXd shorter = p.basis.topRows(p.reduced_dim() - 1);
        EXPECT_LT((shorter * C).squaredNorm() / C.squaredNorm(), 0.9);
    }
}

TEST(Pca, GramRouteMatchesCovarianceRoute) {
    Rng rng(42);
    Eigen::MatrixXd X = test::random_matrix(40, 12, rng);
    for (Eigen::Index r = 0; r < 40; ++r) X.row(r) *= 1.0 + 0.05 * static_cast<double>(r);
    const PcaProjection p = fit_pca(X, 0.95);
    EXPECT_LE((p.basis * p.basis.transpose() - Eigen::MatrixXd::Identity(p.reduced_dim(), p.reduced_dim()))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-10);
    EXPECT_NEAR(explained_variance(p, X), p.explained_variance_ratio, 1e-9);
}

TEST(Pca, DegenerateInputSingleComponent) {
    Eigen::MatrixXd X(4, 3);
    X.colwise() = Eigen::Vector4d(1.0, 2.0, 3.0, 4.0);
    const PcaProjection p = fit_pca(X, 0.9);
    EXPECT_EQ(p.reduced_dim(), 1);
    EXPECT_EQ(p.explained_variance_ratio, 1.0);
}

TEST(Pca, BadArgumentsThrow) {
    EXPECT_THROW(fit_pca(Eigen::MatrixXd::Ones(3, 1), 0.9), ParameterError);
    EXPECT_THROW(fit_pca(Eigen::MatrixXd::Ones(3, 4), 0.0), ParameterError);
    EXPECT_THROW(fit_pca(Eigen::MatrixXd::Ones(3, 4), 1.5), ParameterError);
}
