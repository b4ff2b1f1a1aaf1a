#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_util.hpp"

using namespace iqt;

namespace {

DegradationParams clean(const Scale3& scale, const std::array<double, 3>& blur) {
    DegradationParams p;
    p.scale = scale;
    p.blur_sigma = blur;
    return p;
}

} // namespace

TEST(Degrade, ConstantSurvivesBlurAndDecimation) {
    const Volume3D v({8, 8, 16}, 2.5f);
    const Volume3D low = degrade(v, clean({1, 1, 4}, {0.0, 0.0, 2.0}));
    EXPECT_EQ(low.dims(), (Dims{8, 8, 4}));
    for (float x : low.data()) EXPECT_NEAR(x, 2.5f, 1e-6);
}

TEST(Degrade, ImpulseBlurIsNormalisedGaussian) {
    Volume3D v({1, 1, 15});
    v(0, 0, 7) = 1.0f;
    const Volume3D out = degrade(v, clean({1, 1, 1}, {0.0, 0.0, 1.0}));
    double norm = 0.0;
    for (int t = -3; t <= 3; ++t) norm += std::exp(-0.5 * t * t);
    double sum = 0.0;
    for (std::size_t k = 0; k < 15; ++k) {
        const int t = static_cast<int>(k) - 7;
        const double expect = std::abs(t) <= 3 ? std::exp(-0.5 * t * t) / norm : 0.0;
        EXPECT_NEAR(out(0, 0, k), expect, 1e-7) << k;
        sum += out(0, 0, k);
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_NEAR(out(0, 0, 7), 0.39905027, 1e-7);
}

TEST(Degrade, SameSeedIsBitIdentical) {
    const Volume3D v = test::random_volume({8, 8, 8}, 4);
    DegradationParams p = clean({1, 1, 4}, {0.0, 0.0, 2.0});
    p.snr = SnrPair{10.0, 15.0};
    p.noise_seed = 99;
    EXPECT_EQ(degrade(v, p), degrade(v, p));
    p.noise_seed = 100;
    EXPECT_NE(degrade(v, p), degrade(v, clean({1, 1, 4}, {0.0, 0.0, 2.0})));
}

TEST(Degrade, IndivisibleDimsThrow) {
    EXPECT_THROW(degrade(Volume3D({8, 8, 10}), clean({1, 1, 4}, {0, 0, 0})), GeometryError);
}

TEST(Degrade, InvalidParamsThrow) {
    EXPECT_THROW(degrade(Volume3D({4, 4, 4}), clean({1, 1, 0}, {0, 0, 0})), ParameterError);
    EXPECT_THROW(degrade(Volume3D({4, 4, 4}), clean({1, 1, 1}, {0, -1, 0})), ParameterError);
    DegradationParams p = clean({1, 1, 1}, {0, 0, 0});
    p.snr = SnrPair{0.0, 3.0};
    EXPECT_THROW(degrade(Volume3D({4, 4, 4}), p), ParameterError);
}

TEST(Degrade, LinearWithoutNoise) {
    const Volume3D a = test::random_volume({6, 6, 12}, 1);
    const Volume3D b = test::random_volume({6, 6, 12}, 2);
    Volume3D mix(a.dims());
    for (std::size_t n = 0; n < a.size(); ++n) mix.data()[n] = 2.0f * a.data()[n] - 0.5f * b.data()[n];
    const auto p = clean({1, 2, 4}, {0.5, 1.0, 2.0});
    const Volume3D la = degrade(a, p), lb = degrade(b, p), lm = degrade(mix, p);
    for (std::size_t n = 0; n < lm.size(); ++n) {
        EXPECT_NEAR(lm.data()[n], 2.0f * la.data()[n] - 0.5f * lb.data()[n], 1e-5);
    }
}

TEST(Degrade, NoiseStdMatchesSigma) {
    PhantomSpec spec;
    spec.dims = {64, 64, 128};
    spec.seed = 5;
    const Phantom ph = make_phantom(spec);
    DegradationParams p = clean({1, 1, 4}, {0.0, 0.0, 2.0});
    const Volume3D clean_low = degrade(ph.volume, p);
    p.snr = SnrPair{20.0, 30.0};
    p.noise_seed = 17;
    const Volume3D noisy = degrade(ph.volume, p);
    ASSERT_GE(noisy.size(), 100000u);
    double s = 0.0, s2 = 0.0;
    for (std::size_t n = 0; n < noisy.size(); ++n) {
        const double d = static_cast<double>(noisy.data()[n]) - clean_low.data()[n];
        s += d;
        s2 += d * d;
    }
    const double N = static_cast<double>(noisy.size());
    const double sd = std::sqrt(s2 / N - (s / N) * (s / N));
    const double sigma = noise_sigma(ph.volume, *p.snr);
    EXPECT_NEAR(sd / sigma, 1.0, 0.05);
}

TEST(Degrade, WmRescaleHitsSnrWm) {
    PhantomSpec spec;
    spec.seed = 8;
    const Phantom ph = make_phantom(spec);
    DegradationParams p = clean({1, 1, 1}, {0.0, 0.0, 0.0});
    p.snr = SnrPair{10.0, 25.0};
    const double sigma = noise_sigma(ph.volume, *p.snr, &ph.tissue);
    EXPECT_NEAR(sigma, spec.gm_mean / 10.0, 1e-6);
    // Blur-free, decimation-free: the pre-noise WM mean is recoverable by
    // averaging over many WM voxels.
    const Volume3D low = degrade(ph.volume, p, &ph.tissue);
    double wm = 0.0;
    for (std::size_t n = 0; n < low.size(); ++n) wm += ph.tissue.wm.labels[n] ? low.data()[n] : 0.0;
    wm /= static_cast<double>(ph.tissue.wm.count());
    const double se = sigma / std::sqrt(static_cast<double>(ph.tissue.wm.count()));
    EXPECT_NEAR(wm / sigma, 25.0, 4.0 * se / sigma);
}

TEST(Phantom, Deterministic) {
    PhantomSpec spec;
    spec.seed = 21;
    const Phantom a = make_phantom(spec), b = make_phantom(spec);
    EXPECT_EQ(a.volume, b.volume);
    EXPECT_EQ(a.tissue.gm, b.tissue.gm);
    EXPECT_EQ(a.tissue.wm, b.tissue.wm);
    spec.seed = 22;
    EXPECT_NE(make_phantom(spec).volume, a.volume);
}

TEST(Phantom, MasksPartitionVoxelsAndThreeLevels) {
    PhantomSpec spec;
    spec.seed = 2;
    const Phantom ph = make_phantom(spec);
    std::size_t bg = 0;
    for (std::size_t n = 0; n < ph.volume.size(); ++n) {
        const bool g = ph.tissue.gm.labels[n], w = ph.tissue.wm.labels[n];
        EXPECT_FALSE(g && w);
        const float x = ph.volume.data()[n];
        if (g) EXPECT_EQ(x, spec.gm_mean);
        else if (w) EXPECT_EQ(x, spec.wm_mean);
        else {
            EXPECT_EQ(x, spec.background);
            ++bg;
        }
    }
    EXPECT_EQ(bg + ph.tissue.gm.count() + ph.tissue.wm.count(), ph.volume.size());
    const std::set<float> levels(ph.volume.data().begin(), ph.volume.data().end());
    EXPECT_EQ(levels, (std::set<float>{spec.background, spec.gm_mean, spec.wm_mean}));
}

TEST(Phantom, RejectsSmallDimsAndBadContrast) {
    PhantomSpec spec;
    spec.dims = {15, 32, 32};
    EXPECT_THROW(make_phantom(spec), ParameterError);
    spec.dims = {32, 32, 32};
    spec.gm_mean = 1.2f;
    EXPECT_THROW(make_phantom(spec), ParameterError);
}
