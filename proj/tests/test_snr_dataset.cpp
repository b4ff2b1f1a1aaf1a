#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace iqt;

TEST(Mahalanobis, Examples) {
    const SnrDistribution d = SnrDistribution::default_ind();
    EXPECT_EQ(mahalanobis(d, d.mean), 0.0);

    SnrDistribution id;
    id.mean = {1.0, 2.0};
    id.covariance = Eigen::Matrix2d::Identity();
    EXPECT_NEAR(mahalanobis(id, Eigen::Vector2d(4.0, 6.0)), 5.0, 1e-12);

    SnrDistribution diag;
    diag.mean = {0.0, 0.0};
    diag.covariance << 4.0, 0.0, 0.0, 1.0;
    EXPECT_NEAR(mahalanobis(diag, Eigen::Vector2d(2.0, 0.0)), 1.0, 1e-12);
}

TEST(Mahalanobis, NonSpdThrows) {
    SnrDistribution d;
    d.covariance << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(mahalanobis(d, Eigen::Vector2d(0.0, 0.0)), ParameterError);
    d.covariance << 1.0, 0.5, 0.4, 1.0;
    EXPECT_THROW(d.cholesky(), ParameterError);
}

TEST(SampleSnr, RegimeConstraintsAlwaysHold) {
    const SnrDistribution ind = SnrDistribution::default_ind(), ood = SnrDistribution::default_ood();
    Rng rng(3);
    for (int n = 0; n < 2000; ++n) {
        const SnrPair a = sample_snr(ind, Regime::InD1, ood, rng);
        EXPECT_LT(mahalanobis(ind, a), 1.0);
        const SnrPair b = sample_snr(ind, Regime::InD2, ood, rng);
        EXPECT_GT(mahalanobis(ind, b), 3.0);
        EXPECT_GT(b.wm, b.gm);
        const SnrPair c = sample_snr(ind, Regime::OOD, ood, rng);
        EXPECT_GE(c.gm, kMinSnr);
        EXPECT_GE(c.wm, kMinSnr);
    }
}

TEST(SampleSnr, UnconstrainedMeanWithinThreeStandardErrors) {
    const SnrDistribution ind = SnrDistribution::default_ind();
    Rng rng(12);
    const int n = 10000;
    double sg = 0.0, sw = 0.0;
    for (int i = 0; i < n; ++i) {
        const SnrPair p = sample_snr(ind, Regime::Train, SnrDistribution::default_ood(), rng);
        sg += p.gm;
        sw += p.wm;
    }
    const double se = std::sqrt(25.0 / n);
    EXPECT_NEAR(sg / n, 40.0, 3.0 * se);
    EXPECT_NEAR(sw / n, 60.0, 3.0 * se);
}

TEST(SampleSnr, ImpossibleInD2RaisesSamplingError) {
    // snr_wm > snr_gm is practically never satisfied far out in the tails.
    SnrDistribution d;
    d.mean = {100.0, 10.0};
    d.covariance << 1.0, 0.0, 0.0, 1.0;
    EXPECT_THROW(sample_snr(d, Regime::InD2, d, std::uint64_t{1}), SamplingError);
}

TEST(SampleSnr, SeedDeterminism) {
    const auto ind = SnrDistribution::default_ind(), ood = SnrDistribution::default_ood();
    EXPECT_EQ(sample_snr(ind, Regime::InD1, ood, std::uint64_t{5}), sample_snr(ind, Regime::InD1, ood, std::uint64_t{5}));
}

TEST(Regime, ParseRoundTrip) {
    for (Regime r : {Regime::Train, Regime::InD1, Regime::InD2, Regime::OOD}) {
        EXPECT_EQ(parse_regime(to_string(r)), r);
    }
    EXPECT_THROW(parse_regime("ind3"), ParameterError);
}

namespace {

DegradationParams default_degradation() {
    DegradationParams d;
    d.blur_sigma = DegradationParams::default_blur(d.scale);
    return d;
}

} // namespace

TEST(Dataset, FiveInD1Pairs) {
    const auto pairs = build_dataset(5, Regime::InD1, SnrModel{}, PhantomSpec{}, default_degradation(), 9);
    ASSERT_EQ(pairs.size(), 5u);
    for (const auto& p : pairs) {
        EXPECT_LT(mahalanobis(SnrDistribution::default_ind(), p.snr), 1.0);
        EXPECT_EQ(p.low.dims(), (Dims{p.high.dims()[0], p.high.dims()[1], p.high.dims()[2] / 4}));
        EXPECT_EQ(p.regime, Regime::InD1);
    }
    EXPECT_NE(pairs[0].high, pairs[1].high);
}

TEST(Dataset, ZeroVolumesIsEmpty) {
    EXPECT_TRUE(build_dataset(0, Regime::OOD, SnrModel{}, PhantomSpec{}, default_degradation(), 1).empty());
}

TEST(Dataset, VolumesReproducibleIndividually) {
    const auto a = build_dataset(3, Regime::OOD, SnrModel{}, PhantomSpec{}, default_degradation(), 4);
    const auto b = build_dataset(2, Regime::OOD, SnrModel{}, PhantomSpec{}, default_degradation(), 4);
    EXPECT_EQ(a[1].low, b[1].low);
    EXPECT_EQ(a[1].snr, b[1].snr);
}

TEST(Dataset, WriteThenReadManifest) {
    const auto dir = test::temp_dir("manifest");
    const auto pairs = build_dataset(2, Regime::InD2, SnrModel{}, PhantomSpec{}, default_degradation(), 6);
    const auto path = write_dataset(dir, pairs, Regime::InD2);
    const auto entries = read_manifest(path);
    ASSERT_EQ(entries.size(), 2u);
    for (std::size_t v = 0; v < 2; ++v) {
        EXPECT_EQ(entries[v].regime, Regime::InD2);
        EXPECT_EQ(entries[v].snr, pairs[v].snr);
        EXPECT_EQ(entries[v].seed, pairs[v].seed);
        EXPECT_EQ(load_volume(entries[v].high), pairs[v].high);
        EXPECT_EQ(load_volume(entries[v].low), pairs[v].low);
    }
}

TEST(Dataset, MalformedManifestIsDataError) {
    const auto dir = test::temp_dir("bad_manifest");
    {
        std::ofstream os(dir / "m.tsv");
        os << "a.iqv\tb.iqv\tind1\t1.0\n";
    }
    EXPECT_THROW(read_manifest(dir / "m.tsv"), DataError);
    EXPECT_THROW(read_manifest(dir / "missing.tsv"), DataError);
}
