#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace iqt;

namespace {

/// Features of one tile holding `pattern` extruded along k.
Eigen::VectorXd tile_features(const Eigen::MatrixXd& pattern, std::size_t m) {
    Volume3D v({m, m, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t k = 0; k < m; ++k)
                v(i, j, k) = static_cast<float>(pattern(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    return extract_lq_features(v, {0, 0, 0}, m);
}

/// Coupled dictionary built directly from the ground truth: atom a codes the
/// features of pattern a and decodes to residual a, so a tile with
/// coefficient c has the exact 1-sparse code c * ||P F_a|| on atom a.
CoupledDictionary dictionary_from_truth(const test::CoupledTruth& t) {
    const std::size_t m = t.size_m;
    const auto K = static_cast<Eigen::Index>(t.atoms);
    Eigen::MatrixXd F(static_cast<Eigen::Index>(raw_feature_dim(m)), K);
    for (Eigen::Index a = 0; a < K; ++a) F.col(a) = tile_features(t.patterns[static_cast<std::size_t>(a)], m);
    CoupledDictionary cd;
    cd.pca = fit_pca(F, 1.0, false);
    cd.pca.basis = to_float_precision(cd.pca.basis);
    const Eigen::MatrixXd P = cd.pca.project_columns(F);
    Eigen::MatrixXd dl(P.rows(), K), dh(static_cast<Eigen::Index>(m * m * m), K);
    for (Eigen::Index a = 0; a < K; ++a) {
        const double nrm = P.col(a).norm();
        dl.col(a) = P.col(a) / nrm;
        dh.col(a) = t.residuals[static_cast<std::size_t>(a)] / nrm;
    }
    cd.d_low = Dictionary(dl);
    cd.d_high = dh;
    cd.geometry = {m, 0, {1, 1, 4}};
    cd.validate();
    return cd;
}

EnhanceConfig tiled_config() {
    EnhanceConfig c;
    c.overlap = 0;
    return c;
}

Eigen::VectorXd as_vector(const std::vector<float>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t n = 0; n < v.size(); ++n) out(static_cast<Eigen::Index>(n)) = v[n];
    return out;
}

CoupledDictionary phantom_dictionary(std::size_t atoms, std::uint64_t seed) {
    DegradationParams dp;
    dp.blur_sigma = DegradationParams::default_blur(dp.scale);
    const auto pairs = build_dataset(3, Regime::Train, SnrModel{}, PhantomSpec{}, dp, seed);
    PatchSpec ps;
    ps.size_m = 5;
    ps.overlap_p = 2;
    PatchLibraryBuilder b(ps, dp.scale);
    for (const auto& p : pairs) b.add_pair(p.high, p.low);
    TrainOptions o;
    o.k_atoms = atoms;
    o.ksvd_iters = 5;
    o.seed = seed;
    o.geometry = {5, 2, dp.scale};
    return train_coupled(b.finish(), o).dictionary;
}

Volume3D phantom_low(std::uint64_t seed, Regime regime = Regime::OOD) {
    DegradationParams dp;
    dp.blur_sigma = DegradationParams::default_blur(dp.scale);
    return build_dataset(1, regime, SnrModel{}, PhantomSpec{}, dp, seed)[0].low;
}

} // namespace

TEST(Enhance, ZeroInputGivesZeroOutput) {
    const CoupledDictionary cd = phantom_dictionary(32, 1);
    const Volume3D out = enhance(Volume3D({32, 32, 8}), cd, EnhanceConfig{});
    EXPECT_EQ(out.dims(), (Dims{32, 32, 32}));
    EXPECT_EQ(out.max_value(), 0.0f);
    EXPECT_EQ(out.min_value(), 0.0f);
}

TEST(Enhance, ExactOneSparseResidualsBeatInterpolationTenfold) {
    test::CoupledTruth truth = test::make_coupled_truth(7, 12, 21);
    truth.sparsity = 1;
    const CoupledDictionary cd = dictionary_from_truth(truth);
    const auto pair = test::make_coupled_pair(truth, 3, 4, 22);
    RunReport rep;
    const Volume3D est = enhance(pair.low, cd, tiled_config(), &rep);
    const Volume3D interp = upsample_cubic(pair.low, {1, 1, 4});
    const double e_srep = nrmse(pair.high, est), e_interp = nrmse(pair.high, interp);
    EXPECT_GT(e_interp, 0.0);
    EXPECT_LT(10.0 * e_srep, e_interp) << e_srep << " vs " << e_interp;
    EXPECT_EQ(rep.patch_count, 36u);
    EXPECT_EQ(rep.warning_count, 0u);
    EXPECT_DOUBLE_EQ(rep.mean_nnz, 1.0);
}

TEST(Enhance, ReplayedExemplarErrorBoundedByTrainingResidualPlusShrinkage) {
    test::CoupledTruth truth = test::make_coupled_truth(7, 8, 23);
    truth.sparsity = 1;
    PatchSpec ps;
    ps.size_m = 7;
    ps.background_threshold = 0.0f;
    PatchLibraryBuilder b(ps, {1, 1, 4});
    std::vector<test::CoupledPair> pairs;
    for (std::uint64_t v = 0; v < 6; ++v) {
        pairs.push_back(test::make_coupled_pair(truth, 3, 4, 100 + v));
        b.add_pair(pairs.back().high, pairs.back().low);
    }
    const TrainingSet ts = b.finish();
    TrainOptions o;
    o.k_atoms = 8;
    o.ksvd_iters = 20;
    o.sparsity_t = 1;
    o.pca_min_variance = 1.0;
    o.geometry = {7, 0, {1, 1, 4}};
    const TrainResult tr = train_coupled(ts, o);
    const CoupledDictionary& cd = tr.dictionary;
    const EnhanceConfig cfg = tiled_config();
    const Enhancer enh(cd, cfg);

    // Exemplar n is tile n of volume 0 in lexicographic origin order.
    const Volume3D up = upsample_cubic(pairs[0].low, {1, 1, 4});
    const FeatureVolumes fv(up);
    const auto origins = patch_origins(up.dims(), ps);
    std::vector<float> hp(343);
    for (std::size_t n = 0; n < origins.size(); ++n) {
        const PatchEnhancement pe = enh.enhance_patch(up, fv, origins[n]);
        gather_patch(pairs[0].high, origins[n], 7, hp);
        const double decode_err = (as_vector(pe.x_patch) - as_vector(hp)).norm();
        const auto& code = tr.codes[n];
        const double train_err = (ts.residuals.col(static_cast<Eigen::Index>(n)) - code.decode(cd.d_high)).norm();
        ASSERT_EQ(pe.code.nnz(), 1u);
        const double shrink = cfg.lambda * cd.d_high.col(pe.code.indices[0]).norm();
        EXPECT_LE(decode_err, train_err + shrink * 1.01 + 1e-5) << n;
        EXPECT_LT(decode_err, 0.1 * ts.residuals.col(static_cast<Eigen::Index>(n)).norm()) << n;
    }
}

TEST(Enhance, ConstantPatchIsPreserved) {
    const CoupledDictionary cd = phantom_dictionary(32, 2);
    const Volume3D up({12, 12, 12}, 0.4f);
    const PatchEnhancement pe = enhance_patch(up, {3, 3, 3}, cd, EnhanceConfig{});
    EXPECT_TRUE(pe.code.empty());
    for (float x : pe.x_patch) EXPECT_EQ(x, 0.4f);
    EXPECT_NEAR(pe.mean_mu, 0.4, 1e-7);
}

TEST(Enhance, LambdaAboveNullThresholdGivesEmptyCode) {
    const CoupledDictionary cd = phantom_dictionary(32, 3);
    const Volume3D up = upsample_cubic(phantom_low(4), {1, 1, 4});
    const Index3 origin{12, 12, 12};
    const Eigen::VectorXd p = cd.pca.project(extract_lq_features(up, origin, 5));
    const double lmax = (cd.d_low.atoms.transpose() * p).cwiseAbs().maxCoeff();
    ASSERT_GT(lmax, 0.0);
    EnhanceConfig c;
    c.lambda = lmax;
    EXPECT_TRUE(enhance_patch(up, origin, cd, c).code.empty());
    c.lambda = 0.5 * lmax;
    EXPECT_FALSE(enhance_patch(up, origin, cd, c).code.empty());
}

TEST(Enhance, HugeLambdaReproducesInterpolation) {
    const CoupledDictionary cd = phantom_dictionary(32, 5);
    const Volume3D low = phantom_low(6);
    EnhanceConfig c;
    c.lambda = 1e6;
    c.overlap = 2;
    EXPECT_EQ(enhance(low, cd, c), upsample_cubic(low, {1, 1, 4}));
}

TEST(Enhance, PatchMeanIsInterpolatedMeanPlusDecodedMean) {
    const CoupledDictionary cd = phantom_dictionary(32, 7);
    const Volume3D up = upsample_cubic(phantom_low(8), {1, 1, 4});
    const Index3 origin{10, 14, 12};
    const PatchEnhancement pe = enhance_patch(up, origin, cd, EnhanceConfig{});
    std::vector<float> base(125);
    gather_patch(up, origin, 5, base);
    const Eigen::VectorXd decoded = pe.code.decode(cd.d_high);
    EXPECT_NEAR(as_vector(pe.x_patch).mean(), as_vector(base).mean() + decoded.mean(), 1e-6);
    EXPECT_NEAR(pe.mean_mu, as_vector(base).mean(), 1e-9);
}

TEST(Enhance, DeterministicAndThreadCountInvariant) {
    const CoupledDictionary cd = phantom_dictionary(32, 9);
    const Volume3D low = phantom_low(10);
    EnhanceConfig c;
    c.overlap = 2;
    c.threads = 1;
    const Volume3D a = enhance(low, cd, c);
    const Volume3D b = enhance(low, cd, c);
    c.threads = 4;
    const Volume3D d = enhance(low, cd, c);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, d);
    for (float x : a.data()) ASSERT_TRUE(std::isfinite(x));
}

TEST(Enhance, LoadedDictionaryGivesIdenticalOutput) {
    const CoupledDictionary cd = phantom_dictionary(32, 11);
    const auto dir = test::temp_dir("enhance_iqd");
    save_dictionary(dir / "d.iqd", cd);
    const CoupledDictionary back = load_dictionary(dir / "d.iqd");
    const Volume3D low = phantom_low(12);
    EnhanceConfig c;
    c.overlap = 2;
    EXPECT_EQ(enhance(low, cd, c), enhance(low, back, c));
}

TEST(Enhance, MeanNnzNonIncreasingInLambda) {
    const CoupledDictionary cd = phantom_dictionary(64, 13);
    std::vector<Volume3D> lows;
    for (std::uint64_t s = 0; s < 1; ++s) lows.push_back(phantom_low(20 + s));
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 0.03, 0.1, 0.3}) {
        EnhanceConfig c;
        c.lambda = lambda;
        c.overlap = 2;
        double total = 0.0;
        for (const auto& low : lows) {
            RunReport rep;
            enhance(low, cd, c, &rep);
            total += rep.mean_nnz;
        }
        EXPECT_LE(total, previous) << lambda;
        previous = total;
    }
}

TEST(Enhance, ConfigurationErrors) {
    const CoupledDictionary cd = phantom_dictionary(32, 14);
    EnhanceConfig c;
    c.scale = Scale3{1, 1, 2};
    EXPECT_THROW(Enhancer(cd, c), ParameterError);
    c = EnhanceConfig{};
    c.overlap = 5;
    EXPECT_THROW(Enhancer(cd, c), ParameterError);
    c = EnhanceConfig{};
    c.lambda = 0.0;
    EXPECT_THROW(Enhancer(cd, c), ParameterError);
    EXPECT_THROW(enhance(Volume3D({4, 4, 1}), cd, EnhanceConfig{}), GeometryError);
}

TEST(Enhance, RunReportFile) {
    const auto dir = test::temp_dir("run_report");
    RunReport r;
    r.patch_count = 10;
    r.mean_nnz = 2.5;
    r.warning_count = 1;
    r.lambda = 0.01;
    write_run_report(dir / "r.tsv", r);
    const std::string s = test::read_bytes(dir / "r.tsv");
    EXPECT_NE(s.find("patch_count\t10\n"), std::string::npos);
    EXPECT_NE(s.find("mean_nnz\t2.5\n"), std::string::npos);
    EXPECT_NE(s.find("solver_warnings\t1\n"), std::string::npos);
    EXPECT_NE(s.find("wall_seconds\t"), std::string::npos);
}
