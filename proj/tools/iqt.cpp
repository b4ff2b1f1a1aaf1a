#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "iqt/iqt.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kConvergence = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string dict;
    std::optional<double> lambda;
    std::optional<std::size_t> atoms;
    std::optional<std::size_t> patch;
    std::optional<std::size_t> overlap;
    std::string regime;
    std::string manifest;
    std::string input;
    std::vector<std::string> methods;
};

iqt::RunConfig resolve_config(const Options& o) {
    iqt::RunConfig c = o.config.empty() ? iqt::RunConfig{} : iqt::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.lambda) c.enhance.lambda = *o.lambda;
    if (o.atoms) c.training.atoms = *o.atoms;
    if (o.patch) c.training.patch = *o.patch;
    if (o.overlap) {
        c.training.overlap = *o.overlap;
        c.enhance.overlap = *o.overlap;
    }
    if (!o.regime.empty()) {
        try {
            c.dataset.test_regimes = {iqt::parse_regime(o.regime)};
        } catch (const iqt::Error& e) {
            throw iqt::ConfigError(e.what());
        }
    }
    for (const auto& m : o.methods) c.eval.methods.push_back(m);
    c.validate();
    return c;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw iqt::ConfigError(std::string(flag) + " is required");
}

int cmd_phantom(const Options& o) {
    const auto c = resolve_config(o);
    require(o.out, "--out");
    auto spec = c.phantom_spec();
    spec.seed = iqt::substream_seed(c.seed, "phantom");
    const auto ph = iqt::make_phantom(spec);
    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    iqt::save_volume(out, ph.volume);
    std::cout << "phantom " << iqt::to_string(ph.volume.dims()) << " -> " << out.string() << '\n';
    return kOk;
}

int cmd_simulate(const Options& o) {
    const auto c = resolve_config(o);
    const fs::path dir = o.out.empty() ? c.dataset.out_dir : fs::path(o.out);
    const auto phantom = c.phantom_spec();
    const auto degradation = c.degradation();
    std::vector<std::pair<iqt::Regime, std::size_t>> jobs{{iqt::Regime::Train, c.dataset.n_train}};
    for (auto r : c.dataset.test_regimes) jobs.emplace_back(r, c.dataset.n_test);
    for (const auto& [regime, n] : jobs) {
        const auto pairs = iqt::build_dataset(n, regime, c.dataset.snr, phantom, degradation, c.seed);
        const auto manifest = iqt::write_dataset(dir, pairs, regime);
        std::cout << iqt::to_string(regime) << ": " << pairs.size() << " pairs -> " << manifest.string() << '\n';
    }
    return kOk;
}

int cmd_train(const Options& o) {
    const auto c = resolve_config(o);
    require(o.manifest, "--manifest");
    const fs::path out = o.out.empty() ? fs::path("dictionary.iqd") : fs::path(o.out);
    const auto entries = iqt::read_manifest(o.manifest);
    if (entries.empty()) throw iqt::DataError("manifest '" + o.manifest + "' lists no volumes");

    iqt::PatchLibraryBuilder builder(c.patch_spec(), c.dataset.scale);
    for (const auto& e : entries) {
        if (!fs::exists(e.high) || !fs::exists(e.low)) throw iqt::DataError("missing volume for '" + e.high.string() + "'");
        builder.add_pair(iqt::load_volume(e.high), iqt::load_volume(e.low));
    }
    const auto ts = builder.finish(c.training.max_patches, iqt::substream_seed(c.seed, "training/subset"));
    if (ts.size() < c.training.atoms) {
        throw iqt::DataError("only " + std::to_string(ts.size()) + " patches left after background exclusion; " +
                             std::to_string(c.training.atoms) + " atoms requested");
    }

    iqt::TrainOptions to;
    to.k_atoms = c.training.atoms;
    to.ksvd_iters = c.training.ksvd_iters;
    to.sparsity_t = c.training.sparsity_t;
    to.pca_min_variance = c.training.pca_min_variance;
    to.seed = iqt::substream_seed(c.seed, "training");
    to.geometry = {c.training.patch, c.training.overlap, c.dataset.scale};
    const auto res = iqt::train_coupled(ts, to);

    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    iqt::save_dictionary(out, res.dictionary);
    fs::path log_path = out;
    log_path += ".log";
    std::ofstream log(log_path, std::ios::trunc);
    log << "patches_considered\t" << ts.considered << '\n'
        << "patches_excluded\t" << ts.excluded << '\n'
        << "patches_used\t" << ts.size() << '\n'
        << "atoms\t" << res.dictionary.atom_count() << '\n'
        << "pca_reduced_dim\t" << res.dictionary.pca.reduced_dim() << '\n'
        << "pca_explained_variance\t" << iqt::format_double(res.dictionary.pca.explained_variance_ratio) << '\n';
    for (std::size_t it = 0; it < res.ksvd_objective.size(); ++it) {
        log << "objective\t" << it << '\t' << iqt::format_double(res.ksvd_objective[it]) << '\n';
    }
    std::cout << "dictionary K=" << res.dictionary.atom_count() << " m=" << c.training.patch
              << " pca=" << res.dictionary.pca.reduced_dim() << " -> " << out.string() << '\n';
    return kOk;
}

iqt::EnhanceConfig enhance_config(const iqt::RunConfig& c) {
    iqt::EnhanceConfig ec;
    ec.lambda = c.enhance.lambda;
    ec.beta = c.enhance.beta;
    ec.overlap = c.enhance.overlap;
    ec.scale = c.dataset.scale;
    ec.tol = c.enhance.tol;
    ec.max_iter = c.enhance.max_iter;
    return ec;
}

int cmd_enhance(const Options& o) {
    const auto c = resolve_config(o);
    require(o.dict, "--dict");
    require(o.input, "--in");
    require(o.out, "--out");
    const auto dict = iqt::load_dictionary(o.dict);
    const auto low = iqt::load_volume(o.input);
    iqt::RunReport report;
    const auto high = iqt::Enhancer(dict, enhance_config(c)).enhance(low, &report);
    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    iqt::save_volume(out, high);
    fs::path report_path = out;
    report_path += ".report.tsv";
    iqt::write_run_report(report_path, report);
    std::cout << "lambda " << c.enhance.lambda << '\n'
              << "enhanced " << iqt::to_string(low.dims()) << " -> " << iqt::to_string(high.dims()) << " ("
              << report.patch_count << " patches, " << report.warning_count << " solver warnings)\n";
    const double frac = report.patch_count ? static_cast<double>(report.warning_count) / report.patch_count : 0.0;
    if (frac > c.enhance.max_warning_fraction) {
        std::cerr << "error: solver warning fraction " << frac << " exceeds " << c.enhance.max_warning_fraction << '\n';
        return kConvergence;
    }
    return kOk;
}

int cmd_evaluate(const Options& o) {
    const auto c = resolve_config(o);
    require(o.manifest, "--manifest");
    const auto entries = iqt::read_manifest(o.manifest);
    std::vector<iqt::EvalMethod> methods{iqt::interpolation_method(c.dataset.scale)};
    std::optional<iqt::CoupledDictionary> dict;
    std::optional<iqt::Enhancer> enhancer;
    if (!o.dict.empty()) {
        dict = iqt::load_dictionary(o.dict);
        enhancer.emplace(*dict, enhance_config(c));
        methods.push_back(iqt::srep_method(*enhancer));
    }
    for (const auto& m : c.eval.methods) {
        const auto eq = m.find('=');
        methods.push_back(iqt::directory_method(m.substr(0, eq), m.substr(eq + 1)));
    }
    const fs::path out = o.out.empty() ? c.eval.out_dir : fs::path(o.out);
    const auto rep = iqt::evaluate_run(entries, methods, out);
    std::cout << iqt::format_summary(rep);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image quality transfer by sparse representation"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Run configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Root seed (overrides run.seed)");
    };

    auto* phantom = app.add_subcommand("phantom", "Write one synthetic high-quality phantom");
    common(phantom);
    phantom->add_option("--out", o.out, "Output IQV file");

    auto* simulate = app.add_subcommand("simulate", "Synthesise training and test datasets");
    common(simulate);
    simulate->add_option("--out", o.out, "Output directory");
    simulate->add_option("--regime", o.regime, "Test regime (ind1|ind2|ood)");

    auto* train = app.add_subcommand("train", "Learn coupled dictionaries");
    common(train);
    train->add_option("--manifest", o.manifest, "Training manifest");
    train->add_option("--out", o.out, "Output IQD file");
    train->add_option("--atoms", o.atoms, "Dictionary atoms K");
    train->add_option("--patch", o.patch, "Patch size m");
    train->add_option("--overlap", o.overlap, "Training patch overlap");

    auto* enh = app.add_subcommand("enhance", "Enhance one low-quality volume");
    common(enh);
    enh->add_option("--dict", o.dict, "Dictionary IQD file");
    enh->add_option("--in", o.input, "Low-quality IQV volume");
    enh->add_option("--out", o.out, "Output IQV file");
    enh->add_option("--lambda", o.lambda, "Lasso weight");
    enh->add_option("--overlap", o.overlap, "Test-time patch overlap");

    auto* eval = app.add_subcommand("evaluate", "Score methods against ground truth");
    common(eval);
    eval->add_option("--manifest", o.manifest, "Test manifest");
    eval->add_option("--dict", o.dict, "Dictionary IQD file for the srep method");
    eval->add_option("--method", o.methods, "Extra method as name=dir of precomputed outputs");
    eval->add_option("--out", o.out, "Output directory");
    eval->add_option("--lambda", o.lambda, "Lasso weight");
    eval->add_option("--overlap", o.overlap, "Test-time patch overlap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (phantom->parsed()) return cmd_phantom(o);
        if (simulate->parsed()) return cmd_simulate(o);
        if (train->parsed()) return cmd_train(o);
        if (enh->parsed()) return cmd_enhance(o);
        if (eval->parsed()) return cmd_evaluate(o);
    } catch (const iqt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const iqt::ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const iqt::SamplingError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const iqt::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kConfig;
}
