#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iqt/dataset.hpp"
#include "iqt/degrade.hpp"
#include "iqt/error.hpp"
#include "iqt/patch.hpp"
#include "iqt/phantom.hpp"
#include "iqt/snr.hpp"

namespace iqt {

struct DatasetConfig {
    Dims dims{32, 32, 32};
    std::size_t n_train = 10;
    std::size_t n_test = 5;
    std::vector<Regime> test_regimes{Regime::InD1, Regime::InD2, Regime::OOD};
    Scale3 scale{1, 1, 4};
    /// Empty means DegradationParams::default_blur(scale).
    std::optional<std::array<double, 3>> blur_sigma;
    SnrModel snr;
    std::filesystem::path out_dir = "data";
};

struct TrainingConfig {
    std::size_t atoms = 256;
    std::size_t patch = 5;
    std::size_t overlap = 2;
    std::size_t sparsity_t = 3;
    std::size_t ksvd_iters = 10;
    double pca_min_variance = 0.9;
    float background_threshold = 0.05f;
    double background_fraction_max = 0.8;
    /// 0 keeps every patch.
    std::size_t max_patches = 100000;
};

struct EnhanceSection {
    double lambda = 0.01;
    double beta = 0.0;
    std::optional<std::size_t> overlap;
    double tol = 1e-6;
    int max_iter = 1000;
    /// Exit code 4 when the fraction of unconverged patch solves exceeds this.
    double max_warning_fraction = 0.01;
};

struct EvalConfig {
    /// Extra methods as `name=dir` of precomputed outputs.
    std::vector<std::string> methods;
    std::filesystem::path out_dir = "eval";
};

struct RunConfig {
    std::uint64_t seed = 0;
    DatasetConfig dataset;
    TrainingConfig training;
    EnhanceSection enhance;
    EvalConfig eval;

    PhantomSpec phantom_spec() const {
        PhantomSpec p;
        p.dims = dataset.dims;
        return p;
    }

    DegradationParams degradation() const {
        DegradationParams d;
        d.scale = dataset.scale;
        d.blur_sigma = dataset.blur_sigma.value_or(DegradationParams::default_blur(dataset.scale));
        return d;
    }

    PatchSpec patch_spec() const {
        PatchSpec s;
        s.size_m = training.patch;
        s.overlap_p = training.overlap;
        s.background_threshold = training.background_threshold;
        s.background_fraction_max = training.background_fraction_max;
        return s;
    }

    /// Throws ConfigError on the first value violating a module precondition.
    void validate() const {
        auto wrap = [](const char* what, const std::function<void()>& fn) {
            try {
                fn();
            } catch (const Error& e) {
                throw ConfigError(std::string(what) + ": " + e.what());
            }
        };
        wrap("dataset", [&] {
            phantom_spec().validate();
            degradation().validate();
            dataset.snr.ind.cholesky();
            dataset.snr.ood.cholesky();
        });
        if (dataset.n_train == 0) throw ConfigError("dataset.n_train must be >= 1");
        if (dataset.n_test == 0) throw ConfigError("dataset.n_test must be >= 1");
        wrap("training", [&] { patch_spec().validate(); });
        if (training.atoms == 0) throw ConfigError("training.atoms must be >= 1");
        if (training.sparsity_t == 0) throw ConfigError("training.sparsity_t must be >= 1");
        if (training.ksvd_iters == 0) throw ConfigError("training.ksvd_iters must be >= 1");
        if (!(training.pca_min_variance > 0.0 && training.pca_min_variance <= 1.0)) {
            throw ConfigError("training.pca_min_variance must be in (0, 1]");
        }
        if (!(enhance.lambda > 0.0)) throw ConfigError("enhance.lambda must be > 0");
        if (!(enhance.tol > 0.0)) throw ConfigError("enhance.tol must be > 0");
        if (enhance.max_iter < 1) throw ConfigError("enhance.max_iter must be >= 1");
        if (enhance.overlap && *enhance.overlap >= training.patch) {
            throw ConfigError("enhance.overlap must be smaller than training.patch");
        }
        if (!(enhance.max_warning_fraction >= 0.0 && enhance.max_warning_fraction <= 1.0)) {
            throw ConfigError("enhance.max_warning_fraction must be in [0, 1]");
        }
        for (const auto& m : eval.methods) {
            const auto eq = m.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == m.size()) {
                throw ConfigError("eval.methods entry '" + m + "' is not name=dir");
            }
        }
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("bad value for " + key + ": '" + v + "'");
    }
    return out;
}

template <typename T, std::size_t N>
std::array<T, N> parse_array(const std::string& key, const std::string& v) {
    const auto items = split_list(v);
    if (items.size() != N) throw ConfigError(key + " expects " + std::to_string(N) + " comma-separated values");
    std::array<T, N> out{};
    for (std::size_t n = 0; n < N; ++n) out[n] = parse_number<T>(key, items[n]);
    return out;
}

inline SnrDistribution parse_distribution(const std::string& key, const std::array<double, 2>& mean,
                                          const std::array<double, 4>& cov) {
    SnrDistribution d;
    d.mean << mean[0], mean[1];
    d.covariance << cov[0], cov[1], cov[2], cov[3];
    if (cov[1] != cov[2]) throw ConfigError(key + " covariance must be symmetric");
    return d;
}

} // namespace detail

/// Parses `section.key = value` lines; `#` starts a comment. Unknown keys
/// and malformed values raise ConfigError. The result is validated.
inline RunConfig parse_config(std::istream& is) {
    RunConfig c;
    using Setter = std::function<void(const std::string& key, const std::string& v)>;
    auto size = [](std::size_t& dst) {
        return Setter([&dst](const std::string& k, const std::string& v) { dst = detail::parse_number<std::size_t>(k, v); });
    };
    auto real = [](double& dst) {
        return Setter([&dst](const std::string& k, const std::string& v) { dst = detail::parse_number<double>(k, v); });
    };
    std::array<double, 2> ind_mean{40, 60}, ood_mean{12, 16};
    std::array<double, 4> ind_cov{25, 15, 15, 25}, ood_cov{4, 2, 2, 4};

    const std::map<std::string, Setter> setters{
        {"run.seed", [&](auto& k, auto& v) { c.seed = detail::parse_number<std::uint64_t>(k, v); }},
        {"dataset.dims", [&](auto& k, auto& v) { c.dataset.dims = detail::parse_array<std::size_t, 3>(k, v); }},
        {"dataset.n_train", size(c.dataset.n_train)},
        {"dataset.n_test", size(c.dataset.n_test)},
        {"dataset.regimes",
         [&](auto&, auto& v) {
             c.dataset.test_regimes.clear();
             for (const auto& r : detail::split_list(v)) {
                 try {
                     c.dataset.test_regimes.push_back(parse_regime(r));
                 } catch (const Error& e) {
                     throw ConfigError(e.what());
                 }
             }
         }},
        {"dataset.scale", [&](auto& k, auto& v) { c.dataset.scale = detail::parse_array<std::size_t, 3>(k, v); }},
        {"dataset.blur_sigma", [&](auto& k, auto& v) { c.dataset.blur_sigma = detail::parse_array<double, 3>(k, v); }},
        {"dataset.ind_mean", [&](auto& k, auto& v) { ind_mean = detail::parse_array<double, 2>(k, v); }},
        {"dataset.ind_cov", [&](auto& k, auto& v) { ind_cov = detail::parse_array<double, 4>(k, v); }},
        {"dataset.ood_mean", [&](auto& k, auto& v) { ood_mean = detail::parse_array<double, 2>(k, v); }},
        {"dataset.ood_cov", [&](auto& k, auto& v) { ood_cov = detail::parse_array<double, 4>(k, v); }},
        {"dataset.out_dir", [&](auto&, auto& v) { c.dataset.out_dir = v; }},
        {"training.atoms", size(c.training.atoms)},
        {"training.patch", size(c.training.patch)},
        {"training.overlap", size(c.training.overlap)},
        {"training.sparsity_t", size(c.training.sparsity_t)},
        {"training.ksvd_iters", size(c.training.ksvd_iters)},
        {"training.pca_min_variance", real(c.training.pca_min_variance)},
        {"training.background_threshold",
         [&](auto& k, auto& v) { c.training.background_threshold = detail::parse_number<float>(k, v); }},
        {"training.background_fraction_max", real(c.training.background_fraction_max)},
        {"training.max_patches", size(c.training.max_patches)},
        {"enhance.lambda", real(c.enhance.lambda)},
        {"enhance.beta", real(c.enhance.beta)},
        {"enhance.overlap", [&](auto& k, auto& v) { c.enhance.overlap = detail::parse_number<std::size_t>(k, v); }},
        {"enhance.tol", real(c.enhance.tol)},
        {"enhance.max_iter", [&](auto& k, auto& v) { c.enhance.max_iter = detail::parse_number<int>(k, v); }},
        {"enhance.max_warning_fraction", real(c.enhance.max_warning_fraction)},
        {"eval.methods", [&](auto&, auto& v) { c.eval.methods = detail::split_list(v); }},
        {"eval.out_dir", [&](auto&, auto& v) { c.eval.out_dir = v; }},
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(key, value);
    }
    c.dataset.snr.ind = detail::parse_distribution("dataset.ind", ind_mean, ind_cov);
    c.dataset.snr.ood = detail::parse_distribution("dataset.ood", ood_mean, ood_cov);
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_config(is);
}

} // namespace iqt
