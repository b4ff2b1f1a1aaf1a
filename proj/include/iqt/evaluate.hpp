#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "iqt/coupled_dictionary.hpp"
#include "iqt/dataset.hpp"
#include "iqt/enhance.hpp"
#include "iqt/error.hpp"
#include "iqt/interpolate.hpp"
#include "iqt/metrics.hpp"
#include "iqt/volume.hpp"

namespace iqt {

/// A named estimator mapping a manifest entry's low-quality volume to a
/// high-quality estimate.
struct EvalMethod {
    std::string name;
    std::function<Volume3D(const Volume3D& low, const ManifestEntry& entry)> estimate;
};

inline EvalMethod interpolation_method(const Scale3& scale) {
    return {"interpolation", [scale](const Volume3D& low, const ManifestEntry&) { return upsample_cubic(low, scale); }};
}

/// The enhancer must outlive the returned method.
inline EvalMethod srep_method(const Enhancer& enhancer, std::string name = "srep") {
    return {std::move(name), [&enhancer](const Volume3D& low, const ManifestEntry&) { return enhancer.enhance(low); }};
}

/// Precomputed outputs: `<dir>/<low-file-stem>.iqv`.
inline EvalMethod directory_method(std::string name, std::filesystem::path dir) {
    return {std::move(name), [dir = std::move(dir)](const Volume3D&, const ManifestEntry& e) {
                const auto path = dir / (e.low.stem().string() + ".iqv");
                if (!std::filesystem::exists(path)) throw DataError("missing method output '" + path.string() + "'");
                return load_volume(path);
            }};
}

struct EvalRow {
    std::string method;
    Regime regime = Regime::Train;
    std::string volume;
    double nrmse = 0.0;
    double ssim = 0.0;
};

struct EvalAggregate {
    std::string method;
    Regime regime = Regime::Train;
    double mean_nrmse = 0.0;
    double mean_ssim = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<EvalAggregate> aggregates;
    std::vector<std::filesystem::path> maps;

    const EvalAggregate* find(const std::string& method, Regime regime) const {
        for (const auto& a : aggregates) {
            if (a.method == method && a.regime == regime) return &a;
        }
        return nullptr;
    }
};

/// Arithmetic means per (method, regime), in first-appearance order.
inline std::vector<EvalAggregate> aggregate_rows(const std::vector<EvalRow>& rows) {
    std::vector<EvalAggregate> out;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const EvalAggregate& a) { return a.method == r.method && a.regime == r.regime; });
        if (it == out.end()) {
            out.push_back({r.method, r.regime, 0.0, 0.0, 0});
            it = out.end() - 1;
        }
        it->mean_nrmse += r.nrmse;
        it->mean_ssim += r.ssim;
        ++it->count;
    }
    for (auto& a : out) {
        a.mean_nrmse /= static_cast<double>(a.count);
        a.mean_ssim /= static_cast<double>(a.count);
    }
    return out;
}

inline void write_report_tsv(const std::filesystem::path& path, const EvalReport& rep) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write report '" + path.string() + "'");
    os << "method\tregime\tvolume\tnrmse\tssim\n";
    for (const auto& r : rep.rows) {
        os << r.method << '\t' << to_string(r.regime) << '\t' << r.volume << '\t' << format_double(r.nrmse) << '\t'
           << format_double(r.ssim) << '\n';
    }
    for (const auto& a : rep.aggregates) {
        os << a.method << '\t' << to_string(a.regime) << "\tMEAN\t" << format_double(a.mean_nrmse) << '\t'
           << format_double(a.mean_ssim) << '\n';
    }
}

/// Table-1 style summary: one line per regime, NRMSE/SSIM per method.
inline std::string format_summary(const EvalReport& rep) {
    std::vector<std::string> methods;
    std::vector<Regime> regimes;
    for (const auto& a : rep.aggregates) {
        if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) methods.push_back(a.method);
        if (std::find(regimes.begin(), regimes.end(), a.regime) == regimes.end()) regimes.push_back(a.regime);
    }
    std::string out = "regime";
    char buf[96];
    for (const auto& m : methods) {
        std::snprintf(buf, sizeof(buf), " | %-14s NRMSE   SSIM ", m.c_str());
        out += buf;
    }
    out += "\n";
    for (Regime g : regimes) {
        std::snprintf(buf, sizeof(buf), "%-6s", std::string(to_string(g)).c_str());
        out += buf;
        for (const auto& m : methods) {
            if (const auto* a = rep.find(m, g)) {
                std::snprintf(buf, sizeof(buf), " | %-14s %.4f %.4f", "", a->mean_nrmse, a->mean_ssim);
            } else {
                std::snprintf(buf, sizeof(buf), " | %-14s   -      -   ", "");
            }
            out += buf;
        }
        out += "\n";
    }
    return out;
}

struct EvalOptions {
    bool write_maps = true;
    SsimOptions ssim;
};

/// Scores every method on every manifest entry. The first method is the
/// reference for binary improvement maps. Writes report.tsv, summary.txt and
/// maps/ under `out_dir` (when non-empty).
inline EvalReport evaluate_run(const std::vector<ManifestEntry>& manifest, const std::vector<EvalMethod>& methods,
                               const std::filesystem::path& out_dir, const EvalOptions& opt = {}) {
    EvalReport rep;
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir / "maps");
    for (const auto& entry : manifest) {
        if (!std::filesystem::exists(entry.high)) throw DataError("missing volume '" + entry.high.string() + "'");
        if (!std::filesystem::exists(entry.low)) throw DataError("missing volume '" + entry.low.string() + "'");
        const Volume3D high = load_volume(entry.high);
        const Volume3D low = load_volume(entry.low);
        const std::string vol_name = entry.low.stem().string();
        std::vector<Volume3D> estimates;
        for (const auto& m : methods) {
            Volume3D est = m.estimate(low, entry);
            require_same_dims(high, est, ("method " + m.name).c_str());
            rep.rows.push_back({m.name, entry.regime, vol_name, nrmse(high, est), ssim(high, est, opt.ssim)});
            if (opt.write_maps && !out_dir.empty()) {
                const auto p = out_dir / "maps" / (vol_name + "_" + m.name + "_abserr.iqv");
                save_volume(p, abs_error_map(high, est));
                rep.maps.push_back(p);
            }
            estimates.push_back(std::move(est));
        }
        if (opt.write_maps && !out_dir.empty()) {
            for (std::size_t m = 1; m < methods.size(); ++m) {
                const auto p = out_dir / "maps" / (vol_name + "_" + methods[m].name + "_vs_" + methods[0].name + ".iqv");
                save_volume(p, binary_improvement_map(high, estimates[m], estimates[0]));
                rep.maps.push_back(p);
            }
        }
    }
    rep.aggregates = aggregate_rows(rep.rows);
    if (!out_dir.empty()) {
        write_report_tsv(out_dir / "report.tsv", rep);
        std::ofstream os(out_dir / "summary.txt", std::ios::trunc);
        os << format_summary(rep);
    }
    return rep;
}

} // namespace iqt
