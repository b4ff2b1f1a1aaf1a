#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "iqt/degrade.hpp"
#include "iqt/error.hpp"
#include "iqt/phantom.hpp"
#include "iqt/random.hpp"
#include "iqt/snr.hpp"
#include "iqt/volume.hpp"

namespace iqt {

struct DatasetPair {
    Volume3D high;
    Volume3D low;
    TissueMasks tissue;
    SnrPair snr;
    Regime regime = Regime::Train;
    std::uint64_t seed = 0;
};

struct SnrModel {
    SnrDistribution ind = SnrDistribution::default_ind();
    SnrDistribution ood = SnrDistribution::default_ood();
};

/// Synthesises `n` aligned (high, low) pairs: fresh phantom, regime-sampled
/// SNR pair, degradation. Each volume draws from its own named substreams of
/// `seed`, so volume v is reproducible on its own.
inline std::vector<DatasetPair> build_dataset(std::size_t n, Regime regime, const SnrModel& snr_model,
                                              const PhantomSpec& phantom, const DegradationParams& degradation,
                                              std::uint64_t seed) {
    std::vector<DatasetPair> out;
    out.reserve(n);
    const std::string tag(to_string(regime));
    for (std::size_t v = 0; v < n; ++v) {
        const std::uint64_t vol_seed = substream_seed(seed, "dataset/" + tag, v);
        PhantomSpec ps = phantom;
        ps.seed = substream_seed(vol_seed, "phantom");
        Phantom ph = make_phantom(ps);
        const SnrPair snr = sample_snr(snr_model.ind, regime, snr_model.ood, substream_seed(vol_seed, "snr"));
        DegradationParams dp = degradation;
        dp.snr = snr;
        dp.noise_seed = substream_seed(vol_seed, "noise");
        Volume3D low = degrade(ph.volume, dp, &ph.tissue);
        out.push_back({std::move(ph.volume), std::move(low), std::move(ph.tissue), snr, regime, vol_seed});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest: one tab-separated record per pair,
//   high_path  low_path  regime  snr_gm  snr_wm  seed
// Lines starting with '#' are comments. Relative paths resolve against the
// manifest's directory.
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::filesystem::path high;
    std::filesystem::path low;
    Regime regime = Regime::Train;
    SnrPair snr;
    std::uint64_t seed = 0;
};

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write manifest '" + path.string() + "'");
    os << "# high\tlow\tregime\tsnr_gm\tsnr_wm\tseed\n";
    for (const auto& e : entries) {
        os << e.high.generic_string() << '\t' << e.low.generic_string() << '\t' << to_string(e.regime) << '\t'
           << format_double(e.snr.gm) << '\t' << format_double(e.snr.wm) << '\t' << e.seed << '\n';
    }
    if (!os) throw DataError("write failed for manifest '" + path.string() + "'");
}

/// Parses a manifest; relative paths are resolved against its directory.
inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest '" + path.string() + "'");
    const auto base = path.parent_path();
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t')) f.push_back(field);
        if (f.size() != 6) {
            throw DataError("manifest line " + std::to_string(lineno) + ": expected 6 tab-separated fields");
        }
        ManifestEntry e;
        e.high = f[0];
        e.low = f[1];
        if (e.high.is_relative()) e.high = base / e.high;
        if (e.low.is_relative()) e.low = base / e.low;
        try {
            e.regime = parse_regime(f[2]);
            e.snr.gm = std::stod(f[3]);
            e.snr.wm = std::stod(f[4]);
            e.seed = std::stoull(f[5]);
        } catch (const std::exception& ex) {
            throw DataError("manifest line " + std::to_string(lineno) + ": " + ex.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

/// Writes every pair as <dir>/<regime>_<nnn>_{high,low}.iqv and a manifest
/// `manifest_<regime>.tsv` in `dir`; returns the manifest path.
inline std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::vector<DatasetPair>& pairs,
                                           Regime regime) {
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> entries;
    const std::string tag(to_string(regime));
    for (std::size_t v = 0; v < pairs.size(); ++v) {
        char idx[16];
        std::snprintf(idx, sizeof(idx), "%03zu", v);
        const std::string stem = tag + "_" + idx;
        save_volume(dir / (stem + "_high.iqv"), pairs[v].high);
        save_volume(dir / (stem + "_low.iqv"), pairs[v].low);
        entries.push_back({stem + "_high.iqv", stem + "_low.iqv", pairs[v].regime, pairs[v].snr, pairs[v].seed});
    }
    const auto manifest = dir / ("manifest_" + tag + ".tsv");
    write_manifest(manifest, entries);
    return manifest;
}

} // namespace iqt
