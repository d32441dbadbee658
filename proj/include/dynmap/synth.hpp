#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dynmap/dataset.hpp"

namespace dynmap::synth {

// Synthetic world generator. Everything below is an exact, frozen test fixture:
// the oracle recomputes the same formulas with zero noise, so learned models
// can be checked against known conditional ground truth.
//
// Structure: the region lat in [-60, 60], lon in [-180, 180] is tiled into
// rectangular cells. Each cell carries a scene class s (drives the Places
// target) and a latent vector z (drives the overhead feature, overhead = M z).
// Transient targets are smooth functions of (month, hour, lat) plus an offset
// per latitude band, squashed by the logistic function -- by construction they
// are invariant to longitude.

struct WorldConfig {
    Dims dims{16, 10, 6};
    size_t n_scene_cells = 60;
    double noise_sigma = 0.0;
    uint64_t seed = 0;
};

inline constexpr double kLatMin = -60.0;
inline constexpr double kLatMax = 60.0;
inline constexpr double kLonMin = -180.0;
inline constexpr double kLonMax = 180.0;
inline constexpr double kPlacesSharpness = 4.0;  // tau
inline constexpr size_t kLatentDim = 8;

struct CellGrid {
    size_t n_rows;
    size_t n_cols;
    size_t n_cells;
};

inline CellGrid make_grid(const WorldConfig& cfg) {
    if (cfg.n_scene_cells == 0) throw ValidationError("world: n_scene_cells must be positive");
    // lon span is 3x the lat span; aim for roughly square cells
    size_t rows = static_cast<size_t>(
        std::max(1.0, std::round(std::sqrt(static_cast<double>(cfg.n_scene_cells) / 3.0))));
    size_t cols = (cfg.n_scene_cells + rows - 1) / rows;
    return {rows, cols, cfg.n_scene_cells};
}

inline size_t lat_band_of(const CellGrid& grid, double lat) {
    double f = (lat - kLatMin) / (kLatMax - kLatMin);
    auto row = static_cast<size_t>(f * static_cast<double>(grid.n_rows));
    return std::min(row, grid.n_rows - 1);
}

// Tiles beyond n_cells wrap around, so distant rectangles may share a scene.
inline size_t cell_of(const CellGrid& grid, const GeoLocation& loc) {
    if (loc.lat_deg < kLatMin || loc.lat_deg > kLatMax) {
        throw ValidationError("world: latitude outside generator bounds [-60, 60]");
    }
    size_t row = lat_band_of(grid, loc.lat_deg);
    double g = (loc.lon_deg - kLonMin) / (kLonMax - kLonMin);
    auto col = static_cast<size_t>(g * static_cast<double>(grid.n_cols));
    col = std::min(col, grid.n_cols - 1);
    return (row * grid.n_cols + col) % grid.n_cells;
}

struct SceneCell {
    size_t scene_class;          // in [0, P)
    std::vector<double> latent;  // length kLatentDim
};

inline SceneCell make_cell(const WorldConfig& cfg, size_t cell_id) {
    Rng rng(derive_seed(cfg.seed, "cell", cell_id));
    SceneCell c;
    c.scene_class = rng.uniform_int(cfg.dims.places);
    c.latent.resize(kLatentDim);
    for (double& z : c.latent) z = rng.normal();
    return c;
}

// Fixed D x kLatentDim mixing matrix; overhead = mix * latent (+ noise).
inline std::vector<double> make_mixing_matrix(const WorldConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, "mix"));
    std::vector<double> m(cfg.dims.overhead * kLatentDim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kLatentDim));
    for (double& x : m) x = rng.normal() * scale;
    return m;
}

inline double band_offset(const WorldConfig& cfg, size_t band, size_t attr) {
    Rng rng(derive_seed(cfg.seed, "band", band * 1024 + attr));
    return rng.uniform(-0.6, 0.6);
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Pre-squash transient signal for attribute j. Entry 0 peaks at noon with
// amplitude modulated by |lat| and month; entry 1 peaks in January in the
// north and July in the south; higher entries are generic smooth waves.
inline double transient_raw(const WorldConfig& cfg, size_t j, const TimeOfCapture& t, double lat,
                            size_t band) {
    const double m = static_cast<double>(t.month);
    const double h = static_cast<double>(t.hour);
    const double off = band_offset(cfg, band, j);
    if (j == 0) {
        const double amp = 1.2 + 0.6 * (std::abs(lat) / 60.0) * std::cos(2.0 * M_PI * (m - 6.5) / 12.0);
        return amp * std::cos(2.0 * M_PI * (h - 12.0) / 24.0) + off;
    }
    if (j == 1) {
        return 1.5 * std::cos(2.0 * M_PI * (m - 1.0) / 12.0) * std::tanh(lat / 30.0) + off;
    }
    const double jd = static_cast<double>(j);
    const double a = 0.9 + 0.15 * static_cast<double>((j * 3) % 4);
    const double b = 0.7 + 0.1 * static_cast<double>((j * 5) % 3);
    const double c = (j % 2 == 0) ? 0.8 : -0.8;
    return a * std::sin(2.0 * M_PI * h / 24.0 + 0.7 * jd) +
           b * std::cos(2.0 * M_PI * (m - 1.0) / 12.0 + 1.3 * jd) + c * (lat / 60.0) + off;
}

// Exact noiseless P(a | t, l) of the synthetic world.
inline AttributeTargets oracle_attributes(const WorldConfig& cfg, const GeoLocation& loc,
                                          const TimeOfCapture& t) {
    const CellGrid grid = make_grid(cfg);
    const size_t cell_id = cell_of(grid, loc);
    const SceneCell cell = make_cell(cfg, cell_id);
    const size_t band = lat_band_of(grid, loc.lat_deg);

    AttributeTargets a;
    a.places.assign(cfg.dims.places, 0.0);
    a.places[cell.scene_class] = kPlacesSharpness;
    const double mx = kPlacesSharpness;
    for (double& p : a.places) p = std::exp(p - mx);
    renormalize_exactly(a.places);

    a.transient.resize(cfg.dims.transient);
    for (size_t j = 0; j < cfg.dims.transient; ++j) {
        a.transient[j] = logistic(transient_raw(cfg, j, t, loc.lat_deg, band));
    }
    return a;
}

inline Dataset generate_world(const WorldConfig& cfg, size_t n_samples) {
    if (n_samples < 1) throw ValidationError("generate_world: n_samples must be >= 1");
    if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
        throw ValidationError("generate_world: noise_sigma must be finite and >= 0");
    }
    if (cfg.dims.overhead == 0 || cfg.dims.places == 0 || cfg.dims.transient == 0) {
        throw ValidationError("generate_world: dimensions must be positive");
    }
    const CellGrid grid = make_grid(cfg);
    const std::vector<double> mix = make_mixing_matrix(cfg);

    std::vector<SceneCell> cells;
    cells.reserve(grid.n_cells);
    for (size_t c = 0; c < grid.n_cells; ++c) cells.push_back(make_cell(cfg, c));

    Dataset ds;
    ds.dims = cfg.dims;
    ds.records.reserve(n_samples);
    for (size_t i = 0; i < n_samples; ++i) {
        Rng rng(derive_seed(cfg.seed, "sample", i));
        SampleRecord r;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "s%06zu", i);
        r.id = buf;
        r.location.lat_deg = rng.uniform(kLatMin, kLatMax);
        r.location.lon_deg = rng.uniform(kLonMin, kLonMax);
        r.time.month = static_cast<int>(rng.uniform_int(12)) + 1;
        r.time.hour = static_cast<int>(rng.uniform_int(24));

        const size_t cell_id = cell_of(grid, r.location);
        const SceneCell& cell = cells[cell_id];
        const size_t band = lat_band_of(grid, r.location.lat_deg);

        r.overhead.values.resize(cfg.dims.overhead);
        for (size_t d = 0; d < cfg.dims.overhead; ++d) {
            double acc = 0.0;
            const double* row = &mix[d * kLatentDim];
            for (size_t l = 0; l < kLatentDim; ++l) acc += row[l] * cell.latent[l];
            r.overhead.values[d] = acc + cfg.noise_sigma * rng.normal();
        }

        std::vector<double> logits(cfg.dims.places, 0.0);
        logits[cell.scene_class] = kPlacesSharpness;
        for (double& z : logits) z += cfg.noise_sigma * rng.normal();
        const double mx = *std::max_element(logits.begin(), logits.end());
        for (double& z : logits) z = std::exp(z - mx);
        renormalize_exactly(logits);
        r.targets.places = std::move(logits);

        r.targets.transient.resize(cfg.dims.transient);
        for (size_t j = 0; j < cfg.dims.transient; ++j) {
            const double raw = transient_raw(cfg, j, r.time, r.location.lat_deg, band);
            r.targets.transient[j] = logistic(raw + cfg.noise_sigma * rng.normal());
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace dynmap::synth
