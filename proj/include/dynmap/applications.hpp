#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "dynmap/evaluation.hpp"
#include "dynmap/model.hpp"

namespace dynmap {

struct CandidateCell {
    GeoLocation location;
    OverheadFeature overhead;
};

struct LocalizationResult {
    std::vector<size_t> ranking;  // candidate indices, best first
    std::vector<DistanceProfile> profiles;
};

// Predicts attributes for every candidate using (candidate location, query
// time, candidate overhead), then ranks by combine distance to the query.
inline LocalizationResult localize(const AttributeTargets& query, const TimeOfCapture& query_time,
                                   const std::vector<CandidateCell>& candidates,
                                   const DynamicMapModel& model, const CombineConfig& cfg) {
    if (candidates.empty()) throw ValidationError("localize: empty candidate set");
    std::vector<std::pair<double, double>> raw;
    raw.reserve(candidates.size());
    for (const auto& c : candidates) {
        ContextInputs in;
        in.time_vec = encode_time(query_time);
        in.loc_vec = encode_location(c.location);
        in.overhead = c.overhead;
        const AttributePrediction pred = predict(model, in);
        raw.push_back(attribute_distance(query, pred.places, pred.transient));
    }
    const std::vector<double> combine = combine_distances(raw, cfg);
    LocalizationResult res;
    res.ranking = rank_candidates(combine);
    res.profiles.resize(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        res.profiles[i] = {raw[i].first, raw[i].second, combine[i]};
    }
    return res;
}

// 12x24 month-by-hour grid of combine distances; cell (m, h) flattens to
// index (m - 1) * 24 + h.
struct VerificationGrid {
    std::vector<double> distances;  // 288 entries, month-major
    TimeOfCapture truth{};
    size_t rank_of_truth = 0;
};

inline size_t time_grid_index(const TimeOfCapture& t) {
    return static_cast<size_t>(t.month - 1) * 24 + static_cast<size_t>(t.hour);
}

inline VerificationGrid verify_time(const AttributeTargets& query, const GeoLocation& location,
                                    const OverheadFeature& overhead, const DynamicMapModel& model,
                                    const CombineConfig& cfg, const TimeOfCapture& truth) {
    std::vector<std::pair<double, double>> raw;
    raw.reserve(12 * 24);
    ContextInputs in;
    in.loc_vec = encode_location(location);
    in.overhead = overhead;
    for (int month = 1; month <= 12; ++month) {
        for (int hour = 0; hour <= 23; ++hour) {
            in.time_vec = encode_time({month, hour});
            const AttributePrediction pred = predict(model, in);
            raw.push_back(attribute_distance(query, pred.places, pred.transient));
        }
    }
    VerificationGrid grid;
    grid.distances = combine_distances(raw, cfg);
    grid.truth = truth;
    const std::vector<size_t> ranking = rank_candidates(grid.distances);
    const size_t truth_idx = time_grid_index(truth);
    for (size_t r = 0; r < ranking.size(); ++r) {
        if (ranking[r] == truth_idx) {
            grid.rank_of_truth = r;
            break;
        }
    }
    return grid;
}

// Predicts once at (overhead, location, time) and ranks gallery records by
// combine distance between their stored targets and the prediction.
inline std::vector<std::string> retrieve(const OverheadFeature& overhead,
                                         const GeoLocation& location, const TimeOfCapture& time,
                                         const Dataset& gallery, const DynamicMapModel& model,
                                         const CombineConfig& cfg, size_t n) {
    if (gallery.records.empty()) throw ValidationError("retrieve: empty gallery");
    if (n > gallery.records.size()) throw ValidationError("retrieve: n exceeds gallery size");
    ContextInputs in;
    in.time_vec = encode_time(time);
    in.loc_vec = encode_location(location);
    in.overhead = overhead;
    const AttributePrediction pred = predict(model, in);

    // ranked by distance from each record's extracted attributes to the
    // prediction; KL direction keeps the record's targets as the reference
    std::vector<std::pair<double, double>> raw;
    raw.reserve(gallery.records.size());
    for (const auto& r : gallery.records) {
        raw.push_back(attribute_distance(r.targets, pred.places, pred.transient));
    }
    const std::vector<double> combine = combine_distances(raw, cfg);
    const std::vector<size_t> ranking = rank_candidates(combine);
    std::vector<std::string> ids;
    ids.reserve(n);
    for (size_t i = 0; i < n; ++i) ids.push_back(gallery.records[ranking[i]].id);
    return ids;
}

struct AttributeSelector {
    bool transient = true;
    size_t index = 0;
};

inline double select_attribute(const AttributePrediction& pred, const AttributeSelector& sel) {
    const auto& v = sel.transient ? pred.transient : pred.places;
    if (sel.index >= v.size()) throw ValidationError("attribute selector index out of range");
    return v[sel.index];
}

struct MapGridRequest {
    std::vector<CandidateCell> cells;  // row-major raster order as supplied
    TimeOfCapture time{};
    AttributeSelector attribute;
};

// One scalar per cell: the selected transient entry or places class
// probability at the requested time.
inline std::vector<double> render_attribute_map(const MapGridRequest& request,
                                                const DynamicMapModel& model) {
    if (request.cells.empty()) throw ValidationError("render_attribute_map: empty cell list");
    std::vector<double> values;
    values.reserve(request.cells.size());
    ContextInputs in;
    in.time_vec = encode_time(request.time);
    for (const auto& c : request.cells) {
        in.loc_vec = encode_location(c.location);
        in.overhead = c.overhead;
        values.push_back(select_attribute(predict(model, in), request.attribute));
    }
    return values;
}

inline void write_map_csv(const MapGridRequest& request, const std::vector<double>& values,
                          const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write map CSV: " + path);
    out << "lat,lon,value\n";
    out.precision(17);
    for (size_t i = 0; i < values.size(); ++i) {
        out << request.cells[i].location.lat_deg << ',' << request.cells[i].location.lon_deg << ','
            << values[i] << '\n';
    }
    if (!out) throw IoError("map CSV write failed: " + path);
}

// 8-bit binary PGM; pixel = round(255 * (v - min) / (max - min)), all zeros
// for a constant field. Values are rasterized row-major at width x height.
inline void write_pgm(const std::vector<double>& values, size_t width, size_t height,
                      const std::string& path) {
    if (values.size() != width * height) throw DimensionError("write_pgm: size mismatch");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write PGM: " + path);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    for (double v : values) {
        const int pixel = span > 0.0 ? static_cast<int>(std::lround(255.0 * (v - lo) / span)) : 0;
        out.put(static_cast<char>(pixel));
    }
    if (!out) throw IoError("PGM write failed: " + path);
}

// Model prediction of one scalar at every (month, hour); month-major 12x24.
inline std::vector<double> attribute_timeseries(const GeoLocation& location,
                                                const OverheadFeature& overhead,
                                                const DynamicMapModel& model,
                                                const AttributeSelector& sel) {
    std::vector<double> grid;
    grid.reserve(12 * 24);
    ContextInputs in;
    in.loc_vec = encode_location(location);
    in.overhead = overhead;
    for (int month = 1; month <= 12; ++month) {
        for (int hour = 0; hour <= 23; ++hour) {
            in.time_vec = encode_time({month, hour});
            grid.push_back(select_attribute(predict(model, in), sel));
        }
    }
    return grid;
}

inline void write_time_grid_csv(const std::vector<double>& grid, const std::string& path) {
    if (grid.size() != 12 * 24) throw DimensionError("write_time_grid_csv: expected 288 values");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write CSV: " + path);
    out << "month,hour,value\n";
    out.precision(17);
    for (int month = 1; month <= 12; ++month)
        for (int hour = 0; hour <= 23; ++hour)
            out << month << ',' << hour << ',' << grid[time_grid_index({month, hour})] << '\n';
    if (!out) throw IoError("CSV write failed: " + path);
}

}  // namespace dynmap
