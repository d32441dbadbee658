#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dynmap/core.hpp"

namespace dynmap {

struct GeoLocation {
    double lat_deg = 0.0;  // [-90, 90]
    double lon_deg = 0.0;  // (-180, 180]
};

struct TimeOfCapture {
    int month = 1;  // [1, 12]
    int hour = 0;   // [0, 23]
};

struct OverheadFeature {
    std::vector<double> values;
};

struct AttributeTargets {
    std::vector<double> places;     // length P, nonnegative, sums to 1
    std::vector<double> transient;  // length A, entries in [0, 1]
};

struct SampleRecord {
    std::string id;
    GeoLocation location;
    TimeOfCapture time;
    OverheadFeature overhead;
    AttributeTargets targets;
};

struct Dims {
    size_t overhead = 2048;
    size_t places = 365;
    size_t transient = 40;
};

struct Dataset {
    Dims dims;
    std::vector<SampleRecord> records;
};

inline constexpr double kPlacesSumTolerance = 1e-5;

// Scales a nonnegative vector to sum to exactly 1.0: after the division the
// largest entry absorbs the rounding residual (a couple of passes reach the
// fixed point).
inline void renormalize_exactly(std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
    for (int pass = 0; pass < 8; ++pass) {
        double s = 0.0;
        for (double x : v) s += x;
        if (s == 1.0) break;
        auto it = std::max_element(v.begin(), v.end());
        *it += 1.0 - s;
    }
}

// Maps longitude into (-180, 180]; -180 maps to +180.
inline double normalize_longitude(double lon_deg) {
    double lon = std::fmod(lon_deg, 360.0);
    if (lon <= -180.0) lon += 360.0;
    if (lon > 180.0) lon -= 360.0;
    return lon;
}

namespace detail {

inline void require_finite(const std::vector<double>& v, const std::string& what,
                           const std::string& id) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw ValidationError("record '" + id + "': non-finite entry in " + what);
        }
    }
}

}  // namespace detail

// Checks all invariants of a record against the manifest dimensions.
// Renormalizes the places vector exactly when its sum is within tolerance of 1.
inline void validate_record(SampleRecord& r, const Dims& dims) {
    if (!std::isfinite(r.location.lat_deg) || r.location.lat_deg < -90.0 ||
        r.location.lat_deg > 90.0) {
        throw ValidationError("record '" + r.id + "': latitude out of range [-90, 90]");
    }
    if (!std::isfinite(r.location.lon_deg)) {
        throw ValidationError("record '" + r.id + "': non-finite longitude");
    }
    r.location.lon_deg = normalize_longitude(r.location.lon_deg);
    if (r.time.month < 1 || r.time.month > 12) {
        throw ValidationError("record '" + r.id + "': month out of range [1, 12]");
    }
    if (r.time.hour < 0 || r.time.hour > 23) {
        throw ValidationError("record '" + r.id + "': hour out of range [0, 23]");
    }
    if (r.overhead.values.size() != dims.overhead) {
        throw ValidationError("record '" + r.id + "': overhead length " +
                              std::to_string(r.overhead.values.size()) +
                              " does not match manifest " + std::to_string(dims.overhead));
    }
    detail::require_finite(r.overhead.values, "overhead feature", r.id);
    if (r.targets.places.size() != dims.places) {
        throw ValidationError("record '" + r.id + "': places length mismatch");
    }
    detail::require_finite(r.targets.places, "places target", r.id);
    double sum = 0.0;
    for (double p : r.targets.places) {
        if (p < 0.0) throw ValidationError("record '" + r.id + "': negative places entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kPlacesSumTolerance) {
        throw ValidationError("record '" + r.id + "': places vector not normalized (sum = " +
                              std::to_string(sum) + ")");
    }
    renormalize_exactly(r.targets.places);
    if (r.targets.transient.size() != dims.transient) {
        throw ValidationError("record '" + r.id + "': transient length mismatch");
    }
    detail::require_finite(r.targets.transient, "transient target", r.id);
    for (double t : r.targets.transient) {
        if (t < 0.0 || t > 1.0) {
            throw ValidationError("record '" + r.id + "': transient entry outside [0, 1]");
        }
    }
}

inline nlohmann::json record_to_json(const SampleRecord& r) {
    return nlohmann::json{{"id", r.id},
                          {"lat", r.location.lat_deg},
                          {"lon", r.location.lon_deg},
                          {"month", r.time.month},
                          {"hour", r.time.hour},
                          {"overhead", r.overhead.values},
                          {"places", r.targets.places},
                          {"transient", r.targets.transient}};
}

inline SampleRecord record_from_json(const nlohmann::json& j) {
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    r.location.lat_deg = j.at("lat").get<double>();
    r.location.lon_deg = j.at("lon").get<double>();
    r.time.month = j.at("month").get<int>();
    r.time.hour = j.at("hour").get<int>();
    r.overhead.values = j.at("overhead").get<std::vector<double>>();
    r.targets.places = j.at("places").get<std::vector<double>>();
    r.targets.transient = j.at("transient").get<std::vector<double>>();
    return r;
}

// JSONL: first line is the manifest, one record object per line after it.
inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);

    std::string line;
    size_t line_no = 0;
    Dataset ds;
    std::unordered_set<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            // covers parse errors and numeric overflow (e.g. 1e999)
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        try {
            if (line_no == 1) {
                const auto& d = j.at("dims");
                ds.dims.overhead = d.at("overhead").get<size_t>();
                ds.dims.places = d.at("places").get<size_t>();
                ds.dims.transient = d.at("transient").get<size_t>();
                if (ds.dims.overhead == 0 || ds.dims.places == 0 || ds.dims.transient == 0) {
                    throw ValidationError("manifest dimensions must be positive");
                }
                continue;
            }
            SampleRecord r = record_from_json(j);
            validate_record(r, ds.dims);
            if (!seen_ids.insert(r.id).second) {
                throw ValidationError("duplicate record id '" + r.id + "'");
            }
            ds.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (line_no == 0) throw IoError(path + ": empty file, expected manifest line");
    return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset file: " + path);
    nlohmann::json manifest{{"dims",
                             {{"overhead", ds.dims.overhead},
                              {"places", ds.dims.places},
                              {"transient", ds.dims.transient}}}};
    out << manifest.dump() << '\n';
    for (const auto& r : ds.records) out << record_to_json(r).dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

// Seeded disjoint partition; |test| = round(test_fraction * N).
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                                 uint64_t seed) {
    const size_t n = ds.records.size();
    if (n < 2) throw ValidationError("split_dataset: need at least 2 records");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("split_dataset: test_fraction must be in (0, 1)");
    }
    const size_t n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));

    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    for (size_t i = n - 1; i > 0; --i) {
        size_t j = rng.uniform_int(i + 1);
        std::swap(idx[i], idx[j]);
    }
    std::vector<size_t> test_idx(idx.begin(), idx.begin() + n_test);
    std::vector<size_t> train_idx(idx.begin() + n_test, idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    Dataset train{ds.dims, {}}, test{ds.dims, {}};
    train.records.reserve(train_idx.size());
    test.records.reserve(test_idx.size());
    for (size_t i : train_idx) train.records.push_back(ds.records[i]);
    for (size_t i : test_idx) test.records.push_back(ds.records[i]);
    return {std::move(train), std::move(test)};
}

}  // namespace dynmap
