#pragma once

#include <string>
#include <vector>

#include "epicast/errors.hpp"
#include "epicast/linalg.hpp"

namespace epicast {

/// One region's raw multivariate daily time series plus geo metadata.
/// Count series are cumulative, one entry per calendar day.
struct RegionSeries {
    std::string region_id;  // "Country" or "Country/Province"
    std::string country;
    std::string province;
    double latitude = 0.0;
    double longitude = 0.0;
    std::vector<double> confirmed;
    std::vector<double> deaths;
    std::vector<double> recovered;
    std::vector<int> dates;  // serial days, strictly increasing by 1

    // throws DataError on violated invariants
    void validate() const;
};

struct DailySeries {
    Vector values;
    int clamped = 0;  // negative first differences (data corrections) zeroed
};

/// Cumulative -> daily new counts. output[0] = input[0], negative differences
/// are clamped to 0 and counted.
DailySeries to_daily(const std::vector<double>& cumulative);

/// Running prefix sum; inverse of to_daily for non-decreasing input.
Vector accumulate(const Vector& daily);

/// Per-feature min/max pairs; transform maps the fitted range onto [0, 1].
/// Out-of-range inputs extrapolate linearly (validation data may exceed the
/// training range). Degenerate features (max == min) transform to 0 and
/// invert to the constant min.
struct FeatureScaler {
    Vector feature_min;
    Vector feature_max;

    std::size_t feature_count() const { return feature_min.size(); }
    double transform_value(std::size_t feature, double x) const;
    double inverse_value(std::size_t feature, double scaled) const;
    Matrix transform(const Matrix& m) const;
    Matrix inverse_transform(const Matrix& m) const;
};

/// Min/max over the whole corpus (training regions only, by contract).
FeatureScaler fit_scaler(const std::vector<Matrix>& corpus);

struct AssembleOptions {
    bool difference_deaths_recovered = true;  // false keeps those two cumulative
};

/// Feature matrix, one row per day: daily confirmed, daily deaths, daily
/// recovered, latitude, longitude.
Matrix assemble_features(const RegionSeries& series, const AssembleOptions& opts = {});

inline constexpr int kFeatureCount = 5;

/// One region's training example: scaled multivariate input window plus the
/// scaled daily-confirmed target covering the full output range (the model
/// reconstructs the input days and extrapolates the rest).
struct WindowPair {
    Matrix input;         // input_len x feature_count, scaled
    Vector target;        // output_len, scaled daily confirmed
    Vector actual_daily;  // output_len, unscaled daily confirmed (for scoring)
    std::string region_id;
    int start_date = 0;  // serial day of the window's first entry
};

// ---- CSV ingestion (JHU wide layout) ----

struct CsvSchema {
    int province_col = 0;
    int country_col = 1;
    int lat_col = 2;
    int lon_col = 3;
    int first_date_col = 4;
};

/// One row of a single count CSV before the three files are joined.
struct RegionCounts {
    std::string country;
    std::string province;
    double latitude = 0.0;
    double longitude = 0.0;
    std::vector<int> dates;
    Vector counts;

    std::string id() const { return province.empty() ? country : country + "/" + province; }
};

/// Parses one wide-format CSV. Throws DataError on malformed headers,
/// non-uniform dates, out-of-range coordinates or negative counts (the
/// message names the row and column).
std::vector<RegionCounts> load_region_csv(const std::string& path, const CsvSchema& schema = {});

/// Inner join of the three count files on (country, province).
std::vector<RegionSeries> join_region_tables(const std::vector<RegionCounts>& confirmed,
                                             const std::vector<RegionCounts>& deaths,
                                             const std::vector<RegionCounts>& recovered);

/// Resolves configured region names: an exact "Country/Province" id matches
/// one row, a bare country name matches every row of that country. Unresolved
/// names are reported through `missing`, not fatal.
std::vector<RegionSeries> select_regions(const std::vector<RegionSeries>& all,
                                         const std::vector<std::string>& names,
                                         std::vector<std::string>* missing = nullptr);

// ---- window assembly ----

struct WindowOptions {
    int input_len = 67;
    int output_len = 100;
    int start_date = 0;  // serial; windows cover [start, start + output_len)
};

struct PreparedData {
    FeatureScaler scaler;  // fitted on training regions only
    std::vector<WindowPair> train_windows;
    std::vector<WindowPair> val_windows;
};

/// Fits the scaler on the training regions' window slices, then builds one
/// WindowPair per region. Regions with fewer than output_len days from the
/// start date are skipped with a warning.
PreparedData prepare_windows(const std::vector<RegionSeries>& train_regions,
                             const std::vector<RegionSeries>& val_regions,
                             const WindowOptions& wopts, const AssembleOptions& aopts = {},
                             std::vector<std::string>* warnings = nullptr);

}  // namespace epicast
