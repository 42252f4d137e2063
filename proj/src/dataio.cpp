#include "epicast/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "epicast/csv.hpp"
#include "epicast/dates.hpp"

namespace epicast {

void RegionSeries::validate() const {
    const std::size_t n = dates.size();
    if (confirmed.size() != n || deaths.size() != n || recovered.size() != n)
        throw DataError("region " + region_id + ": series lengths differ from date count");
    for (std::size_t i = 1; i < n; ++i)
        if (dates[i] != dates[i - 1] + 1)
            throw DataError("region " + region_id + ": dates not uniform daily at index " +
                            std::to_string(i));
    if (latitude < -90.0 || latitude > 90.0)
        throw DataError("region " + region_id + ": latitude " + std::to_string(latitude) +
                        " outside [-90, 90]");
    if (longitude < -180.0 || longitude > 180.0)
        throw DataError("region " + region_id + ": longitude " + std::to_string(longitude) +
                        " outside [-180, 180]");
}

DailySeries to_daily(const std::vector<double>& cumulative) {
    DailySeries out;
    out.values.reserve(cumulative.size());
    double prev = 0.0;
    for (double c : cumulative) {
        double diff = c - prev;
        if (diff < 0.0) {
            diff = 0.0;
            ++out.clamped;
        }
        out.values.push_back(diff);
        prev = c;
    }
    return out;
}

Vector accumulate(const Vector& daily) {
    Vector out;
    out.reserve(daily.size());
    double total = 0.0;
    for (double d : daily) {
        total += d;
        out.push_back(total);
    }
    return out;
}

double FeatureScaler::transform_value(std::size_t feature, double x) const {
    const double lo = feature_min[feature];
    const double hi = feature_max[feature];
    if (hi == lo) return 0.0;
    return (x - lo) / (hi - lo);
}

double FeatureScaler::inverse_value(std::size_t feature, double scaled) const {
    const double lo = feature_min[feature];
    const double hi = feature_max[feature];
    if (hi == lo) return lo;
    return scaled * (hi - lo) + lo;
}

Matrix FeatureScaler::transform(const Matrix& m) const {
    if (m.cols() != feature_count())
        throw std::invalid_argument("transform: matrix has " + std::to_string(m.cols()) +
                                    " features, scaler has " + std::to_string(feature_count()));
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = transform_value(c, m(r, c));
    return out;
}

Matrix FeatureScaler::inverse_transform(const Matrix& m) const {
    if (m.cols() != feature_count())
        throw std::invalid_argument("inverse_transform: matrix has " + std::to_string(m.cols()) +
                                    " features, scaler has " + std::to_string(feature_count()));
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = inverse_value(c, m(r, c));
    return out;
}

FeatureScaler fit_scaler(const std::vector<Matrix>& corpus) {
    if (corpus.empty()) throw std::invalid_argument("fit_scaler: empty corpus");
    const std::size_t features = corpus.front().cols();
    FeatureScaler scaler;
    scaler.feature_min.assign(features, std::numeric_limits<double>::infinity());
    scaler.feature_max.assign(features, -std::numeric_limits<double>::infinity());
    for (const Matrix& m : corpus) {
        if (m.cols() != features)
            throw std::invalid_argument("fit_scaler: inconsistent feature counts in corpus");
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t c = 0; c < features; ++c) {
                scaler.feature_min[c] = std::min(scaler.feature_min[c], m(r, c));
                scaler.feature_max[c] = std::max(scaler.feature_max[c], m(r, c));
            }
    }
    return scaler;
}

Matrix assemble_features(const RegionSeries& series, const AssembleOptions& opts) {
    series.validate();
    const std::size_t n = series.dates.size();
    Matrix out(n, kFeatureCount);
    const Vector confirmed_daily = to_daily(series.confirmed).values;
    Vector deaths_col, recovered_col;
    if (opts.difference_deaths_recovered) {
        deaths_col = to_daily(series.deaths).values;
        recovered_col = to_daily(series.recovered).values;
    } else {
        deaths_col = series.deaths;
        recovered_col = series.recovered;
    }
    for (std::size_t r = 0; r < n; ++r) {
        out(r, 0) = confirmed_daily[r];
        out(r, 1) = deaths_col[r];
        out(r, 2) = recovered_col[r];
        out(r, 3) = series.latitude;
        out(r, 4) = series.longitude;
    }
    return out;
}

// ---- CSV ingestion ----

namespace {

double parse_number(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("cannot parse number '" + s + "' in " + context);
    }
}

}  // namespace

std::vector<RegionCounts> load_region_csv(const std::string& path, const CsvSchema& schema) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw DataError(path + ": empty file");
    const auto& header = rows.front();
    const std::size_t min_cols = static_cast<std::size_t>(schema.first_date_col) + 1;
    if (header.size() < min_cols)
        throw DataError(path + ": header has " + std::to_string(header.size()) +
                        " columns, expected at least " + std::to_string(min_cols));

    std::vector<int> dates;
    dates.reserve(header.size() - schema.first_date_col);
    for (std::size_t c = schema.first_date_col; c < header.size(); ++c) {
        int serial;
        try {
            serial = parse_mdy(header[c]);
        } catch (const std::exception& e) {
            throw DataError(path + ": header column " + std::to_string(c + 1) + ": " + e.what());
        }
        if (!dates.empty() && serial != dates.back() + 1)
            throw DataError(path + ": date column " + header[c] +
                            " does not follow the previous day");
        dates.push_back(serial);
    }

    std::vector<RegionCounts> out;
    out.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw DataError(path + ": row " + std::to_string(r + 1) + " has " +
                            std::to_string(row.size()) + " columns, header has " +
                            std::to_string(header.size()));
        RegionCounts rec;
        rec.province = row[schema.province_col];
        rec.country = row[schema.country_col];
        const std::string where = path + ": row " + std::to_string(r + 1) + " (" + rec.id() + ")";
        rec.latitude = parse_number(row[schema.lat_col], where + " latitude");
        rec.longitude = parse_number(row[schema.lon_col], where + " longitude");
        if (rec.latitude < -90.0 || rec.latitude > 90.0)
            throw DataError(where + ": latitude " + row[schema.lat_col] + " outside [-90, 90]");
        if (rec.longitude < -180.0 || rec.longitude > 180.0)
            throw DataError(where + ": longitude " + row[schema.lon_col] +
                            " outside [-180, 180]");
        rec.dates = dates;
        rec.counts.reserve(dates.size());
        for (std::size_t c = schema.first_date_col; c < row.size(); ++c) {
            const double v = parse_number(row[c], where + " column " + header[c]);
            if (v < 0.0)
                throw DataError(where + ": negative count in column " + header[c]);
            rec.counts.push_back(v);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RegionSeries> join_region_tables(const std::vector<RegionCounts>& confirmed,
                                             const std::vector<RegionCounts>& deaths,
                                             const std::vector<RegionCounts>& recovered) {
    auto index = [](const std::vector<RegionCounts>& rows) {
        std::map<std::string, const RegionCounts*> m;
        for (const auto& r : rows) m[r.id()] = &r;
        return m;
    };
    const auto deaths_by_id = index(deaths);
    const auto recovered_by_id = index(recovered);

    std::vector<RegionSeries> out;
    out.reserve(confirmed.size());
    for (const auto& c : confirmed) {
        const auto d = deaths_by_id.find(c.id());
        const auto v = recovered_by_id.find(c.id());
        if (d == deaths_by_id.end() || v == recovered_by_id.end()) continue;  // inner join
        RegionSeries s;
        s.region_id = c.id();
        s.country = c.country;
        s.province = c.province;
        s.latitude = c.latitude;
        s.longitude = c.longitude;
        s.dates = c.dates;
        s.confirmed = c.counts;
        // the join is on identity, not calendar: all three files must share the date axis
        if (d->second->dates != c.dates || v->second->dates != c.dates)
            throw DataError("region " + c.id() + ": date axes differ between count files");
        s.deaths = d->second->counts;
        s.recovered = v->second->counts;
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RegionSeries> select_regions(const std::vector<RegionSeries>& all,
                                         const std::vector<std::string>& names,
                                         std::vector<std::string>* missing) {
    std::vector<RegionSeries> out;
    std::set<std::string> taken;
    for (const std::string& name : names) {
        bool found = false;
        for (const RegionSeries& s : all) {
            if (s.region_id == name || s.country == name) {
                found = true;
                if (taken.insert(s.region_id).second) out.push_back(s);
            }
        }
        if (!found && missing) missing->push_back(name);
    }
    return out;
}

PreparedData prepare_windows(const std::vector<RegionSeries>& train_regions,
                             const std::vector<RegionSeries>& val_regions,
                             const WindowOptions& wopts, const AssembleOptions& aopts,
                             std::vector<std::string>* warnings) {
    if (wopts.input_len < 1 || wopts.output_len < wopts.input_len)
        throw std::invalid_argument("prepare_windows: need 1 <= input_len <= output_len");

    struct Slice {
        const RegionSeries* region;
        Matrix features;  // output_len x kFeatureCount, unscaled
    };

    auto slice_regions = [&](const std::vector<RegionSeries>& regions) {
        std::vector<Slice> slices;
        for (const RegionSeries& r : regions) {
            if (r.dates.empty()) continue;
            const int offset = wopts.start_date - r.dates.front();
            if (offset < 0 ||
                offset + wopts.output_len > static_cast<int>(r.dates.size())) {
                if (warnings)
                    warnings->push_back("region " + r.region_id + " has fewer than " +
                                        std::to_string(wopts.output_len) +
                                        " days from the start date; skipped");
                continue;
            }
            const Matrix full = assemble_features(r, aopts);
            Matrix window(wopts.output_len, kFeatureCount);
            for (int t = 0; t < wopts.output_len; ++t)
                for (int c = 0; c < kFeatureCount; ++c) window(t, c) = full(offset + t, c);
            slices.push_back({&r, std::move(window)});
        }
        return slices;
    };

    const auto train_slices = slice_regions(train_regions);
    const auto val_slices = slice_regions(val_regions);
    if (train_slices.empty())
        throw DataError("no training region covers the configured window");

    std::vector<Matrix> corpus;
    corpus.reserve(train_slices.size());
    for (const auto& s : train_slices) corpus.push_back(s.features);

    PreparedData prepared;
    prepared.scaler = fit_scaler(corpus);

    auto build = [&](const std::vector<Slice>& slices, std::vector<WindowPair>& out) {
        for (const auto& s : slices) {
            const Matrix scaled = prepared.scaler.transform(s.features);
            WindowPair w;
            w.region_id = s.region->region_id;
            w.start_date = wopts.start_date;
            w.input = Matrix(wopts.input_len, kFeatureCount);
            for (int t = 0; t < wopts.input_len; ++t)
                for (int c = 0; c < kFeatureCount; ++c) w.input(t, c) = scaled(t, c);
            w.target.resize(wopts.output_len);
            w.actual_daily.resize(wopts.output_len);
            for (int t = 0; t < wopts.output_len; ++t) {
                w.target[t] = scaled(t, 0);
                w.actual_daily[t] = s.features(t, 0);
            }
            out.push_back(std::move(w));
        }
    };
    build(train_slices, prepared.train_windows);
    build(val_slices, prepared.val_windows);
    return prepared;
}

}  // namespace epicast
