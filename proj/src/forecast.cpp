#include "epicast/forecast.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "epicast/csv.hpp"
#include "epicast/dates.hpp"
#include "epicast/svg.hpp"

namespace epicast {

Vector predict_future(const NetworkParams& model, const FeatureScaler& scaler,
                      const Matrix& recent_input_raw) {
    const ModelConfig& cfg = model.config();
    if (recent_input_raw.cols() != static_cast<std::size_t>(cfg.feature_count))
        throw std::invalid_argument("predict_future: feature count mismatch");
    if (recent_input_raw.rows() < static_cast<std::size_t>(cfg.input_len))
        throw std::invalid_argument("predict_future: need at least " +
                                    std::to_string(cfg.input_len) + " days of input, got " +
                                    std::to_string(recent_input_raw.rows()));

    const std::size_t skip = recent_input_raw.rows() - cfg.input_len;
    Matrix window(cfg.input_len, cfg.feature_count);
    for (int t = 0; t < cfg.input_len; ++t)
        for (int c = 0; c < cfg.feature_count; ++c) window(t, c) = recent_input_raw(skip + t, c);

    const Matrix scaled = scaler.transform(window);
    const ForwardCache cache = network_forward(model, scaled);
    Vector daily(cfg.output_len);
    for (int k = 0; k < cfg.output_len; ++k)
        daily[k] = std::max(0.0, scaler.inverse_value(0, cache.prediction[k]));
    return daily;
}

Continuation cut_and_augment(const Vector& prediction_accum, int prediction_start,
                             const Vector& actual_accum, int actual_start,
                             AugmentRule rule) {
    if (prediction_accum.empty() || actual_accum.empty())
        throw std::invalid_argument("cut_and_augment: empty curves");
    const int anchor = actual_start + static_cast<int>(actual_accum.size()) - 1;
    const int cut = anchor - prediction_start;
    if (cut < 0 || cut >= static_cast<int>(prediction_accum.size()))
        throw std::invalid_argument("cut_and_augment: prediction calendar does not cover the "
                                    "end of the actuals");
    if (cut == static_cast<int>(prediction_accum.size()) - 1)
        throw std::invalid_argument("cut_and_augment: prediction has no days past the actuals");

    Continuation cont;
    cont.anchor_date = anchor;
    cont.rule = rule;
    const double actual_final = actual_accum.back();
    const double prediction_at_cut = prediction_accum[cut];

    const std::size_t tail = prediction_accum.size() - 1 - cut;
    cont.accumulated.resize(tail + 1);
    cont.accumulated[0] = actual_final;  // join row, exact by construction
    if (rule == AugmentRule::additive) {
        cont.offset = actual_final - prediction_at_cut;
        for (std::size_t j = 1; j <= tail; ++j)
            cont.accumulated[j] = prediction_accum[cut + j] + cont.offset;
    } else {
        if (prediction_at_cut <= 0.0)
            throw std::invalid_argument(
                "cut_and_augment: multiplicative rule needs a positive prediction at the cut");
        cont.offset = actual_final / prediction_at_cut;
        for (std::size_t j = 1; j <= tail; ++j)
            cont.accumulated[j] = prediction_accum[cut + j] * cont.offset;
    }

    cont.raw_daily.resize(tail);
    cont.shifted_daily.resize(tail);
    for (std::size_t j = 0; j < tail; ++j) {
        cont.raw_daily[j] = prediction_accum[cut + j + 1] - prediction_accum[cut + j];
        cont.shifted_daily[j] = cont.accumulated[j + 1] - cont.accumulated[j];
    }
    return cont;
}

namespace {

void append_rows(std::ostringstream& out, const std::string& region, int start_date,
                 const std::string& series, const std::string& kind, const Vector& values) {
    char buf[160];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%.10g\n", region.c_str(),
                      format_iso(start_date + static_cast<int>(i)).c_str(), series.c_str(),
                      kind.c_str(), values[i]);
        out << buf;
    }
}

}  // namespace

std::string series_csv(const TrialSet& set, const Continuation* continuation) {
    std::ostringstream out;
    out << "region,date,series,kind,value\n";
    const std::string region = csv_escape(set.region_id);
    append_rows(out, region, set.start_date, "actual", "daily", set.actual_daily);
    append_rows(out, region, set.start_date, "actual", "cumulative", set.actual_accum);

    // mean/min/max daily curves: pointwise over per-trial daily predictions
    const std::size_t trials = set.per_trial_daily.size();
    if (trials > 0) {
        const std::size_t len = set.per_trial_daily.front().size();
        Vector mean_daily(len, 0.0), min_daily(len, 0.0), max_daily(len, 0.0);
        for (std::size_t t = 0; t < len; ++t) {
            double lo = set.per_trial_daily[0][t], hi = lo, acc = 0.0;
            for (std::size_t k = 0; k < trials; ++k) {
                const double v = set.per_trial_daily[k][t];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                acc += v;
            }
            mean_daily[t] = acc / static_cast<double>(trials);
            min_daily[t] = lo;
            max_daily[t] = hi;
        }
        append_rows(out, region, set.start_date, "mean", "daily", mean_daily);
        append_rows(out, region, set.start_date, "min", "daily", min_daily);
        append_rows(out, region, set.start_date, "max", "daily", max_daily);
    }
    append_rows(out, region, set.start_date, "mean", "cumulative", set.mean_curve);
    append_rows(out, region, set.start_date, "min", "cumulative", set.min_curve);
    append_rows(out, region, set.start_date, "max", "cumulative", set.max_curve);

    if (continuation) {
        append_rows(out, region, continuation->anchor_date, "continuation", "cumulative",
                    continuation->accumulated);
        append_rows(out, region, continuation->anchor_date + 1, "continuation", "daily",
                    continuation->shifted_daily);
    }
    return out.str();
}

void emit_outputs(const TrialSet& set, const Continuation* continuation,
                  const std::string& path_prefix) {
    atomic_write_file(path_prefix + ".csv", series_csv(set, continuation));
    atomic_write_file(path_prefix + "_trials.csv", trial_curves_csv(set));

    ChartSpec chart;
    chart.title = set.region_id + ": accumulated confirmed cases";
    chart.y_label = "cumulative cases";
    chart.start_date = set.start_date;
    if (set.per_trial_accum.size() > 1)
        chart.bands.push_back({"trial envelope", "#7aa6d6", set.min_curve, set.max_curve, 0});
    chart.series.push_back({"actual", "#c62828", set.actual_accum, 0, 2.5, false});
    chart.series.push_back({"mean prediction", "#1565c0", set.mean_curve, 0, 2.5, false});
    if (continuation)
        chart.series.push_back({"continuation", "#2e7d32", continuation->accumulated,
                                continuation->anchor_date - set.start_date, 2.5, true});
    write_line_chart(chart, path_prefix + ".svg");
}

}  // namespace epicast
