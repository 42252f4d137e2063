#include "epicast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "epicast/csv.hpp"

namespace epicast {

double rmse(const Vector& prediction, const Vector& actual) {
    if (prediction.size() != actual.size())
        throw std::invalid_argument("rmse: length mismatch (" + std::to_string(prediction.size()) +
                                    " vs " + std::to_string(actual.size()) + ")");
    if (prediction.empty()) throw std::invalid_argument("rmse: empty sequences");
    double acc = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - actual[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(prediction.size()));
}

namespace {

Vector tail_of(const Vector& v, int start) {
    return Vector(v.begin() + start, v.end());
}

double scored_rmse(const Vector& pred_accum, const Vector& actual_accum, bool tail_only,
                   int input_len) {
    if (!tail_only) return rmse(pred_accum, actual_accum);
    return rmse(tail_of(pred_accum, input_len), tail_of(actual_accum, input_len));
}

}  // namespace

std::map<std::string, TrialSet> trial_sets_from_models(
    const std::vector<NetworkParams>& models, const std::vector<std::uint64_t>& seeds,
    const std::vector<WindowPair>& val_windows, const FeatureScaler& scaler,
    bool rmse_tail_only) {
    if (models.empty()) throw std::invalid_argument("trial_sets_from_models: no models");
    if (models.size() != seeds.size())
        throw std::invalid_argument("trial_sets_from_models: seed count does not match models");

    std::map<std::string, TrialSet> out;
    for (const WindowPair& window : val_windows) {
        const ModelConfig& cfg = models.front().config();
        TrialSet set;
        set.region_id = window.region_id;
        set.start_date = window.start_date;
        set.seeds = seeds;
        set.actual_daily = window.actual_daily;
        set.actual_accum = accumulate(window.actual_daily);

        for (const NetworkParams& model : models) {
            const ForwardCache cache = network_forward(model, window.input);
            Vector daily(cfg.output_len);
            for (int k = 0; k < cfg.output_len; ++k)
                daily[k] = std::max(0.0, scaler.inverse_value(0, cache.prediction[k]));
            Vector accum = accumulate(daily);
            set.per_trial_rmse.push_back(
                scored_rmse(accum, set.actual_accum, rmse_tail_only, cfg.input_len));
            set.per_trial_daily.push_back(std::move(daily));
            set.per_trial_accum.push_back(std::move(accum));
        }

        const std::size_t n = set.per_trial_accum.size();
        const std::size_t len = set.actual_accum.size();
        set.mean_curve.assign(len, 0.0);
        set.min_curve.assign(len, std::numeric_limits<double>::infinity());
        set.max_curve.assign(len, -std::numeric_limits<double>::infinity());
        for (const Vector& curve : set.per_trial_accum)
            for (std::size_t t = 0; t < len; ++t) {
                set.mean_curve[t] += curve[t];
                set.min_curve[t] = std::min(set.min_curve[t], curve[t]);
                set.max_curve[t] = std::max(set.max_curve[t], curve[t]);
            }
        for (std::size_t t = 0; t < len; ++t) set.mean_curve[t] /= static_cast<double>(n);
        double rmse_sum = 0.0;
        for (double r : set.per_trial_rmse) rmse_sum += r;
        set.mean_rmse = rmse_sum / static_cast<double>(n);
        out.emplace(set.region_id, std::move(set));
    }
    return out;
}

std::map<std::string, TrialSet> run_trials(const ModelConfig& config,
                                           const TrainOptions& train_options,
                                           const PreparedData& prepared,
                                           const TrialOptions& trial_options) {
    if (trial_options.seeds.empty()) throw std::invalid_argument("run_trials: no seeds");
    if (prepared.val_windows.empty()) throw std::invalid_argument("run_trials: no validation windows");

    std::vector<NetworkParams> models;
    std::vector<std::uint64_t> surviving;
    std::vector<std::string> failures;
    for (std::uint64_t seed : trial_options.seeds) {
        ModelConfig trial_config = config;
        trial_config.seed = seed;
        try {
            TrainReport report = train(trial_config, prepared.train_windows, train_options);
            models.push_back(std::move(report.final_params));
            surviving.push_back(seed);
        } catch (const std::runtime_error& e) {
            failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    const std::size_t required = std::min<std::size_t>(3, trial_options.seeds.size());
    if (models.size() < required) {
        std::string msg = "run_trials: only " + std::to_string(models.size()) + " of " +
                          std::to_string(trial_options.seeds.size()) + " trials survived";
        for (const std::string& f : failures) msg += "\n  " + f;
        throw std::runtime_error(msg);
    }
    return trial_sets_from_models(models, surviving, prepared.val_windows, prepared.scaler,
                                  trial_options.rmse_tail_only);
}

CaseClassification classify_cases(const TrialSet& set) {
    if (set.per_trial_accum.size() < 2)
        throw std::invalid_argument("classify_cases: need at least two surviving trials");
    CaseClassification out;
    double best_final = std::numeric_limits<double>::infinity();
    double worst_final = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.per_trial_accum.size(); ++i) {
        const double final_value = set.per_trial_accum[i].back();
        if (final_value < best_final) {
            best_final = final_value;
            out.best_trial = static_cast<int>(i);
        }
        if (final_value > worst_final) {
            worst_final = final_value;
            out.worst_trial = static_cast<int>(i);
        }
    }
    out.best_curve = set.per_trial_accum[out.best_trial];
    out.worst_curve = set.per_trial_accum[out.worst_trial];
    out.normal_curve = set.mean_curve;
    return out;
}

namespace {

std::vector<int> dedupe_sorted(const std::vector<int>& values, const char* what,
                               std::vector<std::string>* warnings) {
    if (values.empty()) throw std::invalid_argument(std::string(what) + ": empty value list");
    std::vector<int> out;
    std::set<int> seen;
    for (int v : values) {
        if (!seen.insert(v).second) {
            if (warnings)
                warnings->push_back(std::string(what) + ": duplicate value " + std::to_string(v) +
                                    " ignored");
            continue;
        }
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double mean_rmse_over_regions(const std::map<std::string, TrialSet>& sets) {
    double acc = 0.0;
    for (const auto& [id, set] : sets) acc += set.mean_rmse;
    return acc / static_cast<double>(sets.size());
}

}  // namespace

std::vector<SweepRow> sweep_hidden_states(const std::vector<int>& values, int fixed_layers,
                                          const ModelConfig& base, const TrainOptions& topts,
                                          const PreparedData& prepared, const TrialOptions& tropts,
                                          std::vector<std::string>* warnings) {
    std::vector<SweepRow> rows;
    for (int hidden : dedupe_sorted(values, "sweep_hidden_states", warnings)) {
        ModelConfig cfg = base;
        cfg.hidden_size = hidden;
        cfg.num_layers = fixed_layers;
        rows.push_back({hidden, mean_rmse_over_regions(run_trials(cfg, topts, prepared, tropts))});
    }
    return rows;
}

std::vector<SweepRow> sweep_layers(const std::vector<int>& values, int fixed_hidden,
                                   const ModelConfig& base, const TrainOptions& topts,
                                   const PreparedData& prepared, const TrialOptions& tropts,
                                   std::vector<std::string>* warnings) {
    std::vector<SweepRow> rows;
    for (int layers : dedupe_sorted(values, "sweep_layers", warnings)) {
        ModelConfig cfg = base;
        cfg.num_layers = layers;
        cfg.hidden_size = fixed_hidden;
        rows.push_back({layers, mean_rmse_over_regions(run_trials(cfg, topts, prepared, tropts))});
    }
    return rows;
}

std::string sweep_table_csv(const std::string& axis_name, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << axis_name << ",mean_rmse\n";
    char buf[64];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g\n", r.value, r.mean_rmse);
        out << buf;
    }
    return out.str();
}

std::string sweep_table_text(const std::string& axis_name, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%-16s %14s\n", axis_name.c_str(), "mean RMSE");
    out << buf;
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-16d %14.2f\n", r.value, r.mean_rmse);
        out << buf;
    }
    return out.str();
}

CopyTaskResult copy_task_run(int hidden, std::uint64_t seed, int iterations, int lag,
                             int signal_len, int train_sequences, int val_sequences) {
    ModelConfig base;
    base.num_layers = 1;
    base.hidden_size = hidden;
    base.input_len = signal_len + lag;
    base.output_len = signal_len;
    base.feature_count = 1;
    base.dropout_rate = 0.0;
    base.head_mode = HeadMode::last_step;  // the signal must survive the recurrence
    base.seed = seed;

    auto make_windows = [&](int count, std::uint64_t data_seed) {
        std::vector<WindowPair> windows(count);
        Rng rng(data_seed);
        for (int w = 0; w < count; ++w) {
            WindowPair& win = windows[w];
            win.input = Matrix(base.input_len, 1);
            win.target.resize(signal_len);
            for (int t = 0; t < signal_len; ++t) {
                const double v = rng.uniform(0.1, 0.9);
                win.input(t, 0) = v;
                win.target[t] = v;
            }
            win.region_id = "copy" + std::to_string(w);
        }
        return windows;
    };
    // same data for both cell kinds; only the model differs
    const auto train_windows = make_windows(train_sequences, derive_seed(977, 1, 0));
    const auto val_windows = make_windows(val_sequences, derive_seed(977, 2, 0));

    TrainOptions topts;
    topts.iterations = iterations;
    topts.learning_rate = 0.001;

    auto validation_loss = [&](const NetworkParams& model) {
        double acc = 0.0;
        for (const WindowPair& w : val_windows)
            acc += mse_loss(network_forward(model, w.input).prediction, w.target);
        return acc / static_cast<double>(val_windows.size());
    };

    CopyTaskResult result;
    result.seed = seed;
    {
        ModelConfig cfg = base;
        cfg.cell_kind = CellKind::lstm;
        result.lstm_loss = validation_loss(train(cfg, train_windows, topts).final_params);
    }
    {
        ModelConfig cfg = base;
        cfg.cell_kind = CellKind::rnn;
        result.rnn_loss = validation_loss(train(cfg, train_windows, topts).final_params);
    }
    return result;
}

CellComparison compare_cells(const ModelConfig& lstm_config, const ModelConfig& rnn_config,
                             const TrainOptions& topts, const PreparedData& prepared,
                             const TrialOptions& tropts, int copy_task_iterations) {
    if (lstm_config.cell_kind != CellKind::lstm || rnn_config.cell_kind != CellKind::rnn)
        throw std::invalid_argument("compare_cells: configs must be (lstm, rnn)");
    ModelConfig lstm_as_rnn = lstm_config;
    lstm_as_rnn.cell_kind = CellKind::rnn;
    if (!lstm_as_rnn.same_shape(rnn_config) || lstm_as_rnn.dropout_rate != rnn_config.dropout_rate)
        throw std::invalid_argument(
            "compare_cells: configs differ beyond the cell kind; refusing to compare");

    CellComparison cmp;
    cmp.lstm_param_count = NetworkParams::parameter_count(lstm_config);
    cmp.rnn_param_count = NetworkParams::parameter_count(rnn_config);
    cmp.lstm_rmse = mean_rmse_over_regions(run_trials(lstm_config, topts, prepared, tropts));
    cmp.rnn_rmse = mean_rmse_over_regions(run_trials(rnn_config, topts, prepared, tropts));
    for (std::uint64_t seed : tropts.seeds)
        cmp.copy_task.push_back(
            copy_task_run(lstm_config.hidden_size, seed, copy_task_iterations));
    return cmp;
}

std::string cell_table_csv(const CellComparison& cmp) {
    std::ostringstream out;
    out << "cell,mean_rmse,param_count\n";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "rnn,%.10g,%zu\n", cmp.rnn_rmse, cmp.rnn_param_count);
    out << buf;
    std::snprintf(buf, sizeof(buf), "lstm,%.10g,%zu\n", cmp.lstm_rmse, cmp.lstm_param_count);
    out << buf;
    return out.str();
}

std::string cell_table_text(const CellComparison& cmp) {
    std::ostringstream out;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%-8s %14s %14s\n", "cell", "mean RMSE", "params");
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-8s %14.2f %14zu\n", "rnn", cmp.rnn_rmse,
                  cmp.rnn_param_count);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-8s %14.2f %14zu\n", "lstm", cmp.lstm_rmse,
                  cmp.lstm_param_count);
    out << buf;
    out << "copy task (lag 50), final validation loss:\n";
    for (const CopyTaskResult& r : cmp.copy_task) {
        std::snprintf(buf, sizeof(buf), "  seed %-6llu lstm %.6f  rnn %.6f  %s\n",
                      static_cast<unsigned long long>(r.seed), r.lstm_loss, r.rnn_loss,
                      r.lstm_loss < r.rnn_loss ? "lstm better" : "rnn better");
        out << buf;
    }
    return out.str();
}

std::string trial_curves_csv(const TrialSet& set) {
    std::ostringstream out;
    out << "region,trial,day,daily_pred,accum_pred\n";
    char buf[160];
    const std::string region = csv_escape(set.region_id);
    for (std::size_t trial = 0; trial < set.per_trial_daily.size(); ++trial)
        for (std::size_t day = 0; day < set.per_trial_daily[trial].size(); ++day) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.10g,%.10g\n", region.c_str(), trial + 1,
                          day + 1, set.per_trial_daily[trial][day],
                          set.per_trial_accum[trial][day]);
            out << buf;
        }
    return out.str();
}

}  // namespace epicast
