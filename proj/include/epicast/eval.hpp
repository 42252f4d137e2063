#pragma once

#include <map>
#include <string>
#include <vector>

#include "epicast/dataio.hpp"
#include "epicast/train.hpp"

namespace epicast {

/// Root mean squared error, computed on accumulated unscaled curves by the
/// callers here.
double rmse(const Vector& prediction, const Vector& actual);

/// Multi-trial prediction bundle for one region. Daily predictions are
/// unscaled and floored at zero; envelope curves are accumulated.
struct TrialSet {
    std::string region_id;
    int start_date = 0;
    std::vector<std::uint64_t> seeds;      // surviving trials, in seed-list order
    std::vector<Vector> per_trial_daily;   // unscaled daily predictions
    std::vector<Vector> per_trial_accum;   // accumulated counterparts
    Vector mean_curve, min_curve, max_curve;  // accumulated envelope
    std::vector<double> per_trial_rmse;
    double mean_rmse = 0.0;
    Vector actual_daily;  // observed daily cases over the same window
    Vector actual_accum;
};

struct TrialOptions {
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    bool rmse_tail_only = false;  // score only days past the input window
};

/// Builds a TrialSet per validation region from already-trained models.
std::map<std::string, TrialSet> trial_sets_from_models(
    const std::vector<NetworkParams>& models, const std::vector<std::uint64_t>& seeds,
    const std::vector<WindowPair>& val_windows, const FeatureScaler& scaler,
    bool rmse_tail_only = false);

/// Trains one model per seed and evaluates every validation region.
/// Trials whose training aborts on a non-finite loss are dropped; fewer than
/// min(3, requested) survivors is an error.
std::map<std::string, TrialSet> run_trials(const ModelConfig& config,
                                           const TrainOptions& train_options,
                                           const PreparedData& prepared,
                                           const TrialOptions& trial_options);

struct CaseClassification {
    int best_trial = 0;   // lowest final accumulated value
    int worst_trial = 0;  // highest final accumulated value
    Vector best_curve, worst_curve, normal_curve;
};

CaseClassification classify_cases(const TrialSet& set);

// ---- architecture sweeps ----

struct SweepRow {
    int value = 0;  // hidden size or layer count
    double mean_rmse = 0.0;
};

std::vector<SweepRow> sweep_hidden_states(const std::vector<int>& values, int fixed_layers,
                                          const ModelConfig& base, const TrainOptions& topts,
                                          const PreparedData& prepared, const TrialOptions& tropts,
                                          std::vector<std::string>* warnings = nullptr);

std::vector<SweepRow> sweep_layers(const std::vector<int>& values, int fixed_hidden,
                                   const ModelConfig& base, const TrainOptions& topts,
                                   const PreparedData& prepared, const TrialOptions& tropts,
                                   std::vector<std::string>* warnings = nullptr);

std::string sweep_table_csv(const std::string& axis_name, const std::vector<SweepRow>& rows);
std::string sweep_table_text(const std::string& axis_name, const std::vector<SweepRow>& rows);

// ---- RNN vs LSTM comparison ----

struct CopyTaskResult {
    std::uint64_t seed = 0;
    double lstm_loss = 0.0;  // final validation loss
    double rnn_loss = 0.0;
};

/// Synthetic long-lag memory benchmark: a value sequence is presented at the
/// start of the input, followed by `lag` silent steps; the model must emit
/// the values at the end. Uses the last-step head so the signal has to
/// survive the recurrence.
CopyTaskResult copy_task_run(int hidden, std::uint64_t seed, int iterations, int lag = 50,
                             int signal_len = 17, int train_sequences = 128,
                             int val_sequences = 64);

struct CellComparison {
    double lstm_rmse = 0.0;
    double rnn_rmse = 0.0;
    std::size_t lstm_param_count = 0;
    std::size_t rnn_param_count = 0;
    std::vector<CopyTaskResult> copy_task;  // one row per seed
};

/// Scores matched one-layer LSTM and RNN models on the validation regions and
/// runs the long-lag benchmark. The two configs must differ only in cell
/// kind; anything else is reported as an error, never silently compared.
CellComparison compare_cells(const ModelConfig& lstm_config, const ModelConfig& rnn_config,
                             const TrainOptions& topts, const PreparedData& prepared,
                             const TrialOptions& tropts, int copy_task_iterations = 700);

std::string cell_table_csv(const CellComparison& cmp);
std::string cell_table_text(const CellComparison& cmp);

/// Long-format per-trial curves: region, trial, day, daily_pred, accum_pred.
std::string trial_curves_csv(const TrialSet& set);

}  // namespace epicast
