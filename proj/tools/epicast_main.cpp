#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>

#include "epicast/csv.hpp"

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "epicast/config.hpp"
#include "epicast/dates.hpp"
#include "epicast/eval.hpp"
#include "epicast/forecast.hpp"

namespace fs = std::filesystem;
using namespace epicast;

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::optional<int> hidden;
    std::optional<int> layers;
    std::optional<std::string> cell;
    std::optional<int> trials;
};

void add_common_options(CLI::App* cmd, Overrides& ov, bool config_required = true) {
    auto* opt = cmd->add_option("--config", ov.config_path, "run configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", ov.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", ov.seed, "model seed (single-trial runs)");
    cmd->add_option("--iterations", ov.iterations, "training iterations");
    cmd->add_option("--hidden", ov.hidden, "hidden units per layer");
    cmd->add_option("--layers", ov.layers, "stacked recurrent layers");
    cmd->add_option("--cell", ov.cell, "cell kind: lstm or rnn");
    cmd->add_option("--trials", ov.trials, "number of independently seeded trials");
}

RunConfig resolve_config(const Overrides& ov) {
    RunConfig cfg = load_run_config(ov.config_path);
    if (!ov.out_dir.empty()) cfg.output_dir = ov.out_dir;
    if (ov.seed) cfg.model.seed = *ov.seed;
    if (ov.iterations) cfg.training.iterations = *ov.iterations;
    if (ov.hidden) cfg.model.hidden_size = *ov.hidden;
    if (ov.layers) cfg.model.num_layers = *ov.layers;
    if (ov.cell) cfg.model.cell_kind = cell_kind_from_string(*ov.cell);
    cfg.validate();
    return cfg;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

std::vector<std::uint64_t> seeds_for_trials(const RunConfig& cfg, int trials) {
    if (trials == 1) return {cfg.model.seed};
    if (static_cast<std::size_t>(trials) > cfg.trial_seeds.size())
        throw ConfigError("requested " + std::to_string(trials) + " trials but only " +
                          std::to_string(cfg.trial_seeds.size()) + " trial seeds configured");
    return {cfg.trial_seeds.begin(), cfg.trial_seeds.begin() + trials};
}

int cmd_train(const Overrides& ov) {
    RunConfig cfg = resolve_config(ov);
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(cfg, &warnings);
    const PreparedData prepared = prepare_from_config(cfg, dataset, &warnings);
    print_warnings(warnings);

    const int trials = ov.trials.value_or(1);
    const auto seeds = seeds_for_trials(cfg, trials);
    fs::create_directories(cfg.output_dir);

    for (std::size_t k = 0; k < seeds.size(); ++k) {
        ModelConfig model = cfg.model;
        model.seed = seeds[k];
        TrainOptions topts = cfg.training;
        topts.verbose = true;
        const std::string stem = cfg.output_dir + "/model_trial" + std::to_string(k + 1);
        if (topts.checkpoint_every > 0) topts.checkpoint_prefix = stem;

        const TrainReport report = train(model, prepared.train_windows, topts);
        save_checkpoint(report.final_params, stem + ".ckpt");
        write_loss_csv(report.loss_history,
                       cfg.output_dir + "/loss_trial" + std::to_string(k + 1) + ".csv");
        std::cout << "trial " << k + 1 << " (seed " << seeds[k] << "): final loss "
                  << report.loss_history.back() << ", " << report.wall_time_seconds << " s, "
                  << report.clip_events << " clipped iterations -> " << stem << ".ckpt\n";
    }
    return 0;
}

std::vector<std::string> find_checkpoints(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("checkpoint path not found: " + path);
    if (fs::is_regular_file(path)) return {path};
    std::vector<std::pair<int, std::string>> numbered;
    for (const auto& entry : fs::directory_iterator(path)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("model_trial", 0) == 0 && entry.path().extension() == ".ckpt") {
            const std::string digits = name.substr(11, name.size() - 11 - 5);
            numbered.emplace_back(std::atoi(digits.c_str()), entry.path().string());
        }
    }
    std::sort(numbered.begin(), numbered.end());
    std::vector<std::string> out;
    for (auto& [n, p] : numbered) out.push_back(std::move(p));
    if (out.empty()) throw ConfigError("no model_trial*.ckpt files under " + path);
    return out;
}

int cmd_validate(const Overrides& ov, const std::string& checkpoint) {
    RunConfig cfg = resolve_config(ov);
    if (cfg.validation_regions.empty()) {
        std::cerr << "warning: validation region list is empty; nothing to do\n";
        return 0;
    }
    // reject incompatible checkpoints before touching the data or writing anything
    std::vector<NetworkParams> models;
    std::vector<std::uint64_t> seeds;
    for (const std::string& path :
         find_checkpoints(checkpoint.empty() ? cfg.output_dir : checkpoint)) {
        models.push_back(load_checkpoint(path, cfg.model));
        seeds.push_back(models.back().config().seed);
    }

    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(cfg, &warnings);
    const PreparedData prepared = prepare_from_config(cfg, dataset, &warnings);
    print_warnings(warnings);
    if (prepared.val_windows.empty()) {
        std::cerr << "warning: no validation region covers the configured window\n";
        return 0;
    }

    const auto sets = trial_sets_from_models(models, seeds, prepared.val_windows,
                                             prepared.scaler, cfg.rmse_tail_only);
    fs::create_directories(cfg.output_dir);
    std::cout << "region mean RMSE over " << models.size() << " trial(s):\n";
    for (const auto& [region, set] : sets) {
        emit_outputs(set, nullptr, cfg.output_dir + "/" + sanitize(region) + "_validation");
        std::cout << "  " << region << ": " << set.mean_rmse;
        if (set.per_trial_accum.size() >= 2) {
            const CaseClassification cases = classify_cases(set);
            std::cout << "  (best-case final " << cases.best_curve.back() << " seed "
                      << set.seeds[cases.best_trial] << ", worst-case final "
                      << cases.worst_curve.back() << " seed " << set.seeds[cases.worst_trial]
                      << ", normal " << cases.normal_curve.back() << ")";
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_sweep(const Overrides& ov, const std::string& axis) {
    RunConfig cfg = resolve_config(ov);
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(cfg, &warnings);
    const PreparedData prepared = prepare_from_config(cfg, dataset, &warnings);

    TrialOptions tropts;
    tropts.seeds = seeds_for_trials(cfg, ov.trials.value_or(static_cast<int>(
                                             cfg.trial_seeds.size())));
    tropts.rmse_tail_only = cfg.rmse_tail_only;
    fs::create_directories(cfg.output_dir);

    if (axis == "hidden") {
        const auto rows = sweep_hidden_states(cfg.sweep_hidden, cfg.model.num_layers, cfg.model,
                                              cfg.training, prepared, tropts, &warnings);
        print_warnings(warnings);
        atomic_write_file(cfg.output_dir + "/sweep_hidden.csv", sweep_table_csv("hidden", rows));
        atomic_write_file(cfg.output_dir + "/sweep_hidden.txt", sweep_table_text("hidden", rows));
        std::cout << sweep_table_text("hidden", rows);
    } else if (axis == "layers") {
        const auto rows = sweep_layers(cfg.sweep_layers, cfg.model.hidden_size, cfg.model,
                                       cfg.training, prepared, tropts, &warnings);
        print_warnings(warnings);
        atomic_write_file(cfg.output_dir + "/sweep_layers.csv", sweep_table_csv("layers", rows));
        atomic_write_file(cfg.output_dir + "/sweep_layers.txt", sweep_table_text("layers", rows));
        std::cout << sweep_table_text("layers", rows);
    } else if (axis == "cell") {
        ModelConfig lstm_cfg = cfg.model;
        lstm_cfg.cell_kind = CellKind::lstm;
        lstm_cfg.num_layers = 1;
        ModelConfig rnn_cfg = lstm_cfg;
        rnn_cfg.cell_kind = CellKind::rnn;
        const auto cmp = compare_cells(lstm_cfg, rnn_cfg, cfg.training, prepared, tropts);
        print_warnings(warnings);
        atomic_write_file(cfg.output_dir + "/sweep_cell.csv", cell_table_csv(cmp));
        atomic_write_file(cfg.output_dir + "/sweep_cell.txt", cell_table_text(cmp));
        std::cout << cell_table_text(cmp);
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "' (hidden, layers or cell)");
    }
    return 0;
}

int cmd_forecast(const Overrides& ov, const std::string& checkpoint,
                 const std::string& anchor_str, std::string region_name) {
    RunConfig cfg = resolve_config(ov);
    std::vector<NetworkParams> models;
    for (const std::string& path :
         find_checkpoints(checkpoint.empty() ? cfg.output_dir : checkpoint))
        models.push_back(load_checkpoint(path, cfg.model));

    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(cfg, &warnings);
    const PreparedData prepared = prepare_from_config(cfg, dataset, &warnings);
    print_warnings(warnings);

    if (region_name.empty()) {
        if (cfg.validation_regions.empty())
            throw ConfigError("no --region given and the validation list is empty");
        region_name = cfg.validation_regions.front();
    }
    const RegionSeries* region = nullptr;
    for (const auto* pool : {&dataset.validation, &dataset.train})
        for (const RegionSeries& r : *pool)
            if (!region && (r.region_id == region_name || r.country == region_name)) region = &r;
    if (!region) throw ConfigError("region '" + region_name + "' not found in the data");

    const int anchor = parse_iso(anchor_str);
    const ModelConfig& mc = cfg.model;
    const int anchor_idx = anchor - region->dates.front();
    if (anchor_idx < mc.input_len - 1 ||
        anchor_idx >= static_cast<int>(region->dates.size()))
        throw ConfigError("anchor " + anchor_str + " needs " + std::to_string(mc.input_len) +
                          " days of history ending at the anchor; region " + region->region_id +
                          " covers " + format_iso(region->dates.front()) + ".." +
                          format_iso(region->dates.back()));

    const int window_start_idx = anchor_idx - (mc.input_len - 1);
    const int window_start_date = anchor - (mc.input_len - 1);

    AssembleOptions aopts;
    aopts.difference_deaths_recovered = cfg.difference_deaths_recovered;
    const Matrix features = assemble_features(*region, aopts);
    Matrix recent(mc.input_len, kFeatureCount);
    for (int t = 0; t < mc.input_len; ++t)
        for (int c = 0; c < kFeatureCount; ++c) recent(t, c) = features(window_start_idx + t, c);

    // cumulative level already accumulated before the window start
    const double base = window_start_idx > 0 ? region->confirmed[window_start_idx - 1] : 0.0;

    TrialSet set;
    set.region_id = region->region_id;
    set.start_date = window_start_date;
    set.actual_daily.assign(mc.input_len, 0.0);
    for (int t = 0; t < mc.input_len; ++t) set.actual_daily[t] = features(window_start_idx + t, 0);
    set.actual_accum = accumulate(set.actual_daily);
    for (double& v : set.actual_accum) v += base;

    for (const NetworkParams& model : models) {
        Vector daily = predict_future(model, prepared.scaler, recent);
        Vector accum = accumulate(daily);
        for (double& v : accum) v += base;
        set.seeds.push_back(model.config().seed);
        set.per_trial_rmse.push_back(
            rmse(Vector(accum.begin(), accum.begin() + mc.input_len), set.actual_accum));
        set.per_trial_daily.push_back(std::move(daily));
        set.per_trial_accum.push_back(std::move(accum));
    }
    const std::size_t n = set.per_trial_accum.size();
    const std::size_t len = set.per_trial_accum.front().size();
    set.mean_curve.assign(len, 0.0);
    set.min_curve.assign(len, std::numeric_limits<double>::infinity());
    set.max_curve.assign(len, -std::numeric_limits<double>::infinity());
    for (const Vector& curve : set.per_trial_accum)
        for (std::size_t t = 0; t < len; ++t) {
            set.mean_curve[t] += curve[t] / static_cast<double>(n);
            set.min_curve[t] = std::min(set.min_curve[t], curve[t]);
            set.max_curve[t] = std::max(set.max_curve[t], curve[t]);
        }
    double rmse_sum = 0.0;
    for (double r : set.per_trial_rmse) rmse_sum += r;
    set.mean_rmse = rmse_sum / static_cast<double>(n);

    // the continuation is cut from the mean prediction across trials
    const Continuation cont = cut_and_augment(set.mean_curve, window_start_date,
                                              set.actual_accum, window_start_date,
                                              cfg.augment_rule);

    fs::create_directories(cfg.output_dir);
    const std::string prefix =
        cfg.output_dir + "/forecast_" + sanitize(region->region_id);
    emit_outputs(set, &cont, prefix);
    std::cout << "continuation for " << region->region_id << " anchored " << format_iso(anchor)
              << ": " << cont.shifted_daily.size() << " days, join " << set.actual_accum.back()
              << ", " << (cfg.augment_rule == AugmentRule::additive ? "offset " : "scale ")
              << cont.offset << " -> " << prefix << ".csv\n";
    return 0;
}

int cmd_gradcheck(int draws) {
    double worst = 0.0;
    for (CellKind kind : {CellKind::lstm, CellKind::rnn})
        for (int layers : {1, 2})
            for (int hidden : {2, 3}) {
                ModelConfig c;
                c.cell_kind = kind;
                c.num_layers = layers;
                c.hidden_size = hidden;
                c.input_len = 5;
                c.output_len = 4;
                c.feature_count = 2;
                c.dropout_rate = 0.0;
                const auto rep = grad_check(c, draws);
                worst = std::max(worst, rep.max_rel_error);
                std::printf("%-4s layers=%d hidden=%d  max rel error %.3e  (%zu params)\n",
                            to_string(kind).c_str(), layers, hidden, rep.max_rel_error,
                            rep.params_checked);
            }
    {
        ModelConfig c;
        c.cell_kind = CellKind::lstm;
        c.num_layers = 2;
        c.hidden_size = 3;
        c.input_len = 5;
        c.output_len = 4;
        c.feature_count = 2;
        c.dropout_rate = 0.25;
        const auto rep = grad_check(c, draws, 1234, true);
        worst = std::max(worst, rep.max_rel_error);
        std::printf("lstm dropout=0.25 (frozen masks)  max rel error %.3e\n", rep.max_rel_error);
    }
    std::printf("worst relative error: %.3e (threshold 1e-4): %s\n", worst,
                worst < 1e-4 ? "PASS" : "FAIL");
    return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("EPICAST_THREADS")) {
#ifdef _OPENMP
        const int n = std::atoi(threads);
        if (n > 0) omp_set_num_threads(n);
#endif
    }

    CLI::App app{"epicast: recurrent forecasting of epidemic case growth"};
    app.require_subcommand(1);

    Overrides ov;
    std::string checkpoint, axis, anchor_date, region;

    CLI::App* train_cmd = app.add_subcommand("train", "train model(s) and write checkpoints");
    add_common_options(train_cmd, ov);

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "score checkpoints on the validation regions");
    add_common_options(validate_cmd, ov);
    validate_cmd->add_option("--checkpoint", checkpoint,
                             "checkpoint file or directory (default: output dir)");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "architecture sweeps");
    add_common_options(sweep_cmd, ov);
    sweep_cmd->add_option("--axis", axis, "hidden, layers or cell")->required();

    CLI::App* forecast_cmd =
        app.add_subcommand("forecast", "future-growth continuation past an anchor date");
    add_common_options(forecast_cmd, ov);
    forecast_cmd->add_option("--checkpoint", checkpoint,
                             "checkpoint file or directory (default: output dir)");
    forecast_cmd->add_option("--anchor-date", anchor_date, "last day of actual data (ISO)")
        ->required();
    forecast_cmd->add_option("--region", region, "region to forecast (default: first "
                                                 "validation region)");

    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "verify BPTT gradients against finite differences");
    int draws = 10;
    gradcheck_cmd->add_option("--trials", draws, "random draws per configuration");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return cmd_train(ov);
        if (validate_cmd->parsed()) return cmd_validate(ov, checkpoint);
        if (sweep_cmd->parsed()) return cmd_sweep(ov, axis);
        if (forecast_cmd->parsed()) return cmd_forecast(ov, checkpoint, anchor_date, region);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(draws);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
