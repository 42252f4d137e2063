#pragma once

#include <string>
#include <vector>

#include "epicast/dataio.hpp"
#include "epicast/errors.hpp"
#include "epicast/forecast.hpp"
#include "epicast/train.hpp"

namespace epicast {

/// Everything a reproducible run needs; loadable from a JSON document, with
/// CLI flags overriding individual fields.
struct RunConfig {
    std::string confirmed_csv;
    std::string deaths_csv;
    std::string recovered_csv;

    std::vector<std::string> train_regions;       // defaults: the paper's training countries
    std::vector<std::string> validation_regions;  // defaults: Indonesia, Sweden, Saudi Arabia, Argentina

    int start_date = 0;  // serial; default 2020-01-22

    ModelConfig model;
    TrainOptions training;
    std::vector<std::uint64_t> trial_seeds = {1, 2, 3, 4, 5};
    std::vector<int> sweep_hidden = {1, 5, 10, 30};
    std::vector<int> sweep_layers = {1, 2, 3, 4};

    std::string output_dir = "out";
    bool difference_deaths_recovered = true;
    bool rmse_tail_only = false;
    AugmentRule augment_rule = AugmentRule::additive;

    /// Disjoint region sets, readable data files; throws ConfigError.
    void validate() const;
};

RunConfig default_run_config();

/// Parses the JSON config document; unknown keys are rejected so typos fail
/// loudly. Relative data paths are resolved against the config file's
/// directory.
RunConfig load_run_config(const std::string& path);

/// Loads and joins the three count CSVs, then resolves the configured region
/// lists. Unresolved names go to `warnings`.
struct Dataset {
    std::vector<RegionSeries> train;
    std::vector<RegionSeries> validation;
};
Dataset load_dataset(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

/// prepare_windows over the loaded dataset with this config's options.
PreparedData prepare_from_config(const RunConfig& config, const Dataset& dataset,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace epicast
