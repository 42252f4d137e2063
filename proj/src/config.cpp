#include "epicast/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "epicast/dates.hpp"

namespace epicast {

namespace {

// Default split: 46 training countries, 4 held-out validation countries.
// Countries with more than one province or state appear as bare country
// names and match every province row.
const std::vector<std::string> kDefaultTrainRegions = {
    "China",     "Germany",   "Australia",    "Brazil",     "US",         "Belgium",
    "Spain",     "Italy",     "France",       "Malaysia",   "Vietnam",    "Iran",
    "UEA",       "Singapore", "Thailand",     "Korea, South", "Japan",    "Netherlands",
    "Russia",    "Chile",     "India",        "Greece",     "Mexico",     "Mongolia",
    "Philippines", "New Zealand", "South Africa", "Botswana", "Uruguay",  "Paraguay",
    "Madagascar", "Peru",     "Portugal",     "Denmark",    "Hungary",    "Kenya",
    "Ireland",   "Israel",    "Norway",       "Mauritius",  "Rwanda",     "Iceland",
    "Kazakhstan", "Switzerland", "Cyprus",    "Zimbabwe"};

const std::vector<std::string> kDefaultValidationRegions = {"Indonesia", "Sweden",
                                                            "Saudi Arabia", "Argentina"};

}  // namespace

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.train_regions = kDefaultTrainRegions;
    cfg.validation_regions = kDefaultValidationRegions;
    cfg.start_date = parse_iso("2020-01-22");
    return cfg;
}

void RunConfig::validate() const {
    std::set<std::string> train_set(train_regions.begin(), train_regions.end());
    for (const std::string& v : validation_regions)
        if (train_set.count(v))
            throw ConfigError("region '" + v + "' appears in both train and validation lists");
    for (const std::string& path : {confirmed_csv, deaths_csv, recovered_csv}) {
        if (path.empty()) throw ConfigError("all three count CSV paths must be set");
        if (!std::filesystem::exists(path)) throw ConfigError("data file not found: " + path);
    }
    model.validate();
    if (training.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (trial_seeds.empty()) throw ConfigError("trial_seeds must not be empty");
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
}

std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path.string();
    return (base / path).lexically_normal().string();
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }

    RunConfig cfg = default_run_config();
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    try {
        reject_unknown_keys(doc, {"data", "regions", "start_date", "model", "training",
                                  "trial_seeds", "sweeps", "output_dir",
                                  "difference_deaths_recovered", "rmse_tail_only",
                                  "augment_rule"},
                            "");
        if (doc.contains("data")) {
            const json& d = doc["data"];
            reject_unknown_keys(d, {"confirmed", "deaths", "recovered"}, "data.");
            if (d.contains("confirmed"))
                cfg.confirmed_csv = resolve_path(base, d["confirmed"].get<std::string>());
            if (d.contains("deaths"))
                cfg.deaths_csv = resolve_path(base, d["deaths"].get<std::string>());
            if (d.contains("recovered"))
                cfg.recovered_csv = resolve_path(base, d["recovered"].get<std::string>());
        }
        if (doc.contains("regions")) {
            const json& r = doc["regions"];
            reject_unknown_keys(r, {"train", "validation"}, "regions.");
            if (r.contains("train"))
                cfg.train_regions = r["train"].get<std::vector<std::string>>();
            if (r.contains("validation"))
                cfg.validation_regions = r["validation"].get<std::vector<std::string>>();
        }
        if (doc.contains("start_date"))
            cfg.start_date = parse_iso(doc["start_date"].get<std::string>());
        if (doc.contains("model")) {
            const json& m = doc["model"];
            reject_unknown_keys(m, {"cell", "layers", "hidden", "dropout", "head", "seed"},
                                "model.");
            if (m.contains("cell")) cfg.model.cell_kind = cell_kind_from_string(m["cell"]);
            if (m.contains("layers")) cfg.model.num_layers = m["layers"].get<int>();
            if (m.contains("hidden")) cfg.model.hidden_size = m["hidden"].get<int>();
            if (m.contains("dropout")) cfg.model.dropout_rate = m["dropout"].get<double>();
            if (m.contains("head")) {
                const std::string head = m["head"].get<std::string>();
                if (head == "all_steps") cfg.model.head_mode = HeadMode::all_steps;
                else if (head == "last_step") cfg.model.head_mode = HeadMode::last_step;
                else throw ConfigError("model.head must be all_steps or last_step");
            }
            if (m.contains("seed")) cfg.model.seed = m["seed"].get<std::uint64_t>();
        }
        if (doc.contains("training")) {
            const json& t = doc["training"];
            reject_unknown_keys(t,
                                {"iterations", "learning_rate", "clip_norm", "loss_tail_only",
                                 "checkpoint_every", "parallel"},
                                "training.");
            if (t.contains("iterations")) cfg.training.iterations = t["iterations"].get<int>();
            if (t.contains("learning_rate"))
                cfg.training.learning_rate = t["learning_rate"].get<double>();
            if (t.contains("clip_norm")) cfg.training.clip_norm = t["clip_norm"].get<double>();
            if (t.contains("loss_tail_only"))
                cfg.training.loss_tail_only = t["loss_tail_only"].get<bool>();
            if (t.contains("checkpoint_every"))
                cfg.training.checkpoint_every = t["checkpoint_every"].get<int>();
            if (t.contains("parallel")) cfg.training.parallel = t["parallel"].get<bool>();
        }
        if (doc.contains("trial_seeds"))
            cfg.trial_seeds = doc["trial_seeds"].get<std::vector<std::uint64_t>>();
        if (doc.contains("sweeps")) {
            const json& s = doc["sweeps"];
            reject_unknown_keys(s, {"hidden", "layers"}, "sweeps.");
            if (s.contains("hidden")) cfg.sweep_hidden = s["hidden"].get<std::vector<int>>();
            if (s.contains("layers")) cfg.sweep_layers = s["layers"].get<std::vector<int>>();
        }
        if (doc.contains("output_dir"))
            cfg.output_dir = doc["output_dir"].get<std::string>();
        if (doc.contains("difference_deaths_recovered"))
            cfg.difference_deaths_recovered = doc["difference_deaths_recovered"].get<bool>();
        if (doc.contains("rmse_tail_only")) cfg.rmse_tail_only = doc["rmse_tail_only"].get<bool>();
        if (doc.contains("augment_rule")) {
            const std::string rule = doc["augment_rule"].get<std::string>();
            if (rule == "additive") cfg.augment_rule = AugmentRule::additive;
            else if (rule == "multiplicative") cfg.augment_rule = AugmentRule::multiplicative;
            else throw ConfigError("augment_rule must be additive or multiplicative");
        }
    } catch (const json::exception& e) {
        throw ConfigError("config type error in " + path + ": " + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw ConfigError("config error in " + path + ": " + e.what());
    }
    return cfg;
}

Dataset load_dataset(const RunConfig& config, std::vector<std::string>* warnings) {
    const auto confirmed = load_region_csv(config.confirmed_csv);
    const auto deaths = load_region_csv(config.deaths_csv);
    const auto recovered = load_region_csv(config.recovered_csv);
    const auto all = join_region_tables(confirmed, deaths, recovered);

    Dataset ds;
    std::vector<std::string> missing;
    ds.train = select_regions(all, config.train_regions, &missing);
    ds.validation = select_regions(all, config.validation_regions, &missing);
    if (warnings)
        for (const std::string& name : missing)
            warnings->push_back("configured region '" + name + "' not present in the data");
    if (ds.train.empty()) throw DataError("no configured training region found in the data");
    return ds;
}

PreparedData prepare_from_config(const RunConfig& config, const Dataset& dataset,
                                 std::vector<std::string>* warnings) {
    WindowOptions wopts;
    wopts.input_len = config.model.input_len;
    wopts.output_len = config.model.output_len;
    wopts.start_date = config.start_date;
    AssembleOptions aopts;
    aopts.difference_deaths_recovered = config.difference_deaths_recovered;
    return prepare_windows(dataset.train, dataset.validation, wopts, aopts, warnings);
}

}  // namespace epicast
