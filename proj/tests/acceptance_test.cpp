// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier end-to-end checks drive the CLI binary named by
// EPICAST_CLI on the bundled snapshot named by EPICAST_DATA.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "epicast/csv.hpp"
#include "epicast/dates.hpp"
#include "epicast/eval.hpp"
#include "epicast/forecast.hpp"
#include "epicast/train.hpp"

using namespace epicast;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string cli_path() {
    const char* p = std::getenv("EPICAST_CLI");
    require(p != nullptr, "EPICAST_CLI not set");
    return p;
}

std::string data_dir() {
    const char* p = std::getenv("EPICAST_DATA");
    require(p != nullptr, "EPICAST_DATA not set");
    return p;
}

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "epicast_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args, const std::string& log_name) {
    const fs::path log = work_dir() / (log_name + ".txt");
    const std::string cmd = cli_path() + " " + args + " >" + log.string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string fixture_config(const std::string& name, int iterations) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path);
    out << "{\n  \"data\": {\n"
        << "    \"confirmed\": \"" << data_dir() << "/time_series_confirmed.csv\",\n"
        << "    \"deaths\": \"" << data_dir() << "/time_series_deaths.csv\",\n"
        << "    \"recovered\": \"" << data_dir() << "/time_series_recovered.csv\"\n  },\n"
        << "  \"training\": {\"iterations\": " << iterations << "}\n}\n";
    return path.string();
}

// ---- criterion 1: gradient correctness ----

std::string criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
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
                const auto rep = grad_check(c, 10);
                worst = std::max(worst, rep.max_rel_error);
            }
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "max rel error " << worst << " over 8 configs x 10 draws, " << elapsed << " s";
    require(worst < 1e-4, "gradient error " + std::to_string(worst) + " >= 1e-4");
    require(elapsed < 60.0, "gradient grid took " + std::to_string(elapsed) + " s (>= 60)");
    return detail.str();
}

// ---- criterion 2: cell identity cases ----

std::string criterion_cell_identities() {
    ModelConfig c;
    c.num_layers = 1;
    c.hidden_size = 1;
    c.feature_count = 1;
    NetworkParams zero(c);
    const auto v = zero.lstm_layer(0);

    const auto at_rest = lstm_cell_forward(v, {0.0}, {0.0}, {0.0});
    require(std::abs(at_rest.gate_forget[0] - 0.5) < 1e-12, "forget gate != 0.5");
    require(std::abs(at_rest.gate_input[0] - 0.5) < 1e-12, "input gate != 0.5");
    require(std::abs(at_rest.gate_output[0] - 0.5) < 1e-12, "output gate != 0.5");
    require(std::abs(at_rest.hidden[0]) < 1e-12, "hidden != 0 at rest");

    const auto held = lstm_cell_forward(v, {0.0}, {0.0}, {2.0});
    const double expected = 0.3807970779778824;  // 0.5 * tanh(1), by hand
    require(std::abs(held.hidden[0] - expected) < 1e-6,
            "h_t = " + std::to_string(held.hidden[0]) + " != 0.3808");
    return "f=i=o=0.5 at rest; h_t(c_prev=2) within 1e-6 of 0.3808";
}

// ---- criterion 3: scaler ----

std::string criterion_scaler() {
    Rng rng(77);
    Matrix train_mat(40, 5);
    for (std::size_t i = 0; i < train_mat.size(); ++i)
        train_mat.data()[i] = rng.uniform(-500.0, 2000.0);
    const FeatureScaler scaler = fit_scaler({train_mat});
    const Matrix back = scaler.inverse_transform(scaler.transform(train_mat));
    for (std::size_t i = 0; i < train_mat.size(); ++i) {
        const double x = train_mat.data()[i];
        require(std::abs(back.data()[i] - x) <= 1e-9 * std::max(1.0, std::abs(x)),
                "round trip beyond 1e-9 relative");
    }

    Matrix constant(5, 1, 3.25);
    const FeatureScaler degenerate = fit_scaler({constant});
    require(degenerate.transform_value(0, 3.25) == 0.0, "degenerate transform != 0");
    require(degenerate.transform_value(0, 99.0) == 0.0, "degenerate transform != 0");
    require(degenerate.inverse_value(0, 0.7) == 3.25, "degenerate inverse != min");

    // split hygiene: scaling factors come from training data alone
    Matrix val_mat(40, 5);
    for (std::size_t i = 0; i < val_mat.size(); ++i) val_mat.data()[i] = rng.uniform(0.0, 1.0);
    const FeatureScaler before = fit_scaler({train_mat});
    const Matrix val_scaled_before = before.transform(val_mat);
    for (std::size_t i = 0; i < val_mat.size(); ++i) val_mat.data()[i] *= 1e6;  // mutate
    const FeatureScaler after = fit_scaler({train_mat});
    require(before.feature_min == after.feature_min && before.feature_max == after.feature_max,
            "scaler changed after validation mutation");
    return "round trip <= 1e-9 rel; degenerate rule; validation mutation inert";
}

// ---- criterion 4: rmse oracle ----

std::string criterion_rmse() {
    const double expected = std::sqrt(14.0 / 3.0);
    const double got = rmse({1, 2, 3}, {2, 4, 6});
    require(std::abs(got - expected) < 1e-9, "rmse([1,2,3],[2,4,6]) != sqrt(14/3)");
    Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        Vector p(12), a(12);
        for (int i = 0; i < 12; ++i) {
            p[i] = rng.uniform(-50, 50);
            a[i] = rng.uniform(-50, 50);
        }
        const double base = rmse(p, a);
        const double c = rng.uniform(-500, 500);
        Vector ps = p, as = a;
        for (int i = 0; i < 12; ++i) {
            ps[i] += c;
            as[i] += c;
        }
        require(std::abs(rmse(ps, as) - base) <= 1e-9 * std::max(1.0, base),
                "translation invariance violated");
    }
    return "sqrt(14/3) within 1e-9; translation invariance on 100 instances";
}

// ---- criterion 5: long-lag copy task ----

std::string criterion_copy_task() {
    const auto t0 = std::chrono::steady_clock::now();
    int lstm_wins = 0;
    std::ostringstream detail;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        const CopyTaskResult r = copy_task_run(/*hidden=*/16, seed, /*iterations=*/700);
        if (r.lstm_loss < r.rnn_loss) ++lstm_wins;
        detail << " s" << seed << ":" << (r.lstm_loss < r.rnn_loss ? "lstm" : "rnn");
    }
    const double elapsed = seconds_since(t0);
    detail << "; " << lstm_wins << "/5 lstm wins, " << elapsed << " s";
    require(lstm_wins >= 4, "LSTM won only " + std::to_string(lstm_wins) + "/5 seeds");
    require(elapsed < 600.0, "copy task took " + std::to_string(elapsed) + " s (>= 600)");
    return detail.str();
}

// ---- criterion 6: capacity trends ----

// 30 two-wave logistic outbreaks with weekday reporting dips and
// latitude-coupled growth rates, so capacity genuinely pays off
std::vector<RegionSeries> synthetic_epidemic_corpus(int count) {
    std::vector<RegionSeries> regions;
    Rng rng(2718);
    const int start = parse_iso("2020-01-22");
    for (int k = 0; k < count; ++k) {
        RegionSeries s;
        s.region_id = s.country = "Synth" + std::to_string(k);
        s.latitude = rng.uniform(-60.0, 65.0);
        s.longitude = rng.uniform(-160.0, 160.0);
        const double k1 = std::pow(10.0, rng.uniform(4.2, 5.0));
        const double k2 = k1 * rng.uniform(0.3, 1.2);
        const double r1 = 0.05 + 0.0012 * std::abs(s.latitude) + rng.uniform(0.0, 0.04);
        const double r2 = 0.05 + 0.0012 * std::abs(s.latitude) + rng.uniform(0.0, 0.04);
        const double t1 = rng.uniform(30.0, 60.0);
        const double t2 = t1 + rng.uniform(20.0, 45.0);
        auto level = [&](double t) {
            return k1 / (1.0 + std::exp(-r1 * (t - t1))) + k2 / (1.0 + std::exp(-r2 * (t - t2)));
        };
        double total = 0.0;
        for (int t = 0; t < 100; ++t) {
            s.dates.push_back(start + t);
            double daily = std::max(0.0, level(t) - level(t - 1));
            const int weekday = t % 7;
            if (weekday == 5 || weekday == 6) daily *= 0.6;
            else if (weekday == 0) daily *= 1.6;
            daily *= 1.0 + 0.15 * (rng.next_double() - 0.5);
            total += std::round(daily);
            s.confirmed.push_back(total);
            s.deaths.push_back(std::round(total * 0.05));
            s.recovered.push_back(std::round(total * 0.35));
        }
        regions.push_back(std::move(s));
    }
    return regions;
}

std::string criterion_capacity_trends() {
    const auto t0 = std::chrono::steady_clock::now();
    auto corpus = synthetic_epidemic_corpus(30);
    std::vector<RegionSeries> val(corpus.end() - 4, corpus.end());
    corpus.resize(26);

    WindowOptions wopts;
    wopts.start_date = parse_iso("2020-01-22");
    const PreparedData prepared = prepare_windows(corpus, val, wopts);

    // state-bottlenecked head: the 100-day output must be read from the final
    // recurrent state, so width and depth both carry real capacity
    ModelConfig base;
    base.head_mode = HeadMode::last_step;
    TrainOptions topts;
    topts.iterations = 2500;
    TrialOptions tropts;
    tropts.seeds = {1, 2, 3};

    auto mean_rmse = [&](int layers, int hidden) {
        ModelConfig cfg = base;
        cfg.num_layers = layers;
        cfg.hidden_size = hidden;
        const auto sets = run_trials(cfg, topts, prepared, tropts);
        double acc = 0.0;
        for (const auto& [id, set] : sets) acc += set.mean_rmse;
        return acc / static_cast<double>(sets.size());
    };
    const double h1_l4 = mean_rmse(4, 1);
    const double h30_l4 = mean_rmse(4, 30);  // shared point of both sweeps
    const double h30_l1 = mean_rmse(1, 30);
    const double elapsed = seconds_since(t0);

    std::ostringstream detail;
    detail << "rmse h1=" << h1_l4 << " vs h30=" << h30_l4 << " (4 layers); L1=" << h30_l1
           << " vs L4=" << h30_l4 << " (hidden 30); " << elapsed << " s";
    require(h30_l4 < h1_l4, "hidden=30 did not beat hidden=1: " + detail.str());
    require(h30_l4 < h30_l1, "4 layers did not beat 1 layer: " + detail.str());
    require(elapsed < 1800.0, "capacity trends took " + std::to_string(elapsed) + " s");
    return detail.str();
}

// ---- criterion 7: pipeline determinism ----

std::string criterion_determinism() {
    const std::string cfg = fixture_config("determinism.json", 150);
    const fs::path out_a = work_dir() / "det_a";
    const fs::path out_b = work_dir() / "det_b";
    for (const auto& [out, tag] : {std::pair{out_a, "a"}, std::pair{out_b, "b"}}) {
        require(run_cli("train --config " + cfg + " --out " + out.string(),
                        std::string("det_train_") + tag) == 0,
                "train failed");
        require(run_cli("validate --config " + cfg + " --out " + out.string() +
                            " --checkpoint " + out.string(),
                        std::string("det_val_") + tag) == 0,
                "validate failed");
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(out_a)) {
        if (entry.path().extension() != ".csv" && entry.path().extension() != ".ckpt") continue;
        const fs::path twin = out_b / entry.path().filename();
        require(fs::exists(twin), "missing twin output " + twin.string());
        require(slurp(entry.path()) == slurp(twin),
                "outputs differ: " + entry.path().filename().string());
        ++compared;
    }
    require(compared >= 5, "too few outputs compared");
    return std::to_string(compared) + " artifacts byte-identical across reruns";
}

// ---- criterion 8: continuation contract ----

std::string criterion_continuation() {
    Vector prediction(10);
    for (int i = 0; i < 10; ++i) prediction[i] = 8000.0 + 125.0 * i;
    Vector actual(9);
    for (int i = 0; i < 9; ++i) actual[i] = 9000.0 + 125.0 * i;  // final 10000, cut at 9000

    const Continuation cont = cut_and_augment(prediction, 0, actual, 0);
    require(std::abs(cont.offset - 1000.0) < 1e-12, "offset != +1000");
    require(cont.accumulated.front() == actual.back(), "join not exact");
    require(std::abs(cont.accumulated[1] - (prediction[9] + 1000.0)) < 1e-9,
            "shifted value wrong");
    for (std::size_t j = 0; j < cont.raw_daily.size(); ++j)
        require(std::abs(cont.shifted_daily[j] - cont.raw_daily[j]) <=
                    1e-9 * std::max(1.0, std::abs(cont.raw_daily[j])),
                "additive rule changed daily increments");
    for (std::size_t j = 0; j + 1 < cont.accumulated.size(); ++j)
        require(cont.accumulated[j + 1] - cont.accumulated[j] == cont.shifted_daily[j],
                "differencing round trip broken");
    return "join exact at 10000; +1000 offset; daily increments preserved";
}

// ---- criterion 9: end-to-end fixture run ----

std::string criterion_end_to_end() {
    const std::string cfg = (fs::path(data_dir()) / "config.json").string();
    const fs::path out = work_dir() / "full_run";
    const auto t0 = std::chrono::steady_clock::now();
    require(run_cli("train --config " + cfg + " --out " + out.string(), "full_train") == 0,
            "default-config training failed");
    const double train_seconds = seconds_since(t0);
    require(train_seconds < 1800.0,
            "training took " + std::to_string(train_seconds) + " s (>= 1800)");

    const auto loss_rows = read_csv((out / "loss_trial1.csv").string());
    require(loss_rows.size() == 10001, "expected 10000 loss rows, got " +
                                           std::to_string(loss_rows.size() - 1));

    require(run_cli("validate --config " + cfg + " --out " + out.string() + " --checkpoint " +
                        out.string(),
                    "full_validate") == 0,
            "validate failed");

    int regions_checked = 0;
    for (const char* region : {"Indonesia", "Sweden", "Saudi_Arabia", "Argentina"}) {
        const fs::path csv_path = out / (std::string(region) + "_validation.csv");
        require(fs::exists(csv_path), "missing validation curves for " + std::string(region));
        require(fs::exists(out / (std::string(region) + "_validation.svg")),
                "missing plot for " + std::string(region));
        const auto rows = read_csv(csv_path.string());
        double prev = -1.0;
        int accum_rows = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][2] == "mean" && rows[i][3] == "cumulative") {
                const double v = std::stod(rows[i][4]);
                require(v >= prev, std::string(region) + " accumulated prediction decreases");
                prev = v;
                ++accum_rows;
            }
        }
        require(accum_rows == 100, "expected 100 accumulated rows");
        ++regions_checked;
    }
    require(regions_checked == 4, "not all validation regions produced curves");

    std::ostringstream detail;
    detail << "10000 iterations in " << train_seconds
           << " s; 4 regions validated, accumulated curves non-decreasing";
    return detail.str();
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {"gradient correctness (BPTT vs central differences)", criterion_gradients},
        {"LSTM cell identity cases", criterion_cell_identities},
        {"min-max scaler contract", criterion_scaler},
        {"RMSE oracle and translation invariance", criterion_rmse},
        {"long-lag copy task: LSTM beats RNN", criterion_copy_task},
        {"capacity trends on synthetic epidemic corpus", criterion_capacity_trends},
        {"pipeline determinism (train + validate twice)", criterion_determinism},
        {"continuation cut-and-augment contract", criterion_continuation},
        {"end-to-end fixture run (default config)", criterion_end_to_end},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::string label = "criterion " + std::to_string(i + 1);
        try {
            const std::string detail = criteria[i].run();
            std::cout << "PASS  " << label << ": " << criteria[i].name << " [" << detail << "]"
                      << std::endl;
        } catch (const std::exception& e) {
            std::cout << "FAIL  " << label << ": " << criteria[i].name << " :: " << e.what()
                      << std::endl;
            ++failures;
        }
    }
    if (failures > 0) {
        std::cout << failures << " of " << criteria.size() << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all " << criteria.size() << " criteria passed" << std::endl;
    return 0;
}
