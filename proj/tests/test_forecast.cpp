#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "epicast/csv.hpp"
#include "epicast/dates.hpp"
#include "epicast/forecast.hpp"

using namespace epicast;

TEST_CASE("accumulate is a prefix sum") {
    CHECK(accumulate({1, 2, 3}) == Vector{1, 3, 6});
    CHECK(accumulate({}) == Vector{});
    // round trip with differencing for a non-decreasing series
    const std::vector<double> c = {0, 2, 2, 7};
    const auto daily = to_daily(c);
    REQUIRE(daily.clamped == 0);
    CHECK(accumulate(daily.values) == Vector(c.begin(), c.end()));
}

TEST_CASE("cut_and_augment: additive join and increment preservation") {
    const int day0 = parse_iso("2020-03-01");
    // prediction covers days 0..9, actuals days 0..5
    const Vector prediction = {100, 200, 350, 500, 700, 900, 1150, 1400, 1700, 2000};
    const Vector actual = {120, 240, 380, 560, 760, 1000};

    const Continuation cont = cut_and_augment(prediction, day0, actual, day0);
    CHECK(cont.anchor_date == day0 + 5);
    CHECK(cont.offset == doctest::Approx(100.0));  // 1000 - 900
    REQUIRE(cont.accumulated.size() == 5);         // join row + 4 future days
    CHECK(cont.accumulated[0] == 1000.0);          // exact join
    CHECK(cont.accumulated[1] == doctest::Approx(1250.0));
    CHECK(cont.accumulated.back() == doctest::Approx(2100.0));

    // additive rule preserves the daily increments
    REQUIRE(cont.raw_daily.size() == 4);
    for (std::size_t j = 0; j < cont.raw_daily.size(); ++j)
        CHECK(cont.shifted_daily[j] == doctest::Approx(cont.raw_daily[j]).epsilon(1e-12));
    // differencing the accumulated curve recovers the shifted segment exactly
    for (std::size_t j = 0; j + 1 < cont.accumulated.size(); ++j)
        CHECK(cont.accumulated[j + 1] - cont.accumulated[j] == cont.shifted_daily[j]);
    // non-decreasing
    for (std::size_t j = 1; j < cont.accumulated.size(); ++j)
        CHECK(cont.accumulated[j] >= cont.accumulated[j - 1]);
}

TEST_CASE("cut_and_augment oracle: +1000 uniform shift") {
    const int day0 = 0;
    Vector prediction(10);
    for (int i = 0; i < 10; ++i) prediction[i] = 8000.0 + 125.0 * i;  // 9000 at day 8
    Vector actual(9);
    for (int i = 0; i < 9; ++i) actual[i] = 9000.0 + 125.0 * i;  // ends at 10000 on day 8

    const Continuation cont = cut_and_augment(prediction, day0, actual, day0);
    CHECK(cont.offset == doctest::Approx(1000.0));
    for (std::size_t j = 1; j < cont.accumulated.size(); ++j)
        CHECK(cont.accumulated[j] == doctest::Approx(prediction[8 + j] + 1000.0));
}

TEST_CASE("cut_and_augment: aligned curves need no shift") {
    const Vector prediction = {10, 20, 30, 40};
    const Vector actual = {10, 20};
    const Continuation cont = cut_and_augment(prediction, 0, actual, 0);
    CHECK(cont.offset == 0.0);
    CHECK(cont.accumulated == Vector{20, 30, 40});
}

TEST_CASE("cut_and_augment: calendar and rule errors") {
    const Vector prediction = {1, 2, 3};
    CHECK_THROWS_AS(cut_and_augment(prediction, 0, {1, 2}, 100, AugmentRule::additive),
                    std::invalid_argument);  // no overlap
    CHECK_THROWS_AS(cut_and_augment(prediction, 0, {1, 2, 3}, 0, AugmentRule::additive),
                    std::invalid_argument);  // nothing past the actuals
    CHECK_THROWS_AS(cut_and_augment({0.0, 0.0, 1.0}, 0, {5.0}, 0, AugmentRule::multiplicative),
                    std::invalid_argument);  // zero level at the cut
    CHECK_THROWS_AS(cut_and_augment({}, 0, {}, 0), std::invalid_argument);
}

TEST_CASE("cut_and_augment: multiplicative rule scales the level") {
    const Vector prediction = {100, 200, 400, 800};
    const Vector actual = {50, 100};  // actual final 100 vs prediction 200 at the cut
    const Continuation cont = cut_and_augment(prediction, 0, actual, 0,
                                              AugmentRule::multiplicative);
    CHECK(cont.offset == doctest::Approx(0.5));
    CHECK(cont.accumulated == Vector{100, 200, 400});
    for (std::size_t j = 1; j < cont.accumulated.size(); ++j)
        CHECK(cont.accumulated[j] >= cont.accumulated[j - 1]);
}

namespace {

struct FutureFixture {
    ModelConfig config;
    NetworkParams model;
    FeatureScaler scaler;
    Matrix recent;

    FutureFixture() : config(), model(), scaler() {
        config.num_layers = 1;
        config.hidden_size = 4;
        config.input_len = 10;
        config.output_len = 14;
        config.feature_count = 5;
        config.dropout_rate = 0.0;
        model = init_params(config, 77);
        scaler.feature_min = {0, 0, 0, -90, -180};
        scaler.feature_max = {500, 50, 200, 90, 180};
        recent = Matrix(12, 5);  // two spare rows; only the last 10 are used
        Rng rng(5);
        for (std::size_t r = 0; r < recent.rows(); ++r) {
            recent(r, 0) = rng.uniform(0, 400);
            recent(r, 1) = rng.uniform(0, 40);
            recent(r, 2) = rng.uniform(0, 150);
            recent(r, 3) = 10.0;
            recent(r, 4) = 20.0;
        }
    }
};

}  // namespace

TEST_CASE("predict_future: contract and determinism") {
    FutureFixture fx;
    const Vector daily = predict_future(fx.model, fx.scaler, fx.recent);
    REQUIRE(daily.size() == 14);
    for (double v : daily) CHECK(v >= 0.0);

    CHECK(predict_future(fx.model, fx.scaler, fx.recent) == daily);  // eval determinism

    // shifting the window forward one day keeps the output length
    Matrix shifted(11, 5);
    for (std::size_t r = 0; r < 11; ++r)
        for (int c = 0; c < 5; ++c) shifted(r, c) = fx.recent(r + 1, c);
    CHECK(predict_future(fx.model, fx.scaler, shifted).size() == 14);

    Matrix too_short(9, 5);
    CHECK_THROWS_AS(predict_future(fx.model, fx.scaler, too_short), std::invalid_argument);

    // only the last input_len rows matter
    Matrix tail(10, 5);
    for (std::size_t r = 0; r < 10; ++r)
        for (int c = 0; c < 5; ++c) tail(r, c) = fx.recent(r + 2, c);
    CHECK(predict_future(fx.model, fx.scaler, tail) == daily);
}

namespace {

TrialSet demo_trial_set() {
    TrialSet set;
    set.region_id = "Demo";
    set.start_date = parse_iso("2020-02-25");
    set.actual_daily = {10, 20, 30, 25};
    set.actual_accum = accumulate(set.actual_daily);
    set.per_trial_daily = {{10, 18, 28, 26, 20, 15}, {12, 22, 32, 24, 18, 12}};
    set.per_trial_accum = {accumulate(set.per_trial_daily[0]),
                           accumulate(set.per_trial_daily[1])};
    set.seeds = {1, 2};
    const std::size_t len = 6;
    set.mean_curve.resize(len);
    set.min_curve.resize(len);
    set.max_curve.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
        const double a = set.per_trial_accum[0][t];
        const double b = set.per_trial_accum[1][t];
        set.mean_curve[t] = (a + b) / 2;
        set.min_curve[t] = std::min(a, b);
        set.max_curve[t] = std::max(a, b);
    }
    set.per_trial_rmse = {1.0, 2.0};
    set.mean_rmse = 1.5;
    return set;
}

}  // namespace

TEST_CASE("emit_outputs writes csv, trial curves and svg deterministically") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "epicast_forecast_test";
    fs::create_directories(dir);
    const TrialSet set = demo_trial_set();
    const Continuation cont =
        cut_and_augment(set.mean_curve, set.start_date, set.actual_accum, set.start_date);

    const std::string prefix = (dir / "demo").string();
    emit_outputs(set, &cont, prefix);

    for (const char* suffix : {".csv", "_trials.csv", ".svg"}) {
        const fs::path p = prefix + suffix;
        REQUIRE_MESSAGE(fs::exists(p), suffix);
        CHECK(fs::file_size(p) > 0);
    }

    // deterministic bytes
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    const std::string csv_once = slurp(prefix + std::string(".csv"));
    const std::string svg_once = slurp(prefix + std::string(".svg"));
    emit_outputs(set, &cont, prefix);
    CHECK(slurp(prefix + std::string(".csv")) == csv_once);
    CHECK(slurp(prefix + std::string(".svg")) == svg_once);

    // schema: header + every row has 5 fields, known series/kind values
    const auto rows = read_csv(prefix + std::string(".csv"));
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == std::vector<std::string>{"region", "date", "series", "kind", "value"});
    bool saw_continuation = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 5);
        CHECK(rows[i][0] == "Demo");
        CHECK_NOTHROW(parse_iso(rows[i][1]));
        const std::string& series = rows[i][2];
        CHECK((series == "actual" || series == "mean" || series == "min" || series == "max" ||
               series == "continuation"));
        CHECK((rows[i][3] == "daily" || rows[i][3] == "cumulative"));
        if (series == "continuation") saw_continuation = true;
        if (rows[i][3] == "daily") CHECK(std::stod(rows[i][4]) >= 0.0);
    }
    CHECK(saw_continuation);

    const std::string svg = svg_once;
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("width=\"1200\" height=\"600\"") != std::string::npos);
    CHECK(svg.find("continuation") != std::string::npos);  // legend entry
    CHECK(svg.find("mean prediction") != std::string::npos);
}
