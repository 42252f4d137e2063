#pragma once

#include <string>
#include <vector>

#include "epicast/dataio.hpp"
#include "epicast/eval.hpp"
#include "epicast/nn.hpp"

namespace epicast {

enum class AugmentRule { additive, multiplicative };

/// A prediction segment grafted onto the end of the observed curve.
struct Continuation {
    int anchor_date = 0;    // serial day where the actual data end
    Vector raw_daily;       // predicted daily values past the anchor, unshifted
    Vector shifted_daily;   // after the augmentation rule
    Vector accumulated;     // join row at the anchor (== actual final) + shifted days
    double offset = 0.0;    // additive shift, or the multiplicative scale
    AugmentRule rule = AugmentRule::additive;
};

/// Eval-mode forward on the last `input_len` rows of raw multivariate data;
/// returns the unscaled daily-confirmed prediction, floored at zero.
Vector predict_future(const NetworkParams& model, const FeatureScaler& scaler,
                      const Matrix& recent_input_raw);

/// Cuts the cumulative prediction at the end of the actuals and shifts it so
/// the two curves join continuously. The additive rule preserves the daily
/// increments; the multiplicative rule preserves relative growth.
Continuation cut_and_augment(const Vector& prediction_accum, int prediction_start,
                             const Vector& actual_accum, int actual_start,
                             AugmentRule rule = AugmentRule::additive);

/// Long-format series CSV: region, date, series, kind, value with
/// series in {actual, mean, min, max, continuation} and kind in
/// {daily, cumulative}.
std::string series_csv(const TrialSet& set, const Continuation* continuation);

/// Writes <prefix>.csv (series schema), <prefix>_trials.csv (per-trial
/// curves) and <prefix>.svg (line chart with envelope band).
void emit_outputs(const TrialSet& set, const Continuation* continuation,
                  const std::string& path_prefix);

}  // namespace epicast
