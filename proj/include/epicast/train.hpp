#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epicast/dataio.hpp"
#include "epicast/nn.hpp"

namespace epicast {

/// Mean of squared differences.
double mse_loss(const Vector& prediction, const Vector& target);

/// dLoss/dPrediction for mse_loss.
Vector mse_loss_gradient(const Vector& prediction, const Vector& target);

/// MSE restricted to indices [start, end); used when loss covers only the
/// extrapolated days. start=0, end=len reproduces mse_loss.
double windowed_mse(const Vector& prediction, const Vector& target, int start, int end);
Vector windowed_mse_gradient(const Vector& prediction, const Vector& target, int start, int end);

/// Exact BPTT gradients of the loss w.r.t. every parameter, given the forward
/// cache and dLoss/dPrediction. Dropout masks cached by the forward pass are
/// reused, so forward+backward is a deterministic differentiable function.
NetworkParams backward(const NetworkParams& params, const ForwardCache& cache,
                       const Vector& prediction_grad);

/// Same, accumulating into an existing parameter-shaped buffer.
void backward_accumulate(const NetworkParams& params, const ForwardCache& cache,
                         const Vector& prediction_grad, NetworkParams& grads);

struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long step_count = 0;

    AdamState() = default;
    explicit AdamState(std::size_t size, double lr = 0.001)
        : learning_rate(lr), first_moment(size, 0.0), second_moment(size, 0.0) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads);

struct BatchGradient {
    NetworkParams grads;  // mean-loss gradient over the batch
    double loss = 0.0;    // mean loss over the batch
};

// The batch gradient reduces per-window gradients over fixed-size chunks in a
// fixed order, so the OpenMP kernel is bit-identical to the serial reference
// for any thread count. `mask_seed` derives one dropout stream per window;
// pass train_mode=false for a deterministic dropout-free pass.
inline constexpr int kBatchChunk = 4;

BatchGradient batch_gradient_serial(const NetworkParams& params,
                                    const std::vector<WindowPair>& windows,
                                    std::uint64_t mask_seed, bool train_mode,
                                    int loss_start = 0);
BatchGradient batch_gradient_parallel(const NetworkParams& params,
                                      const std::vector<WindowPair>& windows,
                                      std::uint64_t mask_seed, bool train_mode,
                                      int loss_start = 0);

struct TrainOptions {
    int iterations = 10000;
    double learning_rate = 0.001;
    double clip_norm = 5.0;       // global gradient-norm clip; 0 disables
    bool loss_tail_only = false;  // restrict the loss to days past input_len
    bool head_only = false;       // freeze recurrent layers, train the head alone
    int checkpoint_every = 0;     // 0 = only the caller saves
    std::string checkpoint_prefix;
    bool parallel = true;  // use the OpenMP batch kernel
    bool verbose = false;
};

struct TrainReport {
    Vector loss_history;  // one entry per iteration, evaluated before the update
    NetworkParams final_params;
    std::uint64_t seed = 0;
    double wall_time_seconds = 0.0;
    long clip_events = 0;
};

/// Full-batch training: every iteration evaluates the mean loss over all
/// windows, takes one Adam step, records the loss. Aborts with a diagnostic
/// naming the iteration if the loss stops being finite.
TrainReport train(const ModelConfig& config, const std::vector<WindowPair>& windows,
                  const TrainOptions& options);

/// Two-column CSV: iteration, mse.
void write_loss_csv(const Vector& loss_history, const std::string& path);

struct GradCheckReport {
    double max_rel_error = 0.0;
    int draws = 0;
    std::size_t params_checked = 0;
};

/// Compares analytic BPTT gradients against central finite differences
/// (perturbation 1e-5) over `trial_count` random parameter draws. With
/// use_dropout the masks are frozen across the analytic and all perturbed
/// evaluations. Intended for small configs only.
GradCheckReport grad_check(const ModelConfig& config, int trial_count,
                           std::uint64_t seed = 1234, bool use_dropout = false);

}  // namespace epicast
