#include "epicast/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "epicast/csv.hpp"

namespace epicast {

double mse_loss(const Vector& prediction, const Vector& target) {
    return windowed_mse(prediction, target, 0, static_cast<int>(prediction.size()));
}

Vector mse_loss_gradient(const Vector& prediction, const Vector& target) {
    return windowed_mse_gradient(prediction, target, 0, static_cast<int>(prediction.size()));
}

double windowed_mse(const Vector& prediction, const Vector& target, int start, int end) {
    if (prediction.size() != target.size())
        throw std::invalid_argument("mse: length mismatch (" + std::to_string(prediction.size()) +
                                    " vs " + std::to_string(target.size()) + ")");
    if (start < 0 || end > static_cast<int>(prediction.size()) || start >= end)
        throw std::invalid_argument("mse: bad window [" + std::to_string(start) + ", " +
                                    std::to_string(end) + ")");
    double acc = 0.0;
    for (int k = start; k < end; ++k) {
        const double d = prediction[k] - target[k];
        acc += d * d;
    }
    return acc / (end - start);
}

Vector windowed_mse_gradient(const Vector& prediction, const Vector& target, int start, int end) {
    if (prediction.size() != target.size())
        throw std::invalid_argument("mse gradient: length mismatch");
    Vector grad(prediction.size(), 0.0);
    const double scale = 2.0 / (end - start);
    for (int k = start; k < end; ++k) grad[k] = scale * (prediction[k] - target[k]);
    return grad;
}

NetworkParams backward(const NetworkParams& params, const ForwardCache& cache,
                       const Vector& prediction_grad) {
    NetworkParams grads(params.config());
    backward_accumulate(params, cache, prediction_grad, grads);
    return grads;
}

void backward_accumulate(const NetworkParams& params, const ForwardCache& cache,
                         const Vector& prediction_grad, NetworkParams& grads) {
    const ModelConfig& cfg = params.config();
    const int T = cfg.input_len;
    const std::size_t H = cfg.hidden_size;
    const bool is_lstm = cfg.cell_kind == CellKind::lstm;

    if (grads.size() != params.size())
        throw std::invalid_argument("backward: gradient buffer does not match parameters");
    if (prediction_grad.size() != static_cast<std::size_t>(cfg.output_len))
        throw std::invalid_argument("backward: prediction gradient length mismatch");
    if (cache.layers.size() != static_cast<std::size_t>(cfg.num_layers))
        throw std::invalid_argument("backward: cache does not match network depth");

    // head: prediction = sigmoid(W u + b)
    Vector d_head_pre(cfg.output_len);
    for (int k = 0; k < cfg.output_len; ++k) {
        const double p = cache.prediction[k];
        d_head_pre[k] = prediction_grad[k] * p * (1.0 - p);
    }
    {
        HeadViews gh = grads.head();
        outer_add(gh.weights, d_head_pre.data(), cache.head_input.data());
        for (int k = 0; k < cfg.output_len; ++k) gh.bias[k] += d_head_pre[k];
    }
    Vector d_head_input(cfg.head_input_size(), 0.0);
    matvec_transpose_add(params.head().weights, d_head_pre.data(), d_head_input.data());

    // gradient w.r.t. each layer's (post-dropout) output, top layer first
    Matrix d_above(T, H, 0.0);
    if (cfg.head_mode == HeadMode::all_steps) {
        std::copy(d_head_input.begin(), d_head_input.end(), d_above.data());
    } else {
        std::copy(d_head_input.begin(), d_head_input.end(), d_above.row(T - 1));
    }

    const bool has_masks = !cache.masks.empty();
    Vector d_hidden(H), d_h_next(H), d_c_next(H);

    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const LayerCache& lc = cache.layers[l];
        const std::size_t in = cfg.layer_input_size(l);
        Vector d_joined(H + in);
        Matrix d_below;
        if (l > 0) d_below = Matrix(T, H, 0.0);

        std::fill(d_h_next.begin(), d_h_next.end(), 0.0);
        std::fill(d_c_next.begin(), d_c_next.end(), 0.0);

        if (is_lstm) {
            const ConstMatView gate_block = params.lstm_gate_block(l);
            MatView grad_gate_block = grads.lstm_gate_block(l);
            VecView grad_bias_block = grads.lstm_bias_block(l);
            // preactivation gradients packed in gate order f/i/g/o so the
            // weight updates run over the fused block
            Vector dpre(4 * H);
            for (int t = T - 1; t >= 0; --t) {
                const double* mask = has_masks ? cache.masks[l].row(t) : nullptr;
                for (std::size_t j = 0; j < H; ++j)
                    d_hidden[j] = d_above(t, j) * (mask ? mask[j] : 1.0) + d_h_next[j];

                const double* f = lc.gate_forget.row(t);
                const double* i = lc.gate_input.row(t);
                const double* g = lc.candidate.row(t);
                const double* o = lc.gate_output.row(t);
                const double* c = lc.cell.row(t);
                const double* c_prev = t > 0 ? lc.cell.row(t - 1) : nullptr;

                for (std::size_t j = 0; j < H; ++j) {
                    const double tc = std::tanh(c[j]);
                    const double d_out_gate = d_hidden[j] * tc;
                    dpre[3 * H + j] = d_out_gate * o[j] * (1.0 - o[j]);
                    const double d_cell = d_hidden[j] * o[j] * (1.0 - tc * tc) + d_c_next[j];
                    const double cp = c_prev ? c_prev[j] : 0.0;
                    dpre[j] = d_cell * cp * f[j] * (1.0 - f[j]);
                    dpre[H + j] = d_cell * g[j] * i[j] * (1.0 - i[j]);
                    dpre[2 * H + j] = d_cell * i[j] * (1.0 - g[j] * g[j]);
                    d_c_next[j] = d_cell * f[j];
                }

                const double* joined = lc.joined.row(t);
                outer_add(grad_gate_block, dpre.data(), joined);
                for (std::size_t j = 0; j < 4 * H; ++j) grad_bias_block[j] += dpre[j];

                std::fill(d_joined.begin(), d_joined.end(), 0.0);
                matvec_transpose_add(gate_block, dpre.data(), d_joined.data());

                std::copy(d_joined.begin(), d_joined.begin() + H, d_h_next.begin());
                if (l > 0) std::copy(d_joined.begin() + H, d_joined.end(), d_below.row(t));
            }
        } else {
            const RnnCellConstViews pv = params.rnn_layer(l);
            RnnCellViews gv = grads.rnn_layer(l);
            Vector dpre(H);
            for (int t = T - 1; t >= 0; --t) {
                const double* mask = has_masks ? cache.masks[l].row(t) : nullptr;
                const double* h = lc.hidden.row(t);
                for (std::size_t j = 0; j < H; ++j) {
                    const double dh = d_above(t, j) * (mask ? mask[j] : 1.0) + d_h_next[j];
                    dpre[j] = dh * (1.0 - h[j] * h[j]);
                }
                outer_add(gv.w_hidden, dpre.data(), lc.joined.row(t));
                for (std::size_t j = 0; j < H; ++j) gv.b_hidden[j] += dpre[j];

                std::fill(d_joined.begin(), d_joined.end(), 0.0);
                matvec_transpose_add(pv.w_hidden, dpre.data(), d_joined.data());
                std::copy(d_joined.begin(), d_joined.begin() + H, d_h_next.begin());
                if (l > 0) std::copy(d_joined.begin() + H, d_joined.end(), d_below.row(t));
            }
        }
        if (l > 0) d_above = std::move(d_below);
    }
}

void adam_step(AdamState& state, NetworkParams& params, const NetworkParams& grads) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step_count += 1;
    const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    double* p = params.flat().data();
    const double* g = grads.flat().data();
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    for (std::size_t idx = 0; idx < n; ++idx) {
        m[idx] = state.beta1 * m[idx] + (1.0 - state.beta1) * g[idx];
        v[idx] = state.beta2 * v[idx] + (1.0 - state.beta2) * g[idx] * g[idx];
        const double m_hat = m[idx] / corr1;
        const double v_hat = v[idx] / corr2;
        p[idx] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

namespace {

struct BatchWorkspace {
    std::vector<NetworkParams> chunk_grads;
    std::vector<double> chunk_loss;
};

void check_batch_inputs(const NetworkParams& params, const std::vector<WindowPair>& windows) {
    if (windows.empty()) throw std::invalid_argument("batch gradient: no windows");
    const ModelConfig& cfg = params.config();
    for (const WindowPair& w : windows) {
        if (w.target.size() != static_cast<std::size_t>(cfg.output_len))
            throw std::invalid_argument("batch gradient: window '" + w.region_id +
                                        "' target length " + std::to_string(w.target.size()) +
                                        " != output_len " + std::to_string(cfg.output_len));
    }
}

// One window's contribution: forward (with this window's dropout stream),
// loss, and gradient of the batch-mean loss.
void window_pass(const NetworkParams& params, const WindowPair& window, std::uint64_t window_seed,
                 bool train_mode, int loss_start, double inv_count, NetworkParams& grads,
                 double& loss_sum) {
    const ModelConfig& cfg = params.config();
    std::vector<Matrix> masks;
    const std::vector<Matrix>* mask_ptr = nullptr;
    if (train_mode && cfg.dropout_rate > 0.0) {
        Rng rng(window_seed);
        masks = make_dropout_masks(cfg, rng);
        mask_ptr = &masks;
    }
    const ForwardCache cache = network_forward(params, window.input, mask_ptr);
    loss_sum += windowed_mse(cache.prediction, window.target, loss_start, cfg.output_len);
    Vector d_pred =
        windowed_mse_gradient(cache.prediction, window.target, loss_start, cfg.output_len);
    for (double& d : d_pred) d *= inv_count;
    backward_accumulate(params, cache, d_pred, grads);
}

// Shared by the serial reference and the OpenMP kernel: per-window gradients
// are summed within fixed chunks in window order, then chunk partials are
// summed in chunk order. Results are bit-identical however chunks are
// scheduled.
BatchGradient reduce_chunks(const NetworkParams& params, BatchWorkspace& ws, int n_chunks,
                            std::size_t window_count) {
    BatchGradient out{NetworkParams(params.config()), 0.0};
    double* acc = out.grads.flat().data();
    for (int ci = 0; ci < n_chunks; ++ci) {
        const double* part = ws.chunk_grads[ci].flat().data();
        for (std::size_t j = 0; j < out.grads.size(); ++j) acc[j] += part[j];
        out.loss += ws.chunk_loss[ci];
    }
    out.loss /= static_cast<double>(window_count);
    return out;
}

void prepare_workspace(BatchWorkspace& ws, const NetworkParams& params, int n_chunks) {
    if (ws.chunk_grads.size() != static_cast<std::size_t>(n_chunks) ||
        (n_chunks > 0 && ws.chunk_grads.front().size() != params.size())) {
        ws.chunk_grads.assign(n_chunks, NetworkParams(params.config()));
    } else {
        for (auto& g : ws.chunk_grads) g.fill(0.0);
    }
    ws.chunk_loss.assign(n_chunks, 0.0);
}

// noinline keeps both schedulers on one compiled kernel, so the parallel
// result is bit-identical to the serial reference by construction
__attribute__((noinline)) void process_chunk(const NetworkParams& params,
                                              const std::vector<WindowPair>& windows,
                                              std::uint64_t mask_seed, bool train_mode,
                                              int loss_start, double inv_count, int chunk_index,
                                              BatchWorkspace& ws) {
    const int count = static_cast<int>(windows.size());
    const int begin = chunk_index * kBatchChunk;
    const int end = std::min(count, begin + kBatchChunk);
    for (int w = begin; w < end; ++w)
        window_pass(params, windows[w], derive_seed(mask_seed, w, 1), train_mode, loss_start,
                    inv_count, ws.chunk_grads[chunk_index], ws.chunk_loss[chunk_index]);
}

BatchGradient batch_gradient_impl(const NetworkParams& params,
                                  const std::vector<WindowPair>& windows, std::uint64_t mask_seed,
                                  bool train_mode, int loss_start, bool parallel,
                                  BatchWorkspace& ws) {
    check_batch_inputs(params, windows);
    const int count = static_cast<int>(windows.size());
    const int n_chunks = (count + kBatchChunk - 1) / kBatchChunk;
    const double inv_count = 1.0 / count;
    prepare_workspace(ws, params, n_chunks);

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int ci = 0; ci < n_chunks; ++ci)
            process_chunk(params, windows, mask_seed, train_mode, loss_start, inv_count, ci, ws);
    } else {
        for (int ci = 0; ci < n_chunks; ++ci)
            process_chunk(params, windows, mask_seed, train_mode, loss_start, inv_count, ci, ws);
    }
    return reduce_chunks(params, ws, n_chunks, windows.size());
}

}  // namespace

BatchGradient batch_gradient_serial(const NetworkParams& params,
                                    const std::vector<WindowPair>& windows,
                                    std::uint64_t mask_seed, bool train_mode, int loss_start) {
    BatchWorkspace ws;
    return batch_gradient_impl(params, windows, mask_seed, train_mode, loss_start, false, ws);
}

BatchGradient batch_gradient_parallel(const NetworkParams& params,
                                      const std::vector<WindowPair>& windows,
                                      std::uint64_t mask_seed, bool train_mode, int loss_start) {
    BatchWorkspace ws;
    return batch_gradient_impl(params, windows, mask_seed, train_mode, loss_start, true, ws);
}

TrainReport train(const ModelConfig& config, const std::vector<WindowPair>& windows,
                  const TrainOptions& options) {
    config.validate();
    if (windows.empty()) throw std::invalid_argument("train: at least one window required");
    if (options.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");

    NetworkParams params = init_params(config, config.seed);
    AdamState adam(params.size(), options.learning_rate);
    const int loss_start = options.loss_tail_only ? config.input_len : 0;
    if (loss_start >= config.output_len)
        throw std::invalid_argument("train: tail-only loss needs output_len > input_len");

    TrainReport report;
    report.seed = config.seed;
    report.loss_history.reserve(options.iterations);

    BatchWorkspace ws;
    const auto t_start = std::chrono::steady_clock::now();
    for (int iter = 0; iter < options.iterations; ++iter) {
        const std::uint64_t mask_seed = derive_seed(config.seed, 0x6d61736bULL, iter);
        BatchGradient bg = batch_gradient_impl(params, windows, mask_seed, true, loss_start,
                                               options.parallel, ws);
        if (!std::isfinite(bg.loss))
            throw std::runtime_error("training aborted: non-finite loss at iteration " +
                                     std::to_string(iter + 1));

        if (options.head_only) {
            double* g = bg.grads.flat().data();
            std::fill(g, g + bg.grads.head_offset(), 0.0);
        }
        if (options.clip_norm > 0.0) {
            const double norm = l2_norm(bg.grads.flat());
            if (norm > options.clip_norm) {
                const double scale = options.clip_norm / norm;
                for (double& g : bg.grads.flat()) g *= scale;
                ++report.clip_events;
            }
        }
        adam_step(adam, params, bg.grads);
        report.loss_history.push_back(bg.loss);

        if (options.checkpoint_every > 0 && (iter + 1) % options.checkpoint_every == 0)
            save_checkpoint(params,
                            options.checkpoint_prefix + "_iter" + std::to_string(iter + 1) +
                                ".ckpt");
        if (options.verbose && ((iter + 1) % 500 == 0 || iter == 0))
            std::fprintf(stderr, "iter %6d/%d  loss %.8f\n", iter + 1, options.iterations,
                         bg.loss);
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report.final_params = std::move(params);
    return report;
}

void write_loss_csv(const Vector& loss_history, const std::string& path) {
    std::ostringstream out;
    out << "iteration,mse\n";
    char buf[40];
    for (std::size_t i = 0; i < loss_history.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, loss_history[i]);
        out << buf;
    }
    atomic_write_file(path, out.str());
}

GradCheckReport grad_check(const ModelConfig& config, int trial_count, std::uint64_t seed,
                           bool use_dropout) {
    config.validate();
    GradCheckReport report;
    report.draws = trial_count;
    const double fd_step = 1e-5;

    for (int draw = 0; draw < trial_count; ++draw) {
        NetworkParams params = init_params(config, derive_seed(seed, draw, 17));
        Rng rng(derive_seed(seed, draw, 23));
        Matrix input(config.input_len, config.feature_count);
        for (std::size_t i = 0; i < input.size(); ++i) input.data()[i] = rng.next_double();
        Vector target(config.output_len);
        for (double& t : target) t = rng.uniform(0.05, 0.95);

        std::vector<Matrix> masks;
        const std::vector<Matrix>* mask_ptr = nullptr;
        if (use_dropout && config.dropout_rate > 0.0) {
            Rng mask_rng(derive_seed(seed, draw, 29));
            masks = make_dropout_masks(config, mask_rng);
            mask_ptr = &masks;
        }

        const ForwardCache cache = network_forward(params, input, mask_ptr);
        const NetworkParams analytic =
            backward(params, cache, mse_loss_gradient(cache.prediction, target));

        NetworkParams probe = params;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double orig = probe.flat()[i];
            probe.flat()[i] = orig + fd_step;
            const double loss_plus =
                mse_loss(network_forward(probe, input, mask_ptr).prediction, target);
            probe.flat()[i] = orig - fd_step;
            const double loss_minus =
                mse_loss(network_forward(probe, input, mask_ptr).prediction, target);
            probe.flat()[i] = orig;

            const double numeric = (loss_plus - loss_minus) / (2.0 * fd_step);
            const double analytic_i = analytic.flat()[i];
            const double denom =
                std::max({std::abs(analytic_i), std::abs(numeric), 1e-6});
            report.max_rel_error =
                std::max(report.max_rel_error, std::abs(analytic_i - numeric) / denom);
        }
        report.params_checked += probe.size();
    }
    return report;
}

}  // namespace epicast
