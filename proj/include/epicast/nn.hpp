#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "epicast/linalg.hpp"
#include "epicast/rng.hpp"

namespace epicast {

enum class CellKind { lstm, rnn };
enum class HeadMode { all_steps, last_step };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& s);

/// Architecture and run hyperparameters for one model.
struct ModelConfig {
    CellKind cell_kind = CellKind::lstm;
    int num_layers = 4;
    int hidden_size = 30;
    double dropout_rate = 0.1;
    int input_len = 67;
    int output_len = 100;
    int feature_count = 5;
    HeadMode head_mode = HeadMode::all_steps;
    std::uint64_t seed = 1;

    int layer_input_size(int layer) const { return layer == 0 ? feature_count : hidden_size; }
    int head_input_size() const {
        return head_mode == HeadMode::all_steps ? input_len * hidden_size : hidden_size;
    }
    bool same_shape(const ModelConfig& other) const;

    // throws std::invalid_argument on out-of-range fields
    void validate() const;
};

// Typed views over the flat parameter buffer; gate weights act on the joined
// vector [h_{t-1}, x_t].
template <typename T>
struct LstmCellViewsT {
    BasicMatView<T> w_forget, w_input, w_candidate, w_output;
    BasicVecView<T> b_forget, b_input, b_candidate, b_output;

    operator LstmCellViewsT<const T>() const
        requires(!std::is_const_v<T>)
    {
        return {w_forget, w_input, w_candidate, w_output,
                b_forget, b_input, b_candidate, b_output};
    }
};
template <typename T>
struct RnnCellViewsT {
    BasicMatView<T> w_hidden;
    BasicVecView<T> b_hidden;

    operator RnnCellViewsT<const T>() const
        requires(!std::is_const_v<T>)
    {
        return {w_hidden, b_hidden};
    }
};
template <typename T>
struct HeadViewsT {
    BasicMatView<T> weights;
    BasicVecView<T> bias;

    operator HeadViewsT<const T>() const
        requires(!std::is_const_v<T>)
    {
        return {weights, bias};
    }
};

using LstmCellViews = LstmCellViewsT<double>;
using LstmCellConstViews = LstmCellViewsT<const double>;
using RnnCellViews = RnnCellViewsT<double>;
using RnnCellConstViews = RnnCellViewsT<const double>;
using HeadViews = HeadViewsT<double>;
using HeadConstViews = HeadViewsT<const double>;

/// All weights and biases of a stacked recurrent network plus its output
/// head, stored contiguously. Layout: per layer the cell matrices then
/// biases (LSTM order forget/input/candidate/output), then head weights and
/// bias. Gradients and optimizer moments reuse the same layout.
class NetworkParams {
public:
    NetworkParams() = default;
    explicit NetworkParams(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    std::size_t size() const { return flat_.size(); }

    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    LstmCellViews lstm_layer(int layer);
    LstmCellConstViews lstm_layer(int layer) const;
    RnnCellViews rnn_layer(int layer);
    RnnCellConstViews rnn_layer(int layer) const;
    HeadViews head();
    HeadConstViews head() const;

    // The four gate matrices (and biases) of a layer are adjacent in the flat
    // buffer, so the hot loops can treat them as one 4H-row block in gate
    // order forget/input/candidate/output.
    MatView lstm_gate_block(int layer);
    ConstMatView lstm_gate_block(int layer) const;
    VecView lstm_bias_block(int layer);
    ConstVecView lstm_bias_block(int layer) const;

    /// Index of the first head parameter in the flat buffer (everything below
    /// it belongs to recurrent layers).
    std::size_t head_offset() const { return head_offset_; }

    void fill(double value) { std::fill(flat_.begin(), flat_.end(), value); }

    static std::size_t parameter_count(const ModelConfig& config);

private:
    ModelConfig config_;
    std::vector<double> flat_;
    // per layer: offset of the layer's first parameter
    std::vector<std::size_t> layer_offsets_;
    std::size_t head_offset_ = 0;
};

/// Seeded initialization: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
/// biases zero except the LSTM forget-gate bias, which starts at 1.
NetworkParams init_params(const ModelConfig& config, std::uint64_t seed);

struct LstmStepResult {
    Vector hidden, cell;
    Vector gate_forget, gate_input, candidate, gate_output;
};

/// One LSTM cell step. Exposed mainly for the cell-level contracts; the
/// network forward uses the same math on cached rows.
LstmStepResult lstm_cell_forward(const LstmCellConstViews& p, const Vector& input,
                                 const Vector& hidden_prev, const Vector& cell_prev);

/// One tanh RNN cell step: h_t = tanh(w_h [h_{t-1}, x_t] + b_h).
Vector rnn_cell_forward(const RnnCellConstViews& p, const Vector& input,
                        const Vector& hidden_prev);

// Everything the backward pass needs from one layer's unrolled forward.
// All matrices are input_len x hidden_size, row t = timestep t.
struct LayerCache {
    Matrix joined;       // input_len x (hidden + layer_input): [h_{t-1}, x_t]
    Matrix gate_forget;  // LSTM only
    Matrix gate_input;   // LSTM only
    Matrix candidate;    // LSTM only
    Matrix gate_output;  // LSTM only
    Matrix cell;         // LSTM only
    Matrix hidden;       // pre-dropout h_t
    Matrix dropped;      // h_t after the inter-layer dropout mask
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    std::vector<Matrix> masks;  // per layer, input_len x hidden; empty in eval mode
    Vector head_input;          // flattened top-layer states fed to the linear head
    Vector prediction;          // sigmoid outputs, length output_len
};

/// Inverted-dropout masks (entries 0 or 1/(1-rate)), one per layer, applied to
/// layer outputs on the upward path only. Sampled fresh per training step.
std::vector<Matrix> make_dropout_masks(const ModelConfig& config, Rng& rng);

/// Full forward pass over all timesteps. `masks == nullptr` is eval mode
/// (deterministic, no dropout); passing masks is train mode. Initial hidden
/// and cell states are zero.
ForwardCache network_forward(const NetworkParams& params, const Matrix& input,
                             const std::vector<Matrix>* masks = nullptr);

// ---- checkpoint serialization ----

void save_checkpoint(const NetworkParams& params, const std::string& path);

/// Throws std::runtime_error on bad magic/version/shape.
NetworkParams load_checkpoint(const std::string& path);

/// As above, and additionally rejects checkpoints whose architecture does not
/// match `expected`.
NetworkParams load_checkpoint(const std::string& path, const ModelConfig& expected);

}  // namespace epicast
