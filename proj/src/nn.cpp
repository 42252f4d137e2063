#include "epicast/nn.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace epicast {

std::string to_string(CellKind kind) { return kind == CellKind::lstm ? "lstm" : "rnn"; }

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::lstm;
    if (s == "rnn") return CellKind::rnn;
    throw std::invalid_argument("unknown cell kind: '" + s + "' (expected lstm or rnn)");
}

bool ModelConfig::same_shape(const ModelConfig& other) const {
    return cell_kind == other.cell_kind && num_layers == other.num_layers &&
           hidden_size == other.hidden_size && input_len == other.input_len &&
           output_len == other.output_len && feature_count == other.feature_count &&
           head_mode == other.head_mode;
}

void ModelConfig::validate() const {
    if (num_layers < 1) throw std::invalid_argument("num_layers must be >= 1");
    if (hidden_size < 1) throw std::invalid_argument("hidden_size must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("dropout_rate must be in [0, 1)");
    if (input_len < 1) throw std::invalid_argument("input_len must be >= 1");
    if (output_len < 1) throw std::invalid_argument("output_len must be >= 1");
    if (feature_count < 1) throw std::invalid_argument("feature_count must be >= 1");
}

namespace {

std::size_t layer_param_count(const ModelConfig& c, int layer) {
    const std::size_t h = c.hidden_size;
    const std::size_t in = c.layer_input_size(layer);
    if (c.cell_kind == CellKind::lstm) return 4 * h * (h + in) + 4 * h;
    return h * (h + in) + h;
}

}  // namespace

NetworkParams::NetworkParams(const ModelConfig& config) : config_(config) {
    config.validate();
    std::size_t offset = 0;
    layer_offsets_.reserve(config.num_layers);
    for (int l = 0; l < config.num_layers; ++l) {
        layer_offsets_.push_back(offset);
        offset += layer_param_count(config, l);
    }
    head_offset_ = offset;
    offset += static_cast<std::size_t>(config.output_len) * config.head_input_size() +
              config.output_len;
    flat_.assign(offset, 0.0);
}

std::size_t NetworkParams::parameter_count(const ModelConfig& config) {
    std::size_t total = 0;
    for (int l = 0; l < config.num_layers; ++l) total += layer_param_count(config, l);
    total += static_cast<std::size_t>(config.output_len) * config.head_input_size() +
             config.output_len;
    return total;
}

LstmCellViews NetworkParams::lstm_layer(int layer) {
    if (config_.cell_kind != CellKind::lstm) throw std::invalid_argument("not an LSTM network");
    const std::size_t h = config_.hidden_size;
    const std::size_t cols = h + config_.layer_input_size(layer);
    double* p = flat_.data() + layer_offsets_.at(layer);
    LstmCellViews v;
    v.w_forget = {p, h, cols};
    v.w_input = {p + h * cols, h, cols};
    v.w_candidate = {p + 2 * h * cols, h, cols};
    v.w_output = {p + 3 * h * cols, h, cols};
    double* b = p + 4 * h * cols;
    v.b_forget = {b, h};
    v.b_input = {b + h, h};
    v.b_candidate = {b + 2 * h, h};
    v.b_output = {b + 3 * h, h};
    return v;
}

LstmCellConstViews NetworkParams::lstm_layer(int layer) const {
    LstmCellViews v = const_cast<NetworkParams*>(this)->lstm_layer(layer);
    return {v.w_forget, v.w_input, v.w_candidate, v.w_output,
            v.b_forget, v.b_input, v.b_candidate, v.b_output};
}

RnnCellViews NetworkParams::rnn_layer(int layer) {
    if (config_.cell_kind != CellKind::rnn) throw std::invalid_argument("not an RNN network");
    const std::size_t h = config_.hidden_size;
    const std::size_t cols = h + config_.layer_input_size(layer);
    double* p = flat_.data() + layer_offsets_.at(layer);
    return {{p, h, cols}, {p + h * cols, h}};
}

RnnCellConstViews NetworkParams::rnn_layer(int layer) const {
    RnnCellViews v = const_cast<NetworkParams*>(this)->rnn_layer(layer);
    return {v.w_hidden, v.b_hidden};
}

MatView NetworkParams::lstm_gate_block(int layer) {
    const LstmCellViews v = lstm_layer(layer);
    return {v.w_forget.data, 4 * v.w_forget.rows, v.w_forget.cols};
}

ConstMatView NetworkParams::lstm_gate_block(int layer) const {
    return const_cast<NetworkParams*>(this)->lstm_gate_block(layer);
}

VecView NetworkParams::lstm_bias_block(int layer) {
    const LstmCellViews v = lstm_layer(layer);
    return {v.b_forget.data, 4 * v.b_forget.len};
}

ConstVecView NetworkParams::lstm_bias_block(int layer) const {
    return const_cast<NetworkParams*>(this)->lstm_bias_block(layer);
}

HeadViews NetworkParams::head() {
    const std::size_t out = config_.output_len;
    const std::size_t in = config_.head_input_size();
    double* p = flat_.data() + head_offset_;
    return {{p, out, in}, {p + out * in, out}};
}

HeadConstViews NetworkParams::head() const {
    HeadViews v = const_cast<NetworkParams*>(this)->head();
    return {v.weights, v.bias};
}

NetworkParams init_params(const ModelConfig& config, std::uint64_t seed) {
    NetworkParams params(config);
    Rng rng(seed);
    auto fill_uniform = [&rng](MatView w) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols));
        for (std::size_t i = 0; i < w.size(); ++i) w.data[i] = rng.uniform(-bound, bound);
    };
    for (int l = 0; l < config.num_layers; ++l) {
        if (config.cell_kind == CellKind::lstm) {
            LstmCellViews v = params.lstm_layer(l);
            fill_uniform(v.w_forget);
            fill_uniform(v.w_input);
            fill_uniform(v.w_candidate);
            fill_uniform(v.w_output);
            // keep early gradient flow through the cell state
            for (std::size_t i = 0; i < v.b_forget.size(); ++i) v.b_forget[i] = 1.0;
        } else {
            fill_uniform(params.rnn_layer(l).w_hidden);
        }
    }
    fill_uniform(params.head().weights);
    return params;
}

namespace {

void check_len(const Vector& v, std::size_t expected, const char* what) {
    if (v.size() != expected)
        throw std::invalid_argument(std::string(what) + ": expected length " +
                                    std::to_string(expected) + ", got " +
                                    std::to_string(v.size()));
}

// Core LSTM step on raw rows. `joined` must already hold [h_prev, x_t].
void lstm_step(const LstmCellConstViews& p, const double* joined, const double* cell_prev,
               double* gate_forget, double* gate_input, double* candidate, double* gate_output,
               double* cell_out, double* hidden_out, std::size_t h) {
    matvec(p.w_forget, joined, gate_forget);
    matvec(p.w_input, joined, gate_input);
    matvec(p.w_candidate, joined, candidate);
    matvec(p.w_output, joined, gate_output);
    for (std::size_t j = 0; j < h; ++j) {
        gate_forget[j] = sigmoid(gate_forget[j] + p.b_forget[j]);
        gate_input[j] = sigmoid(gate_input[j] + p.b_input[j]);
        candidate[j] = std::tanh(candidate[j] + p.b_candidate[j]);
        gate_output[j] = sigmoid(gate_output[j] + p.b_output[j]);
        cell_out[j] = gate_forget[j] * cell_prev[j] + gate_input[j] * candidate[j];
        hidden_out[j] = gate_output[j] * std::tanh(cell_out[j]);
    }
}

}  // namespace

LstmStepResult lstm_cell_forward(const LstmCellConstViews& p, const Vector& input,
                                 const Vector& hidden_prev, const Vector& cell_prev) {
    const std::size_t h = p.w_forget.rows;
    check_len(hidden_prev, h, "hidden_prev");
    check_len(cell_prev, h, "cell_prev");
    check_len(input, p.w_forget.cols - h, "input");

    Vector joined(p.w_forget.cols);
    std::copy(hidden_prev.begin(), hidden_prev.end(), joined.begin());
    std::copy(input.begin(), input.end(), joined.begin() + h);

    LstmStepResult r;
    r.hidden.resize(h);
    r.cell.resize(h);
    r.gate_forget.resize(h);
    r.gate_input.resize(h);
    r.candidate.resize(h);
    r.gate_output.resize(h);
    lstm_step(p, joined.data(), cell_prev.data(), r.gate_forget.data(), r.gate_input.data(),
              r.candidate.data(), r.gate_output.data(), r.cell.data(), r.hidden.data(), h);
    return r;
}

Vector rnn_cell_forward(const RnnCellConstViews& p, const Vector& input,
                        const Vector& hidden_prev) {
    const std::size_t h = p.w_hidden.rows;
    check_len(hidden_prev, h, "hidden_prev");
    check_len(input, p.w_hidden.cols - h, "input");

    Vector joined(p.w_hidden.cols);
    std::copy(hidden_prev.begin(), hidden_prev.end(), joined.begin());
    std::copy(input.begin(), input.end(), joined.begin() + h);

    Vector out(h);
    matvec(p.w_hidden, joined.data(), out.data());
    for (std::size_t j = 0; j < h; ++j) out[j] = std::tanh(out[j] + p.b_hidden[j]);
    return out;
}

std::vector<Matrix> make_dropout_masks(const ModelConfig& config, Rng& rng) {
    const double rate = config.dropout_rate;
    const double keep_scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
    std::vector<Matrix> masks(config.num_layers);
    for (auto& m : masks) {
        m = Matrix(config.input_len, config.hidden_size);
        for (std::size_t i = 0; i < m.size(); ++i)
            m.data()[i] = rng.next_double() < rate ? 0.0 : keep_scale;
    }
    return masks;
}

ForwardCache network_forward(const NetworkParams& params, const Matrix& input,
                             const std::vector<Matrix>* masks) {
    const ModelConfig& cfg = params.config();
    const std::size_t T = cfg.input_len;
    const std::size_t H = cfg.hidden_size;
    if (input.rows() != T || input.cols() != static_cast<std::size_t>(cfg.feature_count))
        throw std::invalid_argument("network_forward: input shape " +
                                    std::to_string(input.rows()) + "x" +
                                    std::to_string(input.cols()) + " does not match config " +
                                    std::to_string(T) + "x" + std::to_string(cfg.feature_count));
    if (masks) {
        if (masks->size() != static_cast<std::size_t>(cfg.num_layers))
            throw std::invalid_argument("network_forward: wrong dropout mask count");
        for (const Matrix& m : *masks)
            if (m.rows() != T || m.cols() != H)
                throw std::invalid_argument("network_forward: wrong dropout mask shape");
    }

    ForwardCache cache;
    cache.layers.resize(cfg.num_layers);
    if (masks) cache.masks = *masks;

    Vector cell_prev(H), hidden_prev(H);
    const bool is_lstm = cfg.cell_kind == CellKind::lstm;

    for (int l = 0; l < cfg.num_layers; ++l) {
        LayerCache& lc = cache.layers[l];
        const std::size_t in = cfg.layer_input_size(l);
        lc.joined = Matrix(T, H + in);
        lc.hidden = Matrix(T, H);
        lc.dropped = Matrix(T, H);
        if (is_lstm) {
            lc.gate_forget = Matrix(T, H);
            lc.gate_input = Matrix(T, H);
            lc.candidate = Matrix(T, H);
            lc.gate_output = Matrix(T, H);
            lc.cell = Matrix(T, H);
        }

        std::fill(hidden_prev.begin(), hidden_prev.end(), 0.0);
        std::fill(cell_prev.begin(), cell_prev.end(), 0.0);
        const Matrix* below = l == 0 ? &input : &cache.layers[l - 1].dropped;

        // all four gates in one pass over the fused 4H-row block
        Vector preact(is_lstm ? 4 * H : 0);
        const ConstMatView gate_block = is_lstm ? params.lstm_gate_block(l) : ConstMatView{};
        const ConstVecView bias_block = is_lstm ? params.lstm_bias_block(l) : ConstVecView{};

        for (std::size_t t = 0; t < T; ++t) {
            double* joined = lc.joined.row(t);
            std::copy(hidden_prev.begin(), hidden_prev.end(), joined);
            const double* x = below->row(t);
            std::copy(x, x + in, joined + H);

            if (is_lstm) {
                matvec(gate_block, joined, preact.data());
                double* f = lc.gate_forget.row(t);
                double* i = lc.gate_input.row(t);
                double* g = lc.candidate.row(t);
                double* o = lc.gate_output.row(t);
                double* c = lc.cell.row(t);
                double* h = lc.hidden.row(t);
                for (std::size_t j = 0; j < H; ++j) {
                    f[j] = sigmoid(preact[j] + bias_block[j]);
                    i[j] = sigmoid(preact[H + j] + bias_block[H + j]);
                    g[j] = std::tanh(preact[2 * H + j] + bias_block[2 * H + j]);
                    o[j] = sigmoid(preact[3 * H + j] + bias_block[3 * H + j]);
                    c[j] = f[j] * cell_prev[j] + i[j] * g[j];
                    h[j] = o[j] * std::tanh(c[j]);
                }
                std::copy(c, c + H, cell_prev.begin());
            } else {
                const RnnCellConstViews p = params.rnn_layer(l);
                double* hrow = lc.hidden.row(t);
                matvec(p.w_hidden, joined, hrow);
                for (std::size_t j = 0; j < H; ++j) hrow[j] = std::tanh(hrow[j] + p.b_hidden[j]);
            }
            std::copy(lc.hidden.row(t), lc.hidden.row(t) + H, hidden_prev.begin());

            double* drow = lc.dropped.row(t);
            const double* hrow = lc.hidden.row(t);
            if (masks) {
                const double* mrow = cache.masks[l].row(t);
                for (std::size_t j = 0; j < H; ++j) drow[j] = hrow[j] * mrow[j];
            } else {
                std::copy(hrow, hrow + H, drow);
            }
        }
    }

    const Matrix& top = cache.layers.back().dropped;
    if (cfg.head_mode == HeadMode::all_steps) {
        cache.head_input.assign(top.data(), top.data() + top.size());
    } else {
        cache.head_input.assign(top.row(T - 1), top.row(T - 1) + H);
    }

    const HeadConstViews head = params.head();
    cache.prediction.resize(cfg.output_len);
    matvec(head.weights, cache.head_input.data(), cache.prediction.data());
    for (int k = 0; k < cfg.output_len; ++k)
        cache.prediction[k] = sigmoid(cache.prediction[k] + head.bias[k]);
    return cache;
}

// ---- checkpoint serialization ----

namespace {

constexpr std::uint32_t kMagic = 0x4b435045u;  // "EPCK"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return value;
}

}  // namespace

void save_checkpoint(const NetworkParams& params, const std::string& path) {
    const std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    const ModelConfig& c = params.config();
    write_pod<std::uint32_t>(out, kMagic);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, c.cell_kind == CellKind::lstm ? 0 : 1);
    write_pod<std::uint32_t>(out, c.num_layers);
    write_pod<std::uint32_t>(out, c.hidden_size);
    write_pod<std::uint32_t>(out, c.input_len);
    write_pod<std::uint32_t>(out, c.output_len);
    write_pod<std::uint32_t>(out, c.feature_count);
    write_pod<std::uint32_t>(out, c.head_mode == HeadMode::all_steps ? 0 : 1);
    write_pod<double>(out, c.dropout_rate);
    write_pod<std::uint64_t>(out, c.seed);
    write_pod<std::uint64_t>(out, params.size());
    out.write(reinterpret_cast<const char*>(params.flat().data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
    out.close();
    if (!out) throw std::runtime_error("write failed: " + tmp);
    std::filesystem::rename(tmp, path);
}

NetworkParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    if (read_pod<std::uint32_t>(in, path) != kMagic)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 ": " + path);
    ModelConfig c;
    c.cell_kind = read_pod<std::uint32_t>(in, path) == 0 ? CellKind::lstm : CellKind::rnn;
    c.num_layers = static_cast<int>(read_pod<std::uint32_t>(in, path));
    c.hidden_size = static_cast<int>(read_pod<std::uint32_t>(in, path));
    c.input_len = static_cast<int>(read_pod<std::uint32_t>(in, path));
    c.output_len = static_cast<int>(read_pod<std::uint32_t>(in, path));
    c.feature_count = static_cast<int>(read_pod<std::uint32_t>(in, path));
    c.head_mode = read_pod<std::uint32_t>(in, path) == 0 ? HeadMode::all_steps : HeadMode::last_step;
    c.dropout_rate = read_pod<double>(in, path);
    c.seed = read_pod<std::uint64_t>(in, path);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("corrupt checkpoint header (" + std::string(e.what()) +
                                 "): " + path);
    }
    const auto count = read_pod<std::uint64_t>(in, path);
    NetworkParams params(c);
    if (count != params.size())
        throw std::runtime_error("checkpoint parameter count " + std::to_string(count) +
                                 " does not match architecture (" + std::to_string(params.size()) +
                                 "): " + path);
    in.read(reinterpret_cast<char*>(params.flat().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return params;
}

NetworkParams load_checkpoint(const std::string& path, const ModelConfig& expected) {
    NetworkParams params = load_checkpoint(path);
    if (!params.config().same_shape(expected))
        throw std::runtime_error("checkpoint architecture mismatch (" +
                                 to_string(params.config().cell_kind) + " " +
                                 std::to_string(params.config().num_layers) + "x" +
                                 std::to_string(params.config().hidden_size) +
                                 " vs expected " + to_string(expected.cell_kind) + " " +
                                 std::to_string(expected.num_layers) + "x" +
                                 std::to_string(expected.hidden_size) + "): " + path);
    return params;
}

}  // namespace epicast
