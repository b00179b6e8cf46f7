#include "levelseq/lstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr char kMagic[8] = {'L', 'V', 'L', 'S', 'L', 'S', 'T', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

// One layer's activations at one time step, kept for the backward pass.
struct LayerTape {
  std::vector<double> input;   // dropped output of the layer below (empty for layer 0)
  std::vector<double> h_prev;
  std::vector<double> c_prev;
  std::vector<double> gates;   // activated [i | f | o | g]
  std::vector<double> c;
  std::vector<double> tanh_c;
  std::vector<double> h;
};

struct StepTape {
  int token = 0;
  std::vector<LayerTape> layers;
  std::vector<double> top;    // dropped top output fed to the read-out
};

// Pre-activations z -> activated gates in place, plus the new cell and output.
inline void activate(std::size_t H, double* z, const double* c_prev, double* c, double* tanh_c, double* h) {
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(z[k]);
    const double f = sigmoid(z[H + k]);
    const double o = sigmoid(z[2 * H + k]);
    const double g = std::tanh(z[3 * H + k]);
    z[k] = i;
    z[H + k] = f;
    z[2 * H + k] = o;
    z[3 * H + k] = g;
    c[k] = f * c_prev[k] + i * g;
    tanh_c[k] = std::tanh(c[k]);
    h[k] = o * tanh_c[k];
  }
}

// Runs one layer; writes gates/c/tanh_c/h into `tape` from its inputs.
void layer_forward(const LstmModel& model, int l, int token, LayerTape& tape) {
  const int hs = model.hidden_size(l);
  const int in = model.input_size(l);
  const auto w = model.layer_weights(l);
  const auto b = model.layer_bias(l);
  std::vector<double>& z = tape.gates;
  z.assign(b.begin(), b.end());
  if (l == 0) {
    const double* row = w.row(static_cast<std::size_t>(token));
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += row[k];
  } else {
    kernels::accumulate_rows({w.data, static_cast<std::size_t>(in), w.cols}, tape.input, z);
  }
  kernels::accumulate_rows({w.row(static_cast<std::size_t>(in)), static_cast<std::size_t>(hs), w.cols},
                           tape.h_prev, z);
  tape.c.resize(static_cast<std::size_t>(hs));
  tape.tanh_c.resize(static_cast<std::size_t>(hs));
  tape.h.resize(static_cast<std::size_t>(hs));
  activate(static_cast<std::size_t>(hs), z.data(), tape.c_prev.data(), tape.c.data(), tape.tanh_c.data(),
           tape.h.data());
}

std::vector<double> apply_mask(const std::vector<double>& h, const DropoutMask* mask, int l) {
  std::vector<double> out = h;
  if (mask) {
    const auto& m = (*mask)[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= m[k];
  }
  return out;
}

std::vector<double> project(const LstmModel& model, std::span<const double> top) {
  auto b = model.proj_bias();
  std::vector<double> logits(b.begin(), b.end());
  kernels::accumulate_rows(model.proj_weights(), top, logits);
  return logits;
}

void step_forward(const LstmModel& model, LstmState& state, int token, const DropoutMask* mask,
                  StepTape& tape) {
  if (token < 0 || token >= model.vocab_size()) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("token {} outside vocabulary of size {}", token, model.vocab_size()));
  }
  if (static_cast<int>(state.h.size()) != model.num_layers()) {
    throw Error(ErrorCode::ShapeMismatch, "state layer count does not match model");
  }
  tape.token = token;
  tape.layers.resize(static_cast<std::size_t>(model.num_layers()));
  for (int l = 0; l < model.num_layers(); ++l) {
    auto& lt = tape.layers[static_cast<std::size_t>(l)];
    const auto lu = static_cast<std::size_t>(l);
    if (static_cast<int>(state.h[lu].size()) != model.hidden_size(l)) {
      throw Error(ErrorCode::ShapeMismatch, fmt::format("state layer {} has wrong width", l));
    }
    if (l > 0) lt.input = apply_mask(tape.layers[lu - 1].h, mask, l - 1);
    lt.h_prev = state.h[lu];
    lt.c_prev = state.c[lu];
    layer_forward(model, l, token, lt);
    state.h[lu] = lt.h;
    state.c[lu] = lt.c;
  }
  tape.top = apply_mask(tape.layers.back().h, mask, model.num_layers() - 1);
}

// A whole window, stored layer-major so the input projections and weight
// gradients run as batched kernels. Row t of every matrix is time step t.
struct LayerTrace {
  std::size_t H = 0;
  std::vector<double> hs;      // (T+1) x H, row 0 is the incoming state
  std::vector<double> cs;      // (T+1) x H
  std::vector<double> gates;   // T x 4H, activated
  std::vector<double> tanh_c;  // T x H
  std::vector<double> out;     // T x H, after dropout; input of the next layer
};

struct WindowTrace {
  std::vector<LayerTrace> layers;
  std::vector<double> logits;  // T x V
};

kernels::MatrixView view(const std::vector<double>& m, std::size_t rows, std::size_t cols,
                         std::size_t first_row = 0) {
  return {m.data() + first_row * cols, rows, cols};
}

kernels::MutableMatrixView mview(std::vector<double>& m, std::size_t rows, std::size_t cols) {
  return {m.data(), rows, cols};
}

void check_tokens(const LstmModel& model, std::span<const int> tokens) {
  for (int token : tokens) {
    if (token < 0 || token >= model.vocab_size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  fmt::format("token {} outside vocabulary of size {}", token, model.vocab_size()));
    }
  }
}

void check_state(const LstmModel& model, const LstmState& state) {
  if (static_cast<int>(state.h.size()) != model.num_layers()) {
    throw Error(ErrorCode::ShapeMismatch, "state layer count does not match model");
  }
  for (int l = 0; l < model.num_layers(); ++l) {
    if (static_cast<int>(state.h[static_cast<std::size_t>(l)].size()) != model.hidden_size(l)) {
      throw Error(ErrorCode::ShapeMismatch, fmt::format("state layer {} has wrong width", l));
    }
  }
}

// Same arithmetic as step_forward applied to each input in turn.
void forward_window(const LstmModel& model, std::span<const int> inputs, LstmState& state,
                    const std::vector<DropoutMask>* masks, WindowTrace& tr) {
  const std::size_t T = inputs.size();
  const int L = model.num_layers();
  tr.layers.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const auto lu = static_cast<std::size_t>(l);
    auto& lt = tr.layers[lu];
    const auto H = static_cast<std::size_t>(model.hidden_size(l));
    const auto in = static_cast<std::size_t>(model.input_size(l));
    const auto w = model.layer_weights(l);
    const auto b = model.layer_bias(l);
    lt.H = H;
    lt.hs.resize((T + 1) * H);
    lt.cs.resize((T + 1) * H);
    lt.gates.resize(T * 4 * H);
    lt.tanh_c.resize(T * H);
    lt.out.resize(T * H);
    std::copy(state.h[lu].begin(), state.h[lu].end(), lt.hs.begin());
    std::copy(state.c[lu].begin(), state.c[lu].end(), lt.cs.begin());

    for (std::size_t t = 0; t < T; ++t) std::copy(b.begin(), b.end(), lt.gates.begin() + static_cast<std::ptrdiff_t>(t * 4 * H));
    if (l == 0) {
      for (std::size_t t = 0; t < T; ++t) {
        const double* row = w.row(static_cast<std::size_t>(inputs[t]));
        double* z = lt.gates.data() + t * 4 * H;
        for (std::size_t k = 0; k < 4 * H; ++k) z[k] += row[k];
      }
    } else {
      kernels::accumulate_rows_batch({w.data, in, w.cols}, view(tr.layers[lu - 1].out, T, in),
                                     mview(lt.gates, T, 4 * H));
    }
    const kernels::MatrixView w_rec{w.row(in), H, 4 * H};
    for (std::size_t t = 0; t < T; ++t) {
      double* z = lt.gates.data() + t * 4 * H;
      kernels::accumulate_rows(w_rec, {lt.hs.data() + t * H, H}, {z, 4 * H});
      activate(H, z, lt.cs.data() + t * H, lt.cs.data() + (t + 1) * H, lt.tanh_c.data() + t * H,
               lt.hs.data() + (t + 1) * H);
    }
    std::copy(lt.hs.begin() + static_cast<std::ptrdiff_t>(H), lt.hs.end(), lt.out.begin());
    if (masks) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto& m = (*masks)[t][lu];
        double* o = lt.out.data() + t * H;
        for (std::size_t k = 0; k < H; ++k) o[k] *= m[k];
      }
    }
    std::copy(lt.hs.end() - static_cast<std::ptrdiff_t>(H), lt.hs.end(), state.h[lu].begin());
    std::copy(lt.cs.end() - static_cast<std::ptrdiff_t>(H), lt.cs.end(), state.c[lu].begin());
  }
  const auto V = static_cast<std::size_t>(model.vocab_size());
  const auto top_h = static_cast<std::size_t>(model.top_hidden());
  const auto pb = model.proj_bias();
  tr.logits.resize(T * V);
  for (std::size_t t = 0; t < T; ++t) std::copy(pb.begin(), pb.end(), tr.logits.begin() + static_cast<std::ptrdiff_t>(t * V));
  kernels::accumulate_rows_batch(model.proj_weights(), view(tr.layers.back().out, T, top_h), mview(tr.logits, T, V));
}

}  // namespace

LstmModel::LstmModel(int vocab_size, std::vector<int> hidden_sizes, double dropout)
    : vocab_(vocab_size), hidden_(std::move(hidden_sizes)) {
  if (vocab_ < 2 || hidden_.empty() ||
      std::any_of(hidden_.begin(), hidden_.end(), [](int h) { return h < 1; })) {
    throw Error(ErrorCode::ShapeMismatch, "model needs vocab >= 2 and positive layer widths");
  }
  set_dropout(dropout);
  std::size_t offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(offset);
    const auto h = static_cast<std::size_t>(hidden_size(l));
    offset += (static_cast<std::size_t>(input_size(l)) + h) * 4 * h + 4 * h;
  }
  offsets_.push_back(offset);
  offset += static_cast<std::size_t>(top_hidden()) * static_cast<std::size_t>(vocab_) +
            static_cast<std::size_t>(vocab_);
  params_.assign(offset, 0.0);
}

LstmModel LstmModel::initialized(int vocab_size, std::vector<int> hidden_sizes, double dropout,
                                 std::uint64_t seed, double init_range, double forget_bias) {
  LstmModel m(vocab_size, std::move(hidden_sizes), dropout);
  Rng rng(seed);
  for (double& p : m.params_) p = rng.uniform(-init_range, init_range);
  for (int l = 0; l < m.num_layers(); ++l) {
    const auto h = static_cast<std::size_t>(m.hidden_size(l));
    double* b = m.params_.data() + m.bias_offset(l);
    std::fill(b, b + 4 * h, 0.0);
    std::fill(b + h, b + 2 * h, forget_bias);
  }
  double* pb = m.params_.data() + m.proj_bias_offset();
  std::fill(pb, pb + vocab_size, 0.0);
  return m;
}

void LstmModel::set_dropout(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("dropout {} outside [0, 1)", rate));
  }
  dropout_ = rate;
}

kernels::MatrixView LstmModel::layer_weights(int l) const {
  const auto h = static_cast<std::size_t>(hidden_size(l));
  return {params_.data() + weight_offset(l), static_cast<std::size_t>(input_size(l)) + h, 4 * h};
}

std::span<const double> LstmModel::layer_bias(int l) const {
  return {params_.data() + bias_offset(l), static_cast<std::size_t>(4 * hidden_size(l))};
}

kernels::MatrixView LstmModel::proj_weights() const {
  return {params_.data() + proj_weight_offset(), static_cast<std::size_t>(top_hidden()),
          static_cast<std::size_t>(vocab_)};
}

std::span<const double> LstmModel::proj_bias() const {
  return {params_.data() + proj_bias_offset(), static_cast<std::size_t>(vocab_)};
}

bool LstmModel::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](double p) { return std::isfinite(p); });
}

LstmState LstmState::zeros(const LstmModel& model) {
  LstmState s;
  for (int l = 0; l < model.num_layers(); ++l) {
    s.h.emplace_back(static_cast<std::size_t>(model.hidden_size(l)), 0.0);
    s.c.emplace_back(static_cast<std::size_t>(model.hidden_size(l)), 0.0);
  }
  return s;
}

void LstmState::reset() {
  for (auto& v : h) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : c) std::fill(v.begin(), v.end(), 0.0);
}

DropoutMask sample_dropout_mask(const LstmModel& model, Rng& rng) {
  DropoutMask mask;
  const double rate = model.dropout();
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int l = 0; l < model.num_layers(); ++l) {
    std::vector<double> m(static_cast<std::size_t>(model.hidden_size(l)));
    for (double& v : m) v = rng.bernoulli(rate) ? 0.0 : keep_scale;
    mask.push_back(std::move(m));
  }
  return mask;
}

std::vector<double> forward_step(const LstmModel& model, LstmState& state, int token,
                                 const DropoutMask* mask) {
  StepTape tape;
  step_forward(model, state, token, mask, tape);
  return project(model, tape.top);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> p(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp((logits[k] - mx) / temperature);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double loss_and_grads(const LstmModel& model, std::span<const int> window, LstmState& state,
                      Rng* dropout_rng, std::span<double> grads, double clip) {
  if (window.size() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "a training window needs at least two tokens");
  }
  if (grads.size() != model.num_params()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient buffer does not match the model");
  }
  check_tokens(model, window);
  check_state(model, state);
  const std::size_t T = window.size() - 1;
  const int layers = model.num_layers();
  const bool use_dropout = dropout_rng != nullptr && model.dropout() > 0.0;

  std::vector<DropoutMask> masks(use_dropout ? T : 0);
  for (auto& m : masks) m = sample_dropout_mask(model, *dropout_rng);
  WindowTrace tr;
  forward_window(model, window.first(T), state, use_dropout ? &masks : nullptr, tr);

  const auto V = static_cast<std::size_t>(model.vocab_size());
  const double scale = 1.0 / static_cast<double>(T);
  // dlogits, overwritten in place on the softmax outputs
  std::vector<double>& dl = tr.logits;
  double nll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    std::span<double> row(dl.data() + t * V, V);
    const auto p = softmax(row);
    const auto target = static_cast<std::size_t>(window[t + 1]);
    nll -= std::log(p[target]);
    for (std::size_t k = 0; k < V; ++k) row[k] = p[k] * scale;
    row[target] -= scale;
  }

  std::fill(grads.begin(), grads.end(), 0.0);
  double* g = grads.data();
  const auto top_h = static_cast<std::size_t>(model.top_hidden());
  kernels::outer_accumulate_batch({g + model.proj_weight_offset(), top_h, V}, view(tr.layers.back().out, T, top_h),
                                  view(dl, T, V));
  double* g_proj_b = g + model.proj_bias_offset();
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t k = 0; k < V; ++k) g_proj_b[k] += dl[t * V + k];
  }
  // gradient reaching each layer's dropped output, T x H
  std::vector<double> dh_above(T * top_h, 0.0);
  kernels::dot_rows_batch(model.proj_weights(), view(dl, T, V), mview(dh_above, T, top_h));

  std::vector<double> dz, dh_next, dc_next;
  for (int l = layers - 1; l >= 0; --l) {
    const auto lu = static_cast<std::size_t>(l);
    const LayerTrace& lt = tr.layers[lu];
    const auto H = lt.H;
    const auto in = static_cast<std::size_t>(model.input_size(l));
    if (use_dropout) {
      for (std::size_t t = 0; t < T; ++t) {
        const auto& m = masks[t][lu];
        for (std::size_t k = 0; k < H; ++k) dh_above[t * H + k] *= m[k];
      }
    }
    const auto w = model.layer_weights(l);
    const kernels::MatrixView w_rec{w.row(in), H, 4 * H};
    double* gw = g + model.weight_offset(l);
    double* gb = g + model.bias_offset(l);
    dz.assign(T * 4 * H, 0.0);
    dh_next.assign(H, 0.0);
    dc_next.assign(H, 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* gates = lt.gates.data() + t * 4 * H;
      const double* tanh_c = lt.tanh_c.data() + t * H;
      const double* c_prev = lt.cs.data() + t * H;
      double* dzt = dz.data() + t * 4 * H;
      for (std::size_t k = 0; k < H; ++k) {
        const double i = gates[k];
        const double f = gates[H + k];
        const double o = gates[2 * H + k];
        const double gg = gates[3 * H + k];
        const double dh = dh_above[t * H + k] + dh_next[k];
        const double dc = dc_next[k] + dh * o * (1.0 - tanh_c[k] * tanh_c[k]);
        dzt[k] = dc * gg * i * (1.0 - i);
        dzt[H + k] = dc * c_prev[k] * f * (1.0 - f);
        dzt[2 * H + k] = dh * tanh_c[k] * o * (1.0 - o);
        dzt[3 * H + k] = dc * i * (1.0 - gg * gg);
        dc_next[k] = dc * f;
      }
      for (std::size_t k = 0; k < 4 * H; ++k) gb[k] += dzt[k];
      if (l == 0) {
        double* row = gw + static_cast<std::size_t>(window[t]) * 4 * H;
        for (std::size_t k = 0; k < 4 * H; ++k) row[k] += dzt[k];
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      kernels::dot_rows(w_rec, {dzt, 4 * H}, dh_next);
    }
    const auto dz_view = view(dz, T, 4 * H);
    if (l > 0) {
      kernels::outer_accumulate_batch({gw, in, 4 * H}, view(tr.layers[lu - 1].out, T, in), dz_view);
    }
    kernels::outer_accumulate_batch({gw + in * 4 * H, H, 4 * H}, view(lt.hs, T, H), dz_view);
    if (l > 0) {
      dh_above.assign(T * in, 0.0);
      kernels::dot_rows_batch({w.data, in, 4 * H}, dz_view, mview(dh_above, T, in));
    }
  }

  if (clip > 0.0) {
    for (double& v : grads) v = std::clamp(v, -clip, clip);
  }
  return nll * scale;
}

double sequence_nll_sum(const LstmModel& model, std::span<const int> tokens) {
  check_tokens(model, tokens);
  constexpr std::size_t kChunk = 256;
  LstmState state = LstmState::zeros(model);
  const auto V = static_cast<std::size_t>(model.vocab_size());
  WindowTrace tr;
  double sum = 0.0;
  for (std::size_t start = 0; start + 1 < tokens.size(); start += kChunk) {
    const std::size_t T = std::min(kChunk, tokens.size() - 1 - start);
    forward_window(model, tokens.subspan(start, T), state, nullptr, tr);
    for (std::size_t t = 0; t < T; ++t) {
      const double* logits = tr.logits.data() + t * V;
      const double mx = *std::max_element(logits, logits + V);
      double z = 0.0;
      for (std::size_t k = 0; k < V; ++k) z += std::exp(logits[k] - mx);
      sum -= logits[static_cast<std::size_t>(tokens[start + t + 1])] - mx - std::log(z);
    }
  }
  return sum;
}

int draw_from(std::span<const double> logits, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "temperature must be positive");
  }
  if (temperature < 1e-6) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  const auto p = softmax(logits, temperature);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  // rounding left u above the final partial sum
  for (std::size_t k = p.size(); k-- > 0;) {
    if (p[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

int sample_next(const LstmModel& model, LstmState& state, int last_token, double temperature,
                Rng& rng) {
  const auto logits = forward_step(model, state, last_token);
  return draw_from(logits, temperature, rng);
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t num_params)
    : config_(config), lr_(config.learning_rate) {
  if (config_.kind == OptimizerConfig::Kind::RmsProp) cache_.assign(num_params, 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
  if (config_.kind == OptimizerConfig::Kind::Sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr_ * grads[k];
    return;
  }
  const double d = config_.decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    cache_[k] = d * cache_[k] + (1.0 - d) * grads[k] * grads[k];
    params[k] -= lr_ * grads[k] / (std::sqrt(cache_[k]) + config_.epsilon);
  }
}

void Optimizer::end_epoch(int epoch) {
  if (epoch >= config_.lr_decay_after) lr_ *= config_.lr_decay;
}

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(ErrorCode::BadCheckpoint, fmt::format("{}: truncated checkpoint", path.string()));
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const LstmModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.vocab_size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_layers()));
  for (int h : model.hidden_sizes()) put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  put<double>(out, model.dropout());
  for (double p : model.params()) put<double>(out, p);
  if (!out) throw Error(ErrorCode::Io, fmt::format("write failed for {}", path.string()));
}

LstmModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::BadCheckpoint, fmt::format("{}: not a checkpoint", path.string()));
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::BadCheckpoint,
                fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
  }
  const auto vocab = get<std::uint32_t>(in, path);
  const auto layers = get<std::uint32_t>(in, path);
  if (layers == 0 || layers > 64 || vocab > 1u << 20) {
    throw Error(ErrorCode::BadCheckpoint, fmt::format("{}: implausible header", path.string()));
  }
  std::vector<int> hidden;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto h = get<std::uint32_t>(in, path);
    if (h == 0 || h > 1u << 16) {
      throw Error(ErrorCode::BadCheckpoint, fmt::format("{}: implausible layer width", path.string()));
    }
    hidden.push_back(static_cast<int>(h));
  }
  const double dropout = get<double>(in, path);
  LstmModel model(static_cast<int>(vocab), std::move(hidden), dropout);
  for (double& p : model.params()) p = get<double>(in, path);
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw Error(ErrorCode::BadCheckpoint, fmt::format("{}: trailing bytes", path.string()));
  }
  return model;
}

}  // namespace levelseq
