#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "levelseq/kernels.hpp"
#include "levelseq/rng.hpp"

namespace levelseq {

inline constexpr double kDefaultInitRange = 0.08;
inline constexpr double kDefaultForgetBias = 1.0;
inline constexpr double kDefaultClip = 5.0;

// Stacked LSTM over one-hot token inputs with a softmax read-out.
//
// Parameters live in one flat buffer. Layer l owns a weight matrix with one
// row per feature of [input, h_prev] and 4*H columns laid out as gate blocks
// [input | forget | output | candidate], followed by a 4*H bias. The read-out
// owns an H_top x V matrix and a V bias. Gradients use the same layout.
class LstmModel {
 public:
  LstmModel() = default;
  LstmModel(int vocab_size, std::vector<int> hidden_sizes, double dropout = 0.0);

  // uniform(-range, range) weights, zero biases except forget gates.
  static LstmModel initialized(int vocab_size, std::vector<int> hidden_sizes,
                               double dropout, std::uint64_t seed,
                               double init_range = kDefaultInitRange,
                               double forget_bias = kDefaultForgetBias);

  int vocab_size() const { return vocab_; }
  int num_layers() const { return static_cast<int>(hidden_.size()); }
  int hidden_size(int layer) const { return hidden_[static_cast<std::size_t>(layer)]; }
  const std::vector<int>& hidden_sizes() const { return hidden_; }
  int input_size(int layer) const { return layer == 0 ? vocab_ : hidden_size(layer - 1); }
  int top_hidden() const { return hidden_.back(); }

  double dropout() const { return dropout_; }
  void set_dropout(double rate);

  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const {
    return weight_offset(layer) + static_cast<std::size_t>(input_size(layer) + hidden_size(layer)) *
                                      static_cast<std::size_t>(4 * hidden_size(layer));
  }
  std::size_t proj_weight_offset() const { return offsets_.back(); }
  std::size_t proj_bias_offset() const {
    return proj_weight_offset() + static_cast<std::size_t>(top_hidden()) * static_cast<std::size_t>(vocab_);
  }

  kernels::MatrixView layer_weights(int layer) const;
  std::span<const double> layer_bias(int layer) const;
  kernels::MatrixView proj_weights() const;
  std::span<const double> proj_bias() const;

  bool all_finite() const;

  friend bool operator==(const LstmModel&, const LstmModel&) = default;

 private:
  int vocab_ = 0;
  std::vector<int> hidden_;
  double dropout_ = 0.0;
  std::vector<std::size_t> offsets_;  // per-layer weight offsets, then read-out
  std::vector<double> params_;
};

struct LstmState {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> c;

  static LstmState zeros(const LstmModel& model);
  void reset();
};

// Per-layer output multipliers: 0 for dropped units, 1/(1-rate) otherwise.
using DropoutMask = std::vector<std::vector<double>>;
DropoutMask sample_dropout_mask(const LstmModel& model, Rng& rng);

// One time step. Logits over the vocabulary; state advances in place.
// A null mask is evaluation mode.
std::vector<double> forward_step(const LstmModel& model, LstmState& state, int token,
                                 const DropoutMask* mask = nullptr);

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

// Mean next-token NLL over the window and its gradient (written to `grads`,
// which must hold num_params values). `state` is the carried-in state and is
// left at the state after the last input token. Gradients do not flow into
// the carried-in state. `dropout_rng` null disables dropout. clip <= 0
// disables element-wise clipping.
double loss_and_grads(const LstmModel& model, std::span<const int> window, LstmState& state,
                      Rng* dropout_rng, std::span<double> grads, double clip = kDefaultClip);

// Sum of -log p(next) over a whole sequence from a zero state, eval mode.
double sequence_nll_sum(const LstmModel& model, std::span<const int> tokens);

// Feed `last_token`, then draw the next one from softmax(logits / temperature).
// Temperatures below 1e-6 take the argmax.
int sample_next(const LstmModel& model, LstmState& state, int last_token, double temperature,
                Rng& rng);
int draw_from(std::span<const double> logits, double temperature, Rng& rng);

struct OptimizerConfig {
  enum class Kind { RmsProp, Sgd };
  Kind kind = Kind::RmsProp;
  double learning_rate = 2e-3;
  double decay = 0.95;
  double epsilon = 1e-8;
  double lr_decay = 0.97;  // per epoch
  int lr_decay_after = 10;  // epochs
};

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t num_params);

  void step(std::span<double> params, std::span<const double> grads);
  // Called at the end of each epoch (1-based).
  void end_epoch(int epoch);
  double learning_rate() const { return lr_; }

 private:
  OptimizerConfig config_;
  double lr_;
  std::vector<double> cache_;
};

// Versioned little-endian binary checkpoint.
void save_checkpoint(const std::filesystem::path& path, const LstmModel& model);
LstmModel load_checkpoint(const std::filesystem::path& path);

}  // namespace levelseq
