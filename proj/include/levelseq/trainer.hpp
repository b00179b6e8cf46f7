#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "levelseq/codec.hpp"
#include "levelseq/level.hpp"
#include "levelseq/lstm.hpp"
#include "levelseq/pathfinder.hpp"

namespace levelseq {

struct NamedLevel {
  std::string name;
  TileGrid grid;
};

struct Dataset {
  EncodingSpec spec;
  std::vector<TokenSequence> train;
  std::vector<TokenSequence> eval;
  std::vector<std::string> train_levels;
  std::vector<std::string> eval_levels;
  std::vector<std::string> skipped;  // not completable under a path spec
};

struct DatasetOptions {
  double split = 0.70;
  std::uint64_t seed = 1;
  int slack = kDefaultSlack;
};

std::vector<NamedLevel> load_corpus(const std::filesystem::path& dir, const CharMap& map = CharMap{});

// Annotates (path specs), encodes and splits by level. Both snaking
// directions of a level land on the same side of the split.
Dataset make_dataset(std::vector<NamedLevel> levels, EncodingSpec spec, const MovementModel& model,
                     const DatasetOptions& options = {});
Dataset make_dataset(const std::filesystem::path& corpus_dir, EncodingSpec spec,
                     const MovementModel& model, const DatasetOptions& options = {});

struct TrainConfig {
  EncodingSpec spec;
  std::vector<int> hidden{128, 128};
  double dropout = 0.5;
  int bptt_len = 200;
  double split = 0.70;
  int eval_every = 200;  // training tokens between evaluations
  int plateau_epochs = 2;
  int max_epochs = 500;
  OptimizerConfig optimizer;
  double clip = kDefaultClip;
  double init_range = kDefaultInitRange;
  std::uint64_t seed = 1;

  void validate() const;

  // 2 x 128, evaluation once per ~epoch, bounded epochs.
  static TrainConfig desk();
  // 3 x 512 with the published cadence.
  static TrainConfig paper();
};

struct EvalPoint {
  int epoch = 0;
  std::int64_t tokens_seen = 0;
  double eval_nll = 0.0;
};

struct TrainReport {
  std::vector<EvalPoint> curve;
  double best_eval_nll = 0.0;
  int best_epoch = 0;
  std::string best_checkpoint;  // empty when training without an output dir
  int epochs_run = 0;
  std::string stop_reason;
  LstmModel best_model;
};

// Mean next-token NLL over a set of sequences. Sequences are evaluated in
// parallel; sums are combined by a fixed pairwise reduction.
double evaluate_nll(const LstmModel& model, std::span<const TokenSequence> sequences);

// Sum of values by a fixed-shape pairwise tree.
double pairwise_sum(std::span<const double> values);

TrainReport train(const TrainConfig& config, const Dataset& data,
                  const std::filesystem::path& out_dir = {});

nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const TrainReport& report);
nlohmann::json to_json(EncodingSpec spec);
EncodingSpec spec_from_json(const nlohmann::json& j);

// Checkpoint plus `<path>.json` sidecar with the encoding spec.
struct LoadedModel {
  LstmModel model;
  EncodingSpec spec;
  nlohmann::json metadata;
};
void save_model(const std::filesystem::path& path, const LstmModel& model, EncodingSpec spec,
                const nlohmann::json& metadata);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace levelseq
