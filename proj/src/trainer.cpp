#include "levelseq/trainer.hpp"

#include <cmath>
#include <limits>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "levelseq/error.hpp"

namespace levelseq {

std::vector<NamedLevel> load_corpus(const std::filesystem::path& dir, const CharMap& map) {
  std::vector<NamedLevel> levels;
  for (const auto& path : list_level_files(dir)) {
    levels.push_back({path.stem().string(), load_level_file(path, map)});
  }
  return levels;
}

Dataset make_dataset(std::vector<NamedLevel> levels, EncodingSpec spec, const MovementModel& model,
                     const DatasetOptions& options) {
  if (!(options.split > 0.0 && options.split < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("split {} outside (0, 1)", options.split));
  }
  Dataset data;
  data.spec = spec;

  std::vector<NamedLevel> usable;
  for (auto& level : levels) {
    if (spec.paths) {
      try {
        level.grid = annotate_paths(level.grid, model, options.slack);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotCompletable) throw;
        spdlog::warn("skipping {}: not completable, cannot annotate paths", level.name);
        data.skipped.push_back(level.name);
        continue;
      }
    }
    usable.push_back(std::move(level));
  }
  if (usable.size() < 2) {
    throw Error(ErrorCode::EmptyCorpus,
                fmt::format("need at least 2 usable levels, have {}", usable.size()));
  }

  std::vector<std::size_t> order(usable.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(options.seed);
  rng.shuffle(std::span<std::size_t>(order));

  auto n_train = static_cast<std::size_t>(
      std::llround(options.split * static_cast<double>(usable.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, usable.size() - 1);

  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& level = usable[order[k]];
    const bool to_train = k < n_train;
    auto seqs = encode(level.grid, spec);
    auto& side = to_train ? data.train : data.eval;
    side.insert(side.end(), std::make_move_iterator(seqs.begin()), std::make_move_iterator(seqs.end()));
    (to_train ? data.train_levels : data.eval_levels).push_back(level.name);
  }
  return data;
}

Dataset make_dataset(const std::filesystem::path& corpus_dir, EncodingSpec spec,
                     const MovementModel& model, const DatasetOptions& options) {
  auto levels = load_corpus(corpus_dir);
  if (levels.empty()) {
    throw Error(ErrorCode::EmptyCorpus, fmt::format("no level files in {}", corpus_dir.string()));
  }
  return make_dataset(std::move(levels), spec, model, options);
}

void TrainConfig::validate() const {
  auto fail = [](std::string msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(split > 0.0 && split < 1.0)) fail(fmt::format("split {} outside (0, 1)", split));
  if (bptt_len < 2) fail("bptt_len must be at least 2");
  if (eval_every < 1) fail("eval_every must be positive");
  if (plateau_epochs < 1) fail("plateau_epochs must be positive");
  if (max_epochs < 1) fail("max_epochs must be positive");
  if (hidden.empty()) fail("at least one layer is required");
  for (int h : hidden) {
    if (h < 1) fail("layer widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (optimizer.learning_rate < 0.0) fail("learning rate must be non-negative");
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.hidden = {128, 128};
  c.dropout = 0.25;
  // Larger than any desk corpus, so evaluation runs once per epoch. With
  // 18 epochs and plateau 5, all eight encodings of the shipped corpus train
  // in under half an hour on one core.
  c.eval_every = 1000000;
  c.plateau_epochs = 5;
  c.max_epochs = 18;
  return c;
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.hidden = {512, 512, 512};
  c.dropout = 0.5;
  c.eval_every = 200;
  c.max_epochs = 500;
  return c;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double evaluate_nll(const LstmModel& model, std::span<const TokenSequence> sequences) {
  std::vector<double> sums(sequences.size(), 0.0);
  std::vector<double> counts(sequences.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(sequences.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& toks = sequences[static_cast<std::size_t>(i)].tokens;
    sums[static_cast<std::size_t>(i)] = sequence_nll_sum(model, toks);
    counts[static_cast<std::size_t>(i)] = toks.size() > 1 ? static_cast<double>(toks.size() - 1) : 0.0;
  }
  const double total = pairwise_sum(counts);
  if (total == 0.0) throw Error(ErrorCode::EmptyCorpus, "no tokens to evaluate");
  return pairwise_sum(sums) / total;
}

TrainReport train(const TrainConfig& config, const Dataset& data,
                  const std::filesystem::path& out_dir) {
  config.validate();
  if (data.train.empty() || data.eval.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "training needs non-empty train and eval sets");
  }
  const Vocabulary vocab(config.spec);
  if (!(data.spec == config.spec)) {
    throw Error(ErrorCode::InvalidConfig, "dataset and config encodings differ");
  }

  LstmModel model = LstmModel::initialized(vocab.size(), config.hidden, config.dropout,
                                           derive_seed(config.seed, 0), config.init_range);
  Optimizer optimizer(config.optimizer, model.num_params());
  Rng dropout_rng(derive_seed(config.seed, 1));
  Rng order_rng(derive_seed(config.seed, 2));
  std::vector<double> grads(model.num_params());

  TrainReport report;
  report.best_eval_nll = std::numeric_limits<double>::infinity();
  std::int64_t tokens_seen = 0;
  std::int64_t since_eval = 0;
  int stale_epochs = 0;
  const std::filesystem::path ckpt = out_dir.empty() ? std::filesystem::path{} : out_dir / "best.ckpt";

  auto run_eval = [&](int epoch) -> bool {
    const double nll = evaluate_nll(model, data.eval);
    if (!std::isfinite(nll)) {
      throw Error(ErrorCode::DivergedLoss,
                  fmt::format("eval NLL is {} at epoch {} after {} tokens", nll, epoch, tokens_seen));
    }
    report.curve.push_back({epoch, tokens_seen, nll});
    since_eval = 0;
    if (nll < report.best_eval_nll) {
      report.best_eval_nll = nll;
      report.best_epoch = epoch;
      report.best_model = model;
      if (!ckpt.empty()) {
        save_model(ckpt, model, config.spec,
                   {{"epoch", epoch}, {"tokens_seen", tokens_seen}, {"eval_nll", nll},
                    {"train_config", to_json(config)}});
        report.best_checkpoint = ckpt.string();
      }
      return true;
    }
    return false;
  };

  std::vector<std::size_t> order(data.train.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(std::span<std::size_t>(order));

    bool improved = false;
    bool evaluated = false;
    for (std::size_t idx : order) {
      const auto& toks = data.train[idx].tokens;
      LstmState state = LstmState::zeros(model);
      for (std::size_t start = 0; start + 1 < toks.size(); start += static_cast<std::size_t>(config.bptt_len)) {
        const std::size_t end = std::min(toks.size(), start + static_cast<std::size_t>(config.bptt_len) + 1);
        std::span<const int> window(toks.data() + start, end - start);
        const double loss = loss_and_grads(model, window, state, &dropout_rng, grads, config.clip);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::DivergedLoss,
                      fmt::format("training loss is {} at epoch {} after {} tokens", loss, epoch,
                                  tokens_seen));
        }
        optimizer.step(model.params(), grads);
        tokens_seen += static_cast<std::int64_t>(window.size() - 1);
        since_eval += static_cast<std::int64_t>(window.size() - 1);
        if (since_eval >= config.eval_every) {
          improved = run_eval(epoch) || improved;
          evaluated = true;
        }
      }
    }
    if (!evaluated) improved = run_eval(epoch) || improved;
    report.epochs_run = epoch;
    spdlog::debug("epoch {}: best eval nll {:.6f}, lr {:.3g}", epoch, report.best_eval_nll,
                  optimizer.learning_rate());

    stale_epochs = improved ? 0 : stale_epochs + 1;
    if (stale_epochs >= config.plateau_epochs) {
      report.stop_reason = "plateau";
      break;
    }
    optimizer.end_epoch(epoch);
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
  return report;
}

nlohmann::json to_json(EncodingSpec spec) {
  return {{"snaking", spec.snaking}, {"paths", spec.paths}, {"depth", spec.depth}};
}

EncodingSpec spec_from_json(const nlohmann::json& j) {
  return {j.at("snaking").get<bool>(), j.at("paths").get<bool>(), j.at("depth").get<bool>()};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"spec", to_json(c.spec)},
      {"hidden", c.hidden},
      {"dropout", c.dropout},
      {"bptt_len", c.bptt_len},
      {"split", c.split},
      {"eval_every", c.eval_every},
      {"plateau_epochs", c.plateau_epochs},
      {"max_epochs", c.max_epochs},
      {"optimizer",
       {{"kind", c.optimizer.kind == OptimizerConfig::Kind::RmsProp ? "rmsprop" : "sgd"},
        {"learning_rate", c.optimizer.learning_rate},
        {"decay", c.optimizer.decay},
        {"lr_decay", c.optimizer.lr_decay},
        {"lr_decay_after", c.optimizer.lr_decay_after}}},
      {"clip", c.clip},
      {"init_range", c.init_range},
      {"seed", c.seed},
  };
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) {
    curve.push_back({{"epoch", p.epoch}, {"tokens_seen", p.tokens_seen}, {"eval_nll", p.eval_nll}});
  }
  return {{"curve", curve},
          {"best_eval_nll", r.best_eval_nll},
          {"best_epoch", r.best_epoch},
          {"best_checkpoint", r.best_checkpoint},
          {"epochs_run", r.epochs_run},
          {"stop_reason", r.stop_reason}};
}

void save_model(const std::filesystem::path& path, const LstmModel& model, EncodingSpec spec,
                const nlohmann::json& metadata) {
  save_checkpoint(path, model);
  nlohmann::json side = metadata;
  side["spec"] = to_json(spec);
  side["vocab_size"] = model.vocab_size();
  side["hidden"] = model.hidden_sizes();
  side["format_version"] = 1;
  write_text_file(path.string() + ".json", side.dump(2) + "\n");
}

LoadedModel load_model(const std::filesystem::path& path) {
  LoadedModel out;
  out.model = load_checkpoint(path);
  const auto side_path = std::filesystem::path(path.string() + ".json");
  try {
    out.metadata = nlohmann::json::parse(read_text_file(side_path));
    out.spec = spec_from_json(out.metadata.at("spec"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadCheckpoint,
                fmt::format("{}: bad sidecar: {}", side_path.string(), e.what()));
  }
  if (Vocabulary(out.spec).size() != out.model.vocab_size()) {
    throw Error(ErrorCode::BadCheckpoint,
                fmt::format("{}: vocabulary size does not match the recorded encoding", path.string()));
  }
  return out;
}

}  // namespace levelseq
