#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "levelseq/codec.hpp"
#include "levelseq/error.hpp"
#include "levelseq/generator.hpp"
#include "levelseq/kernels.hpp"
#include "levelseq/manifest.hpp"
#include "levelseq/metrics.hpp"
#include "levelseq/pathfinder.hpp"
#include "levelseq/plot.hpp"
#include "levelseq/trainer.hpp"

namespace fs = std::filesystem;
using namespace levelseq;

namespace {

// Bad flag combinations found after parsing; reported like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::string kDataDir = LEVELSEQ_DEFAULT_DATA_DIR;

int run(std::vector<std::string> args);

std::string yn(bool b) { return b ? "Y" : "N"; }

EncodingSpec spec_from_flags(const std::string& s, const std::string& p, const std::string& d) {
  return {s == "Y", p == "Y", d == "Y"};
}

std::string compact_label(EncodingSpec spec) {
  return yn(spec.snaking) + yn(spec.paths) + yn(spec.depth);
}

MovementModel load_movement(const std::string& arcs) {
  return arcs.empty() ? MovementModel{} : MovementModel::from_file(arcs);
}

CharMap load_charmap(const std::string& path) {
  return path.empty() ? CharMap{} : CharMap::from_file(path);
}

void add_spec_flags(CLI::App* cmd, std::string& s, std::string& p, std::string& d) {
  const auto yn_check = CLI::IsMember({"Y", "N"});
  cmd->add_option("--snaking", s, "Alternate column direction (Y/N)")->check(yn_check);
  cmd->add_option("--paths", p, "Annotate near-optimal paths (Y/N)")->check(yn_check);
  cmd->add_option("--depth", d, "Insert depth markers every 5 columns (Y/N)")->check(yn_check);
}

// Level files in a directory, skipping annotated copies written next to them.
std::vector<fs::path> plain_level_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (auto& p : list_level_files(dir)) {
    const auto name = p.filename().string();
    if (name.size() >= 9 && name.ends_with(".path.txt")) continue;
    out.push_back(p);
  }
  return out;
}

fs::path artifact_dir_of(const fs::path& file) {
  auto parent = file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

void record(const fs::path& dir, std::string_view command, const std::vector<std::string>& argv,
            const nlohmann::json& config, std::uint64_t seed) {
  fs::create_directories(dir);
  write_manifest(dir, make_manifest(command, argv, config, seed));
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
  std::string corpus = kDataDir + "/corpus";
  std::string charmap;
  std::string arcs;
  std::string out;
};

int cmd_ingest(const IngestOpts& o, const std::vector<std::string>& argv) {
  const auto map = load_charmap(o.charmap);
  const auto movement = load_movement(o.arcs);
  auto levels = load_corpus(o.corpus, map);
  if (levels.empty()) throw Error(ErrorCode::EmptyCorpus, fmt::format("no level files in {}", o.corpus));

  std::map<int, int> widths;  // bucket start -> count
  std::map<std::string, long> tiles;
  int completable = 0;
  long columns = 0;
  nlohmann::json per_level = nlohmann::json::array();
  for (const auto& lv : levels) {
    widths[lv.grid.width() / 10 * 10] += 1;
    columns += lv.grid.width();
    for (int c = 0; c < lv.grid.width(); ++c) {
      for (int r = 0; r < kLevelHeight; ++r) tiles[std::string(tile_name(lv.grid.at(c, r)))] += 1;
    }
    const bool ok = find_optimal_path(lv.grid, movement).has_value();
    completable += ok;
    per_level.push_back({{"name", lv.name}, {"width", lv.grid.width()}, {"completable", ok}});
  }

  fmt::print("levels: {}\n", levels.size());
  fmt::print("columns: {}\n", columns);
  fmt::print("completable: {}/{}\n", completable, levels.size());
  fmt::print("width histogram:\n");
  for (auto [lo, n] : widths) fmt::print("  {:>4}-{:<4} {:>3} {}\n", lo, lo + 9, n, std::string(n, '#'));
  fmt::print("tiles:\n");
  for (const auto& [name, n] : tiles) fmt::print("  {:<18} {}\n", name, n);

  if (!o.out.empty()) {
    nlohmann::json hist = nlohmann::json::object();
    for (auto [lo, n] : widths) hist[fmt::format("{}-{}", lo, lo + 9)] = n;
    nlohmann::json stats{{"levels", levels.size()}, {"columns", columns}, {"completable", completable},
                         {"width_histogram", hist}, {"tiles", tiles}, {"per_level", per_level}};
    fs::create_directories(o.out);
    write_text_file(fs::path(o.out) / "stats.json", stats.dump(2) + "\n");
    record(o.out, "ingest", argv, {{"corpus", o.corpus}, {"charmap", o.charmap}, {"arcs", o.arcs}}, 0);
  }
  return 0;
}

// ---------------------------------------------------------------- annotate

struct AnnotateOpts {
  std::string corpus = kDataDir + "/corpus";
  std::string charmap;
  std::string arcs;
  int slack = kDefaultSlack;
  std::string out;
};

int cmd_annotate(const AnnotateOpts& o, const std::vector<std::string>& argv) {
  const auto map = load_charmap(o.charmap);
  const auto movement = load_movement(o.arcs);
  fs::create_directories(o.out);
  nlohmann::json summary = nlohmann::json::array();
  int done = 0;
  auto levels = load_corpus(o.corpus, map);
  for (const auto& lv : levels) {
    nlohmann::json entry{{"name", lv.name}};
    auto path = find_optimal_path(lv.grid, movement);
    if (!path) {
      entry["completable"] = false;
      spdlog::warn("{}: not completable, no annotation written", lv.name);
    } else {
      auto g = annotate_paths(lv.grid, movement, o.slack);
      write_text_file(fs::path(o.out) / (lv.name + ".path.txt"), serialize_level(g, map));
      entry["completable"] = true;
      entry["optimal_cost"] = path->optimal_cost;
      entry["jumps"] = path->jump_count();
      entry["marked_cells"] = std::count(g.cells().begin(), g.cells().end(), Tile::PathMarker);
      ++done;
    }
    summary.push_back(std::move(entry));
  }
  write_text_file(fs::path(o.out) / "annotate.json", summary.dump(2) + "\n");
  record(o.out, "annotate", argv,
         {{"corpus", o.corpus}, {"charmap", o.charmap}, {"arcs", o.arcs}, {"slack", o.slack}}, 0);
  fmt::print("annotated {}/{} levels into {}\n", done, levels.size(), o.out);
  return 0;
}

// ---------------------------------------------------------------- encode

struct EncodeOpts {
  std::string corpus = kDataDir + "/corpus";
  std::string charmap;
  std::string arcs;
  std::string snaking = "N", paths = "N", depth = "N";
  int slack = kDefaultSlack;
  std::string out;
};

int cmd_encode(const EncodeOpts& o, const std::vector<std::string>& argv) {
  const auto spec = spec_from_flags(o.snaking, o.paths, o.depth);
  const auto movement = load_movement(o.arcs);
  const Vocabulary vocab(spec);
  fs::create_directories(o.out);
  std::size_t tokens = 0;
  int written = 0;
  nlohmann::json skipped = nlohmann::json::array();
  auto levels = load_corpus(o.corpus, load_charmap(o.charmap));
  for (auto& lv : levels) {
    if (spec.paths) {
      try {
        lv.grid = annotate_paths(lv.grid, movement, o.slack);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotCompletable) throw;
        spdlog::warn("{}: not completable, skipped", lv.name);
        skipped.push_back(lv.name);
        continue;
      }
    }
    auto seqs = encode(lv.grid, spec);
    for (const auto& s : seqs) tokens += s.tokens.size();
    write_text_file(fs::path(o.out) / (lv.name + ".seq"), format_sequences(seqs));
    ++written;
  }
  nlohmann::json names = nlohmann::json::array();
  for (int t = 0; t < vocab.size(); ++t) names.push_back(vocab.name(t));
  write_text_file(fs::path(o.out) / "vocab.json",
                  nlohmann::json{{"spec", to_json(spec)}, {"size", vocab.size()}, {"tokens", names},
                                 {"skipped", skipped}}
                          .dump(2) +
                      "\n");
  record(o.out, "encode", argv,
         {{"corpus", o.corpus}, {"charmap", o.charmap}, {"arcs", o.arcs}, {"slack", o.slack},
          {"spec", to_json(spec)}},
         0);
  fmt::print("{}: {} levels, {} tokens, vocabulary {}\n", spec.label(), written, tokens, vocab.size());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string corpus = kDataDir + "/corpus";
  std::string charmap;
  std::string arcs;
  std::string snaking = "N", paths = "N", depth = "N";
  std::string profile = "desk";
  int hidden = 128;
  int layers = 2;
  double dropout = 0.25;
  int bptt = 200;
  double split = 0.70;
  int eval_every = 0;
  int plateau = 2;
  int max_epochs = 0;
  double lr = 2e-3;
  std::uint64_t seed = 1;
  int slack = kDefaultSlack;
  int jobs = 1;
  std::string out;
};

TrainConfig resolve_train_config(const TrainOpts& o, const CLI::App& cmd) {
  TrainConfig c = o.profile == "paper" ? TrainConfig::paper() : TrainConfig::desk();
  c.spec = spec_from_flags(o.snaking, o.paths, o.depth);
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--hidden") || given("--layers")) {
    const int width = given("--hidden") ? o.hidden : c.hidden.front();
    const int depth = given("--layers") ? o.layers : static_cast<int>(c.hidden.size());
    c.hidden.assign(static_cast<std::size_t>(std::max(depth, 0)), width);
  }
  if (given("--dropout")) c.dropout = o.dropout;
  if (given("--bptt")) c.bptt_len = o.bptt;
  if (given("--split")) c.split = o.split;
  if (given("--eval-every")) c.eval_every = o.eval_every;
  if (given("--plateau")) c.plateau_epochs = o.plateau;
  if (given("--max-epochs")) c.max_epochs = o.max_epochs;
  if (given("--lr")) c.optimizer.learning_rate = o.lr;
  c.seed = o.seed;
  c.validate();
  return c;
}

int cmd_train(const TrainOpts& o, const CLI::App& cmd, const std::vector<std::string>& argv) {
  const auto config = resolve_train_config(o, cmd);
  const auto movement = load_movement(o.arcs);
  kernels::set_threads(o.jobs);
  DatasetOptions dopts;
  dopts.split = config.split;
  dopts.seed = config.seed;
  dopts.slack = o.slack;
  auto data = make_dataset(load_corpus(o.corpus, load_charmap(o.charmap)), config.spec, movement, dopts);
  spdlog::info("{}: {} train / {} eval sequences", config.spec.label(), data.train.size(), data.eval.size());

  const fs::path out = o.out;
  fs::create_directories(out);
  auto report = train(config, data, out);

  auto j = to_json(report);
  j["best_checkpoint"] = "best.ckpt";  // relative, so replays compare equal
  j["spec"] = to_json(config.spec);
  write_text_file(out / "report.json", j.dump(2) + "\n");
  write_text_file(out / "dataset.json",
                  nlohmann::json{{"train_levels", data.train_levels},
                                 {"eval_levels", data.eval_levels},
                                 {"skipped", data.skipped}}
                          .dump(2) +
                      "\n");
  auto cfg = to_json(config);
  cfg["profile"] = o.profile;
  cfg["corpus"] = o.corpus;
  cfg["charmap"] = o.charmap;
  cfg["arcs"] = o.arcs;
  cfg["slack"] = o.slack;
  record(out, "train", argv, cfg, config.seed);
  fmt::print("{}: best eval NLL {:.6f} at epoch {} ({} epochs, {})\n", config.spec.label(),
             report.best_eval_nll, report.best_epoch, report.epochs_run, report.stop_reason);
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleOpts {
  std::string ckpt;
  std::string seed_kind = "above";
  std::string seed_file;
  int count = 10;
  double temp = 1.0;
  std::uint64_t master_seed = 1;
  std::size_t max_tokens = 0;
  std::string arcs;
  int slack = kDefaultSlack;
  int jobs = 1;
  std::string out;
};

int cmd_sample(const SampleOpts& o, const std::vector<std::string>& argv) {
  if (o.seed_kind == "custom" && o.seed_file.empty()) throw UsageError("--seed-kind custom needs --seed-file");
  if (o.seed_kind != "custom" && !o.seed_file.empty()) throw UsageError("--seed-file needs --seed-kind custom");
  auto loaded = load_model(o.ckpt);
  GenerationJob job;
  job.seed = o.seed_kind == "custom" ? SeedSpec::from_file(o.seed_file)
                                     : SeedSpec::builtin(o.seed_kind == "under" ? SeedKind::Underground
                                                                                : SeedKind::Aboveground);
  job.count = o.count;
  job.temperature = o.temp;
  job.max_tokens = o.max_tokens;
  job.master_seed = o.master_seed;
  job.jobs = o.jobs;
  job.slack = o.slack;
  if (!(o.temp > 0.0)) throw Error(ErrorCode::InvalidConfig, "temperature must be positive");

  auto batch = sample_batch(loaded.model, loaded.spec, job, load_movement(o.arcs));
  auto manifest = write_batch(batch, loaded.spec, job, o.out);
  record(o.out, "sample", argv,
         {{"ckpt", o.ckpt}, {"seed_kind", o.seed_kind}, {"seed_file", o.seed_file}, {"count", o.count},
          {"temperature", o.temp}, {"max_tokens", o.max_tokens}, {"arcs", o.arcs}, {"slack", o.slack},
          {"spec", to_json(loaded.spec)}},
         o.master_seed);
  fmt::print("{} samples: {} decoded, {} overflow, {} malformed, {:.2f} with no column warnings\n",
             o.count, manifest.at("decoded").get<int>(), manifest.at("overflow_count").get<int>(),
             manifest.at("malformed_count").get<int>(), manifest.at("zero_warning_fraction").get<double>());
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string levels;
  std::string charmap;
  std::string arcs;
  bool coin_rewards = false;
  int bins = 20;
  int jobs = 1;
  std::string out;
};

int cmd_evaluate(const EvaluateOpts& o, const std::vector<std::string>& argv) {
  const auto map = load_charmap(o.charmap);
  std::vector<std::string> names;
  std::vector<TileGrid> grids;
  for (const auto& p : plain_level_files(o.levels)) {
    names.push_back(p.stem().string());
    grids.push_back(load_level_file(p, map));
  }
  if (grids.empty()) throw Error(ErrorCode::EmptyBatch, fmt::format("no level files in {}", o.levels));
  MetricsOptions mopts;
  mopts.coin_blocks_are_rewards = o.coin_rewards;
  auto metrics = evaluate_levels(grids, load_movement(o.arcs), mopts, o.jobs);

  const fs::path out = o.out;
  const auto dir = artifact_dir_of(out);
  fs::create_directories(dir);
  write_text_file(out, metrics_to_csv(names, metrics));
  auto summary = summarize_batch(metrics, o.bins);
  summary.source = fs::path(o.levels).filename().string();
  auto summary_path = out;
  summary_path.replace_extension(".summary.csv");
  write_text_file(summary_path, summary_to_csv(summary));
  record(dir, "evaluate", argv,
         {{"levels", o.levels}, {"charmap", o.charmap}, {"arcs", o.arcs}, {"coin_rewards", o.coin_rewards},
          {"bins", o.bins}},
         0);
  fmt::print("{} levels, C = {}\n", metrics.size(), format_number(summary.completable_fraction));
  for (int k = 0; k < kNumMetrics; ++k) {
    fmt::print("  {:<4} mean {}\n", kMetricNames[static_cast<std::size_t>(k)],
               format_number(summary.stats[static_cast<std::size_t>(k)].mean));
  }
  return 0;
}

// ---------------------------------------------------------------- plot

struct PlotOpts {
  std::string metrics;
  std::string reference;
  int bins = 20;
  std::string out;
};

int cmd_plot(const PlotOpts& o, const std::vector<std::string>& argv) {
  auto metrics = read_metrics_csv(o.metrics);
  std::vector<LevelMetrics> ref;
  if (!o.reference.empty()) ref = read_metrics_csv(o.reference);
  auto plot = render_corner_plot(metrics, o.reference.empty() ? nullptr : &ref, o.bins);
  const fs::path out = o.out;
  const auto dir = artifact_dir_of(out);
  fs::create_directories(dir);
  write_text_file(out, plot.svg);
  auto csv = out;
  csv.replace_extension(".csv");
  write_text_file(csv, plot.density_csv);
  record(dir, "plot", argv, {{"metrics", o.metrics}, {"reference", o.reference}, {"bins", o.bins}}, 0);
  fmt::print("wrote {} and {}\n", out.string(), csv.string());
  return 0;
}

// ---------------------------------------------------------------- dump-arcs

struct DumpArcsOpts {
  std::string arcs;
  std::string out;
  std::string charmap_out;
};

int cmd_dump_arcs(const DumpArcsOpts& o, const std::vector<std::string>& argv) {
  const auto text = load_movement(o.arcs).to_text();
  if (o.out.empty()) {
    fmt::print("{}", text);
  } else {
    write_text_file(o.out, text);
  }
  if (!o.charmap_out.empty()) write_text_file(o.charmap_out, CharMap{}.to_text());
  if (!o.out.empty()) {
    record(artifact_dir_of(o.out), "dump-arcs", argv, {{"arcs", o.arcs}, {"charmap_out", o.charmap_out}}, 0);
  }
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOpts {
  std::string profile = "desk";
  std::string corpus = kDataDir + "/corpus";
  std::string reference = kDataDir + "/reference/human_reference.csv";
  std::string arcs;
  int count = 100;
  double temp = 1.0;
  std::uint64_t master_seed = 2016;
  int max_epochs = 0;
  std::vector<std::string> specs;
  int jobs = 1;
  std::string out;
};

struct SpecOutcome {
  EncodingSpec spec;
  nlohmann::json train;
  nlohmann::json batch;
  std::vector<LevelMetrics> metrics;
  BatchSummary summary;
};

void run_step(const std::vector<std::string>& args) {
  spdlog::info("levelseq {}", fmt::join(args, " "));
  const int rc = run(args);
  if (rc != 0) throw Error(ErrorCode::InvalidConfig, fmt::format("step '{}' exited with {}", args.front(), rc));
}

int cmd_report(const ReportOpts& o, const std::vector<std::string>& argv) {
  const fs::path out = o.out;
  fs::create_directories(out);
  std::vector<EncodingSpec> specs;
  for (auto spec : EncodingSpec::all()) {
    if (o.specs.empty() || std::find(o.specs.begin(), o.specs.end(), compact_label(spec)) != o.specs.end()) {
      specs.push_back(spec);
    }
  }
  if (specs.empty()) throw UsageError("--specs selects no encodings");
  const auto jobs = std::to_string(o.jobs);
  const auto seed = std::to_string(o.master_seed);

  std::vector<SpecOutcome> outcomes;
  for (auto spec : specs) {
    const auto base = out / compact_label(spec);
    std::vector<std::string> train_args{"train", "--corpus", o.corpus, "--snaking", yn(spec.snaking),
                                        "--paths", yn(spec.paths), "--depth", yn(spec.depth),
                                        "--profile", o.profile, "--seed", seed, "--jobs", jobs,
                                        "--out", (base / "train").string()};
    if (!o.arcs.empty()) train_args.insert(train_args.end(), {"--arcs", o.arcs});
    if (o.max_epochs > 0) train_args.insert(train_args.end(), {"--max-epochs", std::to_string(o.max_epochs)});
    run_step(train_args);

    std::vector<std::string> sample_args{"sample", "--ckpt", (base / "train" / "best.ckpt").string(),
                                         "--count", std::to_string(o.count), "--temp", fmt::format("{}", o.temp),
                                         "--master-seed", seed, "--jobs", jobs,
                                         "--out", (base / "samples").string()};
    if (!o.arcs.empty()) sample_args.insert(sample_args.end(), {"--arcs", o.arcs});
    run_step(sample_args);

    SpecOutcome r;
    r.spec = spec;
    r.train = nlohmann::json::parse(read_text_file(base / "train" / "report.json"));
    r.batch = nlohmann::json::parse(read_text_file(base / "samples" / "batch.json"));
    if (r.batch.at("decoded").get<int>() > 0) {
      std::vector<std::string> eval_args{"evaluate", "--levels", (base / "samples").string(),
                                         "--jobs", jobs, "--out", (base / "eval" / "metrics.csv").string()};
      if (!o.arcs.empty()) eval_args.insert(eval_args.end(), {"--arcs", o.arcs});
      run_step(eval_args);
      r.metrics = read_metrics_csv(base / "eval" / "metrics.csv");
      r.summary = summarize_batch(r.metrics);
    }
    // C counts every sample; overflowed or malformed ones are not completable.
    const auto completable = std::count_if(r.metrics.begin(), r.metrics.end(),
                                           [](const LevelMetrics& m) { return m.completable; });
    r.summary.completable_fraction = static_cast<double>(completable) / static_cast<double>(o.count);
    r.summary.count = o.count;
    outcomes.push_back(std::move(r));
  }

  // NLL table
  std::string nll = "| Snaking | Paths | Depth | Eval NLL | Best epoch | Epochs | Stop |\n";
  nll += "|---|---|---|---|---|---|---|\n";
  for (const auto& r : outcomes) {
    nll += fmt::format("| {} | {} | {} | {:.4f} | {} | {} | {} |\n", yn(r.spec.snaking), yn(r.spec.paths),
                       yn(r.spec.depth), r.train.at("best_eval_nll").get<double>(),
                       r.train.at("best_epoch").get<int>(), r.train.at("epochs_run").get<int>(),
                       r.train.at("stop_reason").get<std::string>());
  }
  write_text_file(out / "nll_table.md", nll);

  // metric comparison against the human-authored reference
  TableRow ref{"Human", read_summary_csv(o.reference)};
  std::vector<TableRow> rows;
  for (const auto& r : outcomes) {
    rows.push_back({fmt::format("{} {} {}", yn(r.spec.snaking), yn(r.spec.paths), yn(r.spec.depth)), r.summary});
  }
  write_text_file(out / "metrics_table.md", render_comparison_table(ref, rows));

  auto best = std::min_element(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) {
    return a.train.at("best_eval_nll").template get<double>() < b.train.at("best_eval_nll").template get<double>();
  });
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& r : outcomes) {
    entries.push_back({{"label", compact_label(r.spec)},
                       {"spec", to_json(r.spec)},
                       {"eval_nll", r.train.at("best_eval_nll")},
                       {"best_epoch", r.train.at("best_epoch")},
                       {"epochs_run", r.train.at("epochs_run")},
                       {"stop_reason", r.train.at("stop_reason")},
                       {"samples", r.batch.at("count")},
                       {"decoded", r.batch.at("decoded")},
                       {"overflow_count", r.batch.at("overflow_count")},
                       {"malformed_count", r.batch.at("malformed_count")},
                       {"zero_warning_fraction", r.batch.at("zero_warning_fraction")},
                       {"completable_fraction", r.summary.completable_fraction}});
  }
  nlohmann::json summary{{"profile", o.profile}, {"master_seed", o.master_seed}, {"count", o.count},
                         {"temperature", o.temp}, {"best", compact_label(best->spec)}, {"specs", entries}};
  write_text_file(out / "report.json", summary.dump(2) + "\n");

  // corner plot of the best spec against the training corpus
  std::vector<std::string> corpus_eval{"evaluate", "--levels", o.corpus, "--jobs", jobs,
                                       "--out", (out / "corpus" / "metrics.csv").string()};
  if (!o.arcs.empty()) corpus_eval.insert(corpus_eval.end(), {"--arcs", o.arcs});
  run_step(corpus_eval);
  const auto best_metrics = out / compact_label(best->spec) / "eval" / "metrics.csv";
  if (fs::exists(best_metrics)) {
    run_step({"plot", "--metrics", best_metrics.string(), "--reference", (out / "corpus" / "metrics.csv").string(),
              "--out", (out / "plot" / "corner.svg").string()});
  }

  record(out, "report", argv,
         {{"profile", o.profile}, {"corpus", o.corpus}, {"reference", o.reference}, {"arcs", o.arcs},
          {"count", o.count}, {"temperature", o.temp}, {"max_epochs", o.max_epochs}, {"specs", o.specs}},
         o.master_seed);
  fmt::print("{}\n{}", nll, read_text_file(out / "metrics_table.md"));
  return 0;
}

// ---------------------------------------------------------------- replay

struct ReplayOpts {
  std::string manifest;
  std::string out;
};

int cmd_replay(const ReplayOpts& o) {
  auto m = read_manifest(o.manifest);
  auto args = m.at("argv").get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw UsageError("manifest does not hold a replayable command");
  if (!o.out.empty()) {
    const auto target = fs::absolute(o.out).string();
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--out") {
        args[i + 1] = target;
        replaced = true;
      }
    }
    if (!replaced) throw UsageError("the recorded command has no --out to redirect");
  }
  const auto here = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  int rc = 0;
  try {
    rc = run(args);
  } catch (...) {
    fs::current_path(here);
    throw;
  }
  fs::current_path(here);
  return rc;
}

// ---------------------------------------------------------------- driver

int run(std::vector<std::string> args) {
  CLI::App app{"Level generation with recurrent networks over tile-sequence encodings", "levelseq"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  // nested runs (report steps, replay) inherit the caller's level
  std::string log_level(spdlog::level::to_string_view(spdlog::get_level()).data());
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a corpus and print statistics");
  c_ingest->add_option("--corpus", ingest.corpus, "Directory of level .txt files")->check(CLI::ExistingDirectory);
  c_ingest->add_option("--charmap", ingest.charmap, "Character map file (default built in)")->check(CLI::ExistingFile);
  c_ingest->add_option("--arcs", ingest.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest.out, "Optional directory for stats.json");

  AnnotateOpts annotate;
  auto* c_annotate = app.add_subcommand("annotate", "Mark near-optimal paths in every corpus level");
  c_annotate->add_option("--corpus", annotate.corpus, "Directory of level .txt files")->check(CLI::ExistingDirectory);
  c_annotate->add_option("--charmap", annotate.charmap, "Character map file (default built in)")->check(CLI::ExistingFile);
  c_annotate->add_option("--arcs", annotate.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  c_annotate->add_option("--slack", annotate.slack, "Extra cost allowed over the optimum")->check(CLI::NonNegativeNumber);
  c_annotate->add_option("--out", annotate.out, "Output directory")->required();

  EncodeOpts encode_o;
  auto* c_encode = app.add_subcommand("encode", "Write token sequences for a corpus");
  c_encode->add_option("--corpus", encode_o.corpus, "Directory of level .txt files")->check(CLI::ExistingDirectory);
  c_encode->add_option("--charmap", encode_o.charmap, "Character map file (default built in)")->check(CLI::ExistingFile);
  c_encode->add_option("--arcs", encode_o.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  add_spec_flags(c_encode, encode_o.snaking, encode_o.paths, encode_o.depth);
  c_encode->add_option("--slack", encode_o.slack, "Path slack when --paths Y")->check(CLI::NonNegativeNumber);
  c_encode->add_option("--out", encode_o.out, "Output directory")->required();

  TrainOpts train_o;
  auto* c_train = app.add_subcommand("train", "Train a network on one encoding of a corpus");
  c_train->add_option("--corpus", train_o.corpus, "Directory of level .txt files")->check(CLI::ExistingDirectory);
  c_train->add_option("--charmap", train_o.charmap, "Character map file (default built in)")->check(CLI::ExistingFile);
  c_train->add_option("--arcs", train_o.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  add_spec_flags(c_train, train_o.snaking, train_o.paths, train_o.depth);
  c_train->add_option("--profile", train_o.profile, "desk (2x128) or paper (3x512)")
      ->check(CLI::IsMember({"desk", "paper"}));
  c_train->add_option("--hidden", train_o.hidden, "Units per layer; overrides the profile")->check(CLI::PositiveNumber);
  c_train->add_option("--layers", train_o.layers, "Layer count; overrides the profile")->check(CLI::PositiveNumber);
  c_train->add_option("--dropout", train_o.dropout, "Dropout rate; overrides the profile")->check(CLI::Range(0.0, 0.99));
  c_train->add_option("--bptt", train_o.bptt, "Truncated backprop window")->check(CLI::Range(2, 1 << 20));
  c_train->add_option("--split", train_o.split, "Fraction of levels used for training")->check(CLI::Range(0.01, 0.99));
  c_train->add_option("--eval-every", train_o.eval_every, "Training tokens between evaluations; overrides the profile")
      ->check(CLI::PositiveNumber);
  c_train->add_option("--plateau", train_o.plateau, "Stop after this many epochs without improvement")
      ->check(CLI::PositiveNumber);
  c_train->add_option("--max-epochs", train_o.max_epochs, "Epoch cap; overrides the profile")->check(CLI::PositiveNumber);
  c_train->add_option("--lr", train_o.lr, "RMSProp learning rate")->check(CLI::NonNegativeNumber);
  c_train->add_option("--seed", train_o.seed, "Seed for split, init, order and dropout");
  c_train->add_option("--slack", train_o.slack, "Path slack when --paths Y")->check(CLI::NonNegativeNumber);
  c_train->add_option("--jobs", train_o.jobs, "Threads for kernels and evaluation")->check(CLI::PositiveNumber);
  c_train->add_option("--out", train_o.out, "Output directory")->required();

  SampleOpts sample_o;
  auto* c_sample = app.add_subcommand("sample", "Generate levels from a checkpoint");
  c_sample->add_option("--ckpt", sample_o.ckpt, "Checkpoint file (sidecar .json next to it)")
      ->required()
      ->check(CLI::ExistingFile);
  c_sample->add_option("--seed-kind", sample_o.seed_kind, "above, under or custom")
      ->check(CLI::IsMember({"above", "under", "custom"}));
  c_sample->add_option("--seed-file", sample_o.seed_file, "Three-column seed level for custom")->check(CLI::ExistingFile);
  c_sample->add_option("--count", sample_o.count, "Levels to generate")->check(CLI::PositiveNumber);
  c_sample->add_option("--temp", sample_o.temp, "Sampling temperature")->check(CLI::PositiveNumber);
  c_sample->add_option("--master-seed", sample_o.master_seed, "Level i uses a seed derived from this and i");
  c_sample->add_option("--max-tokens", sample_o.max_tokens, "Token cap per level; 0 means a 600-column level");
  c_sample->add_option("--arcs", sample_o.arcs, "Jump arc table for seed annotation")->check(CLI::ExistingFile);
  c_sample->add_option("--slack", sample_o.slack, "Path slack for seed annotation")->check(CLI::NonNegativeNumber);
  c_sample->add_option("--jobs", sample_o.jobs, "Levels generated in parallel")->check(CLI::PositiveNumber);
  c_sample->add_option("--out", sample_o.out, "Output directory")->required();

  EvaluateOpts eval_o;
  auto* c_eval = app.add_subcommand("evaluate", "Compute per-level metrics for a directory of levels");
  c_eval->add_option("--levels", eval_o.levels, "Directory of level .txt files")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--charmap", eval_o.charmap, "Character map file (default built in)")->check(CLI::ExistingFile);
  c_eval->add_option("--arcs", eval_o.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  c_eval->add_flag("--coin-rewards", eval_o.coin_rewards, "Count coin blocks as rewards in leniency");
  c_eval->add_option("--bins", eval_o.bins, "Histogram bins in the summary")->check(CLI::PositiveNumber);
  c_eval->add_option("--jobs", eval_o.jobs, "Levels evaluated in parallel")->check(CLI::PositiveNumber);
  c_eval->add_option("--out", eval_o.out, "Per-level CSV; a .summary.csv is written beside it")->required();

  PlotOpts plot_o;
  auto* c_plot = app.add_subcommand("plot", "Render a corner plot from per-level metrics");
  c_plot->add_option("--metrics", plot_o.metrics, "Per-level metrics CSV")->required()->check(CLI::ExistingFile);
  c_plot->add_option("--reference", plot_o.reference, "Per-level metrics CSV drawn as the reference")
      ->check(CLI::ExistingFile);
  c_plot->add_option("--bins", plot_o.bins, "Bins per axis")->check(CLI::PositiveNumber);
  c_plot->add_option("--out", plot_o.out, "SVG path; binned densities go to the same stem .csv")->required();

  DumpArcsOpts dump_o;
  auto* c_dump = app.add_subcommand("dump-arcs", "Print the jump arc table");
  c_dump->add_option("--arcs", dump_o.arcs, "Table to normalize instead of the built-in one")->check(CLI::ExistingFile);
  c_dump->add_option("--out", dump_o.out, "Write to a file instead of stdout");
  c_dump->add_option("--charmap-out", dump_o.charmap_out, "Also write the default character map here");

  ReportOpts report_o;
  auto* c_report = app.add_subcommand("report", "Train, sample and evaluate every encoding");
  c_report->add_option("--profile", report_o.profile, "Training profile")->check(CLI::IsMember({"desk", "paper"}));
  c_report->add_option("--corpus", report_o.corpus, "Directory of level .txt files")->check(CLI::ExistingDirectory);
  c_report->add_option("--reference", report_o.reference, "Reference summary CSV for the metric table")
      ->check(CLI::ExistingFile);
  c_report->add_option("--arcs", report_o.arcs, "Jump arc table (default built in)")->check(CLI::ExistingFile);
  c_report->add_option("--count", report_o.count, "Samples per encoding")->check(CLI::PositiveNumber);
  c_report->add_option("--temp", report_o.temp, "Sampling temperature")->check(CLI::PositiveNumber);
  c_report->add_option("--master-seed", report_o.master_seed, "Seed for training and sampling");
  c_report->add_option("--max-epochs", report_o.max_epochs, "Epoch cap; 0 keeps the profile value")
      ->check(CLI::NonNegativeNumber);
  c_report->add_option("--specs", report_o.specs, "Subset of encodings such as NNN YYY (default all)")
      ->check(CLI::IsMember({"NNN", "NNY", "NYN", "NYY", "YNN", "YNY", "YYN", "YYY"}));
  c_report->add_option("--jobs", report_o.jobs, "Threads")->check(CLI::PositiveNumber);
  c_report->add_option("--out", report_o.out, "Output directory")->required();

  ReplayOpts replay_o;
  auto* c_replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  c_replay->add_option("--manifest", replay_o.manifest, "manifest.json to replay")->required()->check(CLI::ExistingFile);
  c_replay->add_option("--out", replay_o.out, "Redirect the recorded --out here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*c_ingest) return cmd_ingest(ingest, args);
    if (*c_annotate) return cmd_annotate(annotate, args);
    if (*c_encode) return cmd_encode(encode_o, args);
    if (*c_train) return cmd_train(train_o, *c_train, args);
    if (*c_sample) return cmd_sample(sample_o, args);
    if (*c_eval) return cmd_evaluate(eval_o, args);
    if (*c_plot) return cmd_plot(plot_o, args);
    if (*c_dump) return cmd_dump_arcs(dump_o, args);
    if (*c_report) return cmd_report(report_o, args);
    if (*c_replay) return cmd_replay(replay_o);
  } catch (const UsageError& e) {
    fmt::print(stderr, "levelseq: usage error: {}\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("levelseq"));
  spdlog::set_level(spdlog::level::warn);
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const Error& e) {
    fmt::print(stderr, "levelseq: error [{}]: {}\n", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "levelseq: error [Internal]: {}\n", e.what());
    return 1;
  }
}
