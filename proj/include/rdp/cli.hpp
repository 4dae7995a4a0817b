#pragma once

// `rdp` command line: dataset, train, visualize, compare.
//
// Exit codes: 0 success, 2 validation error, 3 numeric divergence,
// 4 partial harness failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdp/analysis.hpp"
#include "rdp/checkpoint.hpp"
#include "rdp/dataset.hpp"
#include "rdp/errors.hpp"
#include "rdp/training.hpp"

namespace rdp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitPartialFailure = 4;

/// Training run description. JSON config files use the flag names as keys.
struct RunConfig {
  TrainConfig train;
  std::size_t n = 16384;
  std::optional<std::uint64_t> data_seed;  // defaults to train.seed
  double eval_fraction = 0.0;
  std::vector<std::size_t> checkpoint_epochs;
  std::string out = "run";

  std::uint64_t dataset_seed() const { return data_seed.value_or(train.seed); }

  void validate() const {
    train.validate();
    SpiralParams{n, dataset_seed()}.validate();
    if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) throw ValidationError("eval-fraction must lie in [0, 1)");
    for (std::size_t e : checkpoint_epochs) {
      if (e > train.epochs) throw ValidationError("checkpoint epoch " + std::to_string(e) + " exceeds epochs");
    }
  }
};

namespace detail {

enum class FieldKind { kString, kUint, kDouble, kUintList };

struct Field {
  const char* name;
  FieldKind kind;
  const char* help;
};

/// Every key accepted by train/compare config files and flags.
inline const std::vector<Field>& run_fields() {
  static const std::vector<Field> fields{
      {"algorithm", FieldKind::kString, "standard | droppath | residual_droppath"},
      {"depth", FieldKind::kUint, "number of residual blocks N"},
      {"hidden", FieldKind::kUint, "hidden width H"},
      {"lr", FieldKind::kDouble, "Adam learning rate"},
      {"beta1", FieldKind::kDouble, "Adam first-moment decay"},
      {"beta2", FieldKind::kDouble, "Adam second-moment decay"},
      {"eps", FieldKind::kDouble, "Adam epsilon"},
      {"epochs", FieldKind::kUint, "training epochs"},
      {"batch", FieldKind::kUint, "batch size"},
      {"drop-rate", FieldKind::kDouble, "droppath drop probability"},
      {"seed", FieldKind::kUint, "run seed (init, shuffling, masks)"},
      {"mask-reuse", FieldKind::kString, "literal | paired_batch"},
      {"n", FieldKind::kUint, "spiral sample count"},
      {"data-seed", FieldKind::kUint, "spiral seed (defaults to --seed)"},
      {"eval-fraction", FieldKind::kDouble, "fraction of samples held out for evaluation"},
      {"checkpoint-epochs", FieldKind::kUintList, "comma-separated epochs to checkpoint"},
      {"out", FieldKind::kString, "output directory"},
  };
  return fields;
}

inline std::uint64_t to_uint(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(key + " must be a non-negative integer");
}

inline double to_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError(key + " must be a number");
  return v.get<double>();
}

inline std::string to_str(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ValidationError(key + " must be a string");
  return v.get<std::string>();
}

inline void set_field(RunConfig& cfg, const std::string& key, const nlohmann::json& v) {
  TrainConfig& t = cfg.train;
  if (key == "algorithm") t.algorithm = parse_algorithm(to_str(v, key));
  else if (key == "depth") t.depth = to_uint(v, key);
  else if (key == "hidden") t.hidden = to_uint(v, key);
  else if (key == "lr") t.lr = to_double(v, key);
  else if (key == "beta1") t.beta1 = to_double(v, key);
  else if (key == "beta2") t.beta2 = to_double(v, key);
  else if (key == "eps") t.eps = to_double(v, key);
  else if (key == "epochs") t.epochs = to_uint(v, key);
  else if (key == "batch") t.batch_size = to_uint(v, key);
  else if (key == "drop-rate") t.drop_rate = to_double(v, key);
  else if (key == "seed") t.seed = to_uint(v, key);
  else if (key == "mask-reuse") t.mask_reuse = parse_mask_reuse(to_str(v, key));
  else if (key == "n") cfg.n = to_uint(v, key);
  else if (key == "data-seed") cfg.data_seed = to_uint(v, key);
  else if (key == "eval-fraction") cfg.eval_fraction = to_double(v, key);
  else if (key == "out") cfg.out = to_str(v, key);
  else if (key == "checkpoint-epochs") {
    if (!v.is_array()) throw ValidationError(key + " must be an array of epochs");
    cfg.checkpoint_epochs.clear();
    for (const auto& e : v) cfg.checkpoint_epochs.push_back(to_uint(e, key));
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

inline std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::uint64_t parse_uint_text(const std::string& text, const std::string& key) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw ValidationError(key + " must be a non-negative integer, got '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw ValidationError(key + " is out of range: '" + text + "'");
  }
}

inline double parse_double_text(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError(key + " must be a number, got '" + text + "'");
  }
  if (used != text.size()) throw ValidationError(key + " must be a number, got '" + text + "'");
  return v;
}

inline std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_commas(text)) out.push_back(parse_uint_text(item, key));
  return out;
}

inline nlohmann::json flag_to_json(const Field& field, const std::string& text) {
  switch (field.kind) {
    case FieldKind::kString: return text;
    case FieldKind::kUint: return parse_uint_text(text, field.name);
    case FieldKind::kDouble: return parse_double_text(text, field.name);
    case FieldKind::kUintList: {
      nlohmann::json arr = nlohmann::json::array();
      for (auto e : parse_index_list(text, field.name)) arr.push_back(e);
      return arr;
    }
  }
  return nullptr;
}

/// Flags registered on a subcommand; resolved after parsing so that
/// precedence is flags > config file > defaults.
struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "flat JSON config; flags override its values");
    for (const Field& f : run_fields()) options[f.name] = app.add_option(std::string("--") + f.name, values[f.name], f.help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot read config file " + config_path);
      nlohmann::json file;
      try {
        file = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file is not valid JSON: " + std::string(e.what()));
      }
      if (!file.is_object()) throw ValidationError("config file must hold a JSON object");
      for (const auto& [key, value] : file.items()) set_field(cfg, key, value);
    }
    for (const Field& f : run_fields()) {
      if (options.at(f.name)->count() > 0) set_field(cfg, f.name, flag_to_json(f, values.at(f.name)));
    }
    cfg.validate();
    return cfg;
  }
};

}  // namespace detail

/// Config echo stored in checkpoints, keyed by flag name.
inline nlohmann::json to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  return {{"algorithm", std::string(to_string(t.algorithm))},
          {"depth", t.depth},
          {"hidden", t.hidden},
          {"lr", t.lr},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"eps", t.eps},
          {"epochs", t.epochs},
          {"batch", t.batch_size},
          {"drop-rate", t.drop_rate},
          {"seed", t.seed},
          {"mask-reuse", std::string(to_string(t.mask_reuse))},
          {"n", cfg.n},
          {"data-seed", cfg.dataset_seed()},
          {"eval-fraction", cfg.eval_fraction}};
}

struct SplitData {
  std::vector<LabeledPoint> train;
  std::vector<LabeledPoint> eval;
};

/// Spiral data for a run; a seeded random subset is held out when
/// eval_fraction > 0. Both parts keep generation order.
inline SplitData make_run_data(const RunConfig& cfg) {
  const auto all = generate_spiral({cfg.n, cfg.dataset_seed()});
  SplitData split;
  const auto held = static_cast<std::size_t>(std::llround(cfg.eval_fraction * static_cast<double>(all.size())));
  if (held == 0) {
    split.train = all;
    return split;
  }
  if (held >= all.size()) throw ValidationError("eval-fraction leaves no training data");
  std::vector<bool> is_eval(all.size(), false);
  const auto order = shuffled_indices(all.size(), derive_seed(cfg.dataset_seed(), stream::kEvalSplit));
  for (std::size_t i = 0; i < held; ++i) is_eval[order[i]] = true;
  for (std::size_t i = 0; i < all.size(); ++i) (is_eval[i] ? split.eval : split.train).push_back(all[i]);
  return split;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
}

inline std::string checkpoint_name(std::size_t epoch) {
  std::ostringstream name;
  name << "ckpt_epoch_" << std::setw(4) << std::setfill('0') << epoch << ".rdp";
  return name.str();
}

/// Artifacts of one training run, written under cfg.out.
inline void write_run(const RunConfig& cfg, const TrainResult& result) {
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  std::ostringstream metrics, epochs;
  write_metrics_csv(metrics, result.iterations);
  write_epochs_csv(epochs, result.epochs);
  write_file(dir / "metrics.csv", metrics.str());
  write_file(dir / "epochs.csv", epochs.str());
  if (result.diverged) return;
  const nlohmann::json echo = to_json(cfg);
  for (const auto& [epoch, model] : result.snapshots) {
    write_file(dir / checkpoint_name(epoch), serialize_checkpoint({model, epoch, cfg.train.seed, echo}));
  }
  write_file(dir / "model.rdp", serialize_checkpoint({result.model, cfg.train.epochs, cfg.train.seed, echo}));
}

inline int cmd_dataset(std::size_t n, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const SpiralParams params{n, seed};
  params.validate();
  std::ostringstream csv;
  write_points_csv(csv, generate_spiral(params));
  write_file(out_path, csv.str());
  out << "wrote " << n << " points to " << out_path << "\n";
  return kExitOk;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SplitData data = make_run_data(cfg);
  TrainOptions options;
  options.eval = data.eval;
  options.snapshot_epochs = cfg.checkpoint_epochs;
  const TrainResult result = train(cfg.train, data.train, options);
  write_run(cfg, result);
  if (result.diverged) {
    err << "error: training diverged: " << result.failure << "\n";
    return kExitDiverged;
  }
  out << "final_train_acc=" << format_double(result.final_train_acc) << "\n";
  return kExitOk;
}

struct VisualizeOptions {
  std::vector<std::string> checkpoints;
  std::string kind = "panel";
  std::string out;
  std::string layers;
  std::string nodes;
  std::size_t resolution = 50;
  std::size_t max_sampled = 8;
  std::size_t scatter_limit = 400;
  std::string bounds = "node";
  std::string features_csv;
};

inline std::vector<LabeledPoint> training_points_for(const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  if (!c.contains("n") || !c.contains("data-seed")) return {};
  try {
    return generate_spiral({c["n"].get<std::size_t>(), c["data-seed"].get<std::uint64_t>()});
  } catch (const std::exception&) {
    throw FormatError("config", "checkpoint config echo has an unusable n/data-seed");
  }
}

inline PanelSpec panel_spec_for(const ResidualMLP& model, const VisualizeOptions& opts) {
  PanelSpec spec = default_panel_spec(model.depth(), model.hidden(), opts.max_sampled);
  if (!opts.layers.empty()) spec.layers = detail::parse_index_list(opts.layers, "layers");
  if (!opts.nodes.empty()) spec.nodes = detail::parse_index_list(opts.nodes, "nodes");
  spec.grid_resolution = opts.resolution;
  spec.scatter_limit = opts.scatter_limit;
  if (opts.bounds == "node") spec.bounds = ColorBounds::kPerNodeSymmetric;
  else if (opts.bounds == "layer") spec.bounds = ColorBounds::kPerLayerSymmetric;
  else throw ValidationError("bounds must be 'node' or 'layer'");
  spec.validate(model);
  return spec;
}

inline int cmd_visualize(const VisualizeOptions& opts, std::ostream& out) {
  if (opts.checkpoints.empty()) throw ValidationError("at least one --checkpoint is required");
  if (opts.kind != "panel" && opts.kind != "similarity") throw ValidationError("kind must be 'panel' or 'similarity'");
  std::vector<Checkpoint> ckpts;
  for (const auto& path : opts.checkpoints) ckpts.push_back(load_checkpoint(path));
  const GridProbe grid = generate_grid(opts.resolution);
  const std::string prefix = opts.out.empty() ? std::filesystem::path(opts.checkpoints.front()).replace_extension().string() + "." + opts.kind : opts.out;

  if (opts.kind == "similarity") {
    for (std::size_t i = 0; i < ckpts.size(); ++i) {
      const std::string stem = ckpts.size() == 1 ? prefix : prefix + ".epoch" + std::to_string(ckpts[i].epoch);
      const FeatureStack features = extract_features(ckpts[i].model, grid);
      const SimilarityMatrix sim = layer_similarity(features);
      std::ostringstream csv, dist;
      write_similarity_csv(csv, sim);
      write_distance_csv(dist, sim);
      write_file(stem + ".csv", csv.str());
      write_file(stem + ".dist.csv", dist.str());
      write_file(stem + ".svg", render_similarity_heatmap(sim));
      out << "wrote " << stem << ".svg (" << sim.layers << "x" << sim.layers << ")\n";
    }
    return kExitOk;
  }

  std::map<std::size_t, ResidualMLP> snapshots;
  std::vector<std::size_t> epochs;
  for (const auto& c : ckpts) {
    if (!snapshots.emplace(c.epoch, c.model).second) throw ValidationError("two checkpoints share an epoch");
    epochs.push_back(c.epoch);
  }
  const PanelSpec spec = panel_spec_for(ckpts.front().model, opts);
  const auto train_points = training_points_for(ckpts.front());
  const auto panels = snapshot_training(snapshots, epochs, grid, train_points, spec);
  for (const auto& [epoch, doc] : panels) {
    const std::string stem = panels.size() == 1 ? prefix : prefix + ".epoch" + std::to_string(epoch);
    write_file(stem + ".svg", doc);
    out << "wrote " << stem << ".svg (" << spec.nodes.size() << "x" << 2 * spec.layers.size() + 1 << " cells)\n";
  }
  if (!opts.features_csv.empty()) {
    std::ostringstream csv;
    write_feature_csv(csv, extract_features(ckpts.front().model, grid), spec.layers, spec.nodes);
    write_file(opts.features_csv, csv.str());
  }
  return kExitOk;
}

struct CompareCell {
  Algorithm algorithm;
  std::uint64_t seed;
  bool ok = false;
  double train_acc = 0.0;
  std::string failure;
};

struct CompareRow {
  Algorithm algorithm;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and sample standard deviation (0 for a single value).
inline std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size() - 1))};
}

inline std::size_t harness_threads() {
  if (const char* env = std::getenv("RDP_THREADS")) {
    try {
      const auto n = std::stoul(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Trains every (algorithm, seed) cell and summarizes final train accuracy.
inline std::vector<CompareCell> run_comparison(const RunConfig& base, std::span<const std::uint64_t> seeds) {
  std::vector<CompareCell> cells;
  for (Algorithm a : {Algorithm::kStandard, Algorithm::kDroppath, Algorithm::kResidualDroppath})
    for (std::uint64_t s : seeds) cells.push_back({a, s});
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      CompareCell& cell = cells[i];
      try {
        RunConfig cfg = base;
        cfg.train.algorithm = cell.algorithm;
        cfg.train.seed = cell.seed;
        if (!base.data_seed) cfg.data_seed = cell.seed;
        const SplitData data = make_run_data(cfg);
        const TrainResult result = train(cfg.train, data.train, {.eval = data.eval});
        if (result.diverged) {
          cell.failure = result.failure;
        } else {
          cell.ok = true;
          cell.train_acc = result.final_train_acc;
        }
      } catch (const std::exception& e) {
        cell.failure = e.what();
      }
    }
  };
  const std::size_t threads = std::min(harness_threads(), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

inline std::vector<CompareRow> summarize(std::span<const CompareCell> cells) {
  std::vector<CompareRow> rows;
  for (Algorithm a : {Algorithm::kStandard, Algorithm::kDroppath, Algorithm::kResidualDroppath}) {
    CompareRow row{a};
    std::vector<double> accs;
    for (const auto& c : cells) {
      if (c.algorithm != a) continue;
      ++row.runs;
      if (c.ok) accs.push_back(c.train_acc);
      else ++row.failed;
    }
    std::tie(row.mean, row.stddev) = mean_std(accs);
    rows.push_back(row);
  }
  return rows;
}

inline std::string summary_text(std::span<const CompareRow> rows, std::size_t depth, std::size_t hidden) {
  std::ostringstream out;
  out << "Model          Algorithm           Train acc (%)\n";
  const std::string model = "MLP-" + std::to_string(depth) + "x" + std::to_string(hidden);
  for (const auto& r : rows) {
    std::ostringstream cell;
    if (r.failed == r.runs) cell << "failed";
    else cell << std::fixed << std::setprecision(2) << 100.0 * r.mean << " ± " << 100.0 * r.stddev;
    if (r.failed > 0 && r.failed < r.runs) cell << " (" << r.failed << " failed)";
    out << std::left << std::setw(15) << model << std::setw(20) << to_string(r.algorithm) << cell.str() << "\n";
  }
  return out.str();
}

inline int cmd_compare(const RunConfig& base, std::span<const std::uint64_t> seeds, std::ostream& out) {
  if (seeds.empty()) throw ValidationError("compare needs at least one seed");
  const auto cells = run_comparison(base, seeds);
  const auto rows = summarize(cells);
  std::ostringstream runs, summary;
  runs << "algorithm,seed,status,final_train_acc\n";
  for (const auto& c : cells) {
    runs << to_string(c.algorithm) << ',' << c.seed << ',' << (c.ok ? "ok" : "failed") << ',';
    if (c.ok) runs << format_double(c.train_acc);
    runs << '\n';
  }
  summary << "algorithm,runs,failed,mean_train_acc,std_train_acc\n";
  for (const auto& r : rows) {
    summary << to_string(r.algorithm) << ',' << r.runs << ',' << r.failed << ',' << format_double(r.mean) << ','
            << format_double(r.stddev) << '\n';
  }
  const std::string text = summary_text(rows, base.train.depth, base.train.hidden);
  const std::filesystem::path dir(base.out);
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "summary.txt", text);
  out << text;
  const bool any_failed = std::any_of(cells.begin(), cells.end(), [](const CompareCell& c) { return !c.ok; });
  return any_failed ? kExitPartialFailure : kExitOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app("Residual MLP droppath laboratory", "rdp");
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "write the spiral dataset as CSV");
  std::size_t ds_n = 16384;
  std::uint64_t ds_seed = 0;
  std::string ds_out = "spiral.csv";
  dataset->add_option("--n", ds_n, "sample count (even)");
  dataset->add_option("--seed", ds_seed, "generator seed");
  dataset->add_option("--out", ds_out, "output CSV path");

  auto* train_cmd = app.add_subcommand("train", "train a residual MLP on the spiral");
  detail::RunFlags train_flags;
  train_flags.attach(*train_cmd);

  auto* vis = app.add_subcommand("visualize", "render feature panels or similarity heatmaps");
  VisualizeOptions vis_opts;
  vis->add_option("--checkpoint", vis_opts.checkpoints, "checkpoint file (repeat for snapshots)")->required();
  vis->add_option("--kind", vis_opts.kind, "panel | similarity");
  vis->add_option("--out", vis_opts.out, "output path prefix");
  vis->add_option("--layers", vis_opts.layers, "comma-separated layer indices (0 = pre-block)");
  vis->add_option("--nodes", vis_opts.nodes, "comma-separated node indices");
  vis->add_option("--resolution", vis_opts.resolution, "grid points per axis");
  vis->add_option("--max-sampled", vis_opts.max_sampled, "default layer/node subset size");
  vis->add_option("--scatter-limit", vis_opts.scatter_limit, "training points drawn on the last column");
  vis->add_option("--bounds", vis_opts.bounds, "node | layer color range");
  vis->add_option("--features-csv", vis_opts.features_csv, "also dump sampled features as CSV");

  auto* compare = app.add_subcommand("compare", "train all three algorithms over several seeds");
  detail::RunFlags compare_flags;
  compare_flags.attach(*compare);
  std::string seeds_text = "0,1,2,3,4";
  compare->add_option("--seeds", seeds_text, "comma-separated seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (dataset->parsed()) return cmd_dataset(ds_n, ds_seed, ds_out, out);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out, err);
    if (vis->parsed()) return cmd_visualize(vis_opts, out);
    if (compare->parsed()) {
      std::vector<std::uint64_t> seeds;
      for (const auto& s : detail::split_commas(seeds_text)) seeds.push_back(detail::parse_uint_text(s, "seeds"));
      RunConfig cfg = compare_flags.resolve();
      if (compare_flags.options.at("out")->count() == 0 && compare_flags.config_path.empty()) cfg.out = "compare";
      return cmd_compare(cfg, seeds, out);
    }
  } catch (const FormatError& e) {
    err << "error: corrupt checkpoint, field '" << e.field() << "': " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitValidation;
}

}  // namespace rdp::cli
