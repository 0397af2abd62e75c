#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ugrec/evaluation.hpp"
#include "ugrec/graph.hpp"
#include "ugrec/model.hpp"
#include "ugrec/synth.hpp"
#include "ugrec/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ugrec;

namespace {

void write_text(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

const char* scorer_name(UndirectedScorer s) {
  switch (s) {
    case UndirectedScorer::Hyperplane: return "hyperplane";
    case UndirectedScorer::DistMult: return "distmult";
    case UndirectedScorer::DirectedPair: return "directed-pair";
  }
  return "?";
}

UndirectedScorer parse_scorer(const std::string& name) {
  if (name == "hyperplane") return UndirectedScorer::Hyperplane;
  if (name == "distmult") return UndirectedScorer::DistMult;
  if (name == "directed-pair") return UndirectedScorer::DirectedPair;
  throw ConfigError("unknown undirected scorer '" + name + "'");
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["k"] = c.model.k;
  j["use_attention"] = c.model.use_attention;
  j["undirected_scorer"] = scorer_name(c.model.undirected_scorer);
  j["rescale_attention"] = c.model.rescale_attention;
  j["shared_attention"] = c.model.shared_attention;
  j["learning_rate"] = c.learning_rate;
  j["margin_interaction"] = c.margin_interaction;
  j["margin_other"] = c.margin_other;
  j["neg_pool"] = c.neg_pool;
  j["lambda_d"] = c.lambda_d;
  j["lambda_c"] = c.lambda_c;
  j["epochs"] = c.epochs;
  j["eval_every"] = c.eval_every;
  j["eval_k"] = c.eval_k;
  j["seed"] = c.seed;
  j["ablation"] = to_string(c.ablation);
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["hardest_by_largest_distance"] = c.hardest_by_largest_distance;
  j["threads"] = c.threads;
  j["deterministic"] = c.deterministic;
  return j;
}

void apply_json(TrainConfig& c, const json& j) {
  if (j.contains("k")) c.model.k = j["k"].get<int>();
  if (j.contains("use_attention")) c.model.use_attention = j["use_attention"].get<bool>();
  if (j.contains("undirected_scorer"))
    c.model.undirected_scorer = parse_scorer(j["undirected_scorer"].get<std::string>());
  if (j.contains("rescale_attention"))
    c.model.rescale_attention = j["rescale_attention"].get<bool>();
  if (j.contains("shared_attention")) c.model.shared_attention = j["shared_attention"].get<bool>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("margin_interaction"))
    c.margin_interaction = j["margin_interaction"].get<double>();
  if (j.contains("margin_other")) c.margin_other = j["margin_other"].get<double>();
  if (j.contains("neg_pool")) c.neg_pool = j["neg_pool"].get<int>();
  if (j.contains("lambda_d")) c.lambda_d = j["lambda_d"].get<double>();
  if (j.contains("lambda_c")) c.lambda_c = j["lambda_c"].get<double>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<int>();
  if (j.contains("eval_k")) c.eval_k = j["eval_k"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("ablation")) {
    auto a = parse_ablation(j["ablation"].get<std::string>());
    if (!a) throw ConfigError("unknown ablation '" + j["ablation"].get<std::string>() + "'");
    c.ablation = *a;
  }
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("patience")) c.patience = j["patience"].get<int>();
  if (j.contains("hardest_by_largest_distance"))
    c.hardest_by_largest_distance = j["hardest_by_largest_distance"].get<bool>();
  if (j.contains("threads")) c.threads = j["threads"].get<int>();
  if (j.contains("deterministic")) c.deterministic = j["deterministic"].get<bool>();
}

/// Train-config options shared by `train` and `experiment`. Resolution order:
/// built-in defaults, then --config JSON, then explicit flags.
struct TrainCli {
  std::string config_path;
  TrainConfig values;
  std::string ablation = "full";
  std::string scorer = "hyperplane";
  CLI::Option* opt_ablation = nullptr;
  CLI::Option* opt_scorer = nullptr;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> overrides;

  void add_options(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file; flags override its fields");
    auto bind = [&](CLI::Option* opt, std::function<void(TrainConfig&)> apply) {
      overrides.emplace_back(opt, std::move(apply));
    };
    bind(app->add_option("--k", values.model.k, "embedding dimension"),
         [this](TrainConfig& c) { c.model.k = values.model.k; });
    bind(app->add_flag("--attention,!--no-attention", values.model.use_attention,
                       "toggle the head-tail attention gate"),
         [this](TrainConfig& c) { c.model.use_attention = values.model.use_attention; });
    bind(app->add_flag("--rescale-attention", values.model.rescale_attention,
                       "multiply the attended translation by k"),
         [this](TrainConfig& c) { c.model.rescale_attention = values.model.rescale_attention; });
    bind(app->add_flag("--shared-attention", values.model.shared_attention,
                       "one attention network shared by all relations"),
         [this](TrainConfig& c) { c.model.shared_attention = values.model.shared_attention; });
    opt_scorer =
        app->add_option("--undirected-scorer", scorer, "hyperplane | distmult | directed-pair");
    bind(app->add_option("--lr", values.learning_rate, "AdaGrad learning rate"),
         [this](TrainConfig& c) { c.learning_rate = values.learning_rate; });
    bind(app->add_option("--margin", values.margin_interaction, "interaction-relation margin"),
         [this](TrainConfig& c) { c.margin_interaction = values.margin_interaction; });
    bind(app->add_option("--margin-other", values.margin_other, "margin for other relations"),
         [this](TrainConfig& c) { c.margin_other = values.margin_other; });
    bind(app->add_option("--neg-pool", values.neg_pool, "hard-negative pool size N"),
         [this](TrainConfig& c) { c.neg_pool = values.neg_pool; });
    bind(app->add_option("--lambda-d", values.lambda_d, "directed-loss weight"),
         [this](TrainConfig& c) { c.lambda_d = values.lambda_d; });
    bind(app->add_option("--lambda-c", values.lambda_c, "undirected-loss weight"),
         [this](TrainConfig& c) { c.lambda_c = values.lambda_c; });
    bind(app->add_option("--epochs", values.epochs, "training epochs"),
         [this](TrainConfig& c) { c.epochs = values.epochs; });
    bind(app->add_option("--eval-every", values.eval_every, "validation cadence in epochs"),
         [this](TrainConfig& c) { c.eval_every = values.eval_every; });
    bind(app->add_option("--eval-k", values.eval_k, "K for validation/experiment metrics"),
         [this](TrainConfig& c) { c.eval_k = values.eval_k; });
    bind(app->add_option("--seed", values.seed, "RNG seed"),
         [this](TrainConfig& c) { c.seed = values.seed; });
    opt_ablation = app->add_option("--ablation", ablation, "full | o-dc | o-c | o-d | o-att");
    bind(app->add_option("--batch-size", values.batch_size, "pairs per update"),
         [this](TrainConfig& c) { c.batch_size = values.batch_size; });
    bind(app->add_option("--patience", values.patience,
                         "evaluations without improvement before early stop; 0 disables"),
         [this](TrainConfig& c) { c.patience = values.patience; });
    bind(app->add_flag("--hardest-largest", values.hardest_by_largest_distance,
                       "pick the largest-distance candidate as hardest (literal reading)"),
         [this](TrainConfig& c) {
           c.hardest_by_largest_distance = values.hardest_by_largest_distance;
         });
    bind(app->add_option("--threads", values.threads, "gradient worker threads"),
         [this](TrainConfig& c) { c.threads = values.threads; });
    bind(app->add_flag("--deterministic,!--no-deterministic", values.deterministic,
                       "force single-threaded bit-reproducible execution"),
         [this](TrainConfig& c) { c.deterministic = values.deterministic; });
  }

  TrainConfig resolve() const {
    TrainConfig config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + config_path + ": " + e.what());
      }
      apply_json(config, j);
    }
    for (const auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(config);
    if (opt_scorer->count() > 0) config.model.undirected_scorer = parse_scorer(scorer);
    if (opt_ablation->count() > 0) {
      auto a = parse_ablation(ablation);
      if (!a) throw ConfigError("unknown ablation '" + ablation + "'");
      config.ablation = *a;
    }
    if (config.model.k < 1) throw ConfigError("k must be >= 1");
    if (config.learning_rate <= 0) throw ConfigError("learning rate must be positive");
    if (config.margin_interaction <= 0 || config.margin_other <= 0)
      throw ConfigError("margins must be positive");
    if (config.neg_pool < 1) throw ConfigError("neg_pool must be >= 1");
    return config;
  }
};

void echo_config(const TrainConfig& config, const fs::path& out_dir) {
  write_text(out_dir / "config.json", config_to_json(config).dump(2) + "\n");
}

json eval_record_json(const EvalRecord& record, const RelationCatalog& catalog,
                      const std::string& variant) {
  json j;
  j["epoch"] = record.epoch;
  j["val_hr"] = record.val_hr;
  j["val_ndcg"] = record.val_ndcg;
  j["active_fraction"] = record.active_fraction;
  j["variant"] = variant;
  json losses = json::object();
  for (const auto& [rel, loss] : record.mean_loss) losses[catalog.at(rel).name] = loss;
  j["loss"] = losses;
  return j;
}

std::string fixed6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(const SynthConfig& config, const fs::path& out_dir) {
  SyntheticGraph synth = generate_synthetic_graph(config);
  fs::create_directories(out_dir);
  write_text(out_dir / "triplets.tsv", synth.graph.serialize_triplets());
  write_text(out_dir / "catalog.tsv", synth.graph.catalog().serialize());
  std::ostringstream truth;
  for (std::size_t i = 0; i < synth.truth.item_cluster.size(); ++i)
    truth << "item\ti" << i << '\t' << synth.truth.item_cluster[i] << '\n';
  for (std::size_t u = 0; u < synth.truth.user_cluster.size(); ++u)
    truth << "user\tu" << u << '\t' << synth.truth.user_cluster[u] << '\n';
  write_text(out_dir / "clusters.tsv", truth.str());
  std::cout << dataset_statistics(synth.graph);
  return 0;
}

int cmd_prepare(const std::string& triplet_path, const std::string& catalog_path, int threshold,
                const fs::path& out_dir) {
  std::ifstream catalog_in(catalog_path);
  if (!catalog_in) throw DataError("cannot open catalog " + catalog_path);
  RelationCatalog catalog = RelationCatalog::parse(catalog_in);

  std::ifstream triplet_in(triplet_path);
  if (!triplet_in) throw DataError("cannot open triplet file " + triplet_path);
  EntityVocab vocab;
  auto triplets = parse_triplet_file(triplet_in, catalog, vocab);
  UnifiedGraph graph(catalog, vocab, triplets);

  UnifiedGraph filtered = filter_min_interactions(graph, threshold);
  DataSplit split = leave_one_out_split(filtered);
  save_prepared(split, out_dir);
  std::cout << dataset_statistics(filtered);
  std::cout << "train_interactions\t" << split.train.interaction_count() << '\n';
  std::cout << "held_out_users\t" << split.test.size() << '\n';
  return 0;
}

int cmd_train(const fs::path& data_dir, const TrainConfig& config, const fs::path& out_dir) {
  DataSplit split = load_prepared(data_dir);
  fs::create_directories(out_dir);
  echo_config(config, out_dir);

  std::ofstream log(out_dir / "train_log.jsonl", std::ios::binary);
  if (!log) throw DataError("cannot write training log in " + out_dir.string());
  const std::string variant = to_string(config.ablation);

  FitResult result = fit(split, config, [&](const EvalRecord& record) {
    const json j = eval_record_json(record, split.train.catalog(), variant);
    log << j.dump() << '\n';
    log.flush();
    std::cout << "epoch " << record.epoch << "  val_hr@" << config.eval_k << " "
              << fixed6(record.val_hr) << "  val_ndcg " << fixed6(record.val_ndcg) << '\n';
  });

  ModelConfig stored = config.model;
  stored.use_attention = config.attention_enabled();
  save_checkpoint(Checkpoint{result.best_params, stored}, out_dir / "best.ckpt");
  save_checkpoint(Checkpoint{result.final_params, stored}, out_dir / "final.ckpt");
  std::cout << "best_epoch\t" << result.best_epoch << '\n';
  std::cout << "best_val_hr\t" << fixed6(std::max(0.0, result.best_hr)) << '\n';
  return 0;
}

void check_binding(const Checkpoint& ckpt, const UnifiedGraph& train) {
  if (ckpt.params.catalog_hash != train.signature()) {
    std::ostringstream msg;
    msg << "checkpoint/dataset mismatch: checkpoint hash " << std::hex << ckpt.params.catalog_hash
        << ", dataset hash " << train.signature();
    throw DataError(msg.str());
  }
}

int cmd_evaluate(const fs::path& data_dir, const std::string& ckpt_path, int k,
                 std::vector<int> groups, bool keep_ranks, const fs::path& out_dir) {
  DataSplit split = load_prepared(data_dir);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  check_binding(ckpt, split.train);

  EvalReport report = evaluate(split, ckpt.params, ckpt.config, k, groups, keep_ranks);
  fs::create_directories(out_dir);
  write_text(out_dir / "report.txt", report_to_text(report));
  write_text(out_dir / "report.csv", report_to_csv(report));
  if (keep_ranks) write_text(out_dir / "ranks.csv", ranks_to_csv(report, split.train.vocab()));
  std::cout << report_to_text(report);
  return 0;
}

int cmd_recommend(const fs::path& data_dir, const std::string& ckpt_path,
                  const std::string& user_name, int n) {
  DataSplit split = load_prepared(data_dir);
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  check_binding(ckpt, split.train);

  const EntityVocab& vocab = split.train.vocab();
  auto user = vocab.find(EntityKind::User, user_name);
  if (!user) {
    std::vector<std::string> names;
    for (std::int32_t u : vocab.of_kind(EntityKind::User)) names.push_back(vocab.name(u));
    std::sort(names.begin(), names.end());
    auto it = std::lower_bound(names.begin(), names.end(), user_name);
    std::ostringstream msg;
    msg << "unknown user '" << user_name << "'; nearest valid ids:";
    const std::ptrdiff_t first = it - names.begin();
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, first - 2);
         i < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(names.size()), first + 3); ++i)
      msg << ' ' << names[static_cast<std::size_t>(i)];
    throw DataError(msg.str());
  }

  std::unordered_set<std::int32_t> exclude;
  for (const Interaction& i : split.train.interactions_of(*user)) exclude.insert(i.item);
  auto ranked = rank_items(ckpt.params, split.train, vocab.id(*user), exclude,
                           ckpt.config.use_attention, ckpt.config.rescale_attention);
  const int count = std::min<int>(n, static_cast<int>(ranked.size()));
  for (int i = 0; i < count; ++i)
    std::cout << vocab.name(ranked[i].item.index) << '\t' << fixed6(ranked[i].distance) << '\n';
  return 0;
}

int cmd_experiment(const std::string& kind, const fs::path& data_dir, const TrainConfig& config,
                   std::vector<double> ratios, const fs::path& out_dir) {
  DataSplit split = load_prepared(data_dir);
  fs::create_directories(out_dir);
  echo_config(config, out_dir);

  ModelConfig eval_config = config.model;
  eval_config.use_attention = config.attention_enabled();
  std::ostringstream csv;

  if (kind == "ablation") {
    csv << "variant,hr@" << config.eval_k << ",ndcg@" << config.eval_k << ",best_epoch\n";
    for (Ablation variant : {Ablation::NoDirectedNoCo, Ablation::NoCo, Ablation::NoDirected,
                             Ablation::NoAttention, Ablation::Full}) {
      TrainConfig run = config;
      run.ablation = variant;
      ModelConfig run_eval = eval_config;
      run_eval.use_attention = run.attention_enabled();
      FitResult result = fit(split, run);
      EvalReport report = evaluate(split, result.best_params, run_eval, config.eval_k);
      csv << to_string(variant) << ',' << fixed6(report.hr) << ',' << fixed6(report.ndcg) << ','
          << result.best_epoch << '\n';
    }
    write_text(out_dir / "ablation.csv", csv.str());
  } else if (kind == "co-ratio-sweep") {
    if (ratios.empty()) ratios = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    csv << "ratio,hr@" << config.eval_k << ",ndcg@" << config.eval_k << '\n';
    for (const SweepRow& row : cooccurrence_sweep(split, ratios, config))
      csv << row.ratio << ',' << fixed6(row.report.hr) << ',' << fixed6(row.report.ndcg) << '\n';
    write_text(out_dir / "co_ratio_sweep.csv", csv.str());
  } else if (kind == "sparsity-report") {
    FitResult result = fit(split, config);
    EvalReport report = evaluate(split, result.best_params, eval_config, config.eval_k);
    csv << report_to_csv(report);
    write_text(out_dir / "sparsity_report.csv", csv.str());
  } else if (kind == "trivial-probe") {
    const ProbeReport report = trivial_solution_probe(split.train, config);
    csv << "mode";
    for (const auto& [name, norm] : report.hyperplane.relation_norm) csv << ",norm_" << name;
    csv << ",mean_cooccur_embedding_distance\n";
    auto row = [&](const char* mode, const ProbeModeStats& stats) {
      csv << mode;
      for (const auto& [name, norm] : stats.relation_norm) csv << ',' << fixed6(norm);
      csv << ',' << fixed6(stats.mean_cooccur_embedding_distance) << '\n';
    };
    row("transe-pair", report.transe_pair);
    row("hyperplane", report.hyperplane);
    write_text(out_dir / "trivial_probe.csv", csv.str());
  } else if (kind == "lr-search") {
    const std::vector<double> grid = {0.001, 0.005, 0.01, 0.05, 0.1};
    csv << "learning_rate,val_hr@" << config.eval_k << ",selected\n";
    double best_hr = -1.0;
    double best_lr = grid.front();
    std::vector<std::pair<double, double>> rows;
    for (double lr : grid) {
      TrainConfig run = config;
      run.learning_rate = lr;
      FitResult result = fit(split, run);
      rows.emplace_back(lr, std::max(0.0, result.best_hr));
      if (result.best_hr > best_hr) {
        best_hr = result.best_hr;
        best_lr = lr;
      }
    }
    for (const auto& [lr, hr] : rows)
      csv << lr << ',' << fixed6(hr) << ',' << (lr == best_lr ? 1 : 0) << '\n';
    write_text(out_dir / "lr_search.csv", csv.str());
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UGRec: unified-graph recommendation over directed and undirected relations"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a planted-cluster synthetic dataset");
  SynthConfig synth_config;
  std::string synth_out = "synth-data";
  synth->add_option("--users", synth_config.n_users);
  synth->add_option("--items", synth_config.n_items);
  synth->add_option("--clusters", synth_config.n_clusters);
  synth->add_option("--interactions", synth_config.interactions_per_user);
  synth->add_option("--co-intra", synth_config.co_edge_prob_intra);
  synth->add_option("--co-inter", synth_config.co_edge_prob_inter);
  synth->add_option("--categories", synth_config.n_categories);
  synth->add_option("--makers", synth_config.n_makers);
  synth->add_option("--dropout", synth_config.attribute_dropout);
  synth->add_option("--seed", synth_config.seed);
  synth->add_option("--output-dir", synth_out);

  auto* prepare = app.add_subcommand("prepare", "filter, split and index a triplet corpus");
  std::string prep_triplets, prep_catalog, prep_out = "prepared";
  int prep_threshold = 4;
  prepare->add_option("--triplets", prep_triplets, "raw triplet file")->required();
  prepare->add_option("--catalog", prep_catalog, "relation catalog file")->required();
  prepare->add_option("--threshold", prep_threshold, "minimum interactions per user/item");
  prepare->add_option("--output-dir", prep_out);

  auto* train = app.add_subcommand("train", "fit embeddings on a prepared dataset");
  std::string train_data, train_out = "run";
  TrainCli train_cli;
  train->add_option("--data", train_data, "prepared dataset directory")->required();
  train->add_option("--output-dir", train_out);
  train_cli.add_options(train);

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
  std::string eval_data, eval_ckpt, eval_out = "eval";
  int eval_k = 20;
  std::vector<int> eval_groups = {5, 10, 15};
  bool eval_ranks = false;
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--checkpoint", eval_ckpt)->required();
  evaluate->add_option("--k", eval_k, "cutoff K for HR/NDCG");
  evaluate->add_option("--groups", eval_groups, "sparsity bucket thresholds")->expected(-1);
  evaluate->add_flag("--ranks", eval_ranks, "export per-user ranks");
  evaluate->add_option("--output-dir", eval_out);

  auto* recommend = app.add_subcommand("recommend", "top-n items for one user");
  std::string rec_data, rec_ckpt, rec_user;
  int rec_n = 10;
  recommend->add_option("--data", rec_data)->required();
  recommend->add_option("--checkpoint", rec_ckpt)->required();
  recommend->add_option("--user", rec_user)->required();
  recommend->add_option("--n", rec_n);

  auto* experiment = app.add_subcommand("experiment", "paper-style experiment tables");
  std::string exp_kind, exp_data, exp_out = "experiment";
  std::vector<double> exp_ratios;
  experiment
      ->add_option("--kind", exp_kind,
                   "ablation | co-ratio-sweep | sparsity-report | trivial-probe | lr-search")
      ->required();
  experiment->add_option("--data", exp_data)->required();
  experiment->add_option("--ratios", exp_ratios, "co-occurrence ratios for the sweep")
      ->expected(-1);
  experiment->add_option("--output-dir", exp_out);
  TrainCli exp_cli;
  exp_cli.add_options(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // usage errors exit 1, --help exits 0
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_config, synth_out);
    if (prepare->parsed())
      return cmd_prepare(prep_triplets, prep_catalog, prep_threshold, prep_out);
    if (train->parsed()) return cmd_train(train_data, train_cli.resolve(), train_out);
    if (evaluate->parsed())
      return cmd_evaluate(eval_data, eval_ckpt, eval_k, eval_groups, eval_ranks, eval_out);
    if (recommend->parsed()) return cmd_recommend(rec_data, rec_ckpt, rec_user, rec_n);
    if (experiment->parsed())
      return cmd_experiment(exp_kind, exp_data, exp_cli.resolve(), exp_ratios, exp_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
