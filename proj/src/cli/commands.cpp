#include "acm/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acm/cli/config.hpp"
#include "acm/cli/experiment.hpp"
#include "acm/cli/manifest.hpp"
#include "acm/core/error.hpp"
#include "acm/corpus/jsonl.hpp"
#include "acm/eval/report.hpp"

namespace acm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App& cmd, Common& common) {
  cmd.add_option("--config", common.config_path, "Experiment config (INI)");
  cmd.add_option("--set", common.overrides, "Override a config value: section.key=value");
  cmd.add_option("--seed", common.seed, "Experiment seed");
}

ExperimentConfig resolve(const Common& common,
                         const std::function<void(ExperimentConfig&)>& flags = {}) {
  ExperimentConfig config =
      common.config_path.empty() ? default_config() : load_config(common.config_path);
  for (const auto& item : common.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got " + item);
    set_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
  if (common.seed) config.seed = *common.seed;
  if (flags) flags(config);
  validate(config);
  return config;
}

std::vector<fs::path> config_inputs(const Common& common) {
  if (common.config_path.empty()) return {};
  return {common.config_path};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!(out << text)) throw DataError("cannot write " + path.string());
}

fs::path sidecar(const fs::path& path, const std::string& suffix) {
  return fs::path(path.string() + suffix);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

/// Clusters and vocabulary for training commands.
struct TrainingData {
  corpus::Vocabulary vocab;
  std::vector<corpus::DocumentCluster> clusters;
  std::vector<fs::path> inputs;
};

TrainingData training_data(const ExperimentConfig& config, const std::string& corpus_arg,
                           const std::string& vocab_arg,
                           const std::optional<corpus::Vocabulary>& fallback) {
  TrainingData data;
  std::vector<corpus::RawCluster> raw;
  if (corpus_arg == "synthetic") {
    auto synthetic = config;
    synthetic.corpus_source = "synthetic";
    auto split = load_corpus(synthetic);
    raw = std::move(split.train);
    data.vocab = std::move(split.vocab);
  } else {
    raw = corpus::load_jsonl(corpus_arg);
    data.inputs.push_back(corpus_arg);
    data.vocab = build_vocabulary(raw, config.min_count);
  }
  if (!vocab_arg.empty()) {
    data.vocab = corpus::Vocabulary::load(vocab_arg);
    data.inputs.push_back(vocab_arg);
  } else if (fallback) {
    data.vocab = *fallback;
  }
  data.clusters = make_clusters(raw, data.vocab);
  return data;
}

json metrics_json(const classifier::SplitMetrics& m) {
  return {{"sequences", m.sequences},
          {"prefixes", m.prefixes},
          {"sequence_accuracy", m.sequence_accuracy},
          {"prefix_accuracy", m.prefix_accuracy},
          {"first_token_accuracy", m.first_token_accuracy},
          {"loss", m.loss}};
}

std::size_t parse_attribute(long long value) {
  if (value < 0) throw ConfigError("--attribute must be non-negative");
  return static_cast<std::size_t>(value);
}

// ---- gen-data ---------------------------------------------------------------

struct GenData {
  Common common;
  std::string out;
};

void cmd_gen_data(const GenData& args, std::ostream& out) {
  const auto config = resolve(args.common);
  if (config.corpus_source != "synthetic") {
    throw ConfigError("gen-data needs corpus.source = synthetic");
  }
  const fs::path dir = args.out;
  fs::create_directories(dir);
  RunLock lock(dir / ".lock");
  const auto split = load_corpus(config);
  corpus::save_jsonl(split.train, dir / "train.jsonl");
  corpus::save_jsonl(split.test, dir / "test.jsonl");
  split.vocab.save(dir / "vocab.txt");
  const std::string ini = to_ini(config);
  write_text(dir / "config.ini", ini);
  Manifest m{"gen-data", sha256_hex(ini), config.seed, config_inputs(args.common),
             {dir / "train.jsonl", dir / "test.jsonl", dir / "vocab.txt", dir / "config.ini"}};
  m.write(dir / "manifest.json");
  out << "wrote " << split.train.size() << " training and " << split.test.size()
      << " test clusters to " << dir.string() << "\n";
}

// ---- train-classifier ---------------------------------------------------------

struct TrainClassifier {
  Common common;
  std::string corpus = "synthetic";
  std::string vocab;
  std::string out;
};

void cmd_train_classifier(const TrainClassifier& args, std::ostream& out) {
  const auto config = resolve(args.common);
  const fs::path ckpt = args.out;
  ensure_parent(ckpt);
  RunLock lock(sidecar(ckpt, ".lock"));
  const auto data = training_data(config, args.corpus, args.vocab, std::nullopt);
  const auto trained = train_attribute_classifier(config, data.clusters, data.vocab);
  trained.model.save(ckpt);
  data.vocab.save(sidecar(ckpt, ".vocab"));
  const auto& r = trained.report;
  const json report = {{"train", metrics_json(r.train)},
                       {"validation", metrics_json(r.validation)},
                       {"test", metrics_json(r.test)},
                       {"epoch_losses", r.epoch_losses},
                       {"best_epoch", r.best_epoch},
                       {"steps", r.steps}};
  write_text(sidecar(ckpt, ".report.json"), report.dump(2) + "\n");
  auto inputs = config_inputs(args.common);
  inputs.insert(inputs.end(), data.inputs.begin(), data.inputs.end());
  Manifest m{"train-classifier", sha256_hex(to_ini(config)), config.seed, inputs,
             {ckpt, sidecar(ckpt, ".vocab"), sidecar(ckpt, ".report.json")}};
  m.write(sidecar(ckpt, ".manifest.json"));
  out << "classifier test accuracy " << r.test.sequence_accuracy << " (best epoch "
      << r.best_epoch << ")\n";
}

// ---- train-summarizer ---------------------------------------------------------

struct TrainSummarizer {
  Common common;
  std::string corpus = "synthetic";
  std::string vocab;
  std::string classifier;
  std::optional<long long> attribute;
  std::optional<double> alpha1, alpha2, alpha3;
  std::string out;
};

void cmd_train_summarizer(const TrainSummarizer& args, std::ostream& out) {
  const auto config = resolve(args.common, [&](ExperimentConfig& c) {
    if (args.attribute) c.attribute = parse_attribute(*args.attribute);
    if (args.alpha1) c.weights.alpha1 = *args.alpha1;
    if (args.alpha2) c.weights.alpha2 = *args.alpha2;
    if (args.alpha3) c.weights.alpha3 = *args.alpha3;
  });
  const fs::path ckpt = args.out;
  ensure_parent(ckpt);
  RunLock lock(sidecar(ckpt, ".lock"));
  std::optional<classifier::ClassifierModel> cls;
  std::optional<corpus::Vocabulary> cls_vocab;
  std::vector<fs::path> inputs = config_inputs(args.common);
  if (!args.classifier.empty()) {
    cls = classifier::ClassifierModel::load(args.classifier);
    cls_vocab = corpus::Vocabulary::load(sidecar(args.classifier, ".vocab"));
    inputs.push_back(args.classifier);
  }
  const auto data = training_data(config, args.corpus, args.vocab, cls_vocab);
  inputs.insert(inputs.end(), data.inputs.begin(), data.inputs.end());
  if (cls && cls->config().vocab_size != data.vocab.size()) {
    throw ConfigError("classifier vocabulary does not match the corpus vocabulary");
  }
  const auto trained = train_summarizer_variant(config, config.weights, data.clusters,
                                                cls ? &*cls : nullptr, data.vocab.size());
  trained.model.save(ckpt);
  data.vocab.save(sidecar(ckpt, ".vocab"));
  const auto& r = trained.report;
  const json report = {{"epoch_losses", r.epoch_losses},
                       {"selection_losses", r.validation_losses},
                       {"best_epoch", r.best_epoch},
                       {"train_loss", r.train.loss},
                       {"train_accuracy", r.train.accuracy},
                       {"alpha2", config.weights.alpha2},
                       {"alpha3", config.weights.alpha3}};
  write_text(sidecar(ckpt, ".report.json"), report.dump(2) + "\n");
  Manifest m{"train-summarizer", sha256_hex(to_ini(config)), config.seed, inputs,
             {ckpt, sidecar(ckpt, ".vocab"), sidecar(ckpt, ".report.json")}};
  m.write(sidecar(ckpt, ".manifest.json"));
  out << "summarizer teacher-forced accuracy " << r.train.accuracy << " (best epoch "
      << r.best_epoch << ")\n";
}

// ---- summarize ----------------------------------------------------------------

struct Summarize {
  Common common;
  std::string model, classifier, input, out;
  std::optional<long long> attribute;
  std::optional<std::size_t> beam, shortlist, max_steps;
  std::optional<double> alpha1, length_penalty;
};

void cmd_summarize(const Summarize& args, std::ostream& out) {
  const auto model = summarizer::SummarizerModel::load(args.model);
  const auto vocab = corpus::Vocabulary::load(sidecar(args.model, ".vocab"));
  const auto config = resolve(args.common, [&](ExperimentConfig& c) {
    if (args.attribute) c.attribute = parse_attribute(*args.attribute);
    if (args.beam) c.beam.beam_width = *args.beam;
    if (args.shortlist) c.beam.shortlist_k = *args.shortlist;
    if (args.alpha1) c.beam.alpha1 = *args.alpha1;
    if (args.length_penalty) c.beam.length_penalty = *args.length_penalty;
    if (args.max_steps) c.beam.max_steps = *args.max_steps;
    c.beam.max_steps = std::min(c.beam.max_steps, model.config().max_summary_tokens - 1);
    c.model.max_summary_tokens = model.config().max_summary_tokens;
  });
  std::vector<fs::path> inputs = config_inputs(args.common);
  inputs.push_back(args.model);
  inputs.push_back(args.input);
  std::optional<classifier::ClassifierModel> cls;
  if (!args.classifier.empty()) {
    cls = classifier::ClassifierModel::load(args.classifier);
    inputs.push_back(args.classifier);
    if (cls->config().vocab_size != vocab.size()) {
      throw ConfigError("classifier vocabulary does not match the summarizer vocabulary");
    }
  }
  const bool needs_class = config.beam.alpha1 != 0.0 || model.config().encoder.alpha2 != 0.0;
  if (needs_class && !cls) {
    throw ConfigError("--classifier is required when alpha1 or the model's alpha2 is non-zero");
  }
  const auto clusters = corpus::load_jsonl(args.input, vocab);
  const auto targets = needs_class ? summarizer::cluster_targets(clusters, config.attribute)
                                   : std::vector<std::size_t>(clusters.size(), 0);

  const fs::path path = args.out;
  ensure_parent(path);
  RunLock lock(sidecar(path, ".lock"));
  std::string lines;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto beam = decoding::summarize_cluster(model, cls ? &*cls : nullptr, clusters[i],
                                                  targets[i], config.beam);
    const nlohmann::ordered_json line = {
        {"summary", corpus::detokenize(decoding::strip_eos(beam.tokens), vocab)},
        {"base_lp", beam.base_lp},
        {"attr_lp", beam.attr_lp}};
    lines += line.dump() + "\n";
  }
  write_text(path, lines);
  Manifest m{"summarize", sha256_hex(to_ini(config)), config.seed, inputs, {path}};
  m.write(sidecar(path, ".manifest.json"));
  out << "wrote " << clusters.size() << " summaries to " << path.string() << "\n";
}

// ---- evaluate -----------------------------------------------------------------

struct Evaluate {
  Common common;
  std::string candidates, references, classifier, out;
  std::optional<long long> attribute;
};

std::vector<std::string> read_summaries(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = json::parse(line);
      out.push_back(doc.at("summary").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void cmd_evaluate(const Evaluate& args, std::ostream& out) {
  const auto config = resolve(args.common, [&](ExperimentConfig& c) {
    if (args.attribute) c.attribute = parse_attribute(*args.attribute);
  });
  const auto candidates = read_summaries(args.candidates);
  const auto refs_raw = corpus::load_jsonl(args.references);
  std::vector<std::string> references;
  for (std::size_t i = 0; i < refs_raw.size(); ++i) {
    if (!refs_raw[i].summary) {
      throw DataError("reference " + std::to_string(i + 1) + " has no summary");
    }
    references.push_back(*refs_raw[i].summary);
  }
  corpus::Vocabulary words;
  auto to_ids = [&](const std::vector<std::string>& texts) {
    std::vector<corpus::TokenSeq> out;
    for (const auto& t : texts) {
      corpus::TokenSeq ids;
      for (const auto& w : corpus::split_words(t)) ids.push_back(words.add(w));
      out.push_back(std::move(ids));
    }
    return out;
  };
  const auto cand_ids = to_ids(candidates);
  const auto ref_ids = to_ids(references);
  eval::CorpusReport report = eval::corpus_report(cand_ids, ref_ids);
  std::vector<fs::path> inputs = config_inputs(args.common);
  inputs.push_back(args.candidates);
  inputs.push_back(args.references);
  if (!args.classifier.empty()) {
    const auto cls = classifier::ClassifierModel::load(args.classifier);
    const auto vocab = corpus::Vocabulary::load(sidecar(args.classifier, ".vocab"));
    inputs.push_back(args.classifier);
    std::vector<corpus::DocumentCluster> clusters;
    for (const auto& raw : refs_raw) clusters.push_back(corpus::make_cluster(raw, vocab));
    const auto targets = summarizer::cluster_targets(clusters, config.attribute);
    std::vector<corpus::TokenSeq> summaries;
    for (const auto& c : candidates) summaries.push_back(corpus::tokenize(c, vocab));
    report.consistency = eval::consistency_stats(summaries, cls, targets);
  }
  const fs::path path = args.out;
  ensure_parent(path);
  write_text(path, eval::to_json(report).dump(2) + "\n");
  Manifest m{"evaluate", sha256_hex(to_ini(config)), config.seed, inputs, {path}};
  m.write(sidecar(path, ".manifest.json"));
  const eval::ReportRow rows[] = {{fs::path(args.candidates).stem().string(), report}};
  out << eval::format_table(rows);
}

// ---- ablate -------------------------------------------------------------------

struct Ablate {
  Common common;
  std::string out;
  bool train = false;
  std::vector<std::string> variants = {"graph", "training", "discriminator", "full"};
};

void cmd_ablate(const Ablate& args, std::ostream& out) {
  const auto config = resolve(args.common);
  const fs::path dir = args.out.empty() ? fs::path(config.output_dir) : fs::path(args.out);
  fs::create_directories(dir);
  RunLock lock(dir / ".lock");
  const auto variants = ablation_variants(args.variants);
  const auto split = load_corpus(config);
  const auto train = make_clusters(split.train, split.vocab);
  const auto test = make_clusters(split.test, split.vocab);
  if (test.empty()) throw DataError("the ablation needs a test split");

  std::vector<fs::path> inputs = config_inputs(args.common);
  if (config.corpus_source == "jsonl") {
    inputs.push_back(config.train_path);
    inputs.push_back(config.test_path);
  }
  std::vector<fs::path> outputs;
  const fs::path cls_path = dir / "classifier.ckpt";
  std::optional<classifier::ClassifierModel> cls;
  std::map<std::string, summarizer::SummarizerModel> models;
  if (args.train) {
    cls = train_attribute_classifier(config, train, split.vocab).model;
    cls->save(cls_path);
    models = train_variant_models(config, variants, train, *cls, split.vocab.size());
    for (const auto& [name, model] : models) {
      model.save(dir / (name + ".ckpt"));
      outputs.push_back(dir / (name + ".ckpt"));
    }
    outputs.insert(outputs.begin(), cls_path);
  } else {
    if (!fs::exists(cls_path)) throw DataError("missing checkpoint " + cls_path.string());
    cls = classifier::ClassifierModel::load(cls_path);
    inputs.push_back(cls_path);
    for (const auto& v : variants) {
      const fs::path p = dir / (v.model_name() + ".ckpt");
      if (models.contains(v.model_name())) continue;
      if (!fs::exists(p)) {
        throw DataError("missing checkpoint " + p.string() + " for variant '" + v.name + "'");
      }
      models.emplace(v.model_name(), summarizer::SummarizerModel::load(p));
      inputs.push_back(p);
    }
  }
  if (cls->config().vocab_size != split.vocab.size()) {
    throw ConfigError("classifier checkpoint does not match the corpus vocabulary");
  }
  for (const auto& [name, model] : models) {
    if (model.config().vocab_size != split.vocab.size()) {
      throw ConfigError("checkpoint '" + name + "' does not match the corpus vocabulary");
    }
  }

  const auto rows = run_ablation(config, variants, models, test, *cls);
  for (const auto& row : rows) {
    std::string lines;
    for (const auto& beam : row.decodes) {
      const nlohmann::ordered_json line = {
          {"summary", corpus::detokenize(decoding::strip_eos(beam.tokens), split.vocab)},
          {"base_lp", beam.base_lp},
          {"attr_lp", beam.attr_lp}};
      lines += line.dump() + "\n";
    }
    const fs::path p = dir / (row.name + ".summaries.jsonl");
    write_text(p, lines);
    outputs.push_back(p);
  }
  const std::string ini = to_ini(config);
  const json report = {{"config_hash", sha256_hex(ini)}, {"rows", ablation_json(rows)}};
  write_text(dir / "ablation.json", report.dump(2) + "\n");
  std::vector<eval::ReportRow> table;
  for (const auto& row : rows) table.push_back({row.name, row.report});
  const std::string text = eval::format_table(table);
  write_text(dir / "ablation.txt", text);
  write_text(dir / "config.ini", ini);
  outputs.push_back(dir / "ablation.json");
  outputs.push_back(dir / "ablation.txt");
  outputs.push_back(dir / "config.ini");
  Manifest m{"ablate", sha256_hex(ini), config.seed, inputs, outputs};
  m.write(dir / "manifest.json");
  out << text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attribute-conditioned multi-document summarization"};
  app.require_subcommand(1);

  GenData gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  add_common(*gen_cmd, gen.common);
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainClassifier tc;
  auto* tc_cmd = app.add_subcommand("train-classifier", "Train the prefix attribute classifier");
  add_common(*tc_cmd, tc.common);
  tc_cmd->add_option("--corpus", tc.corpus, "Training JSONL or 'synthetic'");
  tc_cmd->add_option("--vocab", tc.vocab, "Vocabulary file");
  tc_cmd->add_option("--out", tc.out, "Checkpoint path")->required();

  TrainSummarizer ts;
  auto* ts_cmd = app.add_subcommand("train-summarizer", "Train a conditioned summarizer");
  add_common(*ts_cmd, ts.common);
  ts_cmd->add_option("--corpus", ts.corpus, "Training JSONL or 'synthetic'");
  ts_cmd->add_option("--vocab", ts.vocab, "Vocabulary file");
  ts_cmd->add_option("--classifier", ts.classifier, "Classifier checkpoint");
  ts_cmd->add_option("--attribute", ts.attribute, "Conditioning class for every cluster");
  ts_cmd->add_option("--alpha1", ts.alpha1, "Discriminator weight (recorded only)");
  ts_cmd->add_option("--alpha2", ts.alpha2, "Graph conditioning weight");
  ts_cmd->add_option("--alpha3", ts.alpha3, "Conditional training weight");
  ts_cmd->add_option("--out", ts.out, "Checkpoint path")->required();

  Summarize sm;
  auto* sm_cmd = app.add_subcommand("summarize", "Decode summaries for a JSONL corpus");
  add_common(*sm_cmd, sm.common);
  sm_cmd->add_option("--model", sm.model, "Summarizer checkpoint")->required();
  sm_cmd->add_option("--classifier", sm.classifier, "Classifier checkpoint");
  sm_cmd->add_option("--attribute", sm.attribute, "Conditioning class for every cluster");
  sm_cmd->add_option("--input", sm.input, "Cluster JSONL")->required();
  sm_cmd->add_option("--beam", sm.beam, "Beam width");
  sm_cmd->add_option("--shortlist", sm.shortlist, "Next-token shortlist per beam");
  sm_cmd->add_option("--alpha1", sm.alpha1, "Discriminator weight");
  sm_cmd->add_option("--length-penalty", sm.length_penalty, "Length penalty exponent");
  sm_cmd->add_option("--max-steps", sm.max_steps, "Longest summary in tokens");
  sm_cmd->add_option("--out", sm.out, "Output JSONL")->required();

  Evaluate ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score summaries with ROUGE and the classifier");
  add_common(*ev_cmd, ev.common);
  ev_cmd->add_option("--candidates", ev.candidates, "Summaries JSONL")->required();
  ev_cmd->add_option("--references", ev.references, "Cluster JSONL with references")->required();
  ev_cmd->add_option("--classifier", ev.classifier, "Classifier checkpoint");
  ev_cmd->add_option("--attribute", ev.attribute, "Target class for every summary");
  ev_cmd->add_option("--out", ev.out, "Report JSON")->required();

  Ablate ab;
  auto* ab_cmd = app.add_subcommand("ablate", "Compare conditioning variants on the test split");
  add_common(*ab_cmd, ab.common);
  ab_cmd->add_option("--out", ab.out, "Run directory (default experiment.output_dir)");
  ab_cmd->add_flag("--train", ab.train, "Train the classifier and variant models first");
  ab_cmd->add_option("--variants", ab.variants, "graph, training, discriminator, full")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen_cmd) cmd_gen_data(gen, out);
    if (*tc_cmd) cmd_train_classifier(tc, out);
    if (*ts_cmd) cmd_train_summarizer(ts, out);
    if (*sm_cmd) cmd_summarize(sm, out);
    if (*ev_cmd) cmd_evaluate(ev, out);
    if (*ab_cmd) cmd_ablate(ab, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace acm::cli
