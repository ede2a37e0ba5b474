#include "acm/cli/experiment.hpp"

#include "acm/core/error.hpp"
#include "acm/corpus/jsonl.hpp"
#include "acm/corpus/prefix.hpp"

namespace acm::cli {

CorpusSplit load_corpus(const ExperimentConfig& config) {
  CorpusSplit out;
  if (config.corpus_source == "synthetic") {
    core::Rng rng = core::Rng(config.seed).split(kCorpusStream);
    auto generated = corpus::generate_synthetic_corpus(config.synthetic, rng);
    const auto cut = generated.clusters.size() - config.test_clusters;
    out.vocab = std::move(generated.vocab);
    out.train.assign(generated.clusters.begin(), generated.clusters.begin() + cut);
    out.test.assign(generated.clusters.begin() + cut, generated.clusters.end());
    return out;
  }
  if (config.train_path.empty()) throw ConfigError("corpus.train is required for JSONL corpora");
  out.train = corpus::load_jsonl(config.train_path);
  if (!config.test_path.empty()) out.test = corpus::load_jsonl(config.test_path);
  out.vocab = build_vocabulary(out.train, config.min_count);
  return out;
}

corpus::Vocabulary build_vocabulary(std::span<const corpus::RawCluster> clusters,
                                    std::size_t min_count) {
  std::vector<std::string> texts;
  for (const auto& c : clusters) {
    texts.insert(texts.end(), c.documents.begin(), c.documents.end());
    if (c.summary) texts.push_back(*c.summary);
  }
  return corpus::Vocabulary::build(texts, min_count);
}

std::vector<corpus::DocumentCluster> make_clusters(std::span<const corpus::RawCluster> raw,
                                                   const corpus::Vocabulary& vocab) {
  std::vector<corpus::DocumentCluster> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(corpus::make_cluster(r, vocab));
  return out;
}

classifier::TrainedClassifier train_attribute_classifier(
    const ExperimentConfig& config, std::span<const corpus::DocumentCluster> clusters,
    const corpus::Vocabulary& vocab) {
  const auto units = corpus::labeled_units(clusters, vocab);
  if (units.empty()) throw DataError("no training cluster carries paragraph labels");
  auto model_config = config.classifier;
  model_config.vocab_size = vocab.size();
  model_config.classes = config.synthetic.classes;
  core::Rng rng = core::Rng(config.seed).split(kClassifierStream);
  return classifier::train_classifier(corpus::expand_units(units), model_config,
                                      config.classifier_train, rng);
}

summarizer::TrainedSummarizer train_summarizer_variant(
    const ExperimentConfig& config, const summarizer::ConditioningWeights& weights,
    std::span<const corpus::DocumentCluster> clusters,
    const classifier::ClassifierModel* classifier, std::size_t vocab_size) {
  auto model_config = config.model;
  model_config.vocab_size = vocab_size;
  const auto targets = summarizer::cluster_targets(clusters, config.attribute);
  core::Rng rng = core::Rng(config.seed).split(kSummarizerStream);
  return summarizer::train_summarizer(clusters, targets, {}, {}, classifier, weights, model_config,
                                      config.train, rng);
}

std::string VariantSpec::model_name() const {
  if (graph && training) return "full";
  if (graph) return "graph";
  if (training) return "training";
  return "baseline";
}

summarizer::ConditioningWeights VariantSpec::weights(
    const summarizer::ConditioningWeights& full) const {
  return {discriminator ? full.alpha1 : 0.0, graph ? full.alpha2 : 0.0,
          training ? full.alpha3 : 0.0};
}

std::vector<VariantSpec> ablation_variants(const std::vector<std::string>& names) {
  std::vector<VariantSpec> out = {{"baseline", false, false, false}};
  for (const auto& name : names) {
    if (name == "baseline") continue;
    if (name == "graph") {
      out.push_back({name, true, false, false});
    } else if (name == "training") {
      out.push_back({name, false, true, false});
    } else if (name == "discriminator") {
      out.push_back({name, false, false, true});
    } else if (name == "full") {
      out.push_back({name, true, true, true});
    } else {
      throw ConfigError("unknown ablation variant '" + name +
                        "' (graph|training|discriminator|full)");
    }
  }
  return out;
}

std::map<std::string, summarizer::SummarizerModel> train_variant_models(
    const ExperimentConfig& config, std::span<const VariantSpec> variants,
    std::span<const corpus::DocumentCluster> clusters,
    const classifier::ClassifierModel& classifier, std::size_t vocab_size) {
  std::map<std::string, summarizer::SummarizerModel> models;
  for (const auto& v : variants) {
    if (models.contains(v.model_name())) continue;
    auto weights = v.weights(config.weights);
    weights.alpha1 = 0.0;
    models.emplace(v.model_name(),
                   train_summarizer_variant(config, weights, clusters, &classifier, vocab_size)
                       .model);
  }
  return models;
}

std::vector<decoding::AblationRow> run_ablation(
    const ExperimentConfig& config, std::span<const VariantSpec> variants,
    const std::map<std::string, summarizer::SummarizerModel>& models,
    std::span<const corpus::DocumentCluster> test, const classifier::ClassifierModel& classifier) {
  std::vector<decoding::Variant> decode;
  for (const auto& v : variants) {
    const auto it = models.find(v.model_name());
    if (it == models.end()) {
      throw ConfigError("variant '" + v.name + "' needs the missing model '" + v.model_name() +
                        "'");
    }
    decode.push_back({v.name, &it->second, v.weights(config.weights).alpha1});
  }
  const auto targets = summarizer::cluster_targets(test, config.attribute);
  return decoding::ablate(decode, test, targets, classifier, config.beam);
}

nlohmann::json ablation_json(std::span<const decoding::AblationRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    auto row = eval::to_json(r.report);
    row["variant"] = r.name;
    row["alpha1"] = r.alpha1;
    row["alpha2"] = r.alpha2;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace acm::cli
