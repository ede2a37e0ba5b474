#include "acm/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "acm/core/error.hpp"

namespace acm::cli {

namespace {

struct Key {
  std::string section;
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;

  std::string dotted() const { return section + "." + name; }
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("invalid value '{}' for config key '{}'", text, key));
  }
  return value;
}

template <typename T, typename Field>
Key number(std::string section, std::string name, Field field) {
  const std::string dotted = section + "." + name;
  return {std::move(section), std::move(name),
          [field, dotted](ExperimentConfig& c, const std::string& v) {
            field(c) = parse_number<T>(dotted, v);
          },
          [field](const ExperimentConfig& c) {
            return fmt::format("{}", field(c));
          }};
}

template <typename Field>
Key text(std::string section, std::string name, Field field) {
  return {std::move(section), std::move(name),
          [field](ExperimentConfig& c, const std::string& v) { field(c) = v; },
          [field](const ExperimentConfig& c) { return std::string(field(c)); }};
}

#define ACM_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    using std::size_t;
    std::vector<Key> k;
    k.push_back(number<std::uint64_t>("experiment", "seed", ACM_FIELD(seed)));
    k.push_back(text("experiment", "output_dir", ACM_FIELD(output_dir)));
    k.push_back(Key{"experiment", "attribute",
                    [](ExperimentConfig& c, const std::string& v) {
                      const auto n = parse_number<long long>("experiment.attribute", v);
                      if (n < 0) {
                        c.attribute.reset();
                      } else {
                        c.attribute = static_cast<size_t>(n);
                      }
                    },
                    [](const ExperimentConfig& c) {
                      return c.attribute ? std::to_string(*c.attribute) : std::string("-1");
                    }});

    k.push_back(text("corpus", "source", ACM_FIELD(corpus_source)));
    k.push_back(text("corpus", "train", ACM_FIELD(train_path)));
    k.push_back(text("corpus", "test", ACM_FIELD(test_path)));
    k.push_back(number<size_t>("corpus", "min_count", ACM_FIELD(min_count)));
    k.push_back(number<size_t>("corpus", "vocab_size", ACM_FIELD(synthetic.vocab_size)));
    k.push_back(number<size_t>("corpus", "clusters", ACM_FIELD(synthetic.clusters)));
    k.push_back(number<size_t>("corpus", "test_clusters", ACM_FIELD(test_clusters)));
    k.push_back(
        number<size_t>("corpus", "docs_per_cluster", ACM_FIELD(synthetic.docs_per_cluster)));
    k.push_back(
        number<size_t>("corpus", "paragraphs_per_doc", ACM_FIELD(synthetic.paragraphs_per_doc)));
    k.push_back(number<size_t>("corpus", "classes", ACM_FIELD(synthetic.classes)));
    k.push_back(number<size_t>("corpus", "entities_per_cluster",
                               ACM_FIELD(synthetic.entities_per_cluster)));
    k.push_back(
        number<size_t>("corpus", "summary_sentences", ACM_FIELD(synthetic.summary_sentences)));
    k.push_back(number<int>("corpus", "summary_class", ACM_FIELD(synthetic.summary_class)));

    k.push_back(number<size_t>("model", "dim", ACM_FIELD(model.dim)));
    k.push_back(number<size_t>("model", "heads", ACM_FIELD(model.heads)));
    k.push_back(number<size_t>("model", "ffn", ACM_FIELD(model.ffn)));
    k.push_back(number<size_t>("model", "decoder_layers", ACM_FIELD(model.decoder_layers)));
    k.push_back(number<size_t>("model", "encoder_layers", ACM_FIELD(model.encoder.layers)));
    k.push_back(number<double>("model", "sigma", ACM_FIELD(model.encoder.sigma)));
    k.push_back(number<size_t>("model", "max_paragraphs", ACM_FIELD(model.encoder.max_paragraphs)));
    k.push_back(number<size_t>("model", "max_input_tokens", ACM_FIELD(model.max_input_tokens)));
    k.push_back(
        number<size_t>("model", "max_summary_tokens", ACM_FIELD(model.max_summary_tokens)));

    k.push_back(number<size_t>("classifier", "dim", ACM_FIELD(classifier.dim)));
    k.push_back(number<size_t>("classifier", "heads", ACM_FIELD(classifier.heads)));
    k.push_back(number<size_t>("classifier", "ffn", ACM_FIELD(classifier.ffn)));
    k.push_back(number<size_t>("classifier", "blocks", ACM_FIELD(classifier.blocks)));
    k.push_back(
        number<size_t>("classifier", "max_input_tokens", ACM_FIELD(classifier.max_input_tokens)));
    k.push_back(number<size_t>("classifier", "epochs", ACM_FIELD(classifier_train.epochs)));
    k.push_back(
        number<size_t>("classifier", "batch_size", ACM_FIELD(classifier_train.batch_size)));
    k.push_back(
        number<double>("classifier", "learning_rate", ACM_FIELD(classifier_train.learning_rate)));
    k.push_back(number<double>("classifier", "clip_norm", ACM_FIELD(classifier_train.clip_norm)));
    k.push_back(number<double>("classifier", "validation_fraction",
                               ACM_FIELD(classifier_train.validation_fraction)));
    k.push_back(
        number<double>("classifier", "test_fraction", ACM_FIELD(classifier_train.test_fraction)));

    k.push_back(number<size_t>("train", "epochs", ACM_FIELD(train.epochs)));
    k.push_back(number<size_t>("train", "batch_size", ACM_FIELD(train.batch_size)));
    k.push_back(number<double>("train", "learning_rate", ACM_FIELD(train.learning_rate)));
    k.push_back(number<double>("train", "clip_norm", ACM_FIELD(train.clip_norm)));
    k.push_back(number<size_t>("train", "top_k", ACM_FIELD(train.top_k)));

    k.push_back(number<double>("weights", "alpha1", ACM_FIELD(weights.alpha1)));
    k.push_back(number<double>("weights", "alpha2", ACM_FIELD(weights.alpha2)));
    k.push_back(number<double>("weights", "alpha3", ACM_FIELD(weights.alpha3)));

    k.push_back(number<size_t>("beam", "width", ACM_FIELD(beam.beam_width)));
    k.push_back(number<size_t>("beam", "shortlist", ACM_FIELD(beam.shortlist_k)));
    k.push_back(number<size_t>("beam", "max_steps", ACM_FIELD(beam.max_steps)));
    k.push_back(number<double>("beam", "length_penalty", ACM_FIELD(beam.length_penalty)));
    k.push_back(Key{"beam", "penalty",
                    [](ExperimentConfig& c, const std::string& v) {
                      if (v == "simple") {
                        c.beam.penalty = decoding::LengthPenalty::kSimple;
                      } else if (v == "gnmt") {
                        c.beam.penalty = decoding::LengthPenalty::kGnmt;
                      } else {
                        throw ConfigError("invalid value '" + v +
                                          "' for config key 'beam.penalty' (simple|gnmt)");
                      }
                    },
                    [](const ExperimentConfig& c) {
                      return std::string(c.beam.penalty == decoding::LengthPenalty::kSimple
                                             ? "simple"
                                             : "gnmt");
                    }});
    k.push_back(Key{"beam", "attribute_mode",
                    [](ExperimentConfig& c, const std::string& v) {
                      if (v == "prefix") {
                        c.beam.attribute_mode = decoding::AttributeMode::kWholePrefix;
                      } else if (v == "accumulated") {
                        c.beam.attribute_mode = decoding::AttributeMode::kAccumulated;
                      } else {
                        throw ConfigError("invalid value '" + v +
                                          "' for config key 'beam.attribute_mode' "
                                          "(prefix|accumulated)");
                      }
                    },
                    [](const ExperimentConfig& c) {
                      return std::string(
                          c.beam.attribute_mode == decoding::AttributeMode::kWholePrefix
                              ? "prefix"
                              : "accumulated");
                    }});
    return k;
  }();
  return table;
}

#undef ACM_FIELD

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.synthetic.clusters = 70;
  c.classifier.max_input_tokens = 128;
  c.beam.max_steps = c.model.max_summary_tokens - 1;
  return c;
}

void set_value(ExperimentConfig& config, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  const Key* key = dot == std::string::npos
                       ? nullptr
                       : find_key(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (key == nullptr) throw ConfigError("unknown config key '" + dotted_key + "'");
  key->set(config, value);
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig config = default_config();
  for (const auto& [section, body] : tree) {
    const bool known = std::any_of(keys().begin(), keys().end(),
                                   [&](const Key& k) { return k.section == section; });
    if (!known || !body.data().empty()) {
      const std::string key = body.empty() ? section : section + "." + body.begin()->first;
      throw ConfigError("unknown config key '" + key + "'");
    }
    for (const auto& [name, value] : body) {
      set_value(config, section + "." + name, value.get_value<std::string>());
    }
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_ini(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

void validate(const ExperimentConfig& c) {
  if (c.corpus_source != "synthetic" && c.corpus_source != "jsonl") {
    throw ConfigError("invalid value '" + c.corpus_source +
                      "' for config key 'corpus.source' (synthetic|jsonl)");
  }
  if (c.corpus_source == "synthetic" && c.test_clusters >= c.synthetic.clusters) {
    throw ConfigError("corpus.test_clusters must be smaller than corpus.clusters");
  }
  if (c.attribute && *c.attribute >= c.synthetic.classes) {
    throw ConfigError("experiment.attribute is outside the class range");
  }
  summarizer::validate(c.weights);
  decoding::validate(c.beam);
  if (c.beam.max_steps >= c.model.max_summary_tokens) {
    throw ConfigError("beam.max_steps must be below model.max_summary_tokens");
  }
}

}  // namespace acm::cli
