#include "acm/decoding/beam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acm/core/error.hpp"

namespace acm::decoding {

void validate(const BeamConfig& c) {
  if (c.beam_width == 0) throw ConfigError("beam_width must be at least 1");
  if (c.shortlist_k < c.beam_width) throw ConfigError("shortlist_k must be >= beam_width");
  if (c.max_steps == 0) throw ConfigError("max_steps must be at least 1");
  if (!(c.length_penalty >= 0.0)) throw ConfigError("length_penalty must be non-negative");
  if (!(c.alpha1 >= 0.0)) throw ConfigError("alpha1 must be non-negative");
}

double final_score(const Beam& beam, const BeamConfig& config) {
  const double len = static_cast<double>(std::max<std::size_t>(beam.tokens.size(), 1));
  const double norm = config.penalty == LengthPenalty::kSimple
                          ? std::pow(len, config.length_penalty)
                          : std::pow((5.0 + len) / 6.0, config.length_penalty);
  return beam.combined / norm;
}

namespace {

struct Candidate {
  std::size_t beam;
  TokenId token;
  double base_lp;
  double attr_lp;
  double combined;
};

/// Lexicographic order of parent tokens followed by the new token.
bool lex_less(const TokenSeq& a_parent, TokenId a_tok, const TokenSeq& b_parent, TokenId b_tok) {
  if (a_parent != b_parent) return a_parent < b_parent;
  return a_tok < b_tok;
}

DecodeResult search(const LanguageModel& model, const PrefixScorer* scorer,
                    const BeamConfig& config) {
  validate(config);
  const std::size_t vocab = model.vocab_size();
  const TokenId eos = model.eos();
  const double alpha1 = scorer ? config.alpha1 : 0.0;
  const std::size_t shortlist = std::min(config.shortlist_k, vocab);

  DecodeResult result;
  std::vector<Beam> live = {Beam{}};
  std::vector<Beam> finished;
  std::vector<TokenId> ids(vocab);
  for (std::size_t step = 0; step < config.max_steps && !live.empty(); ++step) {
    std::vector<Candidate> pool;
    for (std::size_t b = 0; b < live.size(); ++b) {
      const Beam& beam = live[b];
      const auto logprobs = model.next_logprobs(beam.tokens);
      if (logprobs.size() != vocab) {
        throw DimensionError("language model returned " + std::to_string(logprobs.size()) +
                             " log-probabilities for a vocabulary of " + std::to_string(vocab));
      }
      std::iota(ids.begin(), ids.end(), TokenId{0});
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(shortlist),
                        ids.end(), [&](TokenId a, TokenId c) {
                          return logprobs[a] != logprobs[c] ? logprobs[a] > logprobs[c] : a < c;
                        });
      const std::span<const TokenId> tokens(ids.data(), shortlist);
      std::vector<double> scores(shortlist, 0.0);
      if (scorer) {
        scores = scorer->extension_log_scores(beam.tokens, tokens);
        if (scores.size() != shortlist) throw DimensionError("scorer returned wrong batch size");
      }
      for (std::size_t i = 0; i < shortlist; ++i) {
        Candidate c{b, tokens[i], beam.base_lp + logprobs[tokens[i]], 0.0, 0.0};
        if (scorer) {
          c.attr_lp = config.attribute_mode == AttributeMode::kAccumulated
                          ? beam.attr_lp + scores[i]
                          : scores[i];
        }
        c.combined = c.base_lp + alpha1 * c.attr_lp;
        pool.push_back(c);
      }
    }
    const std::size_t keep = std::min(config.beam_width, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                      [&](const Candidate& a, const Candidate& c) {
                        if (a.combined != c.combined) return a.combined > c.combined;
                        return lex_less(live[a.beam].tokens, a.token, live[c.beam].tokens, c.token);
                      });
    std::vector<Beam> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = pool[i];
      Beam beam{live[c.beam].tokens, c.base_lp, c.attr_lp, c.combined, c.token == eos};
      beam.tokens.push_back(c.token);
      (beam.finished ? finished : next).push_back(std::move(beam));
    }
    live = std::move(next);
    result.steps.push_back(live);
  }

  result.hypotheses = std::move(finished);
  result.hypotheses.insert(result.hypotheses.end(), live.begin(), live.end());
  std::stable_sort(result.hypotheses.begin(), result.hypotheses.end(),
                   [&](const Beam& a, const Beam& b) {
                     const double sa = final_score(a, config), sb = final_score(b, config);
                     if (sa != sb) return sa > sb;
                     return a.tokens < b.tokens;
                   });
  return result;
}

}  // namespace

DecodeResult beam_search(const LanguageModel& model, const BeamConfig& config) {
  return search(model, nullptr, config);
}

DecodeResult conditioned_beam_search(const LanguageModel& model, const PrefixScorer& scorer,
                                     const BeamConfig& config) {
  return search(model, &scorer, config);
}

}  // namespace acm::decoding
