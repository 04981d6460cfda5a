#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/ontology.hpp"
#include "emd/predictor.hpp"

namespace emd {

// Carries the cumulative belief and the predicted-domain chain across turns.
struct TrackSession {
  BeliefState belief;
  std::optional<std::string> prev_domain;
  int turn_index = 0;
  long encoder_passes = 0;
  long truncations = 0;
};

struct TurnOutcome {
  std::string domain;
  std::vector<Triplet> added;    // merged this turn (after key overwrite)
  std::vector<Triplet> removed;  // carried triplets dropped by the correction head
  BeliefState state;             // cumulative state after the merge
  TurnPrediction raw;
};

// One pipeline step: predict, drop carried triplets with keep_prob < 0.5,
// then merge new triplets with (domain, slot) key overwrite.
TurnOutcome track_turn(TrackSession& session, const std::string& sys, const std::string& usr,
                       TurnPredictor& predictor);

struct EvalOptions {
  int jobs = 1;
  bool osr_vs_gold = false;  // default measures outliers against predicted domain
  int cold_threshold = 6;    // turns below are Cold, at-or-above Hot
};

struct DialogueEval {
  std::string id;
  int turns = 0;
  int correct_turns = 0;
};

struct EvalReport {
  long turns_total = 0, turns_correct = 0;
  long single_total = 0, single_correct = 0;
  long multi_total = 0, multi_correct = 0;
  long cold_total = 0, cold_correct = 0;
  long hot_total = 0, hot_correct = 0;
  long domain_correct = 0;
  long osr_outliers = 0, osr_predictions = 0;
  long n_dialogues = 0;
  std::vector<DialogueEval> details;

  double jga() const { return ratio(turns_correct, turns_total); }
  double jga_single() const { return ratio(single_correct, single_total); }
  double jga_multi() const { return ratio(multi_correct, multi_total); }
  double jga_cold() const { return ratio(cold_correct, cold_total); }
  double jga_hot() const { return ratio(hot_correct, hot_total); }
  double domain_accuracy() const { return ratio(domain_correct, turns_total); }
  double osr() const { return ratio(osr_outliers, osr_predictions); }

  std::string to_json_string() const;
  // splits: "" prints everything; otherwise a comma list drawn from
  // {cold-hot, single-multi} selects which split sections appear.
  std::string to_table(const std::string& splits = "") const;

  static double ratio(long num, long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
};

// Joint goal accuracy and companions over a gold corpus. A turn counts as
// correct only when the predicted cumulative state equals gold exactly
// (values compared case-folded with collapsed whitespace). The predictor
// must be re-entrant when jobs > 1; dialogues are sharded and merged in
// corpus order, so the report is identical for any job count.
EvalReport evaluate(const Corpus& corpus, TurnPredictor& predictor,
                    const EvalOptions& opts = {});

// Exact-state comparison used by JGA; exposed for tests.
bool states_equal_normalized(const BeliefState& a, const BeliefState& b);

}  // namespace emd
