#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/ontology.hpp"

namespace emd {

// Desk-scale corpus generator. Ontology is a pure function of the config;
// dialogues are a pure function of (config, seed). Every S-type value the
// generator adds appears verbatim in the user utterance of that turn.
//
// Removals follow one fixed obsoletes-rule: in the first domain, setting the
// second S-type slot (a "which one exactly" slot) invalidates a carried
// value of the first slot (a "rough constraint" slot). A head that is linear
// over [p-hat; E(D_l); H_CLS] can represent that rule; it cannot represent
// "remove whichever slot the utterance names" (the score is additive in the
// triplet and the utterance, so no equality test between them exists), and a
// corpus demanding the latter would cap every tracker built on this head.
// Co-mentioning multiple C-type slots of one domain with independent classes
// hits the same additivity wall in the classification head, so utterances
// mention only the first C-type slot of each domain.
struct SynthConfig {
  int n_domains = 3;
  int stype_per_domain = 4;
  std::vector<int> stype_counts;  // optional per-domain override
  int ctype_per_domain = 1;
  std::vector<int> ctype_counts;  // optional per-domain override
  int values_per_slot = 6;
  int n_dialogues = 50;
  int min_turns = 2;
  int max_turns = 8;
  double p_domain_switch = 0.35;
  double p_second_add = 0.4;
  double p_overwrite = 0.3;
  double p_obsolete = 1.0;  // chance the obsoletes-rule fires when it applies
  double p_ctype = 0.5;
  double p_noop = 0.12;

  static SynthConfig from_json_string(const std::string& s);
  static SynthConfig load(const std::string& path);
};

struct SynthResult {
  Ontology ontology;
  Corpus corpus;
  // Generator-internal cumulative state after each turn; the source of truth
  // the per-turn deltas were diffed from.
  std::vector<std::vector<BeliefState>> gold_states;
};

// Throws std::invalid_argument on an inconsistent config.
SynthResult generate_synthetic(const SynthConfig& config, uint64_t seed);

// Ontology alone (no dialogues); used by benchmarks.
Ontology synth_ontology(const SynthConfig& config);

}  // namespace emd
