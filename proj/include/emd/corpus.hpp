#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emd/ontology.hpp"

namespace emd {

struct DialogueTurn {
  std::string sys;
  std::string usr;
  std::string gold_domain;
  std::vector<Triplet> gold_adds;     // sorted, disjoint from gold_removes
  std::vector<Triplet> gold_removes;  // sorted
  int turn_index = 0;
};

struct Dialogue {
  std::string id;
  std::vector<DialogueTurn> turns;
};

using Corpus = std::vector<Dialogue>;

struct CorpusStats {
  long n_dialogs = 0;
  long n_single_domain = 0;
  long n_multi_domain = 0;
  double avg_turns = 0.0;
};

CorpusStats stats(const Corpus& corpus);

// Distinct gold domains of a dialogue.
int domain_count(const Dialogue& d);

// Turn-level supervision from consecutive cumulative states:
// adds = cur \ prev, removes = prev \ cur (full-triplet set difference).
struct TurnDelta {
  std::vector<Triplet> adds;
  std::vector<Triplet> removes;
};
TurnDelta delta_from_cumulative(const BeliefState& prev, const BeliefState& cur);

// Per-token IOB labels for one encoded turn; parallel to the token list
// (markers are always O).
struct TagSequence {
  std::vector<int> labels;
};

struct AlignResult {
  TagSequence tags;
  std::vector<Triplet> unmatched;  // S-type adds whose value never matched
};

// Labels the first exact token-subsequence match (case-folded) of each
// S-type value in gold_adds. Overlap conflicts: earlier-starting, then
// longer span wins; the loser falls back to its next free match. "dontcare"
// values produce no tags. Throws if an S-type add names an unknown slot.
AlignResult align_iob(const DialogueTurn& turn, const Ontology& onto,
                      const std::vector<std::string>& tokens);

// Full map over the ontology's C-type slots of the turn's triplets; slots in
// gold_adds get their class, everything else in the turn's gold domain is
// Absent. Throws on an unmappable C-type value.
std::map<std::string, CtypeClass> derive_ctype_labels(const DialogueTurn& turn,
                                                      const Ontology& onto);

// Canonical corpus format: JSON-lines, one dialogue per line,
// {id, turns:[{sys, usr, domain, adds:[[d,q,v]], removes:[[d,q,v]]}]}.
void save_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_corpus_jsonl(const std::string& path);
std::string dialogue_to_jsonl_line(const Dialogue& d);
Dialogue dialogue_from_jsonl_line(const std::string& line);

// Validates every triplet's slot against the ontology; throws on the first
// violation (corpus bug, not a runtime condition).
void validate_corpus(const Corpus& corpus, const Ontology& onto);

// Gold cumulative state after each turn, reconstructed by replaying deltas.
std::vector<BeliefState> replay_gold_states(const Dialogue& d);

}  // namespace emd
