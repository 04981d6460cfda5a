#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emd/ontology.hpp"

namespace emd {

struct DomainPrediction {
  std::vector<double> probs;  // over ontology.domains
  int argmax_index = -1;      // ties resolve to the lexicographically first domain
  std::string domain;
};

// Distribution over all S-type slots plus [EMPTY] (last entry).
struct ConstraintDistribution {
  std::vector<double> probs;  // length s+1
  double empty_mass() const { return probs.back(); }
  double slot_mass(int slot_idx) const { return probs[slot_idx]; }
};

struct CtypePrediction {
  double p_yes = 0, p_no = 0, p_dontcare = 0;  // conditional on not-absent, sums to 1
  double p_absent = 0;
  CtypeClass predicted = CtypeClass::Absent;   // argmax over the four raw classes
};

struct RemovalPrediction {
  double keep_prob = 0.5;
  bool keep() const { return keep_prob >= 0.5; }  // ties keep
};

std::vector<double> softmax(const std::vector<double>& logits);

// Argmax with ties resolving to the lowest index; over sorted domain lists
// this is the lexicographically first domain.
int argmax_tie_first(const std::vector<double>& v);

DomainPrediction make_domain_prediction(const std::vector<double>& probs, const Ontology& onto);

CtypePrediction make_ctype_prediction(const std::vector<double>& probs4);

// Ground-truth constraint target: no slots -> all mass on [EMPTY]; k >= 1
// slots -> 1/k each, zero elsewhere. Slots are qualified S-type names;
// unknown slots are a hard error.
ConstraintDistribution build_r_real(const std::vector<std::string>& gold_stype_slots,
                                    const Ontology& onto);

// Element-wise constraint product mapped onto the IOB label space: B-q and
// I-q share factor R[q]; O is scaled by max(R) so a constraint concentrated
// on real slots can never suppress the no-slot label itself. Scores stay
// unnormalized; only the per-token ranking matters.
std::vector<double> mask_tag_scores(const std::vector<double>& label_probs,
                                    const ConstraintDistribution& r);

// Per-position argmax of masked scores for a block of per-token label
// distributions (rows of length 2s+1).
std::vector<int> masked_argmax_tags(const std::vector<std::vector<double>>& label_probs,
                                    const ConstraintDistribution& r);

struct DecodeResult {
  std::vector<Triplet> triplets;
  std::vector<Triplet> duplicates;  // later spans for an already-decoded slot
};

// Assembles maximal B-q (I-q)* runs into triplets whose value joins the
// surface tokens. A stray I-q opens a span as if it were B-q. When one slot
// yields two disjoint spans, the first wins and the second is reported.
// Marker tokens always break spans. `labels` is parallel to `tokens`.
DecodeResult decode_tags(const std::vector<int>& labels,
                         const std::vector<std::string>& tokens, const Ontology& onto);

}  // namespace emd
