#include "emd/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emd/tokenize.hpp"

namespace emd {

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> out(logits.size());
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double s = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

int argmax_tie_first(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

DomainPrediction make_domain_prediction(const std::vector<double>& probs,
                                        const Ontology& onto) {
  DomainPrediction p;
  p.probs = probs;
  p.argmax_index = argmax_tie_first(probs);
  p.domain = onto.domains[p.argmax_index];
  return p;
}

CtypePrediction make_ctype_prediction(const std::vector<double>& probs4) {
  CtypePrediction p;
  const double not_absent = probs4[0] + probs4[1] + probs4[2];
  p.p_absent = probs4[3];
  if (not_absent > 0) {
    p.p_yes = probs4[0] / not_absent;
    p.p_no = probs4[1] / not_absent;
    p.p_dontcare = probs4[2] / not_absent;
  }
  p.predicted = static_cast<CtypeClass>(argmax_tie_first(probs4));
  return p;
}

ConstraintDistribution build_r_real(const std::vector<std::string>& gold_stype_slots,
                                    const Ontology& onto) {
  ConstraintDistribution r;
  r.probs.assign(onto.num_stype() + 1, 0.0);
  if (gold_stype_slots.empty()) {
    r.probs.back() = 1.0;
    return r;
  }
  std::vector<int> idx;
  for (const auto& q : gold_stype_slots) {
    const int i = onto.stype_index(q);
    if (i < 0) throw std::invalid_argument("R target references unknown S-type slot: " + q);
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  const double mass = 1.0 / static_cast<double>(idx.size());
  for (int i : idx) r.probs[i] = mass;
  return r;
}

std::vector<double> mask_tag_scores(const std::vector<double>& label_probs,
                                    const ConstraintDistribution& r) {
  const int s = static_cast<int>(r.probs.size()) - 1;
  if (static_cast<int>(label_probs.size()) != iob_label_count(s))
    throw std::invalid_argument("label distribution does not match constraint size");
  // O is multiplied by the largest constraint entry rather than by the
  // [EMPTY] entry. The constraint target puts zero mass on [EMPTY] whenever
  // the turn has slots, so an O-to-[EMPTY] pairing drives every masked score
  // at every position toward zero as training converges and decoding
  // degenerates to argmax over rounding noise. Pairing O with max(R) keeps
  // the no-slot label viable everywhere, still zeroes tags of slots with no
  // constraint support, and is invariant under uniform or rescaled R.
  double o_factor = r.probs[s];
  for (int q = 0; q < s; ++q) o_factor = std::max(o_factor, r.probs[q]);
  std::vector<double> out(label_probs.size());
  out[kIobOutside] = label_probs[kIobOutside] * o_factor;
  for (int q = 0; q < s; ++q) {
    out[iob_b(q)] = label_probs[iob_b(q)] * r.probs[q];
    out[iob_i(q)] = label_probs[iob_i(q)] * r.probs[q];
  }
  return out;
}

std::vector<int> masked_argmax_tags(const std::vector<std::vector<double>>& label_probs,
                                    const ConstraintDistribution& r) {
  std::vector<int> out;
  out.reserve(label_probs.size());
  for (const auto& row : label_probs) out.push_back(argmax_tie_first(mask_tag_scores(row, r)));
  return out;
}

DecodeResult decode_tags(const std::vector<int>& labels,
                         const std::vector<std::string>& tokens, const Ontology& onto) {
  if (labels.size() != tokens.size())
    throw std::invalid_argument("decode_tags: labels and tokens differ in length");
  DecodeResult res;
  std::vector<bool> seen(onto.stype.size(), false);

  const int n = static_cast<int>(tokens.size());
  int i = 0;
  while (i < n) {
    const int label = is_marker_token(tokens[i]) ? kIobOutside : labels[i];
    if (label == kIobOutside) {
      ++i;
      continue;
    }
    // B-q opens a span; a stray I-q is repaired to B-q.
    const int q = iob_slot(label);
    std::string value = tokens[i];
    int j = i + 1;
    while (j < n && !is_marker_token(tokens[j]) && labels[j] == iob_i(q)) {
      value += " " + tokens[j];
      ++j;
    }
    auto [dom, slot] = split_qualified(onto.stype[q]);
    const Triplet t{dom, slot, value};
    if (seen[q])
      res.duplicates.push_back(t);
    else {
      seen[q] = true;
      res.triplets.push_back(t);
    }
    i = j;
  }
  std::sort(res.triplets.begin(), res.triplets.end());
  return res;
}

}  // namespace emd
