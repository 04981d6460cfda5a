#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emd/heads.hpp"
#include "emd/model.hpp"
#include "emd/ontology.hpp"

namespace emd {

// Everything one turn of inference produces, including instrumentation
// counters. Predictors are re-entrant: all per-turn state lives here.
struct TurnPrediction {
  std::string domain;
  std::vector<Triplet> new_triplets;  // decoded S-type + emitted C-type
  std::vector<double> keep_probs;     // parallel to the carried triplets passed in
  long encoder_sstm_passes = 0;
  long cscm_passes = 0;
  long dscm_passes = 0;
  int truncated = 0;
};

class TurnPredictor {
 public:
  virtual ~TurnPredictor() = default;
  virtual TurnPrediction predict(const std::string& sys, const std::string& usr,
                                 const std::optional<std::string>& prev_domain,
                                 const std::vector<Triplet>& carried) = 0;
};

// Per-turn diagnostics beyond the merged prediction.
struct PredictDetail {
  DomainPrediction domain;
  ConstraintDistribution constraint;
  std::vector<int> tag_labels;  // parallel to encoded tokens
  std::vector<std::string> tokens;
};

// Runs the full head pipeline on one shared encoder pass:
// domain -> constraint -> constrained tagging -> C-type classification over
// the predicted domain's slots -> keep/remove scores for carried triplets.
template <typename T>
class NeuralPredictor : public TurnPredictor {
 public:
  explicit NeuralPredictor(Model<T>& model, bool use_constraint_mask = true)
      : model_(&model), use_mask_(use_constraint_mask) {}

  TurnPrediction predict(const std::string& sys, const std::string& usr,
                         const std::optional<std::string>& prev_domain,
                         const std::vector<Triplet>& carried) override {
    return predict_detailed(sys, usr, prev_domain, carried, nullptr);
  }

  TurnPrediction predict_detailed(const std::string& sys, const std::string& usr,
                                  const std::optional<std::string>& prev_domain,
                                  const std::vector<Triplet>& carried,
                                  PredictDetail* detail) {
    const Ontology& onto = model_->ontology();
    Graph<T> g;
    auto enc = model_->encode(g, turn_tokens(sys, usr));
    auto e_dl = model_->domain_embedding_node(g, prev_domain);

    TurnPrediction out;
    out.encoder_sstm_passes = 1;  // one shared pass serves every head
    out.truncated = enc.truncated;

    auto domain_pred = make_domain_prediction(
        softmax(row_vec(g.val(model_->domain_logits(g, enc.h_cls, e_dl)), 0)), onto);
    out.domain = domain_pred.domain;

    ConstraintDistribution constraint{
        softmax(row_vec(g.val(model_->constraint_logits(g, enc.h_cls, e_dl)), 0))};

    const Mat<T>& tag_scores = g.val(model_->tag_logits(g, enc.h_tokens));
    std::vector<std::vector<double>> tag_probs(tag_scores.rows);
    for (int i = 0; i < tag_scores.rows; ++i)
      tag_probs[i] = softmax(row_vec(tag_scores, i));
    std::vector<int> labels(enc.tokens.size(), kIobOutside);
    for (int i = 0; i < tag_scores.rows; ++i) {
      labels[i + 1] = use_mask_
                          ? argmax_tie_first(mask_tag_scores(tag_probs[i], constraint))
                          : argmax_tie_first(tag_probs[i]);
    }
    auto decoded = decode_tags(labels, enc.tokens, onto);
    out.new_triplets = decoded.triplets;

    for (const auto& q : onto.ctype_of(domain_pred.domain)) {
      auto pred = make_ctype_prediction(
          softmax(row_vec(g.val(model_->ctype_logits(g, q, e_dl, enc.h_cls)), 0)));
      ++out.cscm_passes;
      if (pred.predicted != CtypeClass::Absent) {
        auto [dom, base] = split_qualified(q);
        out.new_triplets.push_back({dom, base, ctype_class_name(pred.predicted)});
      }
    }

    for (const auto& p : carried) {
      const double logit =
          static_cast<double>(g.val(model_->correct_logit(g, p, e_dl, enc.h_cls)).data[0]);
      out.keep_probs.push_back(Graph<double>::sigmoid(logit));
      ++out.dscm_passes;
    }

    if (detail) {
      detail->domain = std::move(domain_pred);
      detail->constraint = std::move(constraint);
      detail->tag_labels = std::move(labels);
      detail->tokens = enc.tokens;
    }
    return out;
  }

  Model<T>& model() { return *model_; }
  void set_use_mask(bool v) { use_mask_ = v; }

 private:
  static std::vector<double> row_vec(const Mat<T>& m, int row) {
    std::vector<double> out(m.cols);
    for (int j = 0; j < m.cols; ++j) out[j] = static_cast<double>(m.at(row, j));
    return out;
  }

  Model<T>* model_;
  bool use_mask_;
};

}  // namespace emd
