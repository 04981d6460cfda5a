#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "emd/corpus.hpp"
#include "emd/heads.hpp"
#include "emd/log.hpp"
#include "emd/losses.hpp"
#include "emd/model.hpp"
#include "emd/predictor.hpp"
#include "emd/rng.hpp"
#include "emd/tracker.hpp"

#include "json.hpp"

namespace emd {

struct TrainConfig {
  double learning_rate = 1e-4;
  double grad_clip = 2.0;  // global norm
  int batch_size = 32;
  int epochs = 50;
  uint64_t seed = 1;
  EncoderConfig encoder;
  LossWeights weights;
  std::string precision = "f32";    // f32 | f64
  bool mask_in_tag_loss = false;    // experimental: fold ln R into tag logits

  void validate() const {
    if (learning_rate < 0 || grad_clip <= 0 || batch_size < 1 || epochs < 0)
      throw std::invalid_argument("train config: values out of range");
    if (precision != "f32" && precision != "f64")
      throw std::invalid_argument("train config: precision must be f32 or f64");
  }

  static TrainConfig from_json_string(const std::string& s) {
    nlohmann::json j = nlohmann::json::parse(s);
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j["encoder"]);
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      c.weights.alpha = w.value("alpha", 1.0);
      c.weights.beta = w.value("beta", 1.0);
      c.weights.gamma = w.value("gamma", 1.0);
      c.weights.theta = w.value("theta", 1.0);
      c.weights.epsilon = w.value("epsilon", 1.0);
    }
    c.precision = j.value("precision", c.precision);
    c.mask_in_tag_loss = j.value("mask_in_tag_loss", c.mask_in_tag_loss);
    c.validate();
    return c;
  }

  static TrainConfig load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open train config: " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(s);
  }
};

// One supervised turn. Previous-turn context (domain, carried state) is the
// gold chain: teacher forcing during training, model predictions at
// inference.
struct TurnSample {
  std::vector<std::string> tokens;  // already truncated to max_len
  int gold_domain_idx = 0;
  std::optional<std::string> prev_domain;
  std::vector<int> tag_targets;     // parallel to tokens; positions 1.. feed the loss
  std::vector<double> r_real;       // s+1
  std::vector<std::pair<std::string, int>> ctype_targets;  // qualified slot -> class
  std::vector<Triplet> carried;     // gold cumulative state before this turn
  std::vector<double> keep_labels;  // 0 = remove, parallel to carried
};

struct SamplePrepStats {
  long unmatched_values = 0;  // S-type adds whose value never aligned
  long truncated_turns = 0;
};

inline std::vector<TurnSample> build_samples(const Corpus& corpus, const Ontology& onto,
                                             int max_len, SamplePrepStats* stats = nullptr) {
  std::vector<TurnSample> samples;
  auto domain_idx = [&](const std::string& d) {
    auto it = std::lower_bound(onto.domains.begin(), onto.domains.end(), d);
    if (it == onto.domains.end() || *it != d)
      throw std::invalid_argument("sample references unknown domain: " + d);
    return static_cast<int>(it - onto.domains.begin());
  };
  for (const auto& dlg : corpus) {
    BeliefState gold_prev;
    std::optional<std::string> prev_domain;
    for (const auto& turn : dlg.turns) {
      TurnSample s;
      s.tokens = turn_tokens(turn.sys, turn.usr);
      if (truncate_turn_tokens(s.tokens, max_len) > 0 && stats) ++stats->truncated_turns;
      s.gold_domain_idx = domain_idx(turn.gold_domain);
      s.prev_domain = prev_domain;

      AlignResult aligned = align_iob(turn, onto, s.tokens);
      s.tag_targets = aligned.tags.labels;
      if (stats) stats->unmatched_values += static_cast<long>(aligned.unmatched.size());

      std::vector<std::string> r_slots;
      for (const auto& t : turn.gold_adds) {
        const std::string q = t.qualified_slot();
        if (onto.is_stype(q) && normalize_ctype_value(t.value) != CtypeClass::DontCare)
          r_slots.push_back(q);
      }
      s.r_real = build_r_real(r_slots, onto).probs;

      for (const auto& [slot, cls] : derive_ctype_labels(turn, onto))
        s.ctype_targets.emplace_back(slot, static_cast<int>(cls));

      // Correction supervision. Carried triplets whose key is re-added this
      // turn are skipped: the merge overwrites them whatever the head says,
      // and their "outdated" label would fight the keep labels of every
      // other overwrite-free turn.
      std::set<Triplet> removed(turn.gold_removes.begin(), turn.gold_removes.end());
      std::set<std::pair<std::string, std::string>> readded;
      for (const auto& t : turn.gold_adds) readded.insert({t.domain, t.slot});
      for (const auto& t : gold_prev.triplets()) {
        if (readded.count({t.domain, t.slot})) continue;
        s.carried.push_back(t);
        s.keep_labels.push_back(removed.count(t) ? 0.0 : 1.0);
      }

      samples.push_back(std::move(s));
      for (const auto& t : turn.gold_removes) gold_prev.remove_exact(t);
      for (const auto& t : turn.gold_adds) gold_prev.apply_add(t);
      prev_domain = turn.gold_domain;
    }
  }
  return samples;
}

// Per-batch loss terms. Raw sums plus instance counts; means are sum/count.
struct BatchLoss {
  double domain_sum = 0, ctype_sum = 0, tag_sum = 0, correct_sum = 0, constraint_sum = 0;
  long n_domain = 0, n_ctype = 0, n_tag = 0, n_correct = 0, n_constraint = 0;
  double weighted_total = 0;  // the differentiated objective

  static double mean(double sum, long n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
  double domain_mean() const { return mean(domain_sum, n_domain); }
  double ctype_mean() const { return mean(ctype_sum, n_ctype); }
  double tag_mean() const { return mean(tag_sum, n_tag); }
  double correct_mean() const { return mean(correct_sum, n_correct); }
  double constraint_mean() const { return mean(constraint_sum, n_constraint); }
  double joint() const {
    return emd::joint_loss(domain_mean(), ctype_mean(), tag_mean(), correct_mean(),
                           constraint_mean(), LossWeights{});
  }
};

// Builds one graph per sample and (optionally) backpropagates into
// model.store() grads. Each head's loss is the batch mean of its per-turn
// sums; heads with no instances contribute zero. Normalizing every head per
// turn keeps the tag logits sharpening as fast as the constraint logits --
// with a per-token tag loss the trained R collapses [EMPTY] quicker than the
// taggers's O odds grow, and the Eq.-5 product then suppresses O at every
// position. This exact function is what the finite-difference checker
// re-evaluates.
template <typename T>
BatchLoss batch_loss(Model<T>& model, const std::vector<const TurnSample*>& batch,
                     const LossWeights& w, bool do_backward, bool mask_in_tag_loss = false) {
  BatchLoss acc;
  // Per-turn instance counts: a head's count is the number of turns with at
  // least one instance of that head.
  for (const auto* s : batch) {
    acc.n_domain += 1;
    acc.n_constraint += 1;
    acc.n_tag += 1;
    acc.n_ctype += s->ctype_targets.empty() ? 0 : 1;
    acc.n_correct += s->carried.empty() ? 0 : 1;
  }

  for (const auto* s : batch) {
    Graph<T> g;
    auto enc = model.encode(g, s->tokens);
    auto e_dl = model.domain_embedding_node(g, s->prev_domain);
    std::vector<typename Graph<T>::Ref> terms;
    std::vector<T> term_weights;

    auto dom_ce = g.softmax_ce(model.domain_logits(g, enc.h_cls, e_dl), {s->gold_domain_idx});
    acc.domain_sum += static_cast<double>(g.val(dom_ce).data[0]);
    terms.push_back(dom_ce);
    term_weights.push_back(static_cast<T>(w.alpha / acc.n_domain));

    auto r_logits = model.constraint_logits(g, enc.h_cls, e_dl);
    std::vector<T> r_target(s->r_real.begin(), s->r_real.end());
    auto r_kl = g.kl_to_softmax(std::move(r_target), r_logits);
    acc.constraint_sum += static_cast<double>(g.val(r_kl).data[0]);
    terms.push_back(r_kl);
    term_weights.push_back(static_cast<T>(w.epsilon / acc.n_constraint));

    auto tag_logits = model.tag_logits(g, enc.h_tokens);
    if (mask_in_tag_loss) {
      // Decode-consistent variant: add the (detached) log-masking factors to
      // the logits before the cross-entropy.
      const Mat<T>& rl = g.val(r_logits);
      std::vector<double> r_log(rl.cols);
      for (int j = 0; j < rl.cols; ++j) r_log[j] = static_cast<double>(rl.data[j]);
      std::vector<double> r_prob = softmax(r_log);
      const int s_count = static_cast<int>(r_prob.size()) - 1;
      double o_factor = r_prob[s_count];
      for (int q = 0; q < s_count; ++q) o_factor = std::max(o_factor, r_prob[q]);
      Mat<T> log_factor(1, iob_label_count(s_count));
      log_factor.data[kIobOutside] = static_cast<T>(std::log(o_factor));
      for (int q = 0; q < s_count; ++q) {
        log_factor.data[iob_b(q)] = static_cast<T>(std::log(r_prob[q]));
        log_factor.data[iob_i(q)] = static_cast<T>(std::log(r_prob[q]));
      }
      tag_logits = g.add_row(tag_logits, g.constant(std::move(log_factor)));
    }
    std::vector<int> targets(s->tag_targets.begin() + 1, s->tag_targets.end());
    auto tag_ce = g.softmax_ce(tag_logits, std::move(targets));
    acc.tag_sum += static_cast<double>(g.val(tag_ce).data[0]);
    terms.push_back(tag_ce);
    term_weights.push_back(static_cast<T>(w.gamma / acc.n_tag));

    if (!s->ctype_targets.empty()) {
      std::vector<typename Graph<T>::Ref> slot_terms;
      for (const auto& [slot, cls] : s->ctype_targets) {
        auto ce = g.softmax_ce(model.ctype_logits(g, slot, e_dl, enc.h_cls), {cls});
        acc.ctype_sum += static_cast<double>(g.val(ce).data[0]);
        slot_terms.push_back(ce);
      }
      auto ctype_total =
          g.weighted_sum(slot_terms, std::vector<T>(slot_terms.size(), T(1)));
      terms.push_back(ctype_total);
      term_weights.push_back(static_cast<T>(w.beta / acc.n_ctype));
    }

    if (!s->carried.empty()) {
      std::vector<typename Graph<T>::Ref> keep_terms;
      for (size_t i = 0; i < s->carried.size(); ++i) {
        auto bce = g.sigmoid_bce(model.correct_logit(g, s->carried[i], e_dl, enc.h_cls),
                                 {static_cast<T>(s->keep_labels[i])});
        acc.correct_sum += static_cast<double>(g.val(bce).data[0]);
        keep_terms.push_back(bce);
      }
      auto correct_total =
          g.weighted_sum(keep_terms, std::vector<T>(keep_terms.size(), T(1)));
      terms.push_back(correct_total);
      term_weights.push_back(static_cast<T>(w.theta / acc.n_correct));
    }

    auto total = g.weighted_sum(terms, term_weights);
    acc.weighted_total += static_cast<double>(g.val(total).data[0]);
    if (do_backward) g.backward(total);
  }
  return acc;
}

// Rescales gradients in place so the global norm is at most max_norm.
// Returns the factor applied (1 when already under the cap).
template <typename T>
double clip_grads(ParamStore<T>& store, double max_norm) {
  const double norm = store.grad_norm();
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (const auto& p : store.all())
    for (auto& g : p->grad.data) g = static_cast<T>(static_cast<double>(g) * scale);
  return scale;
}

// Adam with global-norm clipping applied to the accumulated gradients
// before each step. Moment defaults follow common practice (the update rule
// itself leaves them unspecified).
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double clip, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), clip_(clip), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore<T>& store) {
    if (m_.empty()) {
      for (const auto& p : store.all()) {
        m_.emplace_back(p->val.rows, p->val.cols);
        v_.emplace_back(p->val.rows, p->val.cols);
      }
    }
    clip_grads(store, clip_);
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    size_t k = 0;
    for (const auto& p : store.all()) {
      auto& m = m_[k];
      auto& v = v_[k];
      ++k;
      for (size_t i = 0; i < p->val.data.size(); ++i) {
        const double gval = static_cast<double>(p->grad.data[i]);
        const double mi = beta1_ * static_cast<double>(m.data[i]) + (1.0 - beta1_) * gval;
        const double vi =
            beta2_ * static_cast<double>(v.data[i]) + (1.0 - beta2_) * gval * gval;
        m.data[i] = static_cast<T>(mi);
        v.data[i] = static_cast<T>(vi);
        p->val.data[i] -=
            static_cast<T>(lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
      }
    }
  }

 private:
  double lr_, clip_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat<T>> m_, v_;
};

struct EpochLog {
  int epoch = 0;
  double loss_domain = 0, loss_ctype = 0, loss_tag = 0, loss_correct = 0, loss_constraint = 0;
  double loss_joint = 0;
  double dev_jga = 0, dev_domain_acc = 0, dev_osr = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  bool diverged = false;
  std::string divergence_tensor;
  int best_epoch = -1;
  double best_dev_jga = -1.0;
};

inline std::string metrics_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,loss_domain,loss_ctype,loss_tag,loss_correct,loss_constraint,loss_joint,"
        "dev_jga,dev_domain_acc,dev_osr\n";
  for (const auto& e : log)
    os << e.epoch << "," << e.loss_domain << "," << e.loss_ctype << "," << e.loss_tag << ","
       << e.loss_correct << "," << e.loss_constraint << "," << e.loss_joint << "," << e.dev_jga
       << "," << e.dev_domain_acc << "," << e.dev_osr << "\n";
  return os.str();
}

// Minibatched Adam over the joint objective. Keeps the best-dev-JGA
// parameter snapshot and restores it into the model before returning. On a
// non-finite loss or gradient the epoch aborts and the best snapshot so far
// is restored (diverged flag set).
template <typename T>
TrainResult train(Model<T>& model, const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (train_corpus.empty()) throw std::invalid_argument("train: empty corpus");
  std::vector<TurnSample> samples =
      build_samples(train_corpus, model.ontology(), cfg.encoder.max_len);

  TrainResult result;
  AdamOptimizer<T> opt(cfg.learning_rate, cfg.grad_clip);
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  auto snapshot = [&] {
    std::vector<Mat<T>> snap;
    for (const auto& p : model.store().all()) snap.push_back(p->val);
    return snap;
  };
  auto restore = [&](const std::vector<Mat<T>>& snap) {
    size_t k = 0;
    for (const auto& p : model.store().all()) p->val = snap[k++];
  };
  std::vector<Mat<T>> best = snapshot();

  std::vector<int> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochLog elog;
    elog.epoch = epoch;
    double dsum = 0, csum = 0, tsum = 0, psum = 0, rsum = 0;
    long dn = 0, cn = 0, tn = 0, pn = 0, rn = 0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const TurnSample*> batch;
      for (size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&samples[order[i]]);
      model.store().zero_grads();
      BatchLoss bl = batch_loss(model, batch, cfg.weights, true, cfg.mask_in_tag_loss);
      if (!std::isfinite(bl.weighted_total)) {
        result.diverged = true;
        result.divergence_tensor = "(loss)";
      } else {
        const std::string bad = model.store().first_nonfinite_grad();
        if (!bad.empty()) {
          result.diverged = true;
          result.divergence_tensor = bad;
        }
      }
      if (result.diverged) {
        EMD_ERROR("training diverged at epoch " << epoch << " ("
                                                << result.divergence_tensor
                                                << "); restoring best checkpoint");
        restore(best);
        return result;
      }
      opt.step(model.store());
      dsum += bl.domain_sum;
      dn += bl.n_domain;
      csum += bl.ctype_sum;
      cn += bl.n_ctype;
      tsum += bl.tag_sum;
      tn += bl.n_tag;
      psum += bl.correct_sum;
      pn += bl.n_correct;
      rsum += bl.constraint_sum;
      rn += bl.n_constraint;
    }
    elog.loss_domain = BatchLoss::mean(dsum, dn);
    elog.loss_ctype = BatchLoss::mean(csum, cn);
    elog.loss_tag = BatchLoss::mean(tsum, tn);
    elog.loss_correct = BatchLoss::mean(psum, pn);
    elog.loss_constraint = BatchLoss::mean(rsum, rn);
    elog.loss_joint = joint_loss(elog.loss_domain, elog.loss_ctype, elog.loss_tag,
                                 elog.loss_correct, elog.loss_constraint, cfg.weights);

    NeuralPredictor<T> predictor(model);
    EvalReport dev = evaluate(dev_corpus.empty() ? train_corpus : dev_corpus, predictor);
    elog.dev_jga = dev.jga();
    elog.dev_domain_acc = dev.domain_accuracy();
    elog.dev_osr = dev.osr();
    result.log.push_back(elog);
    EMD_INFO("epoch " << epoch << " joint=" << elog.loss_joint << " dev_jga=" << elog.dev_jga
                      << " dev_domain_acc=" << elog.dev_domain_acc);

    if (elog.dev_jga > result.best_dev_jga) {
      result.best_dev_jga = elog.dev_jga;
      result.best_epoch = epoch;
      best = snapshot();
    }
  }
  if (result.best_epoch >= 0) restore(best);
  return result;
}

}  // namespace emd
