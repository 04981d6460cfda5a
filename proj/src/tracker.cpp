#include "emd/tracker.hpp"

#include <iomanip>
#include <sstream>
#include <thread>

#include "emd/tokenize.hpp"
#include "json.hpp"

namespace emd {

TurnOutcome track_turn(TrackSession& session, const std::string& sys, const std::string& usr,
                       TurnPredictor& predictor) {
  const std::vector<Triplet> carried = session.belief.triplets();
  TurnPrediction pred = predictor.predict(sys, usr, session.prev_domain, carried);

  TurnOutcome out;
  out.domain = pred.domain;
  // Correction first, then merge: a removal plus re-add within one turn nets
  // to the new value.
  for (size_t i = 0; i < carried.size(); ++i) {
    if (i < pred.keep_probs.size() && pred.keep_probs[i] < 0.5) {
      session.belief.remove_exact(carried[i]);
      out.removed.push_back(carried[i]);
    }
  }
  for (const auto& t : pred.new_triplets) {
    session.belief.apply_add(t);
    out.added.push_back(t);
  }
  session.prev_domain = pred.domain;
  session.turn_index += 1;
  session.encoder_passes += pred.encoder_sstm_passes;
  session.truncations += pred.truncated;
  out.state = session.belief;
  out.raw = std::move(pred);
  return out;
}

bool states_equal_normalized(const BeliefState& a, const BeliefState& b) {
  auto norm = [](const BeliefState& s) {
    BeliefState out;
    for (const auto& t : s.triplets())
      out.apply_add({t.domain, t.slot, normalize_value(t.value)});
    return out;
  };
  return norm(a) == norm(b);
}

namespace {

struct DialogueResult {
  DialogueEval detail;
  bool multi = false;
  long turns = 0, correct = 0, cold = 0, cold_correct = 0, hot = 0, hot_correct = 0;
  long domain_correct = 0, outliers = 0, predictions = 0;
};

DialogueResult eval_dialogue(const Dialogue& dlg, TurnPredictor& predictor,
                             const EvalOptions& opts) {
  DialogueResult r;
  r.detail.id = dlg.id;
  r.multi = domain_count(dlg) > 1;
  const std::vector<BeliefState> gold = replay_gold_states(dlg);
  TrackSession session;
  for (size_t t = 0; t < dlg.turns.size(); ++t) {
    const auto& turn = dlg.turns[t];
    TurnOutcome outcome = track_turn(session, turn.sys, turn.usr, predictor);
    const bool correct = states_equal_normalized(outcome.state, gold[t]);
    const bool cold = turn.turn_index < opts.cold_threshold;
    ++r.turns;
    r.correct += correct;
    (cold ? r.cold : r.hot) += 1;
    (cold ? r.cold_correct : r.hot_correct) += correct;
    r.domain_correct += outcome.domain == turn.gold_domain;
    const std::string& ref_domain = opts.osr_vs_gold ? turn.gold_domain : outcome.domain;
    for (const auto& nt : outcome.raw.new_triplets) {
      ++r.predictions;
      r.outliers += nt.domain != ref_domain;
    }
  }
  r.detail.turns = static_cast<int>(r.turns);
  r.detail.correct_turns = static_cast<int>(r.correct);
  return r;
}

}  // namespace

EvalReport evaluate(const Corpus& corpus, TurnPredictor& predictor, const EvalOptions& opts) {
  std::vector<DialogueResult> results(corpus.size());
  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1 || corpus.size() < 2) {
    for (size_t i = 0; i < corpus.size(); ++i)
      results[i] = eval_dialogue(corpus[i], predictor, opts);
  } else {
    std::vector<std::thread> workers;
    const int n = static_cast<int>(corpus.size());
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (int i = w; i < n; i += jobs)
          results[i] = eval_dialogue(corpus[i], predictor, opts);
      });
    }
    for (auto& th : workers) th.join();
  }

  EvalReport rep;
  rep.n_dialogues = static_cast<long>(corpus.size());
  for (const auto& r : results) {
    rep.turns_total += r.turns;
    rep.turns_correct += r.correct;
    (r.multi ? rep.multi_total : rep.single_total) += r.turns;
    (r.multi ? rep.multi_correct : rep.single_correct) += r.correct;
    rep.cold_total += r.cold;
    rep.cold_correct += r.cold_correct;
    rep.hot_total += r.hot;
    rep.hot_correct += r.hot_correct;
    rep.domain_correct += r.domain_correct;
    rep.osr_outliers += r.outliers;
    rep.osr_predictions += r.predictions;
    rep.details.push_back(r.detail);
  }
  return rep;
}

std::string EvalReport::to_json_string() const {
  nlohmann::ordered_json j;
  auto metric = [](double v, long den) -> nlohmann::ordered_json {
    if (den == 0) return nullptr;
    return v;
  };
  j["jga"] = metric(jga(), turns_total);
  j["jga_single"] = metric(jga_single(), single_total);
  j["jga_multi"] = metric(jga_multi(), multi_total);
  j["jga_cold"] = metric(jga_cold(), cold_total);
  j["jga_hot"] = metric(jga_hot(), hot_total);
  j["domain_accuracy"] = metric(domain_accuracy(), turns_total);
  j["osr"] = metric(osr(), osr_predictions);
  j["turns"] = turns_total;
  j["dialogues"] = n_dialogues;
  nlohmann::ordered_json det = nlohmann::ordered_json::array();
  for (const auto& d : details)
    det.push_back({{"id", d.id}, {"turns", d.turns}, {"correct_turns", d.correct_turns}});
  j["details"] = std::move(det);
  return j.dump(2);
}

std::string EvalReport::to_table(const std::string& splits) const {
  const bool all = splits.empty();
  auto wants = [&](const char* key) {
    return all || splits.find(key) != std::string::npos;
  };
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  auto row = [&](const char* name, double v, long den) {
    os << "  " << std::left << std::setw(16) << name;
    if (den == 0)
      os << "n/a\n";
    else
      os << v << "\n";
  };
  os << "evaluation over " << n_dialogues << " dialogues, " << turns_total << " turns\n";
  row("jga", jga(), turns_total);
  if (wants("single-multi")) {
    row("jga_single", jga_single(), single_total);
    row("jga_multi", jga_multi(), multi_total);
  }
  if (wants("cold-hot")) {
    row("jga_cold", jga_cold(), cold_total);
    row("jga_hot", jga_hot(), hot_total);
  }
  row("domain_acc", domain_accuracy(), turns_total);
  row("osr", osr(), osr_predictions);
  return os.str();
}

}  // namespace emd
