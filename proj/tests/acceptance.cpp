// Acceptance suite. Runs every release criterion at its stated tolerance and
// prints one [PASS]/[FAIL] line per criterion; exits 1 if any fail.
//
// Scale note: the reference headline numbers for this architecture on the
// full MultiWoz 2.0 benchmark (JGA ~51%) depend on a large pretrained
// encoder and are NOT reproduced at desk scale; the property checks below
// are the verification contract instead. The optional ingestion criterion
// runs only when EMD_MULTIWOZ_DIR points at a real MultiWoz 2.0 dump.

#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emd/bench.hpp"
#include "emd/checkpoint.hpp"
#include "emd/corpus.hpp"
#include "emd/gradcheck.hpp"
#include "emd/heads.hpp"
#include "emd/log.hpp"
#include "emd/losses.hpp"
#include "emd/model.hpp"
#include "emd/multiwoz.hpp"
#include "emd/predictor.hpp"
#include "emd/rng.hpp"
#include "emd/synth.hpp"
#include "emd/tracker.hpp"
#include "emd/train.hpp"

using namespace emd;

namespace {

int g_failures = 0;
std::string g_cli;
std::string g_tmpdir;

void report(const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] %-34s %s(%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : (detail + " ").c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void criterion(const std::string& name, const std::function<bool(std::string&)>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(name, ok, detail, secs);
}

struct CliResult {
  int exit_code;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string out_path = g_tmpdir + "/cli_out.txt";
  const std::string cmd = g_cli + " " + args + " >" + out_path + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::ostringstream os;
  os << in.rdbuf();
  return {WEXITSTATUS(rc), os.str()};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---- shared fixtures ----

SynthConfig overfit_config() {
  SynthConfig c;  // 3 domains, 12 S-type slots, 4 C-type slots
  c.n_domains = 3;
  c.stype_per_domain = 4;
  c.ctype_counts = {2, 1, 1};
  c.values_per_slot = 6;
  c.n_dialogues = 50;
  c.min_turns = 2;
  c.max_turns = 8;
  return c;
}

struct TrainedOverfit {
  SynthResult synth;
  std::optional<Model<float>> model;
  double jga = 0, domain_acc = 0;
  double train_seconds = 0;
  bool ready = false;
};

TrainedOverfit& overfit_run() {
  static TrainedOverfit state;
  if (state.ready) return state;
  const auto t0 = std::chrono::steady_clock::now();
  state.synth = generate_synthetic(overfit_config(), 42);
  Vocab vocab = Vocab::build(state.synth.corpus, state.synth.ontology);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 16;
  cfg.epochs = 30;
  cfg.seed = 1;
  cfg.encoder.hidden = 64;
  cfg.encoder.layers = 2;
  cfg.encoder.heads = 4;
  cfg.encoder.max_len = 64;
  state.model.emplace(cfg.encoder, vocab, state.synth.ontology);
  state.model->init_params(cfg.seed);
  train(*state.model, state.synth.corpus, state.synth.corpus, cfg);
  state.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  NeuralPredictor<float> predictor(*state.model);
  const EvalReport rep = evaluate(state.synth.corpus, predictor);
  state.jga = rep.jga();
  state.domain_acc = rep.domain_accuracy();
  state.ready = true;
  return state;
}

// Scripted predictor for the metric-oracle fixture.
struct ScriptTurn {
  std::string domain;
  std::vector<Triplet> new_triplets;
  std::map<std::pair<std::string, std::string>, double> keep_overrides;
};

class TablePredictor : public TurnPredictor {
 public:
  std::map<std::string, ScriptTurn> script;
  TurnPrediction predict(const std::string&, const std::string& usr,
                         const std::optional<std::string>&,
                         const std::vector<Triplet>& carried) override {
    const ScriptTurn& st = script.at(usr);
    TurnPrediction out;
    out.domain = st.domain;
    out.new_triplets = st.new_triplets;
    out.encoder_sstm_passes = 1;
    for (const auto& t : carried) {
      auto it = st.keep_overrides.find({t.domain, t.slot});
      out.keep_probs.push_back(it == st.keep_overrides.end() ? 1.0 : it->second);
    }
    return out;
  }
};

DialogueTurn mk_turn(int idx, std::string domain, std::string usr, std::vector<Triplet> adds,
                     std::vector<Triplet> removes) {
  DialogueTurn t;
  t.turn_index = idx;
  t.gold_domain = std::move(domain);
  t.usr = std::move(usr);
  std::sort(adds.begin(), adds.end());
  std::sort(removes.begin(), removes.end());
  t.gold_adds = std::move(adds);
  t.gold_removes = std::move(removes);
  return t;
}

// ---- criteria ----

bool crit_grad_fidelity(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthConfig sc;
  sc.n_domains = 2;
  sc.stype_per_domain = 2;
  sc.ctype_per_domain = 1;
  sc.values_per_slot = 3;
  sc.n_dialogues = 2;
  sc.min_turns = 2;
  sc.max_turns = 3;
  const SynthResult synth = generate_synthetic(sc, 11);
  Vocab vocab = Vocab::build(synth.corpus, synth.ontology);
  EncoderConfig ec;
  ec.hidden = 8;
  ec.layers = 2;
  ec.heads = 2;
  ec.max_len = 64;
  Model<double> model(ec, vocab, synth.ontology);
  model.init_params(11);
  auto samples = build_samples(synth.corpus, synth.ontology, ec.max_len);
  std::vector<const TurnSample*> batch;
  for (size_t i = 0; i < std::min<size_t>(3, samples.size()); ++i) batch.push_back(&samples[i]);

  double worst = 0;
  const LossWeights variants[6] = {{1, 1, 1, 1, 1}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0},
                                   {0, 0, 1, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 1}};
  for (const auto& w : variants) {
    const GradCheckReport rep = grad_check(model, batch, w, 1e-5);
    worst = std::max(worst, rep.worst);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail = "worst rel err " + fmt(worst) + " over joint+5 components";
  return worst < 1e-4 && secs < 60.0;
}

bool crit_r_real(std::string& detail) {
  const Ontology onto =
      Ontology::make({"d"}, {"d.s0", "d.s1", "d.s2", "d.s3", "d.s4"}, {{"d", {"d.c0"}}});
  const int s = onto.num_stype();
  long cases = 0;
  for (int mask = 0; mask < (1 << s); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k > 5) continue;
    std::vector<std::string> slots;
    std::vector<double> expect(s + 1, 0.0);  // hand-built oracle
    if (k == 0) {
      expect[s] = 1.0;
    } else {
      for (int i = 0; i < s; ++i)
        if (mask & (1 << i)) expect[i] = 1.0 / k;
    }
    for (int i = 0; i < s; ++i)
      if (mask & (1 << i)) slots.push_back(onto.stype[i]);
    const ConstraintDistribution r = build_r_real(slots, onto);
    if (r.probs != expect) {
      detail = "mismatch at subset mask " + std::to_string(mask);
      return false;
    }
    ++cases;
  }
  detail = std::to_string(cases) + " subsets, exact equality";
  return true;
}

bool crit_kl(std::string& detail) {
  if (std::abs(kl_divergence({1.0, 0.0}, {0.5, 0.5}) - 0.6931471805599453) >= 1e-9) {
    detail = "ln 2 value off";
    return false;
  }
  if (std::abs(kl_divergence({0.5, 0.5}, {0.75, 0.25}) - 0.14384103622589045) >= 1e-9) {
    detail = "0.5*ln(4/3) value off";
    return false;
  }
  Rng rng(909);
  for (int iter = 0; iter < 1000; ++iter) {
    const int n = 2 + rng.next_int(7);
    std::vector<double> p(n), q(n);
    double ps = 0, qs = 0;
    for (int i = 0; i < n; ++i) {
      p[i] = rng.uniform(1e-4, 1.0);
      q[i] = rng.uniform(1e-4, 1.0);
      ps += p[i];
      qs += q[i];
    }
    for (int i = 0; i < n; ++i) {
      p[i] /= ps;
      q[i] /= qs;
    }
    if (kl_divergence(p, p) != 0.0 || kl_divergence(p, q) < -1e-12) {
      detail = "property violated at iteration " + std::to_string(iter);
      return false;
    }
  }
  detail = "two frozen values to 1e-9; 1000 random pairs";
  return true;
}

bool crit_masking(std::string& detail) {
  const Ontology onto = Ontology::make(
      {"hotel", "train"},
      {"hotel.area", "hotel.name", "train.day", "train.departure", "train.destination"}, {});
  const int s = onto.num_stype();
  Rng rng(4242);
  for (int iter = 0; iter < 1000; ++iter) {
    const int n_tok = 3 + rng.next_int(6);
    std::vector<std::vector<double>> rows(n_tok, std::vector<double>(iob_label_count(s)));
    for (auto& row : rows)
      for (auto& v : row) v = rng.uniform(0.0, 1.0);

    // zero-propagation
    ConstraintDistribution rz;
    rz.probs.assign(s + 1, 1.0);
    const int dead = rng.next_int(s);
    rz.probs[dead] = 0.0;
    for (const auto& row : rows) {
      const auto masked = mask_tag_scores(row, rz);
      if (masked[iob_b(dead)] != 0.0 || masked[iob_i(dead)] != 0.0) {
        detail = "zero propagation violated";
        return false;
      }
    }

    // uniform R decodes exactly like no mask
    ConstraintDistribution uniform;
    uniform.probs.assign(s + 1, 1.0 / (s + 1));
    std::vector<int> unmasked;
    for (const auto& row : rows) unmasked.push_back(argmax_tie_first(row));
    if (masked_argmax_tags(rows, uniform) != unmasked) {
      detail = "uniform-R decode differs from unmasked";
      return false;
    }

    // positive rescaling never changes decoded output
    ConstraintDistribution r;
    r.probs.resize(s + 1);
    for (auto& v : r.probs) v = rng.uniform(0.01, 1.0);
    ConstraintDistribution scaled = r;
    const double c = rng.uniform(0.25, 40.0);
    for (auto& v : scaled.probs) v *= c;
    if (masked_argmax_tags(rows, r) != masked_argmax_tags(rows, scaled)) {
      detail = "rescale changed decoding";
      return false;
    }
  }
  detail = "1000 random cases";
  return true;
}

bool crit_state_machine(std::string& detail) {
  SynthConfig sc;
  sc.n_dialogues = 500;
  const SynthResult synth = generate_synthetic(sc, 77);
  long turns = 0;
  for (size_t i = 0; i < synth.corpus.size(); ++i) {
    BeliefState state;
    for (size_t t = 0; t < synth.corpus[i].turns.size(); ++t) {
      const auto& turn = synth.corpus[i].turns[t];
      for (const auto& r : turn.gold_removes) state.remove_exact(r);
      for (const auto& a : turn.gold_adds) state.apply_add(a);
      if (!(state == synth.gold_states[i][t])) {
        detail = "mismatch in " + synth.corpus[i].id + " turn " + std::to_string(t);
        return false;
      }
      ++turns;
    }
  }
  detail = "500 dialogues, " + std::to_string(turns) + " turns, zero mismatches";
  return true;
}

bool crit_overfit(std::string& detail) {
  TrainedOverfit& run = overfit_run();
  detail = "JGA " + fmt(run.jga) + ", domain acc " + fmt(run.domain_acc) + ", " +
           fmt(run.train_seconds) + "s";
  return run.jga >= 0.95 && run.domain_acc >= 0.98 && run.train_seconds < 600.0;
}

bool crit_trained_heads(std::string& detail) {
  TrainedOverfit& run = overfit_run();
  if (!run.ready) {
    detail = "overfit model unavailable";
    return false;
  }
  const Ontology& onto = run.synth.ontology;
  NeuralPredictor<float> predictor(*run.model);

  // Constraint mass concentrates on the gold domain's slots on a turn with
  // S-type adds.
  bool checked_r = false, checked_keep = false, checked_persist = false, checked_yes = false;
  for (size_t di = 0; di < run.synth.corpus.size(); ++di) {
    const Dialogue& dlg = run.synth.corpus[di];
    BeliefState prev;
    std::optional<std::string> prev_domain;
    for (const auto& turn : dlg.turns) {
      bool has_s_add = false, has_yes_add = false;
      for (const auto& a : turn.gold_adds) {
        has_s_add = has_s_add || onto.is_stype(a.qualified_slot());
        has_yes_add = has_yes_add || (onto.is_ctype(a.qualified_slot()) && a.value == "yes");
      }
      PredictDetail det;
      const auto carried = prev.triplets();
      auto raw = predictor.predict_detailed(turn.sys, turn.usr, prev_domain, carried, &det);

      if (!checked_r && has_s_add) {
        double mass = 0;
        for (int q = 0; q < onto.num_stype(); ++q)
          if (split_qualified(onto.stype[q]).first == turn.gold_domain)
            mass += det.constraint.probs[q];
        if (mass <= 0.8) {
          detail = "constraint mass on gold domain " + fmt(mass) + " <= 0.8";
          return false;
        }
        checked_r = true;
      }

      // Correction head: the rule-removed triplet scores keep < 0.5 while a
      // carried unrelated-domain triplet scores keep >= 0.5.
      if (!turn.gold_removes.empty()) {
        std::set<std::pair<std::string, std::string>> readded;
        for (const auto& a : turn.gold_adds) readded.insert({a.domain, a.slot});
        for (size_t ci = 0; ci < carried.size(); ++ci) {
          const bool removed =
              std::find(turn.gold_removes.begin(), turn.gold_removes.end(), carried[ci]) !=
              turn.gold_removes.end();
          if (removed && !readded.count({carried[ci].domain, carried[ci].slot})) {
            if (raw.keep_probs[ci] >= 0.5) {
              detail = "rule-removed triplet kept: " + triplet_to_string(carried[ci]);
              return false;
            }
            checked_keep = true;
          }
          if (!removed && carried[ci].domain != turn.gold_domain) {
            if (raw.keep_probs[ci] < 0.5) {
              detail = "persistent cross-domain triplet dropped: " +
                       triplet_to_string(carried[ci]);
              return false;
            }
            checked_persist = true;
          }
        }
      }

      if (!checked_yes && has_yes_add && raw.domain == turn.gold_domain) {
        for (const auto& a : turn.gold_adds) {
          if (!onto.is_ctype(a.qualified_slot()) || a.value != "yes") continue;
          const bool emitted =
              std::find(raw.new_triplets.begin(), raw.new_triplets.end(), a) !=
              raw.new_triplets.end();
          if (!emitted) {
            detail = "yes-class C-type triplet not emitted: " + triplet_to_string(a);
            return false;
          }
          checked_yes = true;
        }
      }

      for (const auto& r : turn.gold_removes) prev.remove_exact(r);
      for (const auto& a : turn.gold_adds) prev.apply_add(a);
      prev_domain = turn.gold_domain;
    }
  }
  if (!(checked_r && checked_keep && checked_persist && checked_yes)) {
    detail = "corpus lacked a scenario to assert";
    return false;
  }
  detail = "constraint mass, removal, persistence, C-type yes all hold";
  return true;
}

bool crit_ablation(std::string& detail) {
  SynthConfig sc = overfit_config();
  sc.n_dialogues = 120;
  const SynthResult synth = generate_synthetic(sc, 101);
  Corpus train_split, test_split;
  for (size_t i = 0; i < synth.corpus.size(); ++i)
    (i < 84 ? train_split : test_split).push_back(synth.corpus[i]);

  Vocab vocab = Vocab::build(train_split, synth.ontology);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 16;
  cfg.epochs = 4;  // deliberately short: generalization errors expose outliers
  cfg.seed = 1;
  cfg.encoder.hidden = 32;
  cfg.encoder.layers = 2;
  cfg.encoder.heads = 4;
  cfg.encoder.max_len = 64;
  Model<float> model(cfg.encoder, vocab, synth.ontology);
  model.init_params(cfg.seed);
  train(model, train_split, train_split, cfg);

  NeuralPredictor<float> masked(model, true);
  NeuralPredictor<float> unmasked(model, false);
  const double osr_masked = evaluate(test_split, masked).osr();
  const double osr_unmasked = evaluate(test_split, unmasked).osr();
  detail = "OSR masked " + fmt(osr_masked) + " < unmasked " + fmt(osr_unmasked);
  return osr_masked < osr_unmasked;
}

bool crit_itc(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string csv_path = g_tmpdir + "/itc.csv";
  const CliResult res =
      run_cli("bench-itc --slots 10,100,1000 --turns 5 --hidden 16 --seed 7 --csv " + csv_path);
  if (res.exit_code != 0) {
    detail = "bench-itc exited " + std::to_string(res.exit_code);
    return false;
  }
  std::ifstream csv(csv_path);
  if (!csv) {
    detail = "CSV artifact missing";
    return false;
  }
  std::string line;
  std::getline(csv, line);
  if (line != "s,emd_passes,stub_passes,cscm_passes,dscm_passes") {
    detail = "unexpected CSV header";
    return false;
  }
  const int expect_s[3] = {10, 100, 1000};
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(csv, line)) {
      detail = "CSV truncated";
      return false;
    }
    int s = 0;
    double emd_p = -1, stub_p = -1, cscm = -1, dscm = -1;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &s, &emd_p, &stub_p, &cscm, &dscm) != 5 ||
        s != expect_s[i] || emd_p != 1.0 || stub_p != static_cast<double>(s)) {
      detail = "row mismatch: " + line;
      return false;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail = "pipeline passes 1,1,1; baseline 10,100,1000";
  return secs < 60.0;
}

bool crit_metric_oracles(std::string& detail) {
  Corpus corpus;
  TablePredictor predictor;
  {
    Dialogue a;
    a.id = "A";
    a.turns.push_back(mk_turn(0, "alpha", "a-t0", {{"alpha", "x", "v1"}}, {}));
    a.turns.push_back(
        mk_turn(1, "alpha", "a-t1", {{"alpha", "x", "v2"}}, {{"alpha", "x", "v1"}}));
    predictor.script["a-t0"] = {"alpha", {{"alpha", "x", "v1"}}, {}};
    predictor.script["a-t1"] = {"alpha", {{"alpha", "x", "wrong"}}, {}};
    Dialogue b;
    b.id = "B";
    b.turns.push_back(mk_turn(0, "alpha", "b-t0", {{"alpha", "x", "a0"}}, {}));
    b.turns.push_back(mk_turn(1, "beta", "b-t1", {{"beta", "y", "b0"}}, {}));
    b.turns.push_back(mk_turn(2, "beta", "b-t2", {}, {}));
    b.turns.push_back(mk_turn(3, "beta", "b-t3", {}, {}));
    b.turns.push_back(
        mk_turn(4, "beta", "b-t4", {{"beta", "y", "b1"}}, {{"beta", "y", "b0"}}));
    b.turns.push_back(mk_turn(5, "beta", "b-t5", {}, {}));
    b.turns.push_back(mk_turn(6, "beta", "b-t6", {}, {}));
    predictor.script["b-t0"] = {"alpha", {{"alpha", "x", "a0"}}, {}};
    predictor.script["b-t1"] = {"beta", {{"beta", "y", "b0"}}, {}};
    predictor.script["b-t2"] = {"beta", {}, {}};
    predictor.script["b-t3"] = {"alpha", {{"alpha", "x", "a0"}}, {}};
    predictor.script["b-t4"] = {"beta", {{"beta", "y", "b1"}}, {}};
    predictor.script["b-t5"] = {"beta", {{"alpha", "x", "junk"}}, {}};
    predictor.script["b-t6"] = {"beta", {{"alpha", "x", "a0"}}, {}};
    Dialogue c;
    c.id = "C";
    c.turns.push_back(mk_turn(0, "beta", "c-t0", {{"beta", "y", "c0"}}, {}));
    predictor.script["c-t0"] = {"beta", {{"beta", "y", "c0"}}, {}};
    corpus = {a, b, c};
  }
  const EvalReport rep = evaluate(corpus, predictor);
  // Hand counts: 10 turns, 8 exact states; single 2/3, multi 6/7; cold 7/9,
  // hot 1/1; domains 9/10; 9 emitted triplets, 2 off the predicted domain.
  auto expect_eq = [&](const char* name, double got, double want) {
    if (got != want) {
      detail = std::string(name) + " got " + fmt(got) + " want " + fmt(want);
      return false;
    }
    return true;
  };
  if (!expect_eq("jga", rep.jga(), 8.0 / 10.0)) return false;
  if (!expect_eq("jga_single", rep.jga_single(), 2.0 / 3.0)) return false;
  if (!expect_eq("jga_multi", rep.jga_multi(), 6.0 / 7.0)) return false;
  if (!expect_eq("jga_cold", rep.jga_cold(), 7.0 / 9.0)) return false;
  if (!expect_eq("jga_hot", rep.jga_hot(), 1.0)) return false;
  if (!expect_eq("domain_acc", rep.domain_accuracy(), 9.0 / 10.0)) return false;
  if (!expect_eq("osr", rep.osr(), 2.0 / 9.0)) return false;
  EvalOptions gold_ref;
  gold_ref.osr_vs_gold = true;
  if (!expect_eq("osr_vs_gold", evaluate(corpus, predictor, gold_ref).osr(), 3.0 / 9.0))
    return false;
  detail = "7 metrics exactly equal to hand counts";
  return true;
}

bool crit_checkpoint_roundtrip(std::string& detail) {
  TrainedOverfit& run = overfit_run();
  if (!run.ready) {
    detail = "overfit model unavailable";
    return false;
  }
  NeuralPredictor<float> before(*run.model);
  const std::string report_before = evaluate(run.synth.corpus, before).to_json_string();
  const std::string path = g_tmpdir + "/accept_model.json";
  save_checkpoint(*run.model, path);
  Model<float> loaded = load_checkpoint<float>(path);
  NeuralPredictor<float> after(loaded);
  const std::string report_after = evaluate(run.synth.corpus, after).to_json_string();
  if (report_before != report_after) {
    detail = "reports differ after save/load";
    return false;
  }
  // And the blob itself round-trips byte-exactly.
  const std::string path2 = g_tmpdir + "/accept_model2.json";
  save_checkpoint(loaded, path2);
  std::ifstream b1(checkpoint_blob_path(path), std::ios::binary);
  std::ifstream b2(checkpoint_blob_path(path2), std::ios::binary);
  std::ostringstream s1, s2;
  s1 << b1.rdbuf();
  s2 << b2.rdbuf();
  if (s1.str() != s2.str() || s1.str().empty()) {
    detail = "blob bytes differ after round-trip";
    return false;
  }
  detail = "bit-identical report and blob";
  return true;
}

bool crit_ingestion_optional(std::string& detail) {
  const char* dir = std::getenv("EMD_MULTIWOZ_DIR");
  if (!dir) {
    detail = "SKIP: set EMD_MULTIWOZ_DIR to a MultiWoz 2.0 dump to enable";
    return true;
  }
  const MultiwozData data = load_multiwoz(dir);
  const long n_train = static_cast<long>(data.train.size());
  const long n_dev = static_cast<long>(data.dev.size());
  const long n_test = static_cast<long>(data.test.size());
  if (n_train != 8438 || n_dev != 1000 || n_test != 1000) {
    detail = "split counts " + std::to_string(n_train) + "/" + std::to_string(n_dev) + "/" +
             std::to_string(n_test) + " != 8438/1000/1000";
    return false;
  }
  for (const Corpus* c : {&data.train, &data.dev, &data.test})
    for (const auto& dlg : *c) {
      // replay must never throw and states must re-apply cleanly
      replay_gold_states(dlg);
    }
  detail = "split counts match; delta replay clean on all dialogues";
  return true;
}

bool crit_cli_surface(std::string& detail) {
  // unknown flag -> usage error (1)
  if (run_cli("eval --definitely-not-a-flag").exit_code != 1) {
    detail = "unknown flag did not exit 1";
    return false;
  }
  // missing file -> runtime error (2)
  if (run_cli("eval --corpus /nonexistent --model /nonexistent.json").exit_code != 2) {
    detail = "missing file did not exit 2";
    return false;
  }

  // deterministic corpus generation + training digests
  const std::string d1 = g_tmpdir + "/gen1", d2 = g_tmpdir + "/gen2";
  const std::string synth_cfg = g_tmpdir + "/synth.json";
  {
    std::ofstream f(synth_cfg);
    f << R"({"n_dialogues": 12, "n_domains": 2, "stype_per_domain": 2})";
  }
  if (run_cli("gen-corpus --config " + synth_cfg + " --seed 7 --out " + d1).exit_code != 0 ||
      run_cli("gen-corpus --config " + synth_cfg + " --seed 7 --out " + d2).exit_code != 0) {
    detail = "gen-corpus failed";
    return false;
  }
  for (const char* name : {"/train.jsonl", "/dev.jsonl", "/test.jsonl", "/ontology.json"}) {
    std::ifstream f1(d1 + name), f2(d2 + name);
    std::ostringstream c1, c2;
    c1 << f1.rdbuf();
    c2 << f2.rdbuf();
    if (c1.str() != c2.str()) {
      detail = std::string("gen-corpus not byte-identical for ") + name;
      return false;
    }
  }

  const std::string train_cfg = g_tmpdir + "/train.json";
  {
    std::ofstream f(train_cfg);
    f << R"({"learning_rate": 0.002, "batch_size": 8, "epochs": 2, "seed": 5,
             "encoder": {"hidden": 16, "layers": 1, "heads": 2, "max_len": 64}})";
  }
  if (run_cli("train --corpus " + d1 + " --config " + train_cfg + " --out " + g_tmpdir +
              "/t1.json")
              .exit_code != 0 ||
      run_cli("train --corpus " + d1 + " --config " + train_cfg + " --out " + g_tmpdir +
              "/t2.json")
              .exit_code != 0) {
    detail = "train failed";
    return false;
  }
  {
    std::ifstream f1(g_tmpdir + "/t1.bin", std::ios::binary);
    std::ifstream f2(g_tmpdir + "/t2.bin", std::ios::binary);
    std::ostringstream c1, c2;
    c1 << f1.rdbuf();
    c2 << f2.rdbuf();
    if (c1.str().empty() || c1.str() != c2.str()) {
      detail = "seeded training checkpoints differ";
      return false;
    }
  }

  // scripted tracking transcript is deterministic
  const std::string script = g_tmpdir + "/script.txt";
  {
    std::ofstream f(script);
    f << "hello , how can i help you ?\nabout the cinema , set the area to amber .\n"
      << ":state\n:quit\n";
  }
  const CliResult r1 = run_cli("track --model " + g_tmpdir + "/t1.json --script " + script);
  const CliResult r2 = run_cli("track --model " + g_tmpdir + "/t1.json --script " + script);
  if (r1.exit_code != 0 || r1.out != r2.out || r1.out.find("[turn 0]") == std::string::npos) {
    detail = "track transcript not deterministic";
    return false;
  }

  // eval prints the metric table and exits 0
  const CliResult ev =
      run_cli("eval --corpus " + d1 + " --split train --model " + g_tmpdir + "/t1.json");
  if (ev.exit_code != 0 || ev.out.find("jga") == std::string::npos) {
    detail = "eval output missing metrics";
    return false;
  }
  detail = "exit codes, determinism, transcript, eval table";
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: emd_acceptance <path-to-emd-cli>\n");
    return 1;
  }
  g_cli = argv[1];
  char tmpl[] = "/tmp/emd_accept_XXXXXX";
  if (!mkdtemp(tmpl)) {
    std::fprintf(stderr, "cannot create temp dir\n");
    return 1;
  }
  g_tmpdir = tmpl;
  setenv("EMD_LOG", "error", 1);      // CLI subprocesses
  set_log_threshold(LogLevel::Error); // this process (threshold was read at startup)

  std::printf("NOTE reference full-scale JGA (51.03 overall / 50.18 multi-domain) requires a\n"
              "     large pretrained encoder and is out of scope at desk scale; the checks\n"
              "     below are the verification contract.\n");

  criterion("gradient-fidelity", crit_grad_fidelity);
  criterion("r-real-construction", crit_r_real);
  criterion("kl-properties", crit_kl);
  criterion("masking-semantics", crit_masking);
  criterion("state-machine-oracle", crit_state_machine);
  criterion("overfit-capacity", crit_overfit);
  criterion("trained-head-behaviors", crit_trained_heads);
  criterion("constraint-ablation-osr", crit_ablation);
  criterion("itc-benchmark", crit_itc);
  criterion("metric-oracles", crit_metric_oracles);
  criterion("checkpoint-roundtrip", crit_checkpoint_roundtrip);
  criterion("multiwoz-ingestion(optional)", crit_ingestion_optional);
  criterion("cli-surface", crit_cli_surface);

  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
