// emd: modular dialogue-state tracking - corpus tools, training, evaluation,
// interactive tracking and the inference-complexity benchmark.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "emd/bench.hpp"
#include "emd/checkpoint.hpp"
#include "emd/corpus.hpp"
#include "emd/gradcheck.hpp"
#include "emd/log.hpp"
#include "emd/model.hpp"
#include "emd/multiwoz.hpp"
#include "emd/predictor.hpp"
#include "emd/repl.hpp"
#include "emd/synth.hpp"
#include "emd/tracker.hpp"
#include "emd/train.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct GenArgs {
  std::string config_path;
  uint64_t seed = 7;
  std::string out_dir;
  double train_frac = 0.8, dev_frac = 0.1;
};

void split_corpus(const emd::Corpus& corpus, double train_frac, double dev_frac,
                  emd::Corpus& train, emd::Corpus& dev, emd::Corpus& test) {
  const size_t n = corpus.size();
  const size_t n_train = static_cast<size_t>(n * train_frac);
  const size_t n_dev = static_cast<size_t>(n * dev_frac);
  for (size_t i = 0; i < n; ++i) {
    if (i < n_train)
      train.push_back(corpus[i]);
    else if (i < n_train + n_dev)
      dev.push_back(corpus[i]);
    else
      test.push_back(corpus[i]);
  }
}

int cmd_gen_corpus(const GenArgs& a) {
  emd::SynthConfig cfg =
      a.config_path.empty() ? emd::SynthConfig{} : emd::SynthConfig::load(a.config_path);
  emd::SynthResult synth = emd::generate_synthetic(cfg, a.seed);
  fs::create_directories(a.out_dir);
  synth.ontology.save(a.out_dir + "/ontology.json");
  emd::Corpus train, dev, test;
  split_corpus(synth.corpus, a.train_frac, a.dev_frac, train, dev, test);
  emd::save_corpus_jsonl(train, a.out_dir + "/train.jsonl");
  emd::save_corpus_jsonl(dev, a.out_dir + "/dev.jsonl");
  emd::save_corpus_jsonl(test, a.out_dir + "/test.jsonl");
  std::cout << "wrote " << train.size() << "/" << dev.size() << "/" << test.size()
            << " dialogues (train/dev/test) to " << a.out_dir << "\n";
  return kExitOk;
}

emd::Corpus load_split(const std::string& dir, const char* name, bool required) {
  const std::string path = dir + "/" + name;
  if (!fs::exists(path)) {
    if (required) throw std::runtime_error("missing corpus split: " + path);
    return {};
  }
  return emd::load_corpus_jsonl(path);
}

void print_stats(const char* name, const emd::Corpus& c) {
  const emd::CorpusStats s = emd::stats(c);
  std::cout << name << ": " << s.n_dialogs << " dialogs (" << s.n_single_domain
            << " single-domain, " << s.n_multi_domain << " multi-domain), avg turns "
            << s.avg_turns << "\n";
}

int cmd_ingest(const std::string& multiwoz_dir, const std::string& out_dir,
               const std::string& ontology_path) {
  std::optional<std::string> onto_path;
  if (!ontology_path.empty()) onto_path = ontology_path;
  emd::MultiwozData data = emd::load_multiwoz(multiwoz_dir, onto_path);
  fs::create_directories(out_dir);
  data.ontology.save(out_dir + "/ontology.json");
  emd::save_corpus_jsonl(data.train, out_dir + "/train.jsonl");
  emd::save_corpus_jsonl(data.dev, out_dir + "/dev.jsonl");
  emd::save_corpus_jsonl(data.test, out_dir + "/test.jsonl");
  print_stats("train", data.train);
  print_stats("dev", data.dev);
  print_stats("test", data.test);
  if (data.report.skipped_total > 0)
    std::cout << "skipped " << data.report.skipped_total << " out-of-ontology triplets\n";
  return kExitOk;
}

int cmd_train(const std::string& corpus_dir, const std::string& config_path,
              const std::string& out_ckpt, std::optional<uint64_t> seed_override,
              std::optional<int> epochs_override) {
  emd::TrainConfig cfg =
      config_path.empty() ? emd::TrainConfig{} : emd::TrainConfig::load(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (epochs_override) cfg.epochs = *epochs_override;

  const emd::Ontology onto = emd::Ontology::load(corpus_dir + "/ontology.json");
  const emd::Corpus train = load_split(corpus_dir, "train.jsonl", true);
  const emd::Corpus dev = load_split(corpus_dir, "dev.jsonl", false);
  emd::validate_corpus(train, onto);
  emd::validate_corpus(dev, onto);

  if (cfg.precision != "f32")
    throw std::runtime_error("only f32 training checkpoints are supported from the CLI");
  emd::Vocab vocab = emd::Vocab::build(train, onto);
  emd::Model<float> model(cfg.encoder, vocab, onto);
  model.init_params(cfg.seed);
  emd::TrainResult result = emd::train(model, train, dev, cfg);

  emd::save_checkpoint(model, out_ckpt);
  const std::string metrics_path = emd::checkpoint_blob_path(out_ckpt) + ".metrics.csv";
  std::ofstream mf(metrics_path);
  mf << emd::metrics_csv(result.log);
  std::cout << "best dev JGA " << result.best_dev_jga << " at epoch " << result.best_epoch
            << "; checkpoint " << out_ckpt << "; metrics " << metrics_path << "\n";
  if (result.diverged) {
    std::cout << "training diverged (" << result.divergence_tensor
              << "); checkpoint holds the best earlier state\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_eval(const std::string& corpus_dir, const std::string& split,
             const std::string& model_path, int jobs, bool osr_vs_gold, bool no_mask,
             const std::string& splits, const std::string& json_out) {
  emd::Model<float> model = emd::load_checkpoint<float>(model_path);
  const emd::Corpus corpus = load_split(corpus_dir, (split + ".jsonl").c_str(), true);
  emd::NeuralPredictor<float> predictor(model, !no_mask);
  emd::EvalOptions opts;
  opts.jobs = jobs;
  opts.osr_vs_gold = osr_vs_gold;
  const emd::EvalReport report = emd::evaluate(corpus, predictor, opts);
  std::cout << report.to_table(splits);
  if (!json_out.empty()) {
    std::ofstream jf(json_out);
    jf << report.to_json_string() << "\n";
    std::cout << "report written to " << json_out << "\n";
  }
  return kExitOk;
}

int cmd_track(const std::string& model_path, const std::string& script_path) {
  emd::Model<float> model = emd::load_checkpoint<float>(model_path);
  emd::NeuralPredictor<float> predictor(model);
  if (script_path.empty()) {
    emd::repl(predictor, std::cin, std::cout, false);
  } else {
    std::ifstream script(script_path);
    if (!script) throw std::runtime_error("cannot open script: " + script_path);
    emd::repl(predictor, script, std::cout, true);
  }
  return kExitOk;
}

int cmd_bench(const std::vector<int>& slots, int turns, int hidden, uint64_t seed,
              const std::string& csv_out) {
  emd::EncoderConfig cfg;
  cfg.hidden = hidden;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.max_len = 64;
  const auto rows = emd::bench_itc(slots, turns, cfg, seed);
  const std::string csv = emd::itc_csv(rows);
  std::cout << csv;
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    f << csv;
  }
  return kExitOk;
}

int cmd_grad_check(int dims, double tol, uint64_t seed) {
  emd::SynthConfig sc;
  sc.n_domains = 2;
  sc.stype_per_domain = 2;
  sc.ctype_per_domain = 1;
  sc.values_per_slot = 3;
  sc.n_dialogues = 2;
  sc.min_turns = 2;
  sc.max_turns = 3;
  emd::SynthResult synth = emd::generate_synthetic(sc, seed);
  emd::Vocab vocab = emd::Vocab::build(synth.corpus, synth.ontology);
  emd::EncoderConfig ec;
  ec.hidden = dims;
  ec.layers = 2;
  ec.heads = 2;
  ec.max_len = 64;
  emd::Model<double> model(ec, vocab, synth.ontology);
  model.init_params(seed);
  auto samples = emd::build_samples(synth.corpus, synth.ontology, ec.max_len);
  std::vector<const emd::TurnSample*> batch;
  for (size_t i = 0; i < std::min<size_t>(3, samples.size()); ++i) batch.push_back(&samples[i]);
  const emd::GradCheckReport report = emd::grad_check(model, batch, emd::LossWeights{});
  std::cout << report.to_string();
  if (!report.pass(tol)) {
    std::cout << "FAIL: worst error " << report.worst << " >= " << tol << "\n";
    return kExitRuntime;
  }
  std::cout << "PASS: all tensors within " << tol << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emd - modular dialogue-state tracker"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* sc_gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  sc_gen->add_option("--config", gen.config_path, "synth config JSON");
  sc_gen->add_option("--seed", gen.seed, "generator seed");
  sc_gen->add_option("--out", gen.out_dir, "output directory")->required();
  sc_gen->add_option("--train-frac", gen.train_frac, "train fraction");
  sc_gen->add_option("--dev-frac", gen.dev_frac, "dev fraction");

  std::string mw_dir, mw_out, mw_onto;
  auto* sc_ingest = app.add_subcommand("ingest", "ingest a MultiWoz-2.0-format dump");
  sc_ingest->add_option("--multiwoz", mw_dir, "directory containing data.json")->required();
  sc_ingest->add_option("--out", mw_out, "output directory")->required();
  sc_ingest->add_option("--ontology", mw_onto, "ontology JSON (otherwise derived)");

  std::string tr_corpus, tr_config, tr_out;
  std::optional<uint64_t> tr_seed;
  std::optional<int> tr_epochs;
  auto* sc_train = app.add_subcommand("train", "train a model");
  sc_train->add_option("--corpus", tr_corpus, "corpus directory")->required();
  sc_train->add_option("--config", tr_config, "train config JSON");
  sc_train->add_option("--out", tr_out, "checkpoint manifest path")->required();
  sc_train->add_option("--seed", tr_seed, "seed override");
  sc_train->add_option("--epochs", tr_epochs, "epoch override");

  std::string ev_corpus, ev_split = "test", ev_model, ev_json, ev_splits;
  int ev_jobs = 1;
  bool ev_osr_gold = false, ev_no_mask = false;
  auto* sc_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  sc_eval->add_option("--corpus", ev_corpus, "corpus directory")->required();
  sc_eval->add_option("--split", ev_split, "split name (train|dev|test)");
  sc_eval->add_option("--model", ev_model, "checkpoint manifest")->required();
  sc_eval->add_option("--jobs", ev_jobs, "parallel evaluation workers");
  sc_eval->add_flag("--osr-vs-gold", ev_osr_gold, "measure OSR against gold domains");
  sc_eval->add_flag("--no-mask", ev_no_mask, "disable the constraint mask at decode time");
  sc_eval->add_option("--splits", ev_splits,
                      "split sections to print: cold-hot,single-multi (default all)");
  sc_eval->add_option("--json", ev_json, "write the report as JSON");

  std::string tk_model, tk_script;
  auto* sc_track = app.add_subcommand("track", "interactive turn-by-turn tracking");
  sc_track->add_option("--model", tk_model, "checkpoint manifest")->required();
  sc_track->add_option("--script", tk_script, "read lines from a file");

  std::vector<int> bh_slots = {10, 100, 1000};
  int bh_turns = 5, bh_hidden = 16;
  uint64_t bh_seed = 7;
  std::string bh_csv;
  auto* sc_bench = app.add_subcommand("bench-itc", "inference-pass benchmark");
  sc_bench->add_option("--slots", bh_slots, "S-type slot counts")->delimiter(',');
  sc_bench->add_option("--turns", bh_turns, "turns per dialogue");
  sc_bench->add_option("--hidden", bh_hidden, "encoder width");
  sc_bench->add_option("--seed", bh_seed, "seed");
  sc_bench->add_option("--csv", bh_csv, "also write CSV here");

  int gc_dims = 8;
  double gc_tol = 1e-4;
  uint64_t gc_seed = 11;
  auto* sc_gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
  sc_gc->add_option("--dims", gc_dims, "hidden size");
  sc_gc->add_option("--tol", gc_tol, "max relative error");
  sc_gc->add_option("--seed", gc_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (sc_gen->parsed()) return cmd_gen_corpus(gen);
    if (sc_ingest->parsed()) return cmd_ingest(mw_dir, mw_out, mw_onto);
    if (sc_train->parsed()) return cmd_train(tr_corpus, tr_config, tr_out, tr_seed, tr_epochs);
    if (sc_eval->parsed())
      return cmd_eval(ev_corpus, ev_split, ev_model, ev_jobs, ev_osr_gold, ev_no_mask,
                      ev_splits, ev_json);
    if (sc_track->parsed()) return cmd_track(tk_model, tk_script);
    if (sc_bench->parsed()) return cmd_bench(bh_slots, bh_turns, bh_hidden, bh_seed, bh_csv);
    if (sc_gc->parsed()) return cmd_grad_check(gc_dims, gc_tol, gc_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
