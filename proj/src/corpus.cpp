#include "emd/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "emd/tokenize.hpp"
#include "json.hpp"

namespace emd {

CorpusStats stats(const Corpus& corpus) {
  CorpusStats s;
  s.n_dialogs = static_cast<long>(corpus.size());
  long total_turns = 0;
  for (const auto& d : corpus) {
    total_turns += static_cast<long>(d.turns.size());
    if (domain_count(d) > 1)
      ++s.n_multi_domain;
    else
      ++s.n_single_domain;
  }
  s.avg_turns = s.n_dialogs == 0 ? 0.0 : static_cast<double>(total_turns) / s.n_dialogs;
  if (s.n_dialogs == 0) s.n_single_domain = s.n_multi_domain = 0;
  return s;
}

int domain_count(const Dialogue& d) {
  std::set<std::string> ds;
  for (const auto& t : d.turns) ds.insert(t.gold_domain);
  return static_cast<int>(ds.size());
}

TurnDelta delta_from_cumulative(const BeliefState& prev, const BeliefState& cur) {
  TurnDelta delta;
  for (const auto& t : cur.triplets())
    if (!prev.contains_exact(t)) delta.adds.push_back(t);
  for (const auto& t : prev.triplets())
    if (!cur.contains_exact(t)) delta.removes.push_back(t);
  return delta;
}

namespace {

// All start positions where `needle` occurs as a token subsequence, never
// crossing a marker token.
std::vector<int> subsequence_matches(const std::vector<std::string>& tokens,
                                     const std::vector<std::string>& needle) {
  std::vector<int> starts;
  if (needle.empty()) return starts;
  const int n = static_cast<int>(tokens.size());
  const int k = static_cast<int>(needle.size());
  for (int i = 0; i + k <= n; ++i) {
    bool ok = true;
    for (int j = 0; j < k; ++j) {
      if (is_marker_token(tokens[i + j]) || tokens[i + j] != needle[j]) {
        ok = false;
        break;
      }
    }
    if (ok) starts.push_back(i);
  }
  return starts;
}

}  // namespace

AlignResult align_iob(const DialogueTurn& turn, const Ontology& onto,
                      const std::vector<std::string>& tokens) {
  AlignResult res;
  res.tags.labels.assign(tokens.size(), kIobOutside);

  struct Candidate {
    Triplet triplet;
    int slot_idx;
    std::vector<int> starts;  // match positions, earliest first
    int len;
  };
  std::vector<Candidate> cands;
  for (const auto& t : turn.gold_adds) {
    const std::string q = t.qualified_slot();
    if (!onto.is_stype(q)) {
      if (!onto.is_ctype(q))
        throw std::invalid_argument("gold add names a slot outside the ontology: " + q);
      continue;  // C-type: handled by classification, not tagging
    }
    if (normalize_ctype_value(t.value) == CtypeClass::DontCare) continue;  // never tagged
    std::vector<std::string> needle = word_tokens(t.value);
    if (needle.empty()) {
      res.unmatched.push_back(t);
      continue;
    }
    Candidate c{t, onto.stype_index(q), subsequence_matches(tokens, needle),
                static_cast<int>(needle.size())};
    if (c.starts.empty())
      res.unmatched.push_back(t);
    else
      cands.push_back(std::move(c));
  }

  // Conflict policy: earlier-starting, then longer span wins; a displaced
  // value falls back to its next non-overlapping match.
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.starts[0] != b.starts[0]) return a.starts[0] < b.starts[0];
    if (a.len != b.len) return a.len > b.len;
    return a.triplet.qualified_slot() < b.triplet.qualified_slot();
  });

  std::vector<bool> taken(tokens.size(), false);
  auto span_free = [&](int start, int len) {
    for (int i = start; i < start + len; ++i)
      if (taken[i]) return false;
    return true;
  };
  for (const auto& c : cands) {
    bool placed = false;
    for (int start : c.starts) {
      if (!span_free(start, c.len)) continue;
      res.tags.labels[start] = iob_b(c.slot_idx);
      taken[start] = true;
      for (int i = 1; i < c.len; ++i) {
        res.tags.labels[start + i] = iob_i(c.slot_idx);
        taken[start + i] = true;
      }
      placed = true;
      break;
    }
    if (!placed) res.unmatched.push_back(c.triplet);
  }
  return res;
}

std::map<std::string, CtypeClass> derive_ctype_labels(const DialogueTurn& turn,
                                                      const Ontology& onto) {
  std::map<std::string, CtypeClass> labels;
  for (const auto& q : onto.ctype_of(turn.gold_domain)) labels[q] = CtypeClass::Absent;
  for (const auto& t : turn.gold_adds) {
    const std::string q = t.qualified_slot();
    if (!onto.is_ctype(q)) continue;
    auto cls = normalize_ctype_value(t.value);
    if (!cls)
      throw std::invalid_argument("C-type value for " + q +
                                  " not in normalization table: " + t.value);
    labels[q] = *cls;
  }
  return labels;
}

namespace {

nlohmann::ordered_json triplets_to_json(const std::vector<Triplet>& ts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& t : ts) arr.push_back({t.domain, t.slot, t.value});
  return arr;
}

std::vector<Triplet> triplets_from_json(const nlohmann::json& arr) {
  std::vector<Triplet> out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 3)
      throw std::invalid_argument("triplet entry must be a [domain, slot, value] array");
    out.push_back({e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::string>()});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string dialogue_to_jsonl_line(const Dialogue& d) {
  nlohmann::ordered_json j;
  j["id"] = d.id;
  nlohmann::ordered_json turns = nlohmann::ordered_json::array();
  for (const auto& t : d.turns) {
    nlohmann::ordered_json jt;
    jt["sys"] = t.sys;
    jt["usr"] = t.usr;
    jt["domain"] = t.gold_domain;
    jt["adds"] = triplets_to_json(t.gold_adds);
    jt["removes"] = triplets_to_json(t.gold_removes);
    turns.push_back(std::move(jt));
  }
  j["turns"] = std::move(turns);
  return j.dump();
}

Dialogue dialogue_from_jsonl_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  Dialogue d;
  d.id = j.at("id").get<std::string>();
  int idx = 0;
  for (const auto& jt : j.at("turns")) {
    DialogueTurn t;
    t.sys = jt.at("sys").get<std::string>();
    t.usr = jt.at("usr").get<std::string>();
    t.gold_domain = jt.at("domain").get<std::string>();
    t.gold_adds = triplets_from_json(jt.at("adds"));
    t.gold_removes = triplets_from_json(jt.at("removes"));
    t.turn_index = idx++;
    d.turns.push_back(std::move(t));
  }
  return d;
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& d : corpus) out << dialogue_to_jsonl_line(d) << "\n";
}

Corpus load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      corpus.push_back(dialogue_from_jsonl_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

void validate_corpus(const Corpus& corpus, const Ontology& onto) {
  for (const auto& d : corpus) {
    for (const auto& t : d.turns) {
      if (!onto.has_domain(t.gold_domain))
        throw std::invalid_argument(d.id + ": unknown gold domain " + t.gold_domain);
      std::set<Triplet> adds(t.gold_adds.begin(), t.gold_adds.end());
      for (const auto& tr : t.gold_removes)
        if (adds.count(tr))
          throw std::invalid_argument(d.id + ": triplet in both adds and removes: " +
                                      triplet_to_string(tr));
      for (const auto* list : {&t.gold_adds, &t.gold_removes})
        for (const auto& tr : *list) {
          const std::string q = tr.qualified_slot();
          if (!onto.is_stype(q) && !onto.is_ctype(q))
            throw std::invalid_argument(d.id + ": slot outside ontology: " + q);
        }
    }
  }
}

std::vector<BeliefState> replay_gold_states(const Dialogue& d) {
  std::vector<BeliefState> states;
  BeliefState cur;
  for (const auto& t : d.turns) {
    for (const auto& tr : t.gold_removes) cur.remove_exact(tr);
    for (const auto& tr : t.gold_adds) cur.apply_add(tr);
    states.push_back(cur);
  }
  return states;
}

}  // namespace emd
