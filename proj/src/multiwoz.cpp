#include "emd/multiwoz.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "emd/log.hpp"
#include "emd/tokenize.hpp"
#include "json.hpp"

namespace emd {

namespace {

bool absent_value(const std::string& v) {
  const std::string n = normalize_value(v);
  return n.empty() || n == "not mentioned" || n == "none";
}

// Cumulative state from one system entry's metadata block.
BeliefState state_from_metadata(const nlohmann::json& meta, const std::string& dlg_id) {
  BeliefState state;
  if (!meta.is_object())
    throw std::runtime_error(dlg_id + ": metadata is not an object");
  for (const auto& [domain_raw, sections] : meta.items()) {
    const std::string domain = normalize_value(domain_raw);
    if (!sections.is_object()) continue;
    for (const char* section : {"semi", "book"}) {
      if (!sections.contains(section)) continue;
      const auto& kv = sections[section];
      if (!kv.is_object())
        throw std::runtime_error(dlg_id + ": " + domain + "." + section + " is not an object");
      for (const auto& [slot_raw, val] : kv.items()) {
        if (slot_raw == "booked") continue;
        if (!val.is_string()) continue;
        const std::string value = normalize_value(val.get<std::string>());
        if (absent_value(value)) continue;
        state.apply_add({domain, normalize_value(slot_raw), value});
      }
    }
  }
  return state;
}

std::optional<std::set<std::string>> read_id_list(const std::string& dir, const char* stem) {
  for (const char* ext : {".txt", ".json"}) {
    std::ifstream in(dir + "/" + stem + ext);
    if (!in) continue;
    std::set<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) ids.insert(line);
    }
    return ids;
  }
  return std::nullopt;
}

std::string majority_changed_domain(const TurnDelta& delta,
                                    const std::optional<std::string>& prev) {
  std::map<std::string, int> counts;
  for (const auto* list : {&delta.adds, &delta.removes})
    for (const auto& t : *list) ++counts[t.domain];
  if (counts.empty()) return "";
  int best = 0;
  for (const auto& [d, n] : counts) best = std::max(best, n);
  std::vector<std::string> tied;
  for (const auto& [d, n] : counts)
    if (n == best) tied.push_back(d);
  if (tied.size() == 1) return tied[0];
  if (prev && std::find(tied.begin(), tied.end(), *prev) != tied.end()) return *prev;
  return tied[0];  // already sorted (map order)
}

}  // namespace

MultiwozData load_multiwoz(const std::string& dir,
                           const std::optional<std::string>& ontology_path) {
  const std::string data_path = dir + "/data.json";
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + data_path);
  nlohmann::json data;
  try {
    in >> data;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(data_path + ": " + e.what());
  }
  if (!data.is_object()) throw std::runtime_error(data_path + ": top level is not an object");

  MultiwozData out;
  out.report.n_source_dialogues = static_cast<long>(data.size());

  // Pass 1: per-dialogue cumulative states, plus observed slot/value sets.
  struct RawDialogue {
    std::string id;
    std::vector<std::pair<std::string, std::string>> sys_usr;
    std::vector<BeliefState> states;
  };
  std::vector<RawDialogue> raw;
  std::map<std::string, std::set<std::string>> slot_values;  // qualified -> normalized values
  std::set<std::string> domains;

  for (const auto& [id, dlg] : data.items()) {
    if (!dlg.is_object() || !dlg.contains("log") || !dlg["log"].is_array())
      throw std::runtime_error(id + ": dialogue has no log array");
    const auto& log = dlg["log"];
    RawDialogue rd;
    rd.id = id;
    const size_t n_turns = log.size() / 2;
    for (size_t t = 0; t < n_turns; ++t) {
      const auto& usr_entry = log[2 * t];
      const auto& sys_entry = log[2 * t + 1];
      if (!usr_entry.contains("text") || !sys_entry.contains("text"))
        throw std::runtime_error(id + ": log entry missing text");
      const std::string sys = t == 0 ? "" : log[2 * t - 1]["text"].get<std::string>();
      const std::string usr = usr_entry["text"].get<std::string>();
      if (!sys_entry.contains("metadata"))
        throw std::runtime_error(id + ": system entry missing metadata");
      BeliefState state = state_from_metadata(sys_entry["metadata"], id);
      for (const auto& tr : state.triplets()) {
        slot_values[tr.qualified_slot()].insert(tr.value);
        domains.insert(tr.domain);
      }
      rd.sys_usr.emplace_back(sys, usr);
      rd.states.push_back(std::move(state));
    }
    if (!rd.sys_usr.empty()) raw.push_back(std::move(rd));
  }

  if (ontology_path) {
    out.ontology = Ontology::load(*ontology_path);
  } else {
    std::vector<std::string> stype;
    std::map<std::string, std::vector<std::string>> ctype;
    for (const auto& [q, values] : slot_values) {
      const bool categorical = std::all_of(values.begin(), values.end(), [](const std::string& v) {
        return normalize_ctype_value(v).has_value();
      });
      if (categorical && !values.empty())
        ctype[split_qualified(q).first].push_back(q);
      else
        stype.push_back(q);
    }
    out.ontology = Ontology::make({domains.begin(), domains.end()}, std::move(stype),
                                  std::move(ctype));
  }

  // Pass 2: deltas, gold domains, ontology filtering.
  auto dev_ids = read_id_list(dir, "valListFile");
  auto test_ids = read_id_list(dir, "testListFile");
  for (const auto& rd : raw) {
    Dialogue dlg;
    dlg.id = rd.id;
    BeliefState prev;
    std::optional<std::string> prev_domain;
    for (size_t t = 0; t < rd.sys_usr.size(); ++t) {
      // Drop triplets outside the ontology before diffing.
      BeliefState cur;
      for (const auto& tr : rd.states[t].triplets()) {
        const std::string q = tr.qualified_slot();
        if (out.ontology.is_stype(q) || out.ontology.is_ctype(q)) {
          cur.apply_add(tr);
        } else {
          ++out.report.skipped_total;
          ++out.report.skipped_slots[q];
        }
      }
      TurnDelta delta = delta_from_cumulative(prev, cur);
      DialogueTurn turn;
      turn.turn_index = static_cast<int>(t);
      turn.sys = rd.sys_usr[t].first;
      turn.usr = rd.sys_usr[t].second;
      std::string dom = majority_changed_domain(delta, prev_domain);
      if (dom.empty()) {
        if (prev_domain) {
          dom = *prev_domain;
        } else {
          // Greeting turn at dialogue start: take the first domain that
          // changes later in the dialogue, falling back to the ontology.
          BeliefState scan_prev = cur;
          for (size_t u = t + 1; u < rd.sys_usr.size() && dom.empty(); ++u) {
            BeliefState scan_cur;
            for (const auto& tr : rd.states[u].triplets()) {
              const std::string q = tr.qualified_slot();
              if (out.ontology.is_stype(q) || out.ontology.is_ctype(q)) scan_cur.apply_add(tr);
            }
            dom = majority_changed_domain(delta_from_cumulative(scan_prev, scan_cur),
                                          std::nullopt);
            scan_prev = std::move(scan_cur);
          }
          if (dom.empty()) dom = out.ontology.domains.front();
        }
      }
      turn.gold_domain = dom;
      turn.gold_adds = std::move(delta.adds);
      turn.gold_removes = std::move(delta.removes);
      prev_domain = dom;
      prev = std::move(cur);
      dlg.turns.push_back(std::move(turn));
    }
    if (dev_ids && dev_ids->count(dlg.id))
      out.dev.push_back(std::move(dlg));
    else if (test_ids && test_ids->count(dlg.id))
      out.test.push_back(std::move(dlg));
    else
      out.train.push_back(std::move(dlg));
  }

  if (out.report.skipped_total > 0)
    EMD_WARN("multiwoz ingest: skipped " << out.report.skipped_total
                                         << " triplets outside the ontology");
  return out;
}

}  // namespace emd
