#include "emd/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "emd/rng.hpp"
#include "json.hpp"

namespace emd {

namespace {

// Name pools. Kept disjoint from template words so token identity alone
// separates slots, domains and values.
const std::vector<std::string> kDomainPool = {
    "cinema", "diner", "ferry", "gallery", "hostel",
    "metro",  "resort", "studio", "tavern", "villa"};

const std::vector<std::string> kStypePool = {
    "area",  "brand", "color", "date",  "genre", "level", "owner", "route",
    "size",  "style", "theme", "title", "track", "unit",  "venue", "zone"};

const std::vector<std::string> kCtypePool = {"catering", "childcare", "parking", "wifi"};

const std::vector<std::string> kValuePool = {
    "amber",   "basil",   "cedar",   "coral",   "damson",  "ebony",   "fennel",
    "garnet",  "hazel",   "indigo",  "jasper",  "kestrel", "laurel",  "maple",
    "nutmeg",  "ochre",   "pewter",  "quartz",  "russet",  "saffron", "topaz",
    "umber",   "viridian", "walnut",  "xenon",   "yarrow",  "zircon",  "birch",
    "clover",  "dahlia",  "elm",     "foxglove", "ginger",  "heather", "ivy",
    "juniper", "krypton", "lilac",   "marigold", "nettle",  "orchid",  "poppy",
    "quince",  "rowan",   "sorrel",  "tansy",   "upland",  "vervain", "willow",
    "yew"};

const std::vector<std::string> kSecondWordPool = {
    "annex", "barn", "court", "den",  "fork", "gate",  "hill",  "inn",
    "keep",  "lane", "mews",  "oast", "quay", "ridge", "tower", "wharf"};

std::string indexed_name(const std::vector<std::string>& pool, const char* prefix, int i) {
  if (i < static_cast<int>(pool.size())) return pool[i];
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

std::string value_word(int global_index) {
  const int p = static_cast<int>(kValuePool.size());
  std::string w = kValuePool[global_index % p];
  if (global_index >= p) w += std::to_string(global_index / p);
  return w;
}

void validate_config(const SynthConfig& c) {
  if (c.n_domains < 2) throw std::invalid_argument("synth config: need >= 2 domains");
  if (!c.stype_counts.empty() &&
      static_cast<int>(c.stype_counts.size()) != c.n_domains)
    throw std::invalid_argument("synth config: stype_counts size must equal n_domains");
  if (!c.ctype_counts.empty() &&
      static_cast<int>(c.ctype_counts.size()) != c.n_domains)
    throw std::invalid_argument("synth config: ctype_counts size must equal n_domains");
  for (int d = 0; d < c.n_domains; ++d) {
    int sc = c.stype_counts.empty() ? c.stype_per_domain : c.stype_counts[d];
    if (sc < 2) throw std::invalid_argument("synth config: need >= 2 S-type slots per domain");
    int cc = c.ctype_counts.empty() ? c.ctype_per_domain : c.ctype_counts[d];
    if (cc < 1) throw std::invalid_argument("synth config: need >= 1 C-type slot per domain");
  }
  if (c.values_per_slot < 2)
    throw std::invalid_argument("synth config: need >= 2 values per slot");
  if (c.n_dialogues < 1) throw std::invalid_argument("synth config: need >= 1 dialogue");
  if (c.min_turns < 1 || c.max_turns < c.min_turns)
    throw std::invalid_argument("synth config: bad turn range");
}

struct SlotInventory {
  std::string domain;
  std::string base;                 // unqualified name
  std::vector<std::string> values;  // S-type only
};

}  // namespace

Ontology synth_ontology(const SynthConfig& c) {
  validate_config(c);
  std::vector<std::string> domains, stype;
  std::map<std::string, std::vector<std::string>> ctype;
  for (int d = 0; d < c.n_domains; ++d) {
    const std::string dom = indexed_name(kDomainPool, "dom", d);
    domains.push_back(dom);
    const int sc = c.stype_counts.empty() ? c.stype_per_domain : c.stype_counts[d];
    for (int s = 0; s < sc; ++s)
      stype.push_back(dom + "." + indexed_name(kStypePool, "s", s));
    const int cc = c.ctype_counts.empty() ? c.ctype_per_domain : c.ctype_counts[d];
    for (int s = 0; s < cc; ++s)
      ctype[dom].push_back(dom + "." + indexed_name(kCtypePool, "c", s));
  }
  return Ontology::make(std::move(domains), std::move(stype), std::move(ctype));
}

SynthResult generate_synthetic(const SynthConfig& c, uint64_t seed) {
  SynthResult res;
  res.ontology = synth_ontology(c);
  const Ontology& onto = res.ontology;

  // Per S-type slot value inventory; indices follow onto.stype order so the
  // assignment is seed-independent.
  std::vector<SlotInventory> inv(onto.stype.size());
  for (size_t k = 0; k < onto.stype.size(); ++k) {
    auto [d, base] = split_qualified(onto.stype[k]);
    inv[k].domain = d;
    inv[k].base = base;
    for (int v = 0; v < c.values_per_slot; ++v) {
      const int gi = static_cast<int>(k) * c.values_per_slot + v;
      std::string val = value_word(gi);
      if (v % 3 == 2) val += " " + kSecondWordPool[gi % kSecondWordPool.size()];
      inv[k].values.push_back(val);
    }
  }
  std::map<std::string, std::vector<int>> stype_of_domain;  // domain -> stype indices
  for (size_t k = 0; k < onto.stype.size(); ++k)
    stype_of_domain[inv[k].domain].push_back(static_cast<int>(k));

  Rng rng(seed);
  const std::vector<std::string> sys_pool = {
      "anything else ?", "noted , what next ?", "sure , go on .", "alright , and then ?"};

  // Obsoletes-rule endpoints: first domain, its first two S-type slots.
  const std::string& rule_domain = onto.domains.front();
  const int rule_victim = stype_of_domain.at(rule_domain)[0];
  const int rule_trigger = stype_of_domain.at(rule_domain)[1];

  for (int di = 0; di < c.n_dialogues; ++di) {
    Dialogue dlg;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "syn-%06d", di);
    dlg.id = idbuf;

    const int n_turns = c.min_turns + rng.next_int(c.max_turns - c.min_turns + 1);
    int dom_idx = rng.next_int(static_cast<int>(onto.domains.size()));
    BeliefState state;
    std::vector<BeliefState> dlg_states;

    for (int ti = 0; ti < n_turns; ++ti) {
      DialogueTurn turn;
      turn.turn_index = ti;
      turn.sys = ti == 0 ? "hello , how can i help you ?"
                         : sys_pool[rng.next_int(static_cast<int>(sys_pool.size()))];

      bool switched = false;
      if (ti > 0 && onto.domains.size() > 1 && rng.bernoulli(c.p_domain_switch)) {
        int next = rng.next_int(static_cast<int>(onto.domains.size()) - 1);
        if (next >= dom_idx) ++next;
        dom_idx = next;
        switched = true;
      }
      const std::string& domain = onto.domains[dom_idx];
      turn.gold_domain = domain;

      std::string usr = (switched ? "now about the " : "about the ") + domain + " ,";
      const BeliefState prev = state;
      std::set<std::pair<std::string, std::string>> touched;

      const bool noop = ti > 0 && rng.bernoulli(c.p_noop);
      if (noop) {
        usr += " thanks , that is all for now .";
      } else {
        const auto& slots = stype_of_domain.at(domain);
        const int n_adds = 1 + (rng.bernoulli(c.p_second_add) ? 1 : 0);
        std::vector<int> chosen;
        for (int a = 0; a < n_adds && static_cast<int>(chosen.size()) < static_cast<int>(slots.size()); ++a) {
          // Prefer an already-set slot when rolling an overwrite.
          std::vector<int> existing, fresh;
          for (int k : slots) {
            if (touched.count({inv[k].domain, inv[k].base})) continue;
            if (state.value_of(inv[k].domain, inv[k].base))
              existing.push_back(k);
            else
              fresh.push_back(k);
          }
          const bool overwrite = !existing.empty() && rng.bernoulli(c.p_overwrite);
          const auto& pick_from = overwrite ? existing : (fresh.empty() ? existing : fresh);
          if (pick_from.empty()) break;
          const int k = pick_from[rng.next_int(static_cast<int>(pick_from.size()))];
          const auto cur = state.value_of(inv[k].domain, inv[k].base);
          std::string value;
          do {
            value = inv[k].values[rng.next_int(static_cast<int>(inv[k].values.size()))];
          } while (cur && value == *cur);
          state.apply_add({inv[k].domain, inv[k].base, value});
          touched.insert({inv[k].domain, inv[k].base});
          chosen.push_back(k);
          switch (rng.next_int(3)) {
            case 0: usr += " set the " + inv[k].base + " to " + value + " ."; break;
            case 1: usr += " i want the " + inv[k].base + " to be " + value + " ."; break;
            default: usr += " make the " + inv[k].base + " " + value + " ."; break;
          }
        }

        if (!onto.ctype_of(domain).empty() && rng.bernoulli(c.p_ctype)) {
          // Only the first C-type slot of the domain is ever voiced.
          const std::string q = onto.ctype_of(domain).front();
          auto [cd, cbase] = split_qualified(q);
          const auto cur = state.value_of(cd, cbase);
          const char* classes[3] = {"yes", "no", "dontcare"};
          std::string cls;
          do {
            cls = classes[rng.next_int(3)];
          } while (cur && cls == *cur);
          state.apply_add({cd, cbase, cls});
          touched.insert({cd, cbase});
          if (cls == "yes")
            usr += " i do need " + cbase + " .";
          else if (cls == "no")
            usr += " no " + cbase + " for me .";
          else
            usr += " i do not mind the " + cbase + " .";
        }

        // Obsoletes-rule: a fresh trigger value invalidates a carried victim
        // value. The utterance never names the victim; the pairing is what
        // the correction head has to learn.
        const bool trigger_set =
            std::find(chosen.begin(), chosen.end(), rule_trigger) != chosen.end();
        if (trigger_set && !touched.count({inv[rule_victim].domain, inv[rule_victim].base}) &&
            prev.value_of(inv[rule_victim].domain, inv[rule_victim].base) &&
            rng.bernoulli(c.p_obsolete)) {
          state.remove_key(inv[rule_victim].domain, inv[rule_victim].base);
          touched.insert({inv[rule_victim].domain, inv[rule_victim].base});
        }
      }

      TurnDelta delta = delta_from_cumulative(prev, state);
      turn.gold_adds = std::move(delta.adds);
      turn.gold_removes = std::move(delta.removes);
      turn.usr = usr;
      dlg.turns.push_back(std::move(turn));
      dlg_states.push_back(state);
    }
    res.corpus.push_back(std::move(dlg));
    res.gold_states.push_back(std::move(dlg_states));
  }
  return res;
}

SynthConfig SynthConfig::from_json_string(const std::string& s) {
  nlohmann::json j = nlohmann::json::parse(s);
  SynthConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("n_domains", c.n_domains);
  get("stype_per_domain", c.stype_per_domain);
  get("stype_counts", c.stype_counts);
  get("ctype_per_domain", c.ctype_per_domain);
  get("ctype_counts", c.ctype_counts);
  get("values_per_slot", c.values_per_slot);
  get("n_dialogues", c.n_dialogues);
  get("min_turns", c.min_turns);
  get("max_turns", c.max_turns);
  get("p_domain_switch", c.p_domain_switch);
  get("p_second_add", c.p_second_add);
  get("p_overwrite", c.p_overwrite);
  get("p_obsolete", c.p_obsolete);
  get("p_ctype", c.p_ctype);
  get("p_noop", c.p_noop);
  return c;
}

SynthConfig SynthConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open synth config: " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(s);
}

}  // namespace emd
