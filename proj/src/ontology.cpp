#include "emd/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "emd/tokenize.hpp"
#include "json.hpp"

namespace emd {

const char* ctype_class_name(CtypeClass c) {
  switch (c) {
    case CtypeClass::Yes: return "yes";
    case CtypeClass::No: return "no";
    case CtypeClass::DontCare: return "dontcare";
    case CtypeClass::Absent: return "absent";
  }
  return "?";
}

std::optional<CtypeClass> normalize_ctype_value(const std::string& raw) {
  const std::string v = normalize_value(raw);
  if (v == "yes" || v == "true" || v == "free") return CtypeClass::Yes;
  if (v == "no" || v == "false") return CtypeClass::No;
  if (v == "dontcare" || v == "dont care" || v == "don't care" || v == "do not care" ||
      v == "do n't care" || v == "doesnt matter" || v == "any")
    return CtypeClass::DontCare;
  return std::nullopt;
}

std::string triplet_to_string(const Triplet& t) {
  return "(" + t.domain + ", " + t.slot + ", " + t.value + ")";
}

std::pair<std::string, std::string> split_qualified(const std::string& qualified) {
  auto pos = qualified.find('.');
  if (pos == std::string::npos)
    throw std::invalid_argument("slot name is not domain-qualified: " + qualified);
  return {qualified.substr(0, pos), qualified.substr(pos + 1)};
}

Ontology Ontology::make(std::vector<std::string> domains, std::vector<std::string> stype,
                        std::map<std::string, std::vector<std::string>> ctype) {
  Ontology o;
  std::sort(domains.begin(), domains.end());
  domains.erase(std::unique(domains.begin(), domains.end()), domains.end());
  std::sort(stype.begin(), stype.end());
  stype.erase(std::unique(stype.begin(), stype.end()), stype.end());
  o.domains = std::move(domains);
  o.stype = std::move(stype);
  for (auto& [d, slots] : ctype) {
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
  }
  o.ctype = std::move(ctype);

  if (o.stype.empty()) throw std::invalid_argument("ontology needs at least one S-type slot");
  std::set<std::string> stype_set(o.stype.begin(), o.stype.end());
  std::set<std::string> domain_set(o.domains.begin(), o.domains.end());
  for (const auto& q : o.stype) {
    auto [d, s] = split_qualified(q);
    if (!domain_set.count(d))
      throw std::invalid_argument("S-type slot references unknown domain: " + q);
  }
  for (const auto& [d, slots] : o.ctype) {
    if (!domain_set.count(d))
      throw std::invalid_argument("C-type list references unknown domain: " + d);
    for (const auto& q : slots) {
      if (stype_set.count(q))
        throw std::invalid_argument("slot appears as both S-type and C-type: " + q);
      auto [qd, qs] = split_qualified(q);
      if (qd != d) throw std::invalid_argument("C-type slot " + q + " listed under domain " + d);
    }
  }
  return o;
}

int Ontology::stype_index(const std::string& qualified) const {
  auto it = std::lower_bound(stype.begin(), stype.end(), qualified);
  if (it != stype.end() && *it == qualified) return static_cast<int>(it - stype.begin());
  return -1;
}

bool Ontology::is_ctype(const std::string& qualified) const {
  auto [d, s] = split_qualified(qualified);
  auto it = ctype.find(d);
  if (it == ctype.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), qualified);
}

bool Ontology::has_domain(const std::string& d) const {
  return std::binary_search(domains.begin(), domains.end(), d);
}

const std::vector<std::string>& Ontology::ctype_of(const std::string& domain) const {
  static const std::vector<std::string> kEmpty;
  auto it = ctype.find(domain);
  return it == ctype.end() ? kEmpty : it->second;
}

std::string Ontology::to_json_string() const {
  nlohmann::ordered_json j;
  j["domains"] = domains;
  j["stype"] = stype;
  nlohmann::ordered_json c = nlohmann::ordered_json::object();
  for (const auto& [d, slots] : ctype) c[d] = slots;
  j["ctype"] = c;
  return j.dump(2);
}

Ontology Ontology::from_json_string(const std::string& s) {
  nlohmann::json j = nlohmann::json::parse(s);
  std::map<std::string, std::vector<std::string>> ctype;
  if (j.contains("ctype"))
    for (auto& [d, slots] : j["ctype"].items())
      ctype[d] = slots.get<std::vector<std::string>>();
  return make(j["domains"].get<std::vector<std::string>>(),
              j["stype"].get<std::vector<std::string>>(), std::move(ctype));
}

void Ontology::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ontology file: " + path);
  out << to_json_string() << "\n";
}

Ontology Ontology::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open ontology file: " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(s);
}

std::string iob_label_name(int label, const Ontology& onto) {
  if (label == kIobOutside) return "O";
  const int q = iob_slot(label);
  return (iob_is_b(label) ? "B-" : "I-") + onto.stype[q];
}

void BeliefState::apply_add(const Triplet& t) { kv_[{t.domain, t.slot}] = t.value; }

bool BeliefState::remove_exact(const Triplet& t) {
  auto it = kv_.find({t.domain, t.slot});
  if (it == kv_.end() || it->second != t.value) return false;
  kv_.erase(it);
  return true;
}

bool BeliefState::remove_key(const std::string& domain, const std::string& slot) {
  return kv_.erase({domain, slot}) > 0;
}

std::optional<std::string> BeliefState::value_of(const std::string& domain,
                                                 const std::string& slot) const {
  auto it = kv_.find({domain, slot});
  if (it == kv_.end()) return std::nullopt;
  return it->second;
}

bool BeliefState::contains_exact(const Triplet& t) const {
  auto it = kv_.find({t.domain, t.slot});
  return it != kv_.end() && it->second == t.value;
}

std::vector<Triplet> BeliefState::triplets() const {
  std::vector<Triplet> out;
  out.reserve(kv_.size());
  for (const auto& [key, value] : kv_) out.push_back({key.first, key.second, value});
  return out;
}

}  // namespace emd
