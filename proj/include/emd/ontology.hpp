#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace emd {

// One dialogue-state fact. `slot` is unqualified ("area"); the qualified
// form "domain.slot" indexes the ontology.
struct Triplet {
  std::string domain;
  std::string slot;
  std::string value;

  std::string qualified_slot() const { return domain + "." + slot; }

  friend bool operator==(const Triplet& a, const Triplet& b) {
    return a.domain == b.domain && a.slot == b.slot && a.value == b.value;
  }
  friend auto operator<=>(const Triplet& a, const Triplet& b) {
    return std::tie(a.domain, a.slot, a.value) <=> std::tie(b.domain, b.slot, b.value);
  }
};

std::string triplet_to_string(const Triplet& t);

// Splits "domain.slot" at the first dot.
std::pair<std::string, std::string> split_qualified(const std::string& qualified);

// Domains and their slots, partitioned into S-type (span-extractable) and
// C-type (categorical yes/no/dontcare). All orderings are lexicographic so
// vector indices are stable across runs.
struct Ontology {
  std::vector<std::string> domains;
  std::vector<std::string> stype;                           // qualified, sorted
  std::map<std::string, std::vector<std::string>> ctype;    // domain -> qualified, sorted

  // Sorts, dedupes and checks invariants (throws std::invalid_argument).
  static Ontology make(std::vector<std::string> domains, std::vector<std::string> stype,
                       std::map<std::string, std::vector<std::string>> ctype);

  int num_stype() const { return static_cast<int>(stype.size()); }

  // Index into `stype`, or -1.
  int stype_index(const std::string& qualified) const;
  bool is_stype(const std::string& qualified) const { return stype_index(qualified) >= 0; }
  bool is_ctype(const std::string& qualified) const;
  bool has_domain(const std::string& d) const;
  const std::vector<std::string>& ctype_of(const std::string& domain) const;

  std::string to_json_string() const;
  static Ontology from_json_string(const std::string& s);
  void save(const std::string& path) const;
  static Ontology load(const std::string& path);

  friend bool operator==(const Ontology&, const Ontology&) = default;
};

enum class CtypeClass { Yes = 0, No = 1, DontCare = 2, Absent = 3 };
const char* ctype_class_name(CtypeClass c);

// Maps a raw annotation value onto a C-type class; nullopt means the value
// is outside the normalization table.
std::optional<CtypeClass> normalize_ctype_value(const std::string& raw);

// IOB label space over the ontology's S-type slots: O = 0, B-q = 1+2q,
// I-q = 2+2q for slot index q. 2s+1 labels total.
inline int iob_label_count(int num_stype) { return 2 * num_stype + 1; }
inline constexpr int kIobOutside = 0;
inline int iob_b(int slot_idx) { return 1 + 2 * slot_idx; }
inline int iob_i(int slot_idx) { return 2 + 2 * slot_idx; }
inline bool iob_is_b(int label) { return label > 0 && label % 2 == 1; }
inline bool iob_is_i(int label) { return label > 0 && label % 2 == 0; }
inline int iob_slot(int label) { return label == 0 ? -1 : (label - 1) / 2; }
std::string iob_label_name(int label, const Ontology& onto);

// Cumulative state: at most one value per (domain, slot) key.
class BeliefState {
 public:
  // Insert or overwrite by key.
  void apply_add(const Triplet& t);
  // Erase only on a full (domain, slot, value) match; returns whether erased.
  bool remove_exact(const Triplet& t);
  bool remove_key(const std::string& domain, const std::string& slot);

  std::optional<std::string> value_of(const std::string& domain, const std::string& slot) const;
  bool contains_exact(const Triplet& t) const;

  // Sorted by (domain, slot).
  std::vector<Triplet> triplets() const;
  size_t size() const { return kv_.size(); }
  bool empty() const { return kv_.empty(); }
  void clear() { kv_.clear(); }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;

 private:
  std::map<std::pair<std::string, std::string>, std::string> kv_;
};

}  // namespace emd
