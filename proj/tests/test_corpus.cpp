#include <algorithm>
#include <set>

#include "doctest.h"
#include "emd/corpus.hpp"
#include "emd/rng.hpp"
#include "emd/tokenize.hpp"

using namespace emd;

namespace {

Ontology test_ontology() {
  return Ontology::make(
      {"hotel", "train"},
      {"hotel.area", "hotel.name", "train.departure", "train.destination", "train.day"},
      {{"hotel", {"hotel.internet", "hotel.parking"}}});
}

// Independent oracle: brute-force window scan implementing the documented
// policy (priority by earliest first-match then longer span, displaced
// values fall to their next free occurrence).
std::vector<int> brute_force_tags(const DialogueTurn& turn, const Ontology& onto,
                                  const std::vector<std::string>& tokens) {
  std::vector<int> tags(tokens.size(), kIobOutside);
  std::vector<bool> taken(tokens.size(), false);
  struct Value {
    std::vector<int> starts;
    int len, slot;
  };
  std::vector<Value> values;
  for (const auto& t : turn.gold_adds) {
    const std::string q = t.qualified_slot();
    if (!onto.is_stype(q)) continue;
    if (normalize_ctype_value(t.value) == CtypeClass::DontCare) continue;
    auto needle = word_tokens(t.value);
    if (needle.empty()) continue;
    Value v{{}, static_cast<int>(needle.size()), onto.stype_index(q)};
    for (size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
      bool match = true;
      for (size_t j = 0; j < needle.size(); ++j)
        if (is_marker_token(tokens[start + j]) || tokens[start + j] != needle[j]) {
          match = false;
          break;
        }
      if (match) v.starts.push_back(static_cast<int>(start));
    }
    if (!v.starts.empty()) values.push_back(std::move(v));
  }
  std::sort(values.begin(), values.end(), [&](const Value& a, const Value& b) {
    if (a.starts[0] != b.starts[0]) return a.starts[0] < b.starts[0];
    if (a.len != b.len) return a.len > b.len;
    return onto.stype[a.slot] < onto.stype[b.slot];
  });
  for (const auto& v : values) {
    for (int start : v.starts) {
      bool free = true;
      for (int i = start; i < start + v.len; ++i) free = free && !taken[i];
      if (!free) continue;
      tags[start] = iob_b(v.slot);
      taken[start] = true;
      for (int i = 1; i < v.len; ++i) {
        tags[start + i] = iob_i(v.slot);
        taken[start + i] = true;
      }
      break;
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("delta conversion: first turn adds everything, removals detected") {
  BeliefState prev, cur;
  SUBCASE("first turn") {
    cur.apply_add({"hotel", "area", "center"});
    auto d = delta_from_cumulative(prev, cur);
    CHECK(d.adds == std::vector<Triplet>{{"hotel", "area", "center"}});
    CHECK(d.removes.empty());
  }
  SUBCASE("outdated state replaced by a new one") {
    prev.apply_add({"hotel", "area", "center"});
    cur.apply_add({"hotel", "name", "king house"});
    auto d = delta_from_cumulative(prev, cur);
    CHECK(d.adds == std::vector<Triplet>{{"hotel", "name", "king house"}});
    CHECK(d.removes == std::vector<Triplet>{{"hotel", "area", "center"}});
  }
  SUBCASE("value overwrite shows as add plus remove") {
    prev.apply_add({"train", "day", "monday"});
    cur.apply_add({"train", "day", "tuesday"});
    auto d = delta_from_cumulative(prev, cur);
    CHECK(d.adds == std::vector<Triplet>{{"train", "day", "tuesday"}});
    CHECK(d.removes == std::vector<Triplet>{{"train", "day", "monday"}});
  }
}

TEST_CASE("align_iob tags the first exact match") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.sys = "";
  turn.usr = "i am leaving from cambridge today";
  turn.gold_domain = "train";
  turn.gold_adds = {{"train", "departure", "cambridge"}};
  auto tokens = turn_tokens(turn.sys, turn.usr);
  auto res = align_iob(turn, onto, tokens);
  CHECK(res.unmatched.empty());
  const int q = onto.stype_index("train.departure");
  // [CLS] [SEP] i am leaving from cambridge today [SEP]
  CHECK(res.tags.labels[6] == iob_b(q));
  for (size_t i = 0; i < tokens.size(); ++i)
    if (i != 6) CHECK(res.tags.labels[i] == kIobOutside);
}

TEST_CASE("align_iob: no S-type adds means all O") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.usr = "i need free wifi";
  turn.gold_domain = "hotel";
  turn.gold_adds = {{"hotel", "internet", "yes"}};  // C-type only
  auto tokens = turn_tokens(turn.sys, turn.usr);
  auto res = align_iob(turn, onto, tokens);
  for (int label : res.tags.labels) CHECK(label == kIobOutside);
}

TEST_CASE("align_iob spans two tokens and matches the brute-force oracle") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.usr = "book me into the king house please";
  turn.gold_domain = "hotel";
  turn.gold_adds = {{"hotel", "name", "King House"}};
  auto tokens = turn_tokens(turn.sys, turn.usr);
  auto res = align_iob(turn, onto, tokens);
  CHECK(res.unmatched.empty());
  CHECK(res.tags.labels == brute_force_tags(turn, onto, tokens));
  const int q = onto.stype_index("hotel.name");
  auto b_at = std::find(res.tags.labels.begin(), res.tags.labels.end(), iob_b(q));
  REQUIRE(b_at != res.tags.labels.end());
  CHECK(*(b_at + 1) == iob_i(q));
}

TEST_CASE("align_iob randomized agreement with brute-force matcher") {
  const Ontology onto = test_ontology();
  Rng rng(99);
  const std::vector<std::string> fillers = {"please", "i", "want", "to", "go", "soon"};
  const std::vector<std::string> values = {"cambridge", "london", "king house", "north",
                                           "monday"};
  for (int iter = 0; iter < 300; ++iter) {
    DialogueTurn turn;
    std::string usr;
    for (int k = 0; k < 8; ++k)
      usr += (rng.bernoulli(0.5) ? fillers[rng.next_int(6)] : values[rng.next_int(5)]) + " ";
    turn.usr = usr;
    turn.gold_domain = "train";
    const std::vector<std::string> slots = {"train.departure", "train.destination",
                                            "train.day", "hotel.name", "hotel.area"};
    std::set<std::string> used;
    for (int a = 0; a < 1 + rng.next_int(2); ++a) {
      const std::string q = slots[rng.next_int(5)];
      if (!used.insert(q).second) continue;
      auto [d, s] = split_qualified(q);
      turn.gold_adds.push_back({d, s, values[rng.next_int(5)]});
    }
    std::sort(turn.gold_adds.begin(), turn.gold_adds.end());
    auto tokens = turn_tokens("", turn.usr);
    auto res = align_iob(turn, onto, tokens);
    CHECK(res.tags.labels.size() == tokens.size());
    CHECK(res.tags.labels == brute_force_tags(turn, onto, tokens));
  }
}

TEST_CASE("align_iob reports unmatched values instead of dropping them") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.usr = "no city mentioned";
  turn.gold_domain = "train";
  turn.gold_adds = {{"train", "departure", "cambridge"}};
  auto res = align_iob(turn, onto, turn_tokens("", turn.usr));
  REQUIRE(res.unmatched.size() == 1);
  CHECK(res.unmatched[0].value == "cambridge");
}

TEST_CASE("align_iob skips dontcare values") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.usr = "dontcare about the area";
  turn.gold_domain = "hotel";
  turn.gold_adds = {{"hotel", "area", "dontcare"}};
  auto res = align_iob(turn, onto, turn_tokens("", turn.usr));
  for (int label : res.tags.labels) CHECK(label == kIobOutside);
  CHECK(res.unmatched.empty());
}

TEST_CASE("ctype labels: mentioned slots classified, rest absent") {
  const Ontology onto = test_ontology();
  DialogueTurn turn;
  turn.gold_domain = "hotel";
  SUBCASE("internet yes") {
    turn.gold_adds = {{"hotel", "internet", "yes"}};
    auto labels = derive_ctype_labels(turn, onto);
    CHECK(labels.at("hotel.internet") == CtypeClass::Yes);
    CHECK(labels.at("hotel.parking") == CtypeClass::Absent);
  }
  SUBCASE("no C-type triplets means all absent") {
    turn.gold_adds = {{"hotel", "area", "north"}};
    auto labels = derive_ctype_labels(turn, onto);
    CHECK(labels.at("hotel.internet") == CtypeClass::Absent);
    CHECK(labels.at("hotel.parking") == CtypeClass::Absent);
  }
  SUBCASE("normalization table maps variants") {
    turn.gold_adds = {{"hotel", "parking", "dont care"}};
    auto labels = derive_ctype_labels(turn, onto);
    CHECK(labels.at("hotel.parking") == CtypeClass::DontCare);
  }
  SUBCASE("unmappable value is an error") {
    turn.gold_adds = {{"hotel", "parking", "perhaps"}};
    CHECK_THROWS_AS(derive_ctype_labels(turn, onto), std::invalid_argument);
  }
}

TEST_CASE("normalize_ctype_value table") {
  CHECK(normalize_ctype_value("true") == CtypeClass::Yes);
  CHECK(normalize_ctype_value("free") == CtypeClass::Yes);
  CHECK(normalize_ctype_value("FALSE") == CtypeClass::No);
  CHECK(normalize_ctype_value("don't care") == CtypeClass::DontCare);
  CHECK(!normalize_ctype_value("purple").has_value());
}

TEST_CASE("corpus stats") {
  SUBCASE("empty corpus is all zeros") {
    const CorpusStats s = stats({});
    CHECK(s.n_dialogs == 0);
    CHECK(s.n_single_domain == 0);
    CHECK(s.n_multi_domain == 0);
    CHECK(s.avg_turns == 0.0);
  }
  SUBCASE("single/multi split and average") {
    Corpus c;
    Dialogue d1{"a", {}};
    d1.turns.resize(2);
    d1.turns[0].gold_domain = "hotel";
    d1.turns[1].gold_domain = "hotel";
    Dialogue d2{"b", {}};
    d2.turns.resize(4);
    d2.turns[0].gold_domain = "hotel";
    d2.turns[1].gold_domain = "train";
    d2.turns[2].gold_domain = "train";
    d2.turns[3].gold_domain = "hotel";
    c.push_back(d1);
    c.push_back(d2);
    const CorpusStats s = stats(c);
    CHECK(s.n_dialogs == 2);
    CHECK(s.n_single_domain == 1);
    CHECK(s.n_multi_domain == 1);
    CHECK(s.avg_turns == doctest::Approx(3.0));
    CHECK(s.n_dialogs == s.n_single_domain + s.n_multi_domain);
  }
}

TEST_CASE("jsonl round-trip preserves dialogues byte-for-byte") {
  Dialogue d;
  d.id = "fix-1";
  DialogueTurn t;
  t.sys = "hello";
  t.usr = "book a hotel in the north";
  t.gold_domain = "hotel";
  t.gold_adds = {{"hotel", "area", "north"}};
  t.turn_index = 0;
  d.turns.push_back(t);
  const std::string line = dialogue_to_jsonl_line(d);
  const Dialogue back = dialogue_from_jsonl_line(line);
  CHECK(dialogue_to_jsonl_line(back) == line);
  CHECK(back.turns[0].gold_adds == d.turns[0].gold_adds);
}

TEST_CASE("ontology rejects slots in both partitions and unknown domains") {
  CHECK_THROWS_AS(Ontology::make({"hotel"}, {"hotel.area"}, {{"hotel", {"hotel.area"}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Ontology::make({"hotel"}, {"train.day"}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Ontology::make({"hotel"}, {}, {}), std::invalid_argument);
}

TEST_CASE("ontology json round-trip") {
  const Ontology onto = test_ontology();
  CHECK(Ontology::from_json_string(onto.to_json_string()) == onto);
}

TEST_CASE("belief state keeps one value per key") {
  BeliefState s;
  s.apply_add({"train", "day", "monday"});
  s.apply_add({"train", "day", "tuesday"});
  CHECK(s.size() == 1);
  CHECK(s.value_of("train", "day") == "tuesday");
  CHECK_FALSE(s.remove_exact({"train", "day", "monday"}));  // stale value
  CHECK(s.remove_exact({"train", "day", "tuesday"}));
  CHECK(s.empty());
}
