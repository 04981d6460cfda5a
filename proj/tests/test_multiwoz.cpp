#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "emd/multiwoz.hpp"

using namespace emd;

namespace {
const std::string kFixtureDir = std::string(EMD_SOURCE_DIR) + "/tests/fixtures/multiwoz_mini";
}

TEST_CASE("multiwoz ingestion: splits, ontology partition, deltas") {
  const MultiwozData data = load_multiwoz(kFixtureDir);

  CHECK(data.report.n_source_dialogues == 3);
  REQUIRE(data.train.size() == 1);
  REQUIRE(data.dev.size() == 1);
  REQUIRE(data.test.size() == 1);
  CHECK(data.train[0].id == "SNG001.json");
  CHECK(data.dev[0].id == "MUL002.json");
  CHECK(data.test[0].id == "SNG003.json");

  // Value-set heuristic: internet/parking categorical, the rest span-typed.
  CHECK(data.ontology.is_ctype("hotel.internet"));
  CHECK(data.ontology.is_ctype("hotel.parking"));
  CHECK(data.ontology.is_stype("train.departure"));
  CHECK(data.ontology.is_stype("hotel.people"));
  CHECK(data.ontology.is_stype("hotel.name"));

  // SNG001: cumulative {area} then {name}; the outdated area becomes a remove.
  const Dialogue& sng = data.train[0];
  REQUIRE(sng.turns.size() == 2);
  CHECK(sng.turns[0].sys.empty());
  CHECK(sng.turns[0].gold_adds == std::vector<Triplet>{{"hotel", "area", "centre"}});
  CHECK(sng.turns[0].gold_removes.empty());
  CHECK(sng.turns[1].sys == "ok , any preference ?");
  CHECK(sng.turns[1].gold_adds == std::vector<Triplet>{{"hotel", "name", "king house"}});
  CHECK(sng.turns[1].gold_removes == std::vector<Triplet>{{"hotel", "area", "centre"}});
  CHECK(sng.turns[0].gold_domain == "hotel");
  CHECK(sng.turns[1].gold_domain == "hotel");

  // MUL002: domain follows the changed slots, train then hotel.
  const Dialogue& mul = data.dev[0];
  REQUIRE(mul.turns.size() == 3);
  CHECK(mul.turns[0].gold_domain == "train");
  CHECK(mul.turns[1].gold_domain == "train");
  CHECK(mul.turns[2].gold_domain == "hotel");
  CHECK(mul.turns[2].gold_adds == std::vector<Triplet>{{"hotel", "internet", "yes"}});

  CHECK(domain_count(mul) == 2);
  CHECK(domain_count(sng) == 1);
}

TEST_CASE("multiwoz ingestion: absent markers are filtered out") {
  const MultiwozData data = load_multiwoz(kFixtureDir);
  // "", "none" and "not mentioned" never become triplets.
  for (const Corpus* c : {&data.train, &data.dev, &data.test})
    for (const auto& d : *c)
      for (const auto& t : d.turns)
        for (const auto& tr : t.gold_adds) {
          CHECK(tr.value != "");
          CHECK(tr.value != "none");
          CHECK(tr.value != "not mentioned");
        }
}

TEST_CASE("multiwoz ingestion: delta replay reconstructs every cumulative state") {
  const MultiwozData data = load_multiwoz(kFixtureDir);
  // Replay must agree with an independent re-read of the fixture states.
  const Dialogue& mul = data.dev[0];
  const auto states = replay_gold_states(mul);
  BeliefState expect2;
  expect2.apply_add({"train", "departure", "cambridge"});
  expect2.apply_add({"train", "destination", "london"});
  expect2.apply_add({"train", "day", "monday"});
  expect2.apply_add({"hotel", "internet", "yes"});
  CHECK(states[2] == expect2);
}

TEST_CASE("multiwoz ingestion: supplied ontology skips unknown slots with a counter") {
  const Ontology narrow = Ontology::make(
      {"hotel", "train"},
      {"hotel.area", "hotel.name", "train.departure", "train.destination", "train.day"},
      {{"hotel", {"hotel.internet"}}});
  char tmpl[] = "/tmp/emd_onto_XXXXXX";
  const int fd = mkstemp(tmpl);
  REQUIRE(fd >= 0);
  close(fd);
  narrow.save(tmpl);
  const MultiwozData data = load_multiwoz(kFixtureDir, std::string(tmpl));
  CHECK(data.report.skipped_total > 0);  // hotel.people and hotel.parking dropped
  CHECK(data.report.skipped_slots.count("hotel.people") == 1);
  std::remove(tmpl);
}

TEST_CASE("multiwoz ingestion: malformed dialogue raises an error naming it") {
  char dir[] = "/tmp/emd_mw_XXXXXX";
  REQUIRE(mkdtemp(dir) != nullptr);
  {
    std::ofstream out(std::string(dir) + "/data.json");
    out << R"({"BAD999.json": {"goal": {}, "log": "not-an-array"}})";
  }
  try {
    load_multiwoz(dir);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("BAD999.json") != std::string::npos);
  }
  std::remove((std::string(dir) + "/data.json").c_str());
  rmdir(dir);
}
