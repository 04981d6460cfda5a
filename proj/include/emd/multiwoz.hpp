#pragma once

#include <map>
#include <optional>
#include <string>

#include "emd/corpus.hpp"
#include "emd/ontology.hpp"

namespace emd {

struct IngestReport {
  long n_source_dialogues = 0;
  long skipped_total = 0;                    // triplets dropped: slot outside ontology
  std::map<std::string, long> skipped_slots; // qualified slot -> drop count
  long unmapped_ctype = 0;                   // C-type values outside the table
};

struct MultiwozData {
  Ontology ontology;
  Corpus train;
  Corpus dev;
  Corpus test;
  IngestReport report;
};

// Reads a MultiWoz-2.0-style dump: `dir/data.json` maps dialogue id to a
// "log" of alternating user/system entries where system entries carry the
// cumulative belief state. Optional `dir/valListFile.txt` and
// `dir/testListFile.txt` (".json" variants accepted) assign dialogues to
// dev/test; everything else lands in train.
//
// Cumulative annotations become per-turn add/remove deltas by set
// difference. When no ontology file is given, slots whose observed values
// all normalize to {yes,no,dontcare} are classified C-type, all others
// S-type. Malformed JSON raises std::runtime_error naming the dialogue.
MultiwozData load_multiwoz(const std::string& dir,
                           const std::optional<std::string>& ontology_path = std::nullopt);

}  // namespace emd
