#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emd/model.hpp"

namespace emd {

// Inference-pass counts per turn as a function of the ontology's S-type slot
// count. The full pipeline runs one encoder+tagger pass per turn regardless
// of s; the per-pair baseline runs one pass per (domain, S-type slot) pair.
// C-type and correction head invocations scale with |C_domain| and the
// carried state and are reported separately.
struct ItcRow {
  int s = 0;
  double emd_passes = 0;   // encoder+SSTM passes per turn
  double stub_passes = 0;  // per-pair baseline passes per turn
  double cscm_passes = 0;  // mean per turn
  double dscm_passes = 0;  // mean per turn
};

// Builds, per slot count, a fresh ontology (2 domains) with a seeded
// randomly initialized model at `cfg` scale, replays a generated dialogue of
// `turns` turns through both predictors and counts real forward invocations.
// Slot counts must be >= 4.
std::vector<ItcRow> bench_itc(const std::vector<int>& slot_counts, int turns,
                              const EncoderConfig& cfg, uint64_t seed);

// CSV: header s,emd_passes,stub_passes,cscm_passes,dscm_passes
std::string itc_csv(const std::vector<ItcRow>& rows);

}  // namespace emd
