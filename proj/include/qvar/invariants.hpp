#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qvar/aq.hpp"
#include "qvar/qfield.hpp"

namespace qvar {

struct InvariantRow {
  std::string module;
  std::string name;
  bool pass = false;
  bool skipped = false;  // not applicable to the input; ignored by the verdict
  double value = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct InvariantOptions {
  std::uint64_t seed = 0;
  int trials = 2000;       // randomized trials per metric-space check
  double h = 1.0 / 128.0;  // spacing for catalog fields
};

/// The full property suite over the closed-form catalog and random inputs.
std::vector<InvariantRow> suite_invariants(const InvariantOptions& opt = {});

/// The subset of checks that applies to an arbitrary field.
std::vector<InvariantRow> field_invariants(const QField& field, const InvariantOptions& opt = {});

/// True when every row that was not skipped passed.
bool all_pass(const std::vector<InvariantRow>& rows);

/// Largest observed G(chi(T), chi(S)) / G(T, S) over random pairs near the
/// anchor, with chi the concatenated retraction parts.
double retraction_lipschitz(const SplitScheme& scheme, int trials, std::uint64_t seed);

}  // namespace qvar
