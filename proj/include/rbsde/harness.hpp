#pragma once

#include <string>
#include <vector>

#include "rbsde/scenario.hpp"

namespace rbsde {

enum class Command { kSolve, kDecouple, kPicard, kPenalize, kVerify, kNorms, kSweep };

struct RunConfig {
  Command cmd = Command::kSolve;
  std::vector<int> n_list = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::string scheme = "bsde";  // upper | lower | bsde, for penalize
  double p_override = -1.0;
  int steps_override = -1;
  long long seed_override = -1;
  int max_iter = 2000;
  double tol = 1e-11;
};

/// Deterministic result of one command: a JSON payload (numbers only,
/// byte-stable across reruns), run metadata kept separate, and an optional
/// CSV table.
struct ResultBundle {
  std::string payload_json;
  std::string metadata_json;
  std::string csv;
  bool verification_failed = false;

  std::string bundle_json() const;  // payload + metadata combined
};

ResultBundle run(const Scenario& sc, const RunConfig& cfg);

/// Writes bundle.json (and table.csv when present) under out_dir.
void persist(const ResultBundle& bundle, const std::string& out_dir);

}  // namespace rbsde
