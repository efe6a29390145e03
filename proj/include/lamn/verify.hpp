#pragma once

#include <string>
#include <vector>

namespace lamn::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::vector<std::string> lines;
  double seconds = 0.0;
};

/// Runs one acceptance criterion (1..11) with its pinned tolerances.
CriterionResult run_criterion(int id, int threads = 0);

std::vector<CriterionResult> run_all(int threads = 0);

int criterion_count();

}  // namespace lamn::verify
