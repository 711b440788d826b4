#pragma once

// Named check suites: the oracle and property batteries that gate the build,
// runnable from the CLI (`sigflow verify --suite <name>`) and from scenario
// verify tasks. Each check is deterministic for a fixed seed.
//
// Suites:
//   identities  lifted-cubic factorization on random metrics; curvature
//               invariant against the closed form at diagonal curve points
//   case-z      parabolic discriminant line: classification, explicit
//               solutions, quartic deviation, first-integral drift
//   d-cases     tangential spectra and classes, asymptotic slopes for the
//               saddle/node cases, focus winding, curve confinement
//   c3          cusp point: direction triple, smooth crossings, contact
//               exponent
//   appendix    natural-parameter power law and line restriction; invariant
//               power surfaces; resonance scans
//   figures     portrait scenarios render byte-identical SVGs with the
//               causal style table and legend
//   all         everything above, in that order

#include <cstdint>
#include <string>
#include <vector>

namespace sigflow {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& verify_suites();

// Throws std::invalid_argument for an unknown suite name.
std::vector<CheckResult> run_suite(const std::string& suite,
                                   std::uint32_t seed = 20260819);

std::string format_report(const std::vector<CheckResult>& results);

// The portrait scenarios the figures suite renders; the same texts ship as
// files under scenarios/. name is the artifact stem.
struct FigureScenario {
  std::string name;
  std::string text;
};

const std::vector<FigureScenario>& figure_scenarios();

}  // namespace sigflow
