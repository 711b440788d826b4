// End-to-end acceptance gate. Runs every verification suite once and
// condenses the results into eleven criteria, one line each. Exits
// nonzero if any criterion fails. Tolerances live in the checks
// themselves; this binary only aggregates.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "sigflow/verify.hpp"

using sigflow::CheckResult;

namespace {

struct Criterion {
  const char* title;
  std::vector<std::string> checks;  // "suite/name"
};

const std::vector<Criterion> kCriteria = {
    {"lifted cubic factors through the singular slope",
     {"identities/lifted-cubic-factorization"}},
    {"curvature invariant closed form on the discriminant curve",
     {"identities/curvature-closed-form"}},
    {"parabolic-line model: classes, explicit geodesics, quartic leaves, "
     "first integral",
     {"case-z/classification", "case-z/explicit-solutions",
      "case-z/quartic-deviation", "case-z/first-integral-drift"}},
    {"tangential spectra across the epsilon range with boundary flags",
     {"d-cases/tangential-spectra", "d-cases/boundary-flags"}},
    {"saddle family reaches both asymptotic slopes",
     {"d-cases/saddle-slopes"}},
    {"node slopes split generic from exceptional; focus members wind",
     {"d-cases/node-slopes", "d-cases/focus-winding"}},
    {"every traced member stays on its side of the discriminant curve",
     {"d-cases/curve-confinement"}},
    {"cusp point: direction triple, smooth crossings, contact exponent",
     {"c3/direction-triple", "c3/smooth-crossings", "c3/contact-exponent"}},
    {"natural parametrization power law and the line restriction bound",
     {"appendix/natural-power-law", "appendix/line-restriction"}},
    {"power surfaces stay invariant and resonance scans hit their targets",
     {"appendix/power-surfaces", "appendix/resonance-scan"}},
    {"portrait scenarios render deterministically with the pinned styles",
     {"figures/deterministic-artifacts", "figures/styles-and-legend"}},
};

}  // namespace

int main() {
  std::vector<CheckResult> results = sigflow::run_suite("all");

  std::map<std::string, const CheckResult*> by_key;
  for (const auto& r : results) by_key[r.suite + "/" + r.name] = &r;

  int failed = 0;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    const Criterion& c = kCriteria[i];
    bool pass = true;
    std::string detail;
    for (const auto& key : c.checks) {
      auto it = by_key.find(key);
      if (it == by_key.end()) {
        pass = false;
        detail += (detail.empty() ? "" : "; ") + key + ": missing";
      } else if (!it->second->pass) {
        pass = false;
        detail += (detail.empty() ? "" : "; ") + key + ": " +
                  it->second->detail;
      }
    }
    if (!pass) ++failed;
    std::printf("criterion %02zu: %s  %s%s%s\n", i + 1,
                pass ? "PASS" : "FAIL", c.title,
                detail.empty() ? "" : "  [", detail.empty() ? "" : (detail + "]").c_str());
  }
  std::printf("%zu/%zu criteria passed\n", kCriteria.size() - failed,
              kCriteria.size());
  return failed == 0 ? 0 : 1;
}
