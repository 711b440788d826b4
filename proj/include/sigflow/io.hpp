#pragma once

// CSV emission and atomic file plumbing. Every floating-point field prints
// with %.17g, so identical runs produce identical bytes and values survive a
// round trip through the file.
//
// Schemas (first line is always the header):
//   trace:   t,x,y,p,chart,Delta,F,causal,event
//            p is the slope; the vertical direction prints as "inf".
//            event is the note of the event sample, empty otherwise.
//   report:  x,y,class,K1,tangency,directions,lambda1,lambda2,
//            eps1_re,eps1_im,eps2_re,eps2_im,diagnostics
//            directions joins root entries as p*m (multiplicity suffix).
//   family:  member,label,leaf,phase,fit_model,fit_value,fit_std_error,
//            fit_n,timelike,spacelike,isotropic,majority,stop
//            fit columns are empty when no fit applies to the member.

#include <optional>
#include <string>
#include <vector>

#include "sigflow/families.hpp"
#include "sigflow/singular.hpp"

namespace sigflow {

std::string format_g17(double v);

std::string trace_csv(const GeodesicTrace& g);

std::string classification_csv(const std::vector<PointClassification>& rows);

struct FamilyManifestRow {
  std::size_t member = 0;
  std::string label;
  std::optional<double> leaf;
  std::optional<double> phase;
  std::optional<FitResult> fit;
  CausalCensus census;
  StopReason stop = StopReason::ParameterBudget;
};

// Class-appropriate default fit per member: quartic deviation for the
// parabolic-line family, cusp exponent over [delta, 30 delta] for isotropic
// C members, quadratic coefficient over [lo, hi] for the D families (callers
// pass the window; zero lo/hi selects [delta, 10 delta]). Members a fit does
// not apply to (crossings) or where it fails keep an empty fit.
std::vector<FamilyManifestRow> family_manifest(
    const std::vector<GeodesicTrace>& family, double delta, double fit_lo = 0.0,
    double fit_hi = 0.0);

std::string family_csv(const std::vector<FamilyManifestRow>& rows);

// Write-temp-then-rename in the target directory; creates parent
// directories. Concurrent writers of distinct paths never interleave.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace sigflow
