#include "sigflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sigflow {

std::string format_g17(double v) {
  if (v == 0.0) v = 0.0;  // collapse negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// CSV fields never contain commas or quotes by construction (labels and
// notes are generated, not user text), so emission is plain joining.
void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  out += '\n';
}

std::string slope_field(const TraceSample& s) {
  if (s.chart == SlopeChart::Affine) return format_g17(s.w);
  if (s.w == 0.0) return "inf";
  return format_g17(1.0 / s.w);
}

std::string directions_field(const std::vector<DirectionRoot>& roots) {
  std::string out;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i) out += ' ';
    out += roots[i].dir.is_infinite() ? std::string("inf")
                                      : format_g17(roots[i].dir.p);
    out += '*';
    out += std::to_string(roots[i].multiplicity);
  }
  return out;
}

}  // namespace

std::string trace_csv(const GeodesicTrace& g) {
  std::string out = "t,x,y,p,chart,Delta,F,causal,event\n";
  for (const auto& s : g.parent.samples) {
    std::string event;
    if (s.event >= 0 &&
        static_cast<std::size_t>(s.event) < g.parent.events.size()) {
      const auto& e = g.parent.events[s.event];
      event = to_string(e.kind);
      if (!e.note.empty()) {
        event += ' ';
        event += e.note;
      }
    }
    append_row(out, {format_g17(s.t), format_g17(s.x), format_g17(s.y),
                     slope_field(s), to_string(s.chart), format_g17(s.Delta),
                     format_g17(s.F), to_string(s.causal), event});
  }
  return out;
}

std::string classification_csv(const std::vector<PointClassification>& rows) {
  std::string out =
      "x,y,class,K1,tangency,directions,lambda1,lambda2,"
      "eps1_re,eps1_im,eps2_re,eps2_im,diagnostics\n";
  for (const auto& r : rows) {
    std::string l1, l2, e1r, e1i, e2r, e2i;
    if (r.lambda_at_p0) {
      l1 = format_g17(r.lambda_at_p0->l1);
      l2 = format_g17(r.lambda_at_p0->l2);
    }
    if (r.eps) {
      e1r = format_g17(r.eps->e1.real());
      e1i = format_g17(r.eps->e1.imag());
      e2r = format_g17(r.eps->e2.real());
      e2i = format_g17(r.eps->e2.imag());
    }
    append_row(out, {format_g17(r.q.x), format_g17(r.q.y), to_string(r.cls),
                     format_g17(r.K1), to_string(r.tangency),
                     directions_field(r.directions), l1, l2, e1r, e1i, e2r, e2i,
                     r.diagnostics});
  }
  return out;
}

std::vector<FamilyManifestRow> family_manifest(
    const std::vector<GeodesicTrace>& family, double delta, double fit_lo,
    double fit_hi) {
  if (fit_lo <= 0.0 || fit_hi <= fit_lo) {
    fit_lo = delta;
    fit_hi = 10.0 * delta;
  }
  auto censuses = causal_census(family, delta);
  std::vector<FamilyManifestRow> rows;
  rows.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& g = family[i];
    FamilyManifestRow row;
    row.member = i;
    row.label = g.label;
    row.leaf = g.leaf;
    row.phase = g.phase;
    row.census = censuses[i].counts;
    row.stop = g.parent.stop;
    try {
      switch (g.origin) {
        case SingularClass::Z:
          row.fit = fit_quartic_deviation(g, delta);
          break;
        case SingularClass::C1:
        case SingularClass::C2:
        case SingularClass::C3:
          // Exponent fit only makes sense for the one-sided isotropic
          // members; crossings stay unfitted.
          if (row.census.majority() == CausalType::Isotropic)
            row.fit = fit_exponent(g, delta, 30.0 * delta);
          break;
        case SingularClass::Ds:
        case SingularClass::Dn:
        case SingularClass::Df:
          row.fit = fit_quadratic_coefficient(g, fit_lo, fit_hi);
          break;
        default:
          break;
      }
    } catch (const std::exception&) {
      row.fit.reset();  // too few samples in the window: leave blank
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string family_csv(const std::vector<FamilyManifestRow>& rows) {
  std::string out =
      "member,label,leaf,phase,fit_model,fit_value,fit_std_error,fit_n,"
      "timelike,spacelike,isotropic,majority,stop\n";
  for (const auto& r : rows) {
    std::string model, value, se, n;
    if (r.fit) {
      model = to_string(r.fit->model);
      value = format_g17(r.fit->value);
      se = format_g17(r.fit->std_error);
      n = std::to_string(r.fit->n);
    }
    append_row(out,
               {std::to_string(r.member), r.label,
                r.leaf ? format_g17(*r.leaf) : std::string(),
                r.phase ? format_g17(*r.phase) : std::string(), model, value,
                se, n, std::to_string(r.census.timelike),
                std::to_string(r.census.spacelike),
                std::to_string(r.census.isotropic),
                to_string(r.census.majority()), to_string(r.stop)});
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sigflow
