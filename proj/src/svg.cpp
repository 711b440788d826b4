#include "sigflow/svg.hpp"

#include <cstdio>
#include <stdexcept>

namespace sigflow {

namespace {

// The style table. Order matches CausalType; the discriminant rides last.
const SvgStyle kStyles[] = {
    {"timelike", 1.4, "", "#1a1a1a"},
    {"spacelike", 1.4, "7 4", "#1a1a1a"},
    {"isotropic", 3.0, "", "#000000"},
    {"discriminant", 1.4, "1.5 4", "#777777"},
};

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

const SvgStyle& svg_style(CausalType t) {
  return kStyles[static_cast<int>(t)];
}

const SvgStyle& svg_style_discriminant() { return kStyles[3]; }

PortraitBuilder::PortraitBuilder(const Box& region, int width_px)
    : region_(region), w_px_(width_px) {
  double dx = region.xhi - region.xlo;
  double dy = region.yhi - region.ylo;
  if (!(dx > 0.0) || !(dy > 0.0))
    throw std::invalid_argument("portrait region is degenerate");
  h_px_ = static_cast<int>(width_px * dy / dx + 0.5);
  if (h_px_ < 1) h_px_ = 1;
}

void PortraitBuilder::polyline(const std::vector<Point>& pts,
                               const SvgStyle& style, std::string& out) const {
  if (pts.size() < 2) return;
  double sx = w_px_ / (region_.xhi - region_.xlo);
  double sy = h_px_ / (region_.yhi - region_.ylo);
  out += "<polyline class=\"";
  out += style.css_class;
  out += "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ' ';
    out += px((pts[i].x - region_.xlo) * sx);
    out += ',';
    out += px((region_.yhi - pts[i].y) * sy);
  }
  out += "\"/>\n";
}

void PortraitBuilder::add_trace(const GeodesicTrace& g) {
  const auto& samples = g.parent.samples;
  if (samples.size() < 2) return;
  body_ += "<g class=\"trace\">\n";
  std::vector<Point> run;
  CausalType current = samples[0].causal;
  for (const auto& s : samples) {
    if (s.causal != current) {
      Point pivot = run.empty() ? Point{s.x, s.y} : run.back();
      polyline(run, svg_style(current), body_);
      run.clear();
      run.push_back(pivot);  // keep the drawn curve connected
      current = s.causal;
    }
    run.push_back({s.x, s.y});
  }
  polyline(run, svg_style(current), body_);
  body_ += "</g>\n";
  ++traces_;
}

void PortraitBuilder::add_discriminant(const std::vector<Point>& polyline_pts) {
  body_ += "<g class=\"curve\">\n";
  polyline(polyline_pts, svg_style_discriminant(), body_);
  body_ += "</g>\n";
}

void PortraitBuilder::add_legend() {
  if (legend_) return;
  legend_ = true;
  const char* labels[] = {"timelike", "spacelike", "isotropic",
                          "discriminant"};
  const SvgStyle* styles[] = {&svg_style(CausalType::Timelike),
                              &svg_style(CausalType::Spacelike),
                              &svg_style(CausalType::Isotropic),
                              &svg_style_discriminant()};
  double x0 = w_px_ - 190.0;
  double y0 = 22.0;
  body_ += "<g class=\"legend\">\n";
  for (int i = 0; i < 4; ++i) {
    double y = y0 + 20.0 * i;
    body_ += "<line class=\"";
    body_ += styles[i]->css_class;
    body_ += "\" x1=\"" + px(x0) + "\" y1=\"" + px(y) + "\" x2=\"" +
             px(x0 + 44.0) + "\" y2=\"" + px(y) + "\"/>\n";
    body_ += "<text x=\"" + px(x0 + 52.0) + "\" y=\"" + px(y + 4.0) + "\">";
    body_ += labels[i];
    body_ += "</text>\n";
  }
  body_ += "</g>\n";
}

std::string PortraitBuilder::str() const {
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 ";
  out += std::to_string(w_px_) + " " + std::to_string(h_px_) + "\" width=\"";
  out += std::to_string(w_px_) + "\" height=\"" + std::to_string(h_px_) +
         "\">\n";
  out += "<style>\n";
  out += "polyline, line { fill: none; stroke-linecap: round; }\n";
  for (const auto& s : kStyles) {
    out += ".";
    out += s.css_class;
    out += " { stroke: ";
    out += s.color;
    out += "; stroke-width: " + px(s.stroke_width) + ";";
    if (s.dasharray[0]) {
      out += " stroke-dasharray: ";
      out += s.dasharray;
      out += ";";
    }
    out += " }\n";
  }
  out += "text { font-family: sans-serif; font-size: 12px; fill: #1a1a1a; }\n";
  out += "</style>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += body_;
  out += "</svg>\n";
  return out;
}

}  // namespace sigflow
