#pragma once

// Deterministic SVG phase portraits. All stroke styling lives in one table
// keyed by causal type plus the discriminant entry, so the causal reading of
// a figure is fixed in exactly one place:
//   timelike      solid
//   spacelike     dashed
//   isotropic     bold solid
//   discriminant  dotted
// Coordinates map the region box onto a fixed pixel frame and print with a
// fixed precision; identical inputs give identical bytes.

#include <string>
#include <vector>

#include "sigflow/flow.hpp"

namespace sigflow {

struct SvgStyle {
  const char* css_class;
  double stroke_width;
  const char* dasharray;  // empty string: solid
  const char* color;
};

const SvgStyle& svg_style(CausalType t);
const SvgStyle& svg_style_discriminant();

class PortraitBuilder {
 public:
  explicit PortraitBuilder(const Box& region, int width_px = 900);

  // One <g class="trace"> per call; consecutive samples sharing a causal
  // type join into one polyline, styled from the table. Runs overlap by one
  // sample so the drawn curve stays connected across causal changes.
  void add_trace(const GeodesicTrace& g);

  void add_discriminant(const std::vector<Point>& polyline);

  // Fixed top-right key naming all four stroke styles.
  void add_legend();

  std::string str() const;

  int trace_count() const { return traces_; }

 private:
  void polyline(const std::vector<Point>& pts, const SvgStyle& style,
                std::string& out) const;

  Box region_;
  int w_px_ = 900;
  int h_px_ = 900;
  std::string body_;
  int traces_ = 0;
  bool legend_ = false;
};

}  // namespace sigflow
