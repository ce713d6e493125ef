#pragma once

// Hierarchical construction: a template subnet is stacked into `copies`
// layers. Copy k (1-based) sees every color literal shifted by
// color_span * k, so tokens of different layers never mix. Template places
// and transitions are renamed "<id>#k". Template transitions that touch a
// place of the base net are boundary transitions; their wildcard policies are
// narrowed to the copy's color range so that tokens only return to their home
// layer.
//
// A color_span of zero stacks identical layers without any shift.

#include <string>

#include "apn/model.hpp"

namespace apn {

struct LayerTemplate {
  std::string name;
  // Places, transitions, triggers, tokens and sensors of one layer. Arcs and
  // trigger places may refer to places of the base net.
  Net fragment;
  int copies = 1;
  Color color_span = 0;

  friend bool operator==(const LayerTemplate&, const LayerTemplate&) = default;
};

// Shifts every color literal of the fragment by `offset` (>= 0).
Net color_shift(const Net& fragment, Color offset);

// Name of a template element inside copy k.
std::string layer_name(const std::string& id, int copy);

// First and one-past-last color of copy k.
std::pair<Color, Color> layer_color_range(const LayerTemplate& layer, int copy);

// Throws ColorLeak when a color literal of the template lies outside
// [0, color_span). No-op for color_span == 0.
void check_color_span(const LayerTemplate& layer);

// Throws ValidationError if base (or the result) is invalid, ColorLeak if the
// template leaves its color span.
Net expand_layers(const Net& base, const LayerTemplate& layer);

}  // namespace apn
