#include "apn/layers.hpp"

#include <unordered_set>

namespace apn {

namespace {

std::optional<std::set<Color>> shift_filter(const std::optional<std::set<Color>>& filter, Color offset) {
  if (!filter) return std::nullopt;
  std::set<Color> out;
  for (Color c : *filter) out.insert(c + offset);
  return out;
}

}  // namespace

Net color_shift(const Net& fragment, Color offset) {
  if (offset < 0) throw Error("color shift offset must be >= 0");
  Net out = fragment;
  if (offset == 0) return out;
  for (auto& g : out.tokens) g.color += offset;
  for (auto& t : out.transitions) {
    std::map<Color, DelayPolicy> policies;
    for (const auto& [c, p] : t.policies) policies.emplace(c + offset, p);
    t.policies = std::move(policies);
    std::map<Color, Color> color_map;
    for (const auto& [from, to] : t.color_map) color_map.emplace(from + offset, to + offset);
    t.color_map = std::move(color_map);
    if (t.is_source()) t.emit_color += offset;
  }
  for (auto& trig : out.triggers) trig.colors = shift_filter(trig.colors, offset);
  for (auto& s : out.sensors) s.colors = shift_filter(s.colors, offset);
  return out;
}

std::string layer_name(const std::string& id, int copy) { return id + "#" + std::to_string(copy); }

std::pair<Color, Color> layer_color_range(const LayerTemplate& layer, int copy) {
  return {layer.color_span * copy, layer.color_span * (copy + 1)};
}

void check_color_span(const LayerTemplate& layer) {
  if (layer.color_span == 0) return;
  const Color span = layer.color_span;
  auto outside = [span](Color c) { return c < 0 || c >= span; };
  for (const auto& t : layer.fragment.transitions) {
    for (const auto& [from, to] : t.color_map) {
      if (outside(from) || outside(to))
        throw ColorLeak("layer '" + layer.name + "': transition " + t.id + " maps color " + std::to_string(from) +
                        " to " + std::to_string(to) + ", outside the span 0.." + std::to_string(span - 1));
    }
  }
  for (Color c : declared_colors(layer.fragment)) {
    if (outside(c))
      throw ColorLeak("layer '" + layer.name + "' uses color " + std::to_string(c) + ", outside the span 0.." +
                      std::to_string(span - 1));
  }
}

Net expand_layers(const Net& base, const LayerTemplate& layer) {
  require_valid(base);
  if (layer.copies < 1) throw Error("layer '" + layer.name + "': copies must be >= 1");
  if (layer.color_span < 0) throw Error("layer '" + layer.name + "': color span must be >= 0");
  check_color_span(layer);

  const std::unordered_set<std::string> local_places(layer.fragment.places.begin(), layer.fragment.places.end());
  std::unordered_set<std::string> local_transitions;
  for (const auto& t : layer.fragment.transitions) local_transitions.insert(t.id);

  Net out = base;
  for (int k = 1; k <= layer.copies; ++k) {
    Net copy = color_shift(layer.fragment, layer.color_span * k);
    auto place = [&](const PlaceId& p) { return local_places.contains(p) ? layer_name(p, k) : p; };
    auto transition = [&](const TransitionId& t) { return local_transitions.contains(t) ? layer_name(t, k) : t; };
    const auto [lo, hi] = layer_color_range(layer, k);

    for (const auto& p : copy.places) out.places.push_back(layer_name(p, k));
    for (auto& t : copy.transitions) {
      bool boundary = false;
      for (auto& p : t.inputs) {
        boundary |= !local_places.contains(p);
        p = place(p);
      }
      for (auto& p : t.outputs) {
        boundary |= !local_places.contains(p);
        p = place(p);
      }
      t.id = layer_name(t.id, k);
      if (boundary && layer.color_span > 0 && t.wildcard) {
        for (Color c = lo; c < hi; ++c) t.policies.try_emplace(c, *t.wildcard);
        t.wildcard.reset();
      }
      out.transitions.push_back(std::move(t));
    }
    for (auto& trig : copy.triggers) {
      trig.place = place(trig.place);
      trig.target = transition(trig.target);
      out.triggers.push_back(std::move(trig));
    }
    for (auto& g : copy.tokens) {
      g.place = place(g.place);
      out.tokens.push_back(std::move(g));
    }
    for (auto& s : copy.sensors) {
      s.name = layer_name(s.name, k);
      if (s.kind != SensorKind::firing_count) s.place = place(s.place);
      for (auto& t : s.transitions) t = transition(t);
      out.sensors.push_back(std::move(s));
    }
  }
  out.canonicalize();
  require_valid(out);
  return out;
}

}  // namespace apn
