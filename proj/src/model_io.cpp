#include "apn/model_io.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace apn {

namespace {

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& message) {
  const auto mark = node.Mark();
  if (mark.is_null()) throw ParseError(message);
  throw ParseError(message, mark.line + 1, mark.column + 1);
}

void require_map(const YAML::Node& node, const std::string& what) {
  if (!node.IsMap()) fail_at(node, what + " must be a mapping");
}

void require_seq(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail_at(node, what + " must be a list");
}

// Rejects keys not in `allowed`, reporting the key's own position.
void check_keys(const YAML::Node& node, const std::string& what, std::initializer_list<std::string_view> allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok |= (a == key);
    if (!ok) fail_at(kv.first, "unknown key '" + key + "' in " + what);
  }
}

std::string scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) fail_at(node, what + " must be a scalar");
  return node.Scalar();
}

double real(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  double value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    if (text == ".inf" || text == "inf") return std::numeric_limits<double>::infinity();
    fail_at(node, what + " must be a number, got '" + text + "'");
  }
  return value;
}

template <typename Int>
Int integer(const YAML::Node& node, const std::string& what) {
  const auto text = scalar(node, what);
  Int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail_at(node, what + " must be an integer, got '" + text + "'");
  return value;
}

std::vector<std::string> id_list(const YAML::Node& node, const std::string& what) {
  std::vector<std::string> out;
  if (node.IsScalar()) {
    out.push_back(node.Scalar());
    return out;
  }
  require_seq(node, what);
  for (const auto& item : node) out.push_back(scalar(item, what));
  return out;
}

std::set<Color> color_set(const YAML::Node& node, const std::string& what) {
  std::set<Color> out;
  if (node.IsScalar()) {
    out.insert(integer<Color>(node, what));
    return out;
  }
  require_seq(node, what);
  for (const auto& item : node) out.insert(integer<Color>(item, what));
  return out;
}

Window window(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() != 2) fail_at(node, what + " must be a list [begin, end]");
  return {real(node[0], what), real(node[1], what)};
}

std::pair<std::optional<Color>, DelayPolicy> policy(const YAML::Node& node) {
  require_map(node, "policy");
  check_keys(node, "policy", {"color", "delay", "priority", "value", "mean", "scale", "shape", "low", "high"});
  if (!node["color"]) fail_at(node, "policy needs a color (integer or \"*\")");
  if (!node["delay"]) fail_at(node, "policy needs a delay kind");
  std::optional<Color> color;
  if (scalar(node["color"], "color") != "*") color = integer<Color>(node["color"], "policy color");

  const auto kind = scalar(node["delay"], "delay");
  auto need = [&](const char* key) {
    if (!node[key]) fail_at(node, std::string(kind) + " policy needs '" + key + "'");
    return real(node[key], key);
  };
  auto allow_only = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (key == "color" || key == "delay") continue;
      bool ok = false;
      for (auto k : keys) ok |= (k == key);
      if (!ok) fail_at(kv.first, "key '" + key + "' does not apply to " + kind + " policies");
    }
  };
  DelayPolicy p;
  if (kind == "immediate") {
    allow_only({"priority"});
    p = Immediate{node["priority"] ? integer<int>(node["priority"], "priority") : 0};
  } else if (kind == "fixed") {
    allow_only({"value"});
    p = Fixed{need("value")};
  } else if (kind == "exponential") {
    allow_only({"mean"});
    p = Exponential{need("mean")};
  } else if (kind == "weibull") {
    allow_only({"scale", "shape"});
    p = Weibull{need("scale"), need("shape")};
  } else if (kind == "uniform") {
    allow_only({"low", "high"});
    p = Uniform{need("low"), need("high")};
  } else {
    fail_at(node["delay"], "unknown delay kind '" + kind + "'");
  }
  return {color, p};
}

Transition transition(const YAML::Node& node) {
  require_map(node, "transition");
  check_keys(node, "transition",
             {"id", "input", "output", "policies", "color_map", "age", "priority", "emit_color"});
  Transition t;
  if (!node["id"]) fail_at(node, "transition needs an id");
  t.id = scalar(node["id"], "transition id");
  if (node["input"]) t.inputs = id_list(node["input"], "input");
  if (node["output"]) t.outputs = id_list(node["output"], "output");
  if (const auto ps = node["policies"]) {
    require_seq(ps, "policies");
    for (const auto& item : ps) {
      auto [color, p] = policy(item);
      if (color) {
        if (!t.policies.emplace(*color, p).second) fail_at(item, "duplicate policy for color " + std::to_string(*color));
      } else {
        if (t.wildcard) fail_at(item, "duplicate wildcard policy");
        t.wildcard = p;
      }
    }
  }
  if (const auto cm = node["color_map"]) {
    require_map(cm, "color_map");
    for (const auto& kv : cm) {
      const auto from = integer<Color>(kv.first, "color_map key");
      if (!t.color_map.emplace(from, integer<Color>(kv.second, "color_map value")).second)
        fail_at(kv.first, "duplicate color_map key");
    }
  }
  if (const auto age = node["age"]) {
    if (age.IsScalar()) {
      const auto a = age.Scalar();
      if (a == "reset") {
        t.age_action = AgeReset{};
      } else if (a == "keep") {
        t.age_action = AgeKeep{};
      } else {
        fail_at(age, "age must be reset, keep or {scale: factor}");
      }
    } else {
      require_map(age, "age");
      check_keys(age, "age", {"scale"});
      if (!age["scale"]) fail_at(age, "age must be reset, keep or {scale: factor}");
      t.age_action = AgeScale{real(age["scale"], "age scale")};
    }
  }
  if (node["priority"]) t.priority = integer<int>(node["priority"], "priority");
  if (node["emit_color"]) t.emit_color = integer<Color>(node["emit_color"], "emit_color");
  return t;
}

Trigger trigger(const YAML::Node& node) {
  require_map(node, "trigger");
  check_keys(node, "trigger", {"kind", "place", "target", "multiplicity", "colors"});
  Trigger t;
  for (const char* key : {"kind", "place", "target"})
    if (!node[key]) fail_at(node, std::string("trigger needs '") + key + "'");
  const auto kind = scalar(node["kind"], "trigger kind");
  if (kind == "inhibitor") {
    t.kind = TriggerKind::inhibitor;
  } else if (kind == "enabler") {
    t.kind = TriggerKind::enabler;
  } else {
    fail_at(node["kind"], "trigger kind must be inhibitor or enabler");
  }
  t.place = scalar(node["place"], "trigger place");
  t.target = scalar(node["target"], "trigger target");
  if (node["multiplicity"]) t.multiplicity = integer<int>(node["multiplicity"], "multiplicity");
  if (node["colors"]) t.colors = color_set(node["colors"], "trigger colors");
  return t;
}

TokenGroup tokens(const YAML::Node& node) {
  require_map(node, "token group");
  check_keys(node, "token group", {"place", "color", "age", "count"});
  if (!node["place"]) fail_at(node, "token group needs a place");
  TokenGroup g;
  g.place = scalar(node["place"], "token place");
  if (node["color"]) g.color = integer<Color>(node["color"], "token color");
  if (node["age"]) g.age = real(node["age"], "token age");
  if (node["count"]) g.count = integer<int>(node["count"], "token count");
  return g;
}

SensorSpec sensor(const YAML::Node& node) {
  require_map(node, "sensor");
  check_keys(node, "sensor", {"name", "kind", "place", "colors", "k", "relation", "transitions", "window"});
  SensorSpec s;
  if (!node["name"]) fail_at(node, "sensor needs a name");
  if (!node["kind"]) fail_at(node, "sensor needs a kind");
  s.name = scalar(node["name"], "sensor name");
  const auto kind = scalar(node["kind"], "sensor kind");
  if (kind == "time_average") {
    s.kind = SensorKind::time_average;
  } else if (kind == "threshold") {
    s.kind = SensorKind::threshold;
  } else if (kind == "upcrossings") {
    s.kind = SensorKind::upcrossings;
  } else if (kind == "firing_count") {
    s.kind = SensorKind::firing_count;
  } else {
    fail_at(node["kind"], "unknown sensor kind '" + kind + "'");
  }
  if (s.kind == SensorKind::firing_count) {
    for (const char* key : {"place", "colors", "k", "relation"})
      if (node[key]) fail_at(node[key], std::string("'") + key + "' does not apply to firing_count sensors");
    if (!node["transitions"]) fail_at(node, "firing_count sensor needs 'transitions'");
    s.transitions = id_list(node["transitions"], "transitions");
  } else {
    if (node["transitions"]) fail_at(node["transitions"], "'transitions' applies to firing_count sensors only");
    if (!node["place"]) fail_at(node, "place sensor needs 'place'");
    s.place = scalar(node["place"], "sensor place");
    if (node["colors"]) s.colors = color_set(node["colors"], "sensor colors");
    if (s.kind == SensorKind::time_average) {
      if (node["k"]) fail_at(node["k"], "'k' does not apply to time_average sensors");
    } else {
      if (!node["k"]) fail_at(node, kind + " sensor needs 'k'");
      s.threshold = integer<int>(node["k"], "k");
    }
    if (const auto rel = node["relation"]) {
      if (s.kind != SensorKind::threshold) fail_at(rel, "'relation' applies to threshold sensors only");
      const auto r = scalar(rel, "relation");
      if (r == ">=") {
        s.relation = Relation::at_least;
      } else if (r == "<=") {
        s.relation = Relation::at_most;
      } else {
        fail_at(rel, "relation must be \">=\" or \"<=\"");
      }
    }
  }
  if (node["window"]) s.window = window(node["window"], "sensor window");
  return s;
}

template <typename T, typename F>
std::vector<T> list_of(const YAML::Node& node, const std::string& what, F&& element) {
  std::vector<T> out;
  if (!node || node.IsNull()) return out;
  require_seq(node, what);
  for (const auto& item : node) out.push_back(element(item));
  return out;
}

void read_net_sections(const YAML::Node& node, Net& net) {
  if (const auto places = node["places"]; places && !places.IsNull()) {
    require_seq(places, "places");
    for (const auto& p : places) net.places.push_back(scalar(p, "place id"));
  }
  net.transitions = list_of<Transition>(node["transitions"], "transitions", transition);
  net.triggers = list_of<Trigger>(node["triggers"], "triggers", trigger);
  net.tokens = list_of<TokenGroup>(node["tokens"], "tokens", tokens);
  net.sensors = list_of<SensorSpec>(node["sensors"], "sensors", sensor);
}

LayerTemplate layer(const YAML::Node& node) {
  require_map(node, "layer");
  check_keys(node, "layer",
             {"name", "copies", "color_span", "places", "transitions", "triggers", "tokens", "sensors"});
  LayerTemplate l;
  if (node["name"]) l.name = scalar(node["name"], "layer name");
  if (!node["copies"]) fail_at(node, "layer needs 'copies'");
  l.copies = integer<int>(node["copies"], "copies");
  if (l.copies < 1) fail_at(node["copies"], "copies must be >= 1");
  if (node["color_span"]) l.color_span = integer<Color>(node["color_span"], "color_span");
  if (l.color_span < 0) fail_at(node["color_span"], "color_span must be >= 0");
  read_net_sections(node, l.fragment);
  return l;
}

SimulationSettings simulation(const YAML::Node& node) {
  require_map(node, "simulation");
  check_keys(node, "simulation", {"horizon", "replications", "seed", "window"});
  SimulationSettings s;
  if (node["horizon"]) s.horizon = real(node["horizon"], "horizon");
  if (node["replications"]) s.replications = integer<std::uint64_t>(node["replications"], "replications");
  if (node["seed"]) s.seed = integer<std::uint64_t>(node["seed"], "seed");
  if (node["window"]) s.window = window(node["window"], "window");
  return s;
}

}  // namespace

ModelFile parse_model_file(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1, e.mark.is_null() ? 0 : e.mark.column + 1);
  }
  if (!root || root.IsNull()) throw ParseError("missing places section");
  require_map(root, "model document");
  check_keys(root, "model document",
             {"places", "transitions", "triggers", "tokens", "layers", "sensors", "simulation"});
  if (!root["places"]) throw ParseError("missing places section");

  ModelFile file;
  try {
    read_net_sections(root, file.net);
    file.layers = list_of<LayerTemplate>(root["layers"], "layers", layer);
    if (root["simulation"]) file.simulation = simulation(root["simulation"]);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, e.mark.is_null() ? 0 : e.mark.line + 1, e.mark.is_null() ? 0 : e.mark.column + 1);
  }
  return file;
}

Model parse_model(std::string_view text) {
  ModelFile file = parse_model_file(text);
  Net net = std::move(file.net);
  net.canonicalize();
  require_valid(net);
  for (const auto& l : file.layers) net = expand_layers(net, l);
  return {std::move(net), file.simulation};
}

Net parse(std::string_view text) { return parse_model(text).net; }

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read model file '" + path.string() + "'");
  return parse_model(buffer.str());
}

// ---------------------------------------------------------------------------
// Canonical writer

namespace {

std::string number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string quoted_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + quoted(items[i]);
  return out + "]";
}

std::string color_list(const std::set<Color>& colors) {
  std::string out = "[";
  bool first = true;
  for (Color c : colors) {
    out += (first ? "" : ", ") + std::to_string(c);
    first = false;
  }
  return out + "]";
}

std::string policy_text(const std::string& color, const DelayPolicy& p) {
  std::string body = "{color: " + color + ", delay: ";
  std::visit(
      [&](const auto& v) {
        using P = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<P, Immediate>) {
          body += "immediate";
          if (v.priority != 0) body += ", priority: " + std::to_string(v.priority);
        } else if constexpr (std::is_same_v<P, Fixed>) {
          body += "fixed, value: " + number(v.delay);
        } else if constexpr (std::is_same_v<P, Exponential>) {
          body += "exponential, mean: " + number(v.mean);
        } else if constexpr (std::is_same_v<P, Weibull>) {
          body += "weibull, scale: " + number(v.scale) + ", shape: " + number(v.shape);
        } else if constexpr (std::is_same_v<P, Uniform>) {
          body += "uniform, low: " + number(v.low) + ", high: " + number(v.high);
        }
      },
      p);
  return body + "}";
}

std::string place_ref(const std::vector<PlaceId>& places) {
  return places.size() == 1 ? quoted(places.front()) : quoted_list(places);
}

}  // namespace

std::string serialize(const Net& input, const SimulationSettings& simulation) {
  Net net = input;
  net.canonicalize();
  std::ostringstream out;

  out << "places: " << quoted_list(net.places) << "\n";

  if (!net.transitions.empty()) {
    out << "transitions:\n";
    for (const auto& t : net.transitions) {
      out << "  - id: " << quoted(t.id) << "\n";
      if (!t.inputs.empty()) out << "    input: " << place_ref(t.inputs) << "\n";
      if (!t.outputs.empty()) out << "    output: " << place_ref(t.outputs) << "\n";
      out << "    policies:\n";
      for (const auto& [c, p] : t.policies) out << "      - " << policy_text(std::to_string(c), p) << "\n";
      if (t.wildcard) out << "      - " << policy_text("\"*\"", *t.wildcard) << "\n";
      if (!t.color_map.empty()) {
        out << "    color_map: {";
        bool first = true;
        for (const auto& [from, to] : t.color_map) {
          out << (first ? "" : ", ") << from << ": " << to;
          first = false;
        }
        out << "}\n";
      }
      if (std::holds_alternative<AgeKeep>(t.age_action)) {
        out << "    age: keep\n";
      } else if (const auto* s = std::get_if<AgeScale>(&t.age_action)) {
        out << "    age: {scale: " << number(s->factor) << "}\n";
      }
      if (t.priority != 0) out << "    priority: " << t.priority << "\n";
      if (t.is_source()) out << "    emit_color: " << t.emit_color << "\n";
    }
  }

  if (!net.triggers.empty()) {
    out << "triggers:\n";
    for (const auto& trig : net.triggers) {
      out << "  - {kind: " << to_string(trig.kind) << ", place: " << quoted(trig.place)
          << ", target: " << quoted(trig.target) << ", multiplicity: " << trig.multiplicity;
      if (trig.colors) out << ", colors: " << color_list(*trig.colors);
      out << "}\n";
    }
  }

  if (!net.tokens.empty()) {
    out << "tokens:\n";
    for (const auto& g : net.tokens) {
      out << "  - {place: " << quoted(g.place) << ", color: " << g.color;
      if (g.age != 0) out << ", age: " << number(g.age);
      if (g.count != 1) out << ", count: " << g.count;
      out << "}\n";
    }
  }

  if (!net.sensors.empty()) {
    out << "sensors:\n";
    for (const auto& s : net.sensors) {
      out << "  - {name: " << quoted(s.name) << ", kind: " << to_string(s.kind);
      if (s.kind == SensorKind::firing_count) {
        out << ", transitions: " << quoted_list(s.transitions);
      } else {
        out << ", place: " << quoted(s.place);
        if (s.colors) out << ", colors: " << color_list(*s.colors);
        if (s.kind != SensorKind::time_average) out << ", k: " << s.threshold;
        if (s.kind == SensorKind::threshold)
          out << ", relation: \"" << (s.relation == Relation::at_least ? ">=" : "<=") << "\"";
      }
      if (s.window) out << ", window: [" << number(s.window->begin) << ", " << number(s.window->end) << "]";
      out << "}\n";
    }
  }

  if (simulation.horizon || simulation.replications || simulation.seed || simulation.window) {
    out << "simulation:\n";
    if (simulation.horizon) out << "  horizon: " << number(*simulation.horizon) << "\n";
    if (simulation.replications) out << "  replications: " << *simulation.replications << "\n";
    if (simulation.seed) out << "  seed: " << *simulation.seed << "\n";
    if (simulation.window)
      out << "  window: [" << number(simulation.window->begin) << ", " << number(simulation.window->end) << "]\n";
  }
  return out.str();
}

}  // namespace apn
