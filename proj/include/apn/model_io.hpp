#pragma once

// `.apn` model files.
//
// A model file is a YAML document with the top-level sections
//
//   places, transitions, triggers, tokens, layers, sensors, simulation
//
// Only `places` is mandatory. Unknown keys are rejected with the line and
// column of the offending key. A minimal example:
//
//   places: [Up, Down]
//   transitions:
//     - {id: fail, input: Up, output: Down,
//        policies: [{color: "*", delay: exponential, mean: 100}]}
//     - {id: repair, input: Down, output: Up,
//        policies: [{color: "*", delay: fixed, value: 10}]}
//   tokens:
//     - {place: Up, color: 1, count: 2}
//   sensors:
//     - {name: both_up, kind: threshold, place: Up, relation: ">=", k: 2}
//   simulation: {horizon: 200, replications: 10000, seed: 1, window: [100, 200]}
//
// serialize() writes the canonical form: sections in the fixed order above,
// elements sorted by id, numbers in shortest round-trip notation, defaults
// omitted. Layers are expanded on parse, so the canonical form is always flat.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apn/layers.hpp"
#include "apn/model.hpp"

namespace apn {

struct SimulationSettings {
  std::optional<Time> horizon;
  std::optional<std::uint64_t> replications;
  std::optional<std::uint64_t> seed;
  std::optional<Window> window;

  friend bool operator==(const SimulationSettings&, const SimulationSettings&) = default;
};

// The document as written: base net plus unexpanded layer templates.
struct ModelFile {
  Net net;
  std::vector<LayerTemplate> layers;
  SimulationSettings simulation;
};

struct Model {
  Net net;
  SimulationSettings simulation;
};

// Syntax and schema only; throws ParseError.
ModelFile parse_model_file(std::string_view text);

// Expands layers, canonicalizes and validates. Throws ParseError,
// ValidationError or ColorLeak.
Model parse_model(std::string_view text);
Net parse(std::string_view text);

// Throws IoError when the file cannot be read.
Model load_model(const std::filesystem::path& path);

std::string serialize(const Net& net, const SimulationSettings& simulation = {});

}  // namespace apn
