#pragma once

#include <filesystem>
#include <string>

#include "apn/model.hpp"
#include "apn/model_io.hpp"

namespace apn::test {

inline std::filesystem::path model_path(const std::string& name) {
  return std::filesystem::path(APN_MODELS_DIR) / (name + ".apn");
}

inline Model shipped(const std::string& name) { return load_model(model_path(name)); }

inline const char* const kShippedModels[] = {
    "atc_merging",         "car_customer",   "car_customer_breakage",     "color_shift_service",
    "fifo",                "fifo_partial_reset", "five_customers_three_cars", "layered_pairing",
    "layered_pairing_scripted", "periodic_inspection", "workflow_complaints",
};

inline Transition make_transition(TransitionId id, std::optional<PlaceId> in, std::optional<PlaceId> out,
                                  DelayPolicy wildcard) {
  Transition t;
  t.id = std::move(id);
  if (in) t.inputs.push_back(*in);
  if (out) t.outputs.push_back(*out);
  t.wildcard = wildcard;
  return t;
}

}  // namespace apn::test
