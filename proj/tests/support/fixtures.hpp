#pragma once

#include <string>

#include "cpes/engine.hpp"
#include "cpes/grid.hpp"
#include "cpes/ict.hpp"

namespace fixtures {

inline std::string path(const std::string& rel) { return std::string(CPES_SOURCE_DIR) + "/" + rel; }

inline cpes::PowerGrid grid(const std::string& name) {
  return cpes::load_grid(cpes::read_file(path("grids/" + name + ".json")));
}

inline cpes::IctTopology topology(const std::string& name, const cpes::PowerGrid& g) {
  return cpes::load_ict_from_grid_document(cpes::read_file(path("grids/" + name + ".json")), g);
}

inline std::string scenario_path(const std::string& name) { return path("scenarios/" + name + ".json"); }

inline std::unique_ptr<cpes::Simulation> sim(const std::string& scenario, const std::string& grid_name = "feeder6") {
  return cpes::open_simulation(path("grids/" + grid_name + ".json"), scenario_path(scenario));
}

}  // namespace fixtures
