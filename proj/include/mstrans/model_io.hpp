#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstrans/fit.hpp"
#include "mstrans/sim.hpp"

namespace mstrans {

inline constexpr int kFormatVersion = 1;

// FNV-1a over a canonical JSON dump; recorded in every artifact.
std::uint64_t fnv1a64(const std::string& s);
std::string config_hash(const nlohmann::json& config);

nlohmann::json design_spec_to_json(const DesignSpec& spec);
DesignSpec design_spec_from_json(const nlohmann::json& j);

nlohmann::json fit_config_to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const TransitionModel& model);
TransitionModel model_from_json(const nlohmann::json& j);

// A bundle holds one model per permissible transition plus provenance.
struct ModelBundle {
  StateSpace space;
  std::vector<TransitionModel> models;  // aligned with space.edges
  std::uint64_t seed = 0;
  std::string config_hash;

  const TransitionModel& for_edge(Edge e) const;
};

void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
void save_truth(const std::string& path, const GroundTruth& truth);
GroundTruth load_truth(const std::string& path);

nlohmann::json bootstrap_to_json(const BootstrapSummary& summary);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace mstrans
