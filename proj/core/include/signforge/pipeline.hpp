#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/runconfig.hpp"

namespace signforge {

/// End-to-end experiment: scenes, datasets, baseline training, standard
/// optimization, from-scratch retraining, sweeps, transfer, summary.
/// Completed stages are skipped when their .done marker carries the current
/// config hash; cheap pure stages (scenes, manifests) are regenerated in
/// memory, training stages reload their checkpoints. Returns the summary.
nlohmann::json reproduce(const RunConfig& config);

/// Stage names in execution order.
const std::vector<std::string>& pipeline_stages();

/// Validates a run directory: config present, every completed stage's marker
/// matches the config hash, and the stage artifacts exist. Returns the list
/// of problems (empty means the directory checks out).
std::vector<std::string> check_run_dir(const std::string& run_dir);

/// Toolkit version, config-hash schema, and the registered attack and
/// augmentation ids; stable across runs.
std::string version_and_provenance();

}  // namespace signforge
