#pragma once

#include <string>

#include "json.hpp"

namespace microloc {

using Json = nlohmann::ordered_json;

/// Validates and runs one experiment config, writing summary.json and the
/// per-experiment CSV artifacts into output_dir. Returns true when every
/// verdict in the experiment passed. Throws ConfigError on schema problems
/// and HypothesisError on refused hypotheses.
bool run_experiment(const Json& config, const std::string& output_dir,
                    bool verbose);

/// Top-level schema check shared by run_experiment and the CLI.
void validate_top_level(const Json& config);

}  // namespace microloc
