#pragma once

#include <map>
#include <string>
#include <vector>

#include "udf/applications.hpp"
#include "udf/mesher.hpp"
#include "udf/trainer.hpp"

namespace udf::config {

// Everything a run can tune, collected in one place so the manifest can
// snapshot it verbatim.
struct RunConfig {
    trainer::TrainConfig train;
    mesher::MeshOptions mesh;
    applications::UpsampleConfig upsample;
    int eval_samples = 100000;

    // The merged key=value view (file keys overridden by flags).
    std::map<std::string, std::string> snapshot() const;
};

// Flat key=value file, one pair per line, '#' starts a comment. Unknown
// keys are an error naming the key.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

std::uint64_t fnv1a_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_hashes;  // path -> hex fnv-1a
    unsigned long long seed = 0;
    std::string tool_version;
    std::vector<std::string> outputs;
    double wall_clock_sec = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace udf::config
