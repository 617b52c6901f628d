#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2s/io.hpp"

namespace h2s {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a reproducible run needs; serialized into the run manifest.
struct RunConfig {
    // input
    std::string input_path;
    std::string input_format = "csv";  // csv | json | distances
    std::string labels_path;           // distance mode only
    int data_dim = 0;                  // distance mode: assumed dimension; 0 = high-dim asymptote

    // fit
    std::string estimator = "adaptive";
    int mcmc_samples = 10000;
    std::string tables_path;  // substitute calibration tables; empty = built-in

    // embed
    bool run_embedding = true;
    int dim = 2;
    double alpha = 1.0;
    double beta = 1.0;
    bool mds_only = false;

    // infer
    bool run_inference = true;
    int resamples = 5000;
    double alpha_level = 0.05;

    // render
    bool run_render = true;
    double canvas_px = 800.0;
    double margin_px = 40.0;
    std::vector<std::string> palette;

    std::uint64_t seed = 0;
    std::string out_dir = "h2s_out";
    bool force = false;  // ignored by the config hash
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

/// FNV-1a hash of a canonical JSON dump, hex-encoded.
std::string json_hash(const nlohmann::json& j);

/// Hash of the config (minus `force`). Artifacts embed it so a finished run
/// can be recognized and skipped.
std::string config_hash(const RunConfig& config);

enum class PipelineStatus { Ok, NonConvergence, SkippedUpToDate };

/// Runs fit -> embed -> infer -> render per the config's stage flags, writing
/// model.json, embedding.json, inference.json, scene.svg/json, diagrams/*.svg
/// and manifest.json under out_dir. A stage failure removes this run's
/// partial artifacts. Re-running an unchanged config is a no-op without
/// `force`.
PipelineStatus run_pipeline(const RunConfig& config);

}  // namespace h2s
