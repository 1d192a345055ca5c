#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtk/clustering.hpp"
#include "mtk/detection.hpp"
#include "mtk/dynamics.hpp"
#include "mtk/similarity.hpp"
#include "mtk/tracking.hpp"
#include "mtk/volume.hpp"

namespace mtk {

// Everything the pipeline stages need, parsed from a key=value config file
// with CLI overrides applied on top.
struct PipelineConfig {
    // input: a slice-stack directory or raw container path; empty means the
    // synthetic generator provides the volume
    std::string input_path;
    std::string input_layout;
    SynthSpec synth;

    DetectParams detect;
    TrackParams track;

    std::int64_t ar_order = 5;    // d
    std::int64_t latent_dim = 2;  // n

    double beta = 1.0;
    std::int64_t pair_tile = 256;

    std::int64_t k = 0;  // 0 = auto (eigengap selection)
    std::int64_t k_max = 8;

    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir = "out";

    void validate() const;
};

/// Parse a key=value config file ('#' comments, blank lines allowed).
/// Unknown keys are an error.
PipelineConfig parse_config_file(const std::filesystem::path& path);

/// Apply one "key=value" assignment (same keys as the config file).
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

/// Canonical serialization of the full config (fixed key order).
std::string serialize_config(const PipelineConfig& config);

/// FNV-1a hash of the canonical serialization, as a hex string.
std::string config_hash(const PipelineConfig& config);

// Stage runners. Each reads its inputs from config.out_dir (or the configured
// input path), writes its artifacts there, and appends a stage manifest.
void run_synth(const PipelineConfig& config);
void run_track(const PipelineConfig& config);
void run_featurize(const PipelineConfig& config);
void run_cluster(const PipelineConfig& config);
void run_pipeline(const PipelineConfig& config);

// Artifact helpers shared by stages and tests.
void write_matrix_csv(const std::filesystem::path& path, const MatX& m);
MatX read_matrix_csv(const std::filesystem::path& path);
void write_models_json(const std::filesystem::path& path, const std::vector<ARModel>& models);
std::vector<ARModel> read_models_json(const std::filesystem::path& path);
void write_projection_json(const std::filesystem::path& path, const ProjectionMatrix& proj);
ProjectionMatrix read_projection_json(const std::filesystem::path& path);

}  // namespace mtk
