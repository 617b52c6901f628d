#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "h2s/embedding.hpp"
#include "h2s/estimators.hpp"
#include "h2s/inference.hpp"
#include "h2s/types.hpp"

namespace h2s {

/// Input validation failures carry this type so the CLI can map them to the
/// dedicated exit code.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataFormat { LabeledCsv, Json, DistanceCsv };

DataFormat format_from_name(const std::string& name);
std::string format_name(DataFormat f);

struct IngestResult {
    std::optional<LabeledDataset> points;
    std::optional<DistanceDataset> distances;
    std::vector<std::string> warnings;

    bool is_distance_mode() const { return distances.has_value(); }
};

/// Labeled CSV: one row per point, label first, then N numeric coordinates.
LabeledDataset parse_labeled_csv(const std::string& text);
std::string labeled_csv(const LabeledDataset& dataset);

/// Distance CSV: square numeric matrix; one label per line in `labels_text`.
/// Asymmetry or a nonzero diagonal within 1e-9 (relative to the largest
/// entry) is repaired with a warning; anything larger is rejected.
DistanceDataset parse_distance_csv(const std::string& matrix_text, const std::string& labels_text,
                                   std::vector<std::string>* warnings = nullptr);

/// JSON datasets: {"classes":[{"label":..,"points":[[..]]},..]} or
/// {"point_labels":[..],"distances":[[..]]}.
IngestResult parse_dataset_json(const std::string& text);

IngestResult ingest(const std::string& path, DataFormat format,
                    const std::string& labels_path = "");

// ---------------------------------------------------------------------------
// Artifact serialization
// ---------------------------------------------------------------------------

nlohmann::json stats_to_json(const SummaryStats& stats);
SummaryStats stats_from_json(const nlohmann::json& j);

nlohmann::json ensemble_to_json(const HypersphereEnsemble& ensemble);
HypersphereEnsemble ensemble_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const IngestResult& data);
IngestResult dataset_from_json(const nlohmann::json& j);

nlohmann::json embedding_to_json(const Embedding& embedding);
Embedding embedding_from_json(const nlohmann::json& j);

nlohmann::json inference_report_to_json(const InferenceReport& report);
InferenceReport inference_report_from_json(const nlohmann::json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace h2s
