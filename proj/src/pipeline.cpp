#include "h2s/pipeline.hpp"

#include <cstdio>
#include <filesystem>

#include "h2s/geometry.hpp"
#include "h2s/render.hpp"

namespace h2s {

namespace fs = std::filesystem;

nlohmann::json config_to_json(const RunConfig& c) {
    return {{"input_path", c.input_path},
            {"input_format", c.input_format},
            {"labels_path", c.labels_path},
            {"data_dim", c.data_dim},
            {"estimator", c.estimator},
            {"mcmc_samples", c.mcmc_samples},
            {"tables_path", c.tables_path},
            {"run_embedding", c.run_embedding},
            {"dim", c.dim},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"mds_only", c.mds_only},
            {"run_inference", c.run_inference},
            {"resamples", c.resamples},
            {"alpha_level", c.alpha_level},
            {"run_render", c.run_render},
            {"canvas_px", c.canvas_px},
            {"margin_px", c.margin_px},
            {"palette", c.palette},
            {"seed", c.seed},
            {"out_dir", c.out_dir},
            {"force", c.force}};
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("input_path", c.input_path);
    get("input_format", c.input_format);
    get("labels_path", c.labels_path);
    get("data_dim", c.data_dim);
    get("estimator", c.estimator);
    get("mcmc_samples", c.mcmc_samples);
    get("tables_path", c.tables_path);
    get("run_embedding", c.run_embedding);
    get("dim", c.dim);
    get("alpha", c.alpha);
    get("beta", c.beta);
    get("mds_only", c.mds_only);
    get("run_inference", c.run_inference);
    get("resamples", c.resamples);
    get("alpha_level", c.alpha_level);
    get("run_render", c.run_render);
    get("canvas_px", c.canvas_px);
    get("margin_px", c.margin_px);
    get("palette", c.palette);
    get("seed", c.seed);
    get("out_dir", c.out_dir);
    get("force", c.force);
    return c;
}

std::string json_hash(const nlohmann::json& j) {
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

std::string config_hash(const RunConfig& config) {
    nlohmann::json j = config_to_json(config);
    j.erase("force");
    return json_hash(j);
}

namespace {

void validate(const RunConfig& c) {
    format_from_name(c.input_format);
    estimator_from_name(c.estimator);
    if (c.input_path.empty()) throw ValidationError("config: input_path is required");
    if (c.run_embedding && c.dim != 2 && c.dim != 3)
        throw ValidationError("config: embedding dim must be 2 or 3");
    if (c.alpha < 0.0 || c.beta < 0.0) throw ValidationError("config: weights must be >= 0");
    if (c.run_inference && c.resamples < 100)
        throw ValidationError("config: need at least 100 resamples for significance claims");
    if (!(c.alpha_level > 0.0 && c.alpha_level < 1.0))
        throw ValidationError("config: alpha_level must lie in (0,1)");
    if (c.mcmc_samples < 10) throw ValidationError("config: mcmc_samples too small");
    if (c.out_dir.empty()) throw ValidationError("config: out_dir is required");
}

/// Tracks files written by this run so a failed stage can clean up.
class ArtifactSink {
public:
    explicit ArtifactSink(const fs::path& root) : root_(root) {}

    void write(const std::string& rel, const std::string& content) {
        const fs::path p = root_ / rel;
        fs::create_directories(p.parent_path());
        write_file(p.string(), content);
        written_.push_back(p);
        names_.push_back(rel);
    }

    void remove_all_written() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    fs::path root_;
    std::vector<fs::path> written_;
    std::vector<std::string> names_;
};

struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what) {}
};

}  // namespace

PipelineStatus run_pipeline(const RunConfig& config) {
    validate(config);
    const std::string hash = config_hash(config);
    const fs::path root(config.out_dir);

    const fs::path manifest_path = root / "manifest.json";
    if (!config.force && fs::exists(manifest_path)) {
        try {
            const auto m = nlohmann::json::parse(read_file(manifest_path.string()));
            if (m.at("config_hash").get<std::string>() == hash) {
                bool all_present = true;
                for (const auto& a : m.at("artifacts"))
                    if (!fs::exists(root / a.get<std::string>())) all_present = false;
                if (all_present) return PipelineStatus::SkippedUpToDate;
            }
        } catch (...) {
            // unreadable manifest: fall through and rebuild
        }
    }

    fs::create_directories(root);
    ArtifactSink sink(root);
    bool converged = true;

    try {
        // --- fit ---------------------------------------------------------
        IngestResult data;
        FitResult fit;
        CalibrationTables tables = CalibrationTables::defaults();
        try {
            if (!config.tables_path.empty())
                tables = CalibrationTables::from_json(read_file(config.tables_path));
            data = ingest(config.input_path, format_from_name(config.input_format),
                          config.labels_path);
            EstimatorChoice choice{estimator_from_name(config.estimator), config.mcmc_samples};
            if (data.is_distance_mode()) {
                const int dim = config.data_dim > 0 ? config.data_dim : 4097;
                fit = fit_ensemble(*data.distances, choice, tables, dim);
            } else {
                fit = fit_ensemble(*data.points, choice, tables, config.seed);
            }
            nlohmann::json model = {{"config_hash", hash},
                                    {"version", kVersion},
                                    {"mode", data.is_distance_mode() ? "distances" : "points"},
                                    {"estimator", config.estimator},
                                    {"mcmc_samples", config.mcmc_samples},
                                    {"ensemble", ensemble_to_json(fit.ensemble)},
                                    {"stats", stats_to_json(fit.stats)},
                                    {"dataset", dataset_to_json(data)},
                                    {"warnings", data.warnings}};
            sink.write("model.json", model.dump(2) + "\n");
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError("fit", e.what());
        }

        // --- embed ---------------------------------------------------------
        Embedding embedding;
        if (config.run_embedding) {
            try {
                const ObjectiveWeights weights{config.alpha, config.beta};
                embedding = config.mds_only
                                ? mds_only_embedding(fit.stats, config.dim, weights)
                                : optimize(fit.stats, config.dim, weights, config.seed);
                converged = converged && embedding.converged;
                nlohmann::json j = embedding_to_json(embedding);
                j["config_hash"] = hash;
                sink.write("embedding.json", j.dump(2) + "\n");
            } catch (const std::exception& e) {
                throw StageError("embed", e.what());
            }
        }

        // --- infer ---------------------------------------------------------
        InferenceReport report;
        bool have_report = false;
        if (config.run_inference) {
            try {
                if (data.is_distance_mode())
                    throw ValidationError(
                        "inference needs point data; rerun with inference disabled for "
                        "distance-matrix input");
                ResamplingConfig rc{config.resamples, config.alpha_level, config.seed};
                EstimatorChoice choice{estimator_from_name(config.estimator),
                                       config.mcmc_samples};
                report = full_inference(*data.points, choice, tables, rc);
                have_report = true;
                nlohmann::json j = inference_report_to_json(report);
                j["config_hash"] = hash;
                sink.write("inference.json", j.dump(2) + "\n");
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                throw StageError("infer", e.what());
            }
        }

        // --- render ---------------------------------------------------------
        if (config.run_render && config.run_embedding) {
            try {
                RenderOptions opts;
                opts.canvas_px = config.canvas_px;
                opts.margin_px = config.margin_px;
                opts.palette = config.palette;
                const Scene scene =
                    build_scene(embedding, opts, have_report ? &report : nullptr);
                sink.write("scene.svg", render_scene_svg(scene));
                sink.write("scene.json", scene_to_json(scene) + "\n");
                sink.write("diagrams/values.svg",
                           render_values_diagram(fit.stats, embedding.achieved, opts));
                if (have_report) {
                    sink.write("diagrams/significance.svg",
                               render_significance_diagram(report, DiagramKind::Significance, opts));
                    sink.write("diagrams/pairwise.svg",
                               render_significance_diagram(report, DiagramKind::Pairwise, opts));
                }
            } catch (const std::exception& e) {
                throw StageError("render", e.what());
            }
        }

        nlohmann::json manifest = {{"config", config_to_json(config)},
                                   {"config_hash", hash},
                                   {"version", kVersion},
                                   {"seed", config.seed},
                                   {"converged", converged},
                                   {"artifacts", sink.names()}};
        sink.write("manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
        sink.remove_all_written();
        throw;
    }

    return converged ? PipelineStatus::Ok : PipelineStatus::NonConvergence;
}

}  // namespace h2s
