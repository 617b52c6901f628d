// h2s: fit hyperspheres to labeled high-dimensional classes, embed them as
// circles/spheres, test their statistics, and render the results.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "h2s/calibration.hpp"
#include "h2s/geometry.hpp"
#include "h2s/io.hpp"
#include "h2s/pipeline.hpp"
#include "h2s/render.hpp"
#include "h2s/rng.hpp"
#include "h2s/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

json load_artifact(const std::string& path, const std::string& produced_by) {
    if (!fs::exists(path))
        throw h2s::ValidationError("'" + path + "' not found; run the `" + produced_by +
                                   "` stage first");
    try {
        return json::parse(h2s::read_file(path));
    } catch (const json::exception& e) {
        throw h2s::ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

h2s::CalibrationTables load_tables(const std::string& path) {
    if (path.empty()) return h2s::CalibrationTables::defaults();
    return h2s::CalibrationTables::from_json(h2s::read_file(path));
}

void write_artifact(const std::string& dir, const std::string& name, const std::string& body) {
    fs::create_directories(fs::path(dir + "/" + name).parent_path());
    h2s::write_file(dir + "/" + name, body);
    std::cout << dir << "/" << name << "\n";
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<std::string> parse_str_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

struct FitArgs {
    std::string data, format = "csv", labels, tables, out = "h2s_out", estimator = "adaptive";
    int data_dim = 0, mcmc_samples = 10000;
    std::uint64_t seed = 0;
};

int cmd_fit(const FitArgs& a) {
    h2s::RunConfig cfg;
    cfg.input_path = a.data;
    cfg.input_format = a.format;
    cfg.labels_path = a.labels;
    cfg.data_dim = a.data_dim;
    cfg.estimator = a.estimator;
    cfg.mcmc_samples = a.mcmc_samples;
    cfg.tables_path = a.tables;
    cfg.seed = a.seed;
    cfg.out_dir = a.out;
    cfg.run_embedding = cfg.run_inference = cfg.run_render = false;
    cfg.force = true;
    h2s::run_pipeline(cfg);
    std::cout << a.out << "/model.json\n";
    return kExitOk;
}

struct EmbedArgs {
    std::string model, out;
    int dim = 2;
    double alpha = 1.0, beta = 1.0;
    bool mds_only = false;
    std::uint64_t seed = 0;
};

int cmd_embed(const EmbedArgs& a) {
    const json model = load_artifact(a.model, "fit");
    const auto target = h2s::stats_from_json(model.at("stats"));
    const h2s::ObjectiveWeights weights{a.alpha, a.beta};
    const h2s::Embedding emb = a.mds_only
                                   ? h2s::mds_only_embedding(target, a.dim, weights)
                                   : h2s::optimize(target, a.dim, weights, a.seed);
    json j = h2s::embedding_to_json(emb);
    j["config_hash"] = h2s::json_hash(json{{"model", model.at("config_hash")},
                                           {"dim", a.dim},
                                           {"alpha", a.alpha},
                                           {"beta", a.beta},
                                           {"mds_only", a.mds_only},
                                           {"seed", a.seed}});
    const std::string dir = a.out.empty() ? fs::path(a.model).parent_path().string() : a.out;
    write_artifact(dir.empty() ? "." : dir, "embedding.json", j.dump(2) + "\n");
    return emb.converged ? kExitOk : kExitNonConvergence;
}

struct InferArgs {
    std::string model, out, estimator;
    int resamples = 5000;
    double alpha_level = 0.05;
    std::uint64_t seed = 0;
    std::string tables;
};

int cmd_infer(const InferArgs& a) {
    const json model = load_artifact(a.model, "fit");
    const auto data = h2s::dataset_from_json(model.at("dataset"));
    if (data.is_distance_mode())
        throw h2s::ValidationError("inference needs point data; this model was fit on distances");
    const std::string est_name =
        a.estimator.empty() ? model.at("estimator").get<std::string>() : a.estimator;
    h2s::EstimatorChoice choice{h2s::estimator_from_name(est_name),
                                model.at("mcmc_samples").get<int>()};
    const h2s::ResamplingConfig rc{a.resamples, a.alpha_level, a.seed};
    const auto report = h2s::full_inference(*data.points, choice, load_tables(a.tables), rc);
    json j = h2s::inference_report_to_json(report);
    j["config_hash"] = h2s::json_hash(json{{"model", model.at("config_hash")},
                                           {"estimator", est_name},
                                           {"resamples", a.resamples},
                                           {"alpha_level", a.alpha_level},
                                           {"seed", a.seed}});
    const std::string dir = a.out.empty() ? fs::path(a.model).parent_path().string() : a.out;
    write_artifact(dir.empty() ? "." : dir, "inference.json", j.dump(2) + "\n");
    return kExitOk;
}

struct RenderArgs {
    std::string embedding, inference, out;
    double canvas = 800.0, margin = 40.0;
    std::string palette;
};

int cmd_render(const RenderArgs& a) {
    const json ej = load_artifact(a.embedding, "embed");
    const h2s::Embedding emb = h2s::embedding_from_json(ej);

    h2s::InferenceReport report;
    bool have_report = false;
    if (!a.inference.empty()) {
        report = h2s::inference_report_from_json(load_artifact(a.inference, "infer"));
        have_report = true;
    }

    h2s::RenderOptions opts;
    opts.canvas_px = a.canvas;
    opts.margin_px = a.margin;
    if (!a.palette.empty()) opts.palette = parse_str_list(a.palette);

    const std::string dir = a.out.empty() ? fs::path(a.embedding).parent_path().string() : a.out;
    const std::string root = dir.empty() ? "." : dir;
    const h2s::Scene scene = h2s::build_scene(emb, opts, have_report ? &report : nullptr);
    write_artifact(root, "scene.svg", h2s::render_scene_svg(scene));
    write_artifact(root, "scene.json", h2s::scene_to_json(scene) + "\n");
    write_artifact(root, "diagrams/values.svg",
                   h2s::render_values_diagram(emb.target, emb.achieved, opts));
    if (have_report) {
        write_artifact(root, "diagrams/significance.svg",
                       h2s::render_significance_diagram(report, h2s::DiagramKind::Significance, opts));
        write_artifact(root, "diagrams/pairwise.svg",
                       h2s::render_significance_diagram(report, h2s::DiagramKind::Pairwise, opts));
    }
    return kExitOk;
}

struct SimulateArgs {
    std::string kind = "touching", distribution = "ball", out = "scenario.csv", truth;
    int dim = 200;
    std::string samples, radii, offsets;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
    h2s::ScenarioSpec spec;
    spec.kind = h2s::scenario_from_name(a.kind);
    spec.distribution = h2s::distribution_from_name(a.distribution);
    spec.dim = a.dim;
    spec.seed = a.seed;
    if (!a.samples.empty()) spec.samples = parse_int_list(a.samples);
    if (!a.radii.empty())
        for (const auto& r : parse_str_list(a.radii)) spec.radii.push_back(std::stod(r));
    if (!a.offsets.empty())
        for (const auto& o : parse_str_list(a.offsets)) spec.offsets.push_back(std::stod(o));

    const h2s::Scenario scenario = h2s::generate_scenario(spec);
    h2s::write_file(a.out, h2s::labeled_csv(scenario.dataset));
    std::cout << a.out << "\n";
    if (!a.truth.empty()) {
        json truth = h2s::ensemble_to_json(scenario.truth);
        truth["stats"] = h2s::stats_to_json(h2s::summary_stats(scenario.truth));
        h2s::write_file(a.truth, truth.dump(2) + "\n");
        std::cout << a.truth << "\n";
    }
    return kExitOk;
}

struct BenchArgs {
    std::string estimators = "adaptive,mean_d2c", distributions = "ball,gaussian,cube";
    std::string dims = "16,200,1024", samples = "200", out = "bench.csv", json_out, tables;
    int reps = 100;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& a) {
    std::vector<h2s::Distribution> dists;
    for (const auto& d : parse_str_list(a.distributions))
        dists.push_back(h2s::distribution_from_name(d));
    const auto cells = h2s::estimator_benchmark(parse_str_list(a.estimators), dists,
                                                parse_int_list(a.dims), parse_int_list(a.samples),
                                                a.reps, a.seed, load_tables(a.tables));
    h2s::write_file(a.out, h2s::benchmark_csv(cells));
    std::cout << a.out << "\n";
    if (!a.json_out.empty()) {
        json rows = json::array();
        for (const auto& c : cells)
            rows.push_back({{"estimator", c.estimator},
                            {"distribution", h2s::distribution_name(c.distribution)},
                            {"N", c.dim},
                            {"P", c.samples},
                            {"mean", c.mean_sq_error},
                            {"std", c.std_sq_error}});
        h2s::write_file(a.json_out, rows.dump(2) + "\n");
        std::cout << a.json_out << "\n";
    }
    return kExitOk;
}

struct DeriveArgs {
    std::string dims = "2,4,8,16,32,64,128,256,512,1024,2048,4096";
    std::string zeta_dims = "1,2,4,8,16,32,64,128,256,512,1024,2048,4096";
    std::string out = "tables.json";
    int reps = 100, samples = 200;
    std::uint64_t seed = 0;
};

int cmd_derive_tables(const DeriveArgs& a) {
    const auto xi = h2s::derive_xi(parse_int_list(a.dims), a.reps, a.seed, a.samples);
    const auto inv_zeta =
        h2s::derive_zeta(parse_int_list(a.zeta_dims), a.reps, h2s::derive_seed(a.seed, 1), a.samples);
    const h2s::CalibrationTables tables(xi, inv_zeta);
    h2s::write_file(a.out, tables.to_json() + "\n");
    std::cout << a.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypersphere ensembles: fit, embed, test, render"};
    app.require_subcommand(1);

    // run
    std::string run_config_path;
    bool run_force = false;
    auto* run = app.add_subcommand("run", "full pipeline from a config file");
    run->add_option("--config", run_config_path, "RunConfig JSON")->required();
    run->add_flag("--force", run_force, "rebuild even if the output is up to date");

    // fit
    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit hyperspheres to a dataset");
    fit_cmd->add_option("--data", fit.data, "dataset path")->required();
    fit_cmd->add_option("--format", fit.format, "csv|json|distances");
    fit_cmd->add_option("--labels", fit.labels, "label file (distance mode)");
    fit_cmd->add_option("--data-dim", fit.data_dim, "assumed dimension (distance mode)");
    fit_cmd->add_option("--estimator", fit.estimator,
                        "ml|mcmc|dcb1|dcg|dcc|dcb2|adaptive|dist");
    fit_cmd->add_option("--mcmc-samples", fit.mcmc_samples, "MCMC sample count");
    fit_cmd->add_option("--tables", fit.tables, "calibration tables JSON");
    fit_cmd->add_option("--seed", fit.seed, "random seed");
    fit_cmd->add_option("--out", fit.out, "output directory");

    // embed
    EmbedArgs embed;
    auto* embed_cmd = app.add_subcommand("embed", "optimize the low-dimensional spheres");
    embed_cmd->add_option("--model", embed.model, "model.json from `fit`")->required();
    embed_cmd->add_option("--dim", embed.dim, "2 or 3");
    embed_cmd->add_option("--alpha", embed.alpha, "margin-term weight");
    embed_cmd->add_option("--beta", embed.beta, "radius-term weight");
    embed_cmd->add_flag("--mds-only", embed.mds_only, "skip the joint optimization");
    embed_cmd->add_option("--seed", embed.seed, "random seed");
    embed_cmd->add_option("--out", embed.out, "output directory (default: model's)");

    // infer
    InferArgs infer;
    auto* infer_cmd = app.add_subcommand("infer", "resampling significance tests");
    infer_cmd->add_option("--model", infer.model, "model.json from `fit`")->required();
    infer_cmd->add_option("--estimator", infer.estimator, "override the model's estimator");
    infer_cmd->add_option("--resamples", infer.resamples, "resampling count");
    infer_cmd->add_option("--alpha-level", infer.alpha_level, "significance level");
    infer_cmd->add_option("--seed", infer.seed, "random seed");
    infer_cmd->add_option("--tables", infer.tables, "calibration tables JSON");
    infer_cmd->add_option("--out", infer.out, "output directory (default: model's)");

    // render
    RenderArgs render;
    auto* render_cmd = app.add_subcommand("render", "emit SVG scene and diagrams");
    render_cmd->add_option("--embedding", render.embedding, "embedding.json")->required();
    render_cmd->add_option("--inference", render.inference, "inference.json (optional)");
    render_cmd->add_option("--canvas", render.canvas, "canvas size, px");
    render_cmd->add_option("--margin", render.margin, "margin, px");
    render_cmd->add_option("--palette", render.palette, "comma-separated #rrggbb colors");
    render_cmd->add_option("--out", render.out, "output directory (default: embedding's)");

    // simulate
    SimulateArgs simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a ground-truth scenario");
    sim_cmd->add_option("--kind", simulate.kind,
                        "touching|concentric|enclosed_touching|intersecting|imbalanced|custom");
    sim_cmd->add_option("--distribution", simulate.distribution, "ball|gaussian|cube");
    sim_cmd->add_option("--dim", simulate.dim, "data dimension");
    sim_cmd->add_option("--samples", simulate.samples, "per-class sample counts, comma-separated");
    sim_cmd->add_option("--radii", simulate.radii, "per-class radii, comma-separated");
    sim_cmd->add_option("--offsets", simulate.offsets, "per-class offsets (custom kind)");
    sim_cmd->add_option("--seed", simulate.seed, "random seed");
    sim_cmd->add_option("--out", simulate.out, "dataset CSV path");
    sim_cmd->add_option("--truth", simulate.truth, "ground-truth JSON path");

    // bench
    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "estimator accuracy benchmark");
    bench_cmd->add_option("--estimators", bench.estimators, "names, comma-separated");
    bench_cmd->add_option("--distributions", bench.distributions, "ball,gaussian,cube subset");
    bench_cmd->add_option("--dims", bench.dims, "dimensions, comma-separated");
    bench_cmd->add_option("--samples", bench.samples, "sample counts, comma-separated");
    bench_cmd->add_option("--reps", bench.reps, "repetitions per cell");
    bench_cmd->add_option("--seed", bench.seed, "random seed");
    bench_cmd->add_option("--tables", bench.tables, "calibration tables JSON");
    bench_cmd->add_option("--out", bench.out, "CSV output path");
    bench_cmd->add_option("--json", bench.json_out, "JSON output path");

    // derive-tables
    DeriveArgs derive;
    auto* derive_cmd = app.add_subcommand("derive-tables", "re-derive calibration tables");
    derive_cmd->add_option("--dims", derive.dims, "dimensions for xi");
    derive_cmd->add_option("--zeta-dims", derive.zeta_dims, "dimensions for zeta");
    derive_cmd->add_option("--reps", derive.reps, "repetitions per dimension");
    derive_cmd->add_option("--samples", derive.samples, "points per draw");
    derive_cmd->add_option("--seed", derive.seed, "random seed");
    derive_cmd->add_option("--out", derive.out, "tables JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (run->parsed()) {
            h2s::RunConfig cfg =
                h2s::config_from_json(json::parse(h2s::read_file(run_config_path)));
            if (run_force) cfg.force = true;
            switch (h2s::run_pipeline(cfg)) {
                case h2s::PipelineStatus::Ok:
                    std::cout << cfg.out_dir << "/manifest.json\n";
                    return kExitOk;
                case h2s::PipelineStatus::SkippedUpToDate:
                    std::cout << cfg.out_dir << " is up to date (use --force to rebuild)\n";
                    return kExitOk;
                case h2s::PipelineStatus::NonConvergence:
                    std::cerr << "warning: optimization did not converge; artifacts flagged\n";
                    return kExitNonConvergence;
            }
        }
        if (fit_cmd->parsed()) return cmd_fit(fit);
        if (embed_cmd->parsed()) return cmd_embed(embed);
        if (infer_cmd->parsed()) return cmd_infer(infer);
        if (render_cmd->parsed()) return cmd_render(render);
        if (sim_cmd->parsed()) return cmd_simulate(simulate);
        if (bench_cmd->parsed()) return cmd_bench(bench);
        if (derive_cmd->parsed()) return cmd_derive_tables(derive);
    } catch (const h2s::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
