#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "h2s/geometry.hpp"
#include "h2s/io.hpp"
#include "h2s/pipeline.hpp"
#include "h2s/synthetic.hpp"

using namespace h2s;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("h2s_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("labeled CSV ingestion") {
    const std::string csv =
        "a,0.0,0.0\n"
        "a,1.0,0.5\n"
        "b,3.5,4.0\n"
        "b,3.0,4.5\n";
    const auto ds = parse_labeled_csv(csv);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.dimension() == 2);
    CHECK(ds.class_at(0).label == "a");
    CHECK(ds.class_at(1).points(0, 1) == 4.0);

    // round trip through the writer
    const auto again = parse_labeled_csv(labeled_csv(ds));
    CHECK(again.class_at(1).points.isApprox(ds.class_at(1).points));
}

TEST_CASE("labeled CSV errors carry positions") {
    const std::string ragged = "a,0,0\na,1,1\nb,1\nb,2,2\n";
    CHECK_THROWS_WITH_AS(parse_labeled_csv(ragged),
                         doctest::Contains("line 3"), ValidationError);

    const std::string bad_cell = "a,0,0\na,1,x\n";
    try {
        parse_labeled_csv(bad_cell);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("column 3") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_labeled_csv(""), ValidationError);
    CHECK_THROWS_AS(parse_labeled_csv("a,1,2\n"), ValidationError);  // single point in a class
}

TEST_CASE("distance CSV tolerance rules") {
    const std::string labels = "a\na\nb\nb\n";
    const std::string clean =
        "0,1,2,2\n"
        "1,0,2,2\n"
        "2,2,0,1\n"
        "2,2,1,0\n";
    std::vector<std::string> warnings;
    const auto ds = parse_distance_csv(clean, labels, &warnings);
    CHECK(ds.num_points() == 4);
    CHECK(warnings.empty());

    // asymmetry within 1e-9 relative: symmetrized with a warning
    const std::string tiny_asym =
        "0,1.0000000000001,2,2\n"
        "1,0,2,2\n"
        "2,2,0,1\n"
        "2,2,1,0\n";
    warnings.clear();
    const auto fixed = parse_distance_csv(tiny_asym, labels, &warnings);
    CHECK(!warnings.empty());
    CHECK(fixed.distances()(0, 1) == fixed.distances()(1, 0));

    // asymmetry far above tolerance: rejected
    const std::string big_asym =
        "0,1.1,2,2\n"
        "1,0,2,2\n"
        "2,2,0,1\n"
        "2,2,1,0\n";
    CHECK_THROWS_AS(parse_distance_csv(big_asym, labels, nullptr), ValidationError);

    CHECK_THROWS_AS(parse_distance_csv(clean, "a\nb\n", nullptr), ValidationError);
}

TEST_CASE("JSON artifact round trips preserve doubles exactly") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Intersecting;
    spec.dim = 7;
    spec.samples = {8, 9};
    spec.seed = 5;
    const auto scenario = generate_scenario(spec);
    const auto fit = fit_ensemble(scenario.dataset, {}, CalibrationTables::defaults(), 5);

    const auto stats2 = stats_from_json(nlohmann::json::parse(stats_to_json(fit.stats).dump()));
    CHECK((stats2.radii - fit.stats.radii).norm() == 0.0);
    CHECK((stats2.distances - fit.stats.distances).norm() == 0.0);
    CHECK((stats2.margins - fit.stats.margins).norm() == 0.0);

    const auto ens2 =
        ensemble_from_json(nlohmann::json::parse(ensemble_to_json(fit.ensemble).dump()));
    CHECK(ens2.labels == fit.ensemble.labels);
    CHECK((ens2.spheres[0].center - fit.ensemble.spheres[0].center).norm() == 0.0);
    CHECK(ens2.spheres[1].radius == fit.ensemble.spheres[1].radius);

    const auto emb = optimize(fit.stats, 2, {}, 1);
    const auto emb2 = embedding_from_json(nlohmann::json::parse(embedding_to_json(emb).dump()));
    CHECK((emb2.centers - emb.centers).norm() == 0.0);
    CHECK((emb2.radii - emb.radii).norm() == 0.0);
    CHECK(emb2.objective == emb.objective);

    IngestResult data;
    data.points = scenario.dataset;
    const auto data2 = dataset_from_json(nlohmann::json::parse(dataset_to_json(data).dump()));
    CHECK(data2.points->class_at(1).points.isApprox(scenario.dataset.class_at(1).points, 0.0));

    ResamplingConfig rc;
    rc.n_resamples = 150;
    rc.seed = 2;
    const auto report =
        full_inference(scenario.dataset, {}, CalibrationTables::defaults(), rc);
    const auto report2 =
        inference_report_from_json(nlohmann::json::parse(inference_report_to_json(report).dump()));
    CHECK(report2.pairs == report.pairs);
    REQUIRE(report2.first_order[1][0].has_value());
    CHECK(report2.first_order[1][0]->p_value == report.first_order[1][0]->p_value);
    CHECK(report2.second_order[0][0]->estimate == report.second_order[0][0]->estimate);
}

TEST_CASE("run_pipeline writes a complete artifact set and is a no-op when unchanged") {
    const auto dir = fresh_dir("pipeline");
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Touching;
    spec.dim = 24;
    spec.samples = {30, 30};
    spec.seed = 9;
    const auto scenario = generate_scenario(spec);
    write_file((dir / "data.csv").string(), labeled_csv(scenario.dataset));

    RunConfig cfg;
    cfg.input_path = (dir / "data.csv").string();
    cfg.out_dir = (dir / "out").string();
    cfg.resamples = 150;
    cfg.seed = 4;
    CHECK(run_pipeline(cfg) == PipelineStatus::Ok);
    for (const char* name : {"model.json", "embedding.json", "inference.json", "scene.svg",
                             "scene.json", "manifest.json", "diagrams/values.svg",
                             "diagrams/significance.svg", "diagrams/pairwise.svg"})
        CHECK(fs::exists(dir / "out" / name));

    // unchanged config: skipped; config embeds the hash everywhere
    CHECK(run_pipeline(cfg) == PipelineStatus::SkippedUpToDate);
    const auto manifest = nlohmann::json::parse(read_file((dir / "out/manifest.json").string()));
    const auto model = nlohmann::json::parse(read_file((dir / "out/model.json").string()));
    CHECK(manifest.at("config_hash") == model.at("config_hash"));
    CHECK(manifest.at("config_hash").get<std::string>() == config_hash(cfg));

    // byte-identical reruns under --force
    const std::string before = read_file((dir / "out/embedding.json").string());
    RunConfig forced = cfg;
    forced.force = true;
    CHECK(run_pipeline(forced) == PipelineStatus::Ok);
    CHECK(read_file((dir / "out/embedding.json").string()) == before);
    CHECK(config_hash(forced) == config_hash(cfg));  // force is not part of the hash
}

TEST_CASE("pipeline stage failures remove partial artifacts") {
    const auto dir = fresh_dir("pipeline_fail");
    // distance-matrix input with inference requested: the infer stage rejects it
    const std::string matrix =
        "0,1,2,2\n"
        "1,0,2,2\n"
        "2,2,0,1\n"
        "2,2,1,0\n";
    write_file((dir / "d.csv").string(), matrix);
    write_file((dir / "labels.txt").string(), "a\na\nb\nb\n");

    RunConfig cfg;
    cfg.input_path = (dir / "d.csv").string();
    cfg.input_format = "distances";
    cfg.labels_path = (dir / "labels.txt").string();
    cfg.estimator = "dist";
    cfg.out_dir = (dir / "out").string();
    cfg.resamples = 150;
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    CHECK(!fs::exists(dir / "out/model.json"));  // partial artifact cleaned up

    // disabling inference makes the same input valid
    cfg.run_inference = false;
    CHECK(run_pipeline(cfg) == PipelineStatus::Ok);
    CHECK(fs::exists(dir / "out/model.json"));
    const auto model = nlohmann::json::parse(read_file((dir / "out/model.json").string()));
    CHECK(model.at("mode") == "distances");
}

TEST_CASE("pipeline validates configs") {
    RunConfig cfg;
    cfg.input_path = "";
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    cfg.input_path = "x.csv";
    cfg.dim = 5;
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
    cfg.dim = 2;
    cfg.resamples = 10;
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
}

TEST_CASE("cli binary: stage composition, missing upstream artifacts, exit codes") {
    const auto dir = fresh_dir("cli");
    const std::string cli = H2S_CLI_PATH;
    const auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                                (dir / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    // missing upstream artifact names the prior stage
    CHECK(run("embed --model " + (dir / "missing/model.json").string()) == 2);
    const std::string err = read_file((dir / "stderr.txt").string());
    CHECK(err.find("fit") != std::string::npos);

    CHECK(run("simulate --kind intersecting --dim 12 --samples 16,16 --seed 3 --out " +
              (dir / "data.csv").string()) == 0);
    CHECK(run("fit --data " + (dir / "data.csv").string() + " --seed 1 --out " +
              (dir / "run").string()) == 0);
    CHECK(run("embed --model " + (dir / "run/model.json").string() + " --dim 2 --seed 1") == 0);
    CHECK(run("infer --model " + (dir / "run/model.json").string() +
              " --resamples 150 --seed 1") == 0);
    CHECK(run("render --embedding " + (dir / "run/embedding.json").string() + " --inference " +
              (dir / "run/inference.json").string()) == 0);
    CHECK(fs::exists(dir / "run/scene.svg"));
    CHECK(fs::exists(dir / "run/diagrams/pairwise.svg"));

    // malformed input: validation exit code
    write_file((dir / "bad.csv").string(), "a,1,2\na,2\n");
    CHECK(run("fit --data " + (dir / "bad.csv").string() + " --out " + (dir / "r2").string()) == 2);

    // derive-tables on a tiny grid produces loadable tables
    CHECK(run("derive-tables --dims 2,4 --zeta-dims 1,2 --reps 20 --seed 1 --out " +
              (dir / "tables.json").string()) == 0);
    const auto tables = CalibrationTables::from_json(read_file((dir / "tables.json").string()));
    CHECK(tables.xi_table().size() == 2);

    // bench writes the documented CSV schema
    CHECK(run("bench --estimators adaptive --distributions ball --dims 8 --samples 50 --reps 5 "
              "--seed 1 --out " +
              (dir / "bench.csv").string()) == 0);
    const std::string csv = read_file((dir / "bench.csv").string());
    CHECK(csv.rfind("estimator,distribution,N,P,mean,std", 0) == 0);
}
