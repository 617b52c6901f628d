#include "h2s/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "h2s/geometry.hpp"
#include "h2s/numeric.hpp"
#include "h2s/parallel.hpp"
#include "h2s/rng.hpp"

namespace h2s {

Distribution distribution_from_name(const std::string& name) {
    if (name == "ball") return Distribution::Ball;
    if (name == "gaussian") return Distribution::Gaussian;
    if (name == "cube") return Distribution::Cube;
    throw std::invalid_argument("unknown distribution '" + name + "'");
}

std::string distribution_name(Distribution d) {
    switch (d) {
        case Distribution::Ball: return "ball";
        case Distribution::Gaussian: return "gaussian";
        case Distribution::Cube: return "cube";
    }
    return "?";
}

Matrix sample_ball(int dim, int count, const Vector& center, double radius, std::uint64_t seed) {
    if (dim < 1 || count < 0) throw std::invalid_argument("sample_ball: bad shape");
    if (radius < 0.0) throw std::invalid_argument("sample_ball: negative radius");
    if (center.size() != dim) throw std::invalid_argument("sample_ball: center dimension mismatch");
    Rng rng(seed);
    Matrix out(count, dim);
    Vector dir(dim);
    for (int i = 0; i < count; ++i) {
        double norm = 0.0;
        do {
            for (int k = 0; k < dim; ++k) dir(k) = rng.gaussian();
            norm = dir.norm();
        } while (norm < 1e-12);
        const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
        out.row(i) = (center + dir * (r / norm)).transpose();
    }
    return out;
}

Matrix sample_gaussian(int dim, int count, const Vector& center, double scale,
                       std::uint64_t seed) {
    if (dim < 1 || count < 0) throw std::invalid_argument("sample_gaussian: bad shape");
    if (center.size() != dim)
        throw std::invalid_argument("sample_gaussian: center dimension mismatch");
    Rng rng(seed);
    Matrix out(count, dim);
    for (int i = 0; i < count; ++i)
        for (int k = 0; k < dim; ++k) out(i, k) = center(k) + scale * rng.gaussian();
    return out;
}

Matrix sample_cube(int dim, int count, const Vector& center, double scale, std::uint64_t seed) {
    if (dim < 1 || count < 0) throw std::invalid_argument("sample_cube: bad shape");
    if (center.size() != dim) throw std::invalid_argument("sample_cube: center dimension mismatch");
    Rng rng(seed);
    Matrix out(count, dim);
    for (int i = 0; i < count; ++i)
        for (int k = 0; k < dim; ++k) out(i, k) = center(k) + scale * (rng.uniform() - 0.5);
    return out;
}

double reference_radius(Distribution dist, int dim, double shape_scale) {
    switch (dist) {
        case Distribution::Ball: return shape_scale;
        case Distribution::Gaussian: return shape_scale * chi_mean(dim);
        case Distribution::Cube: return shape_scale * std::sqrt(dim / 12.0);
    }
    return shape_scale;
}

Matrix sample_distribution(Distribution dist, int dim, int count, const Vector& center,
                           double radius, std::uint64_t seed) {
    switch (dist) {
        case Distribution::Ball: return sample_ball(dim, count, center, radius, seed);
        case Distribution::Gaussian:
            return sample_gaussian(dim, count, center, radius / chi_mean(dim), seed);
        case Distribution::Cube:
            return sample_cube(dim, count, center, radius / std::sqrt(dim / 12.0), seed);
    }
    throw std::logic_error("sample_distribution: unhandled distribution");
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

ScenarioKind scenario_from_name(const std::string& name) {
    if (name == "touching") return ScenarioKind::Touching;
    if (name == "concentric") return ScenarioKind::Concentric;
    if (name == "enclosed_touching") return ScenarioKind::EnclosedTouching;
    if (name == "intersecting") return ScenarioKind::Intersecting;
    if (name == "imbalanced") return ScenarioKind::Imbalanced;
    if (name == "custom") return ScenarioKind::Custom;
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::string scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Touching: return "touching";
        case ScenarioKind::Concentric: return "concentric";
        case ScenarioKind::EnclosedTouching: return "enclosed_touching";
        case ScenarioKind::Intersecting: return "intersecting";
        case ScenarioKind::Imbalanced: return "imbalanced";
        case ScenarioKind::Custom: return "custom";
    }
    return "?";
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    if (spec.dim < 1) throw std::invalid_argument("generate_scenario: dimension must be positive");

    std::vector<double> radii = spec.radii;
    std::vector<int> samples = spec.samples;
    std::vector<double> offsets = spec.offsets;

    const auto default_two = [&](double r0, double r1, int p0, int p1, double offset) {
        if (radii.empty()) radii = {r0, r1};
        if (samples.empty()) samples = {p0, p1};
        if (radii.size() != 2)
            throw std::invalid_argument("generate_scenario: two-class scenario needs 2 radii");
        offsets = {0.0, offset};
    };

    switch (spec.kind) {
        case ScenarioKind::Touching:
            if (radii.empty()) radii = {1.0, 1.0};
            default_two(1.0, 1.0, 100, 100, radii[0] + radii[1]);
            break;
        case ScenarioKind::Concentric:
            default_two(1.0, 0.5, 100, 100, 0.0);
            break;
        case ScenarioKind::EnclosedTouching:
            if (radii.empty()) radii = {1.0, 0.5};
            default_two(1.0, 0.5, 100, 100, std::abs(radii[0] - radii[1]));
            break;
        case ScenarioKind::Intersecting:
            if (radii.empty()) radii = {1.0, 1.0};
            default_two(1.0, 1.0, 100, 100, radii[0]);
            break;
        case ScenarioKind::Imbalanced:
            if (radii.empty()) radii = {1.0, 1.0};
            default_two(1.0, 1.0, 100, 20, radii[0]);
            break;
        case ScenarioKind::Custom:
            if (radii.empty() || radii.size() != offsets.size())
                throw std::invalid_argument(
                    "generate_scenario: custom scenario needs matching radii and offsets");
            if (samples.empty()) samples.assign(radii.size(), 100);
            break;
    }
    if (samples.size() != radii.size())
        throw std::invalid_argument("generate_scenario: samples/radii size mismatch");

    const int t = static_cast<int>(radii.size());
    std::vector<LabeledClass> classes;
    std::vector<Hypersphere> truth;
    classes.reserve(static_cast<std::size_t>(t));
    truth.reserve(static_cast<std::size_t>(t));
    std::vector<std::string> labels;
    for (int c = 0; c < t; ++c) labels.push_back("class_" + std::to_string(c));

    for (int c = 0; c < t; ++c) {
        Vector center = Vector::Zero(spec.dim);
        center(0) = offsets[static_cast<std::size_t>(c)];
        const Matrix pts =
            sample_distribution(spec.distribution, spec.dim, samples[static_cast<std::size_t>(c)],
                                center, radii[static_cast<std::size_t>(c)],
                                derive_seed(spec.seed, static_cast<std::uint64_t>(c)));
        classes.push_back({labels[static_cast<std::size_t>(c)], pts});
        truth.emplace_back(center, radii[static_cast<std::size_t>(c)]);
    }

    return Scenario{LabeledDataset(std::move(classes)), HypersphereEnsemble(labels, truth)};
}

// ---------------------------------------------------------------------------
// Estimator benchmark
// ---------------------------------------------------------------------------

double naive_mean_d2c(const Eigen::Ref<const Matrix>& points) {
    return deltas_from_mean(points).mean();
}

namespace {

double run_estimator(const std::string& name, const Eigen::Ref<const Matrix>& points,
                     const CalibrationTables& tables, std::uint64_t seed) {
    if (name == "mean_d2c") return naive_mean_d2c(points);
    const EstimatorVariant v = estimator_from_name(name);
    EstimatorChoice choice;
    choice.variant = v;
    return fit_single(points, choice, tables, seed).radius;
}

}  // namespace

std::vector<BenchmarkCell> estimator_benchmark(const std::vector<std::string>& estimators,
                                               const std::vector<Distribution>& distributions,
                                               const std::vector<int>& dims,
                                               const std::vector<int>& sample_counts,
                                               int repetitions, std::uint64_t seed,
                                               const CalibrationTables& tables) {
    if (estimators.empty() || distributions.empty() || dims.empty() || sample_counts.empty() ||
        repetitions < 1)
        throw std::invalid_argument("estimator_benchmark: empty grid");
    for (const auto& name : estimators)
        if (name != "mean_d2c") estimator_from_name(name);

    std::vector<BenchmarkCell> cells;
    for (const auto& name : estimators)
        for (Distribution dist : distributions)
            for (int n : dims)
                for (int p : sample_counts)
                    cells.push_back({name, dist, n, p, 0.0, 0.0});

    parallel_for(cells.size(), [&](std::size_t c) {
        BenchmarkCell& cell = cells[c];
        const Vector center = Vector::Zero(cell.dim);
        Vector errs(repetitions);
        for (int rep = 0; rep < repetitions; ++rep) {
            // One data seed per (distribution, N, P, rep): estimators see the
            // same draws, so comparisons across estimators are paired.
            const std::uint64_t data_seed =
                derive_seed(seed, static_cast<std::uint64_t>(cell.distribution),
                            static_cast<std::uint64_t>(cell.dim),
                            static_cast<std::uint64_t>(cell.samples),
                            static_cast<std::uint64_t>(rep));
            const Matrix pts = sample_distribution(cell.distribution, cell.dim, cell.samples,
                                                   center, 1.0, data_seed);
            const double r_hat = run_estimator(cell.estimator, pts, tables, derive_seed(data_seed, 1));
            errs(rep) = (r_hat - 1.0) * (r_hat - 1.0);
        }
        cell.mean_sq_error = errs.mean();
        cell.std_sq_error = sample_stddev(errs);
    });
    return cells;
}

std::string benchmark_csv(const std::vector<BenchmarkCell>& cells) {
    std::ostringstream out;
    out << "estimator,distribution,N,P,mean,std\n";
    out.precision(12);
    for (const auto& c : cells)
        out << c.estimator << ',' << distribution_name(c.distribution) << ',' << c.dim << ','
            << c.samples << ',' << c.mean_sq_error << ',' << c.std_sq_error << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Null-hypothesis calibration of the significance tests
// ---------------------------------------------------------------------------

namespace {

/// Data realizing the test's null hypothesis exactly.
std::vector<Matrix> sample_null(TestKind kind, const NullSpec& spec, std::uint64_t seed) {
    const int n = spec.dim;
    const int p = spec.samples_per_class;
    const double r = spec.radius;
    const double r2 = spec.radius * spec.radius_ratio;
    const Vector origin = Vector::Zero(n);
    const auto draw = [&](const Vector& center, double radius, std::uint64_t s) {
        return sample_distribution(spec.distribution, n, p, center, radius, s);
    };

    switch (kind) {
        case TestKind::Separation: {
            // Same center.
            return {draw(origin, r, derive_seed(seed, 0)), draw(origin, r2, derive_seed(seed, 1))};
        }
        case TestKind::Overlap: {
            // Tangent spheres: zero overlap.
            Vector c2 = origin;
            c2(0) = r + r2;
            return {draw(origin, r, derive_seed(seed, 0)), draw(c2, r2, derive_seed(seed, 1))};
        }
        case TestKind::RadiusDiff: {
            // Equal radii, separated centers.
            Vector c2 = origin;
            c2(0) = 3.0 * r;
            return {draw(origin, r, derive_seed(seed, 0)), draw(c2, r, derive_seed(seed, 1))};
        }
        case TestKind::SeparationDiff: {
            // Equilateral centers: the two pair separations are equal.
            const double side = 3.0 * r;
            Vector ca = origin, cb = origin, cc = origin;
            cb(0) = side;
            cc(0) = 0.5 * side;
            if (n >= 2) cc(1) = side * std::sqrt(3.0) / 2.0;
            return {draw(ca, r, derive_seed(seed, 0)), draw(cb, r2, derive_seed(seed, 1)),
                    draw(cc, r, derive_seed(seed, 2))};
        }
        case TestKind::OverlapDiff: {
            // Collinear with equal spacing and equal outer radii: equal overlaps.
            const double d = 0.75 * (r + r2);
            Vector ca = origin, cb = origin, cc = origin;
            ca(0) = -d;
            cc(0) = d;
            return {draw(ca, r, derive_seed(seed, 0)), draw(cb, r2, derive_seed(seed, 1)),
                    draw(cc, r, derive_seed(seed, 2))};
        }
    }
    throw std::logic_error("sample_null: unhandled kind");
}

}  // namespace

NullCalibration calibration_fpr(TestKind kind, const NullSpec& spec, int n_simulations,
                                const ResamplingConfig& config, const CalibrationTables& tables,
                                const EstimatorChoice& choice) {
    if (n_simulations < 1) throw std::invalid_argument("calibration_fpr: need simulations");

    struct SimOut {
        bool significant = false;
        double p = 1.0;
        double estimate = 0.0;
        double resampling_variance = 0.0;
    };
    std::vector<SimOut> sims(static_cast<std::size_t>(n_simulations));

    parallel_for(sims.size(), [&](std::size_t s) {
        const std::uint64_t sim_seed = derive_seed(config.seed, static_cast<std::uint64_t>(kind), s);
        const auto data = sample_null(kind, spec, sim_seed);
        ResamplingConfig cfg = config;
        cfg.seed = derive_seed(sim_seed, 7);

        TestResult r;
        switch (kind) {
            case TestKind::Separation: r = separation_test(data[0], data[1], cfg); break;
            case TestKind::Overlap:
                r = overlap_test(data[0], data[1], choice, tables, cfg);
                break;
            case TestKind::RadiusDiff:
                r = radius_diff_test(data[0], data[1], choice, tables, cfg);
                break;
            case TestKind::SeparationDiff:
            case TestKind::OverlapDiff: {
                std::vector<LabeledClass> classes;
                for (std::size_t c = 0; c < data.size(); ++c)
                    classes.push_back({"class_" + std::to_string(c), data[c]});
                const LabeledDataset ds(std::move(classes));
                r = kind == TestKind::SeparationDiff
                        ? separation_diff_test(ds, {0, 1}, {1, 2}, choice, tables, cfg)
                        : overlap_diff_test(ds, {0, 1}, {1, 2}, choice, tables, cfg);
                break;
            }
        }
        // Resampling spread: for the permutation test the null band width is
        // the diagnostic; for bootstrap tests the CI width plays that role.
        const double half_width = 0.5 * (r.ci_high - r.ci_low);
        sims[s] = {r.significant_raw, r.p_value, r.estimate, half_width * half_width};
    });

    NullCalibration out;
    out.kind = kind;
    out.n_simulations = n_simulations;
    Vector estimates(n_simulations);
    double fp = 0.0, var_sum = 0.0;
    out.p_values.reserve(sims.size());
    for (std::size_t s = 0; s < sims.size(); ++s) {
        if (sims[s].significant) fp += 1.0;
        estimates(static_cast<Eigen::Index>(s)) = sims[s].estimate;
        var_sum += sims[s].resampling_variance;
        out.p_values.push_back(sims[s].p);
    }
    out.fpr = fp / n_simulations;
    out.mean_estimate = estimates.mean();
    out.var_full_estimates = sample_variance(estimates);
    out.mean_resampling_variance = var_sum / n_simulations;
    out.flagged = (kind == TestKind::Overlap && spec.samples_per_class > 1000);
    return out;
}

std::string fpr_csv(const std::vector<FprRow>& rows) {
    std::ostringstream out;
    out << "test,distribution,N,P,fpr\n";
    out.precision(12);
    for (const auto& r : rows)
        out << r.test << ',' << distribution_name(r.distribution) << ',' << r.dim << ','
            << r.samples << ',' << r.fpr << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Calibration-table derivation
// ---------------------------------------------------------------------------

std::map<int, double> derive_xi(const std::vector<int>& dims, int repetitions, std::uint64_t seed,
                                int samples) {
    if (repetitions < 2) throw std::invalid_argument("derive_xi: need repetitions");
    std::map<int, double> out;
    std::vector<int> ds(dims);
    std::vector<double> values(ds.size());
    parallel_for(ds.size(), [&](std::size_t k) {
        const int n = ds[k];
        const Vector origin = Vector::Zero(n);
        // r_dcb2(xi) = median + std * xi; the xi minimizing the mean squared
        // radius error over draws of unit balls has the closed form
        //   xi* = sum std*(1 - median) / sum std^2.
        double num = 0.0, den = 0.0;
        for (int rep = 0; rep < repetitions; ++rep) {
            const Matrix pts = sample_ball(n, samples, origin, 1.0,
                                           derive_seed(seed, 17, k, static_cast<std::uint64_t>(rep)));
            const Vector deltas = deltas_from_mean(pts);
            const double med = median(deltas);
            const double sd = sample_stddev(deltas);
            num += sd * (1.0 - med);
            den += sd * sd;
        }
        values[k] = den > 0.0 ? num / den : 0.0;
    });
    for (std::size_t k = 0; k < ds.size(); ++k) out[ds[k]] = values[k];
    return out;
}

std::map<int, double> derive_zeta(const std::vector<int>& dims, int repetitions,
                                  std::uint64_t seed, int samples) {
    if (repetitions < 1) throw std::invalid_argument("derive_zeta: need repetitions");
    std::map<int, double> out;
    std::vector<int> ds(dims);
    std::vector<double> values(ds.size());
    parallel_for(ds.size(), [&](std::size_t k) {
        const int n = ds[k];
        const Vector origin = Vector::Zero(n);
        double acc = 0.0;
        for (int rep = 0; rep < repetitions; ++rep) {
            const Matrix pts = sample_ball(n, samples, origin, 1.0,
                                           derive_seed(seed, 19, k, static_cast<std::uint64_t>(rep)));
            // Mean pairwise distance via the Gram trick.
            const Vector sq = pts.rowwise().squaredNorm();
            const Matrix gram = pts * pts.transpose();
            double sum = 0.0;
            for (int i = 0; i < samples; ++i)
                for (int j = i + 1; j < samples; ++j)
                    sum += std::sqrt(std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j)));
            acc += sum / (0.5 * samples * (samples - 1));
        }
        values[k] = acc / repetitions;
    });
    for (std::size_t k = 0; k < ds.size(); ++k) out[ds[k]] = values[k];
    return out;
}

}  // namespace h2s
