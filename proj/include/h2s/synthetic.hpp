#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "h2s/calibration.hpp"
#include "h2s/estimators.hpp"
#include "h2s/inference.hpp"
#include "h2s/types.hpp"

namespace h2s {

enum class Distribution { Ball, Gaussian, Cube };

Distribution distribution_from_name(const std::string& name);
std::string distribution_name(Distribution d);

/// Uniform samples inside the N-ball: uniform direction times U^(1/N) radius.
Matrix sample_ball(int dim, int count, const Vector& center, double radius, std::uint64_t seed);

/// Isotropic Gaussian with per-coordinate standard deviation `scale`.
Matrix sample_gaussian(int dim, int count, const Vector& center, double scale, std::uint64_t seed);

/// Uniform cube of edge length `scale` centered at `center`.
Matrix sample_cube(int dim, int count, const Vector& center, double scale, std::uint64_t seed);

/// Dispatch on the distribution; `radius` is the ground-truth hypersphere
/// radius, converted internally to the matching Gaussian sigma or cube width.
Matrix sample_distribution(Distribution dist, int dim, int count, const Vector& center,
                           double radius, std::uint64_t seed);

/// Reference radius of a distribution with unit shape parameter: the value
/// the D2C distribution concentrates on.
double reference_radius(Distribution dist, int dim, double shape_scale);

// ---------------------------------------------------------------------------
// Ground-truth scenarios
// ---------------------------------------------------------------------------

enum class ScenarioKind { Touching, Concentric, EnclosedTouching, Intersecting, Imbalanced, Custom };

ScenarioKind scenario_from_name(const std::string& name);
std::string scenario_name(ScenarioKind k);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Touching;
    int dim = 200;
    std::vector<int> samples;        // per class; kind defaults apply when empty
    std::vector<double> radii;       // per class; kind defaults apply when empty
    std::vector<double> offsets;     // per-class offset along the first axis (Custom)
    Distribution distribution = Distribution::Ball;
    std::uint64_t seed = 0;
};

struct Scenario {
    LabeledDataset dataset;
    HypersphereEnsemble truth;
};

Scenario generate_scenario(const ScenarioSpec& spec);

// ---------------------------------------------------------------------------
// Estimator benchmark
// ---------------------------------------------------------------------------

/// Mean D2C; the naive baseline the benchmark compares against.
double naive_mean_d2c(const Eigen::Ref<const Matrix>& points);

struct BenchmarkCell {
    std::string estimator;
    Distribution distribution = Distribution::Ball;
    int dim = 0;
    int samples = 0;
    double mean_sq_error = 0.0;  // mean of ((r_hat - r) / r)^2 over repetitions
    double std_sq_error = 0.0;
};

/// Estimator names are those of EstimatorVariant plus "mean_d2c".
std::vector<BenchmarkCell> estimator_benchmark(const std::vector<std::string>& estimators,
                                               const std::vector<Distribution>& distributions,
                                               const std::vector<int>& dims,
                                               const std::vector<int>& sample_counts,
                                               int repetitions, std::uint64_t seed,
                                               const CalibrationTables& tables);

std::string benchmark_csv(const std::vector<BenchmarkCell>& cells);

// ---------------------------------------------------------------------------
// Significance-test calibration under the null
// ---------------------------------------------------------------------------

struct NullSpec {
    int dim = 2;
    int samples_per_class = 64;
    double radius = 1.0;
    double radius_ratio = 1.0;
    Distribution distribution = Distribution::Ball;
};

struct NullCalibration {
    TestKind kind = TestKind::Separation;
    int n_simulations = 0;
    double fpr = 0.0;
    double mean_estimate = 0.0;
    double var_full_estimates = 0.0;       // variance of the full-data estimates
    double mean_resampling_variance = 0.0; // mean per-simulation resampling variance
    std::vector<double> p_values;          // one per simulation
    bool flagged = false;                  // documented failure regime hit
};

NullCalibration calibration_fpr(TestKind kind, const NullSpec& spec, int n_simulations,
                                const ResamplingConfig& config, const CalibrationTables& tables,
                                const EstimatorChoice& choice = {});

struct FprRow {
    std::string test;
    Distribution distribution;
    int dim;
    int samples;
    double fpr;
};

std::string fpr_csv(const std::vector<FprRow>& rows);

// ---------------------------------------------------------------------------
// Calibration-table derivation
// ---------------------------------------------------------------------------

/// Per dimension, the correction factor minimizing the mean squared radius
/// error of the median+std estimator on unit balls of `samples` points.
std::map<int, double> derive_xi(const std::vector<int>& dims, int repetitions, std::uint64_t seed,
                                int samples = 200);

/// Per dimension, the mean pairwise distance inside the unit ball (the
/// reciprocal proportionality constant of the pairwise-distance estimator).
std::map<int, double> derive_zeta(const std::vector<int>& dims, int repetitions,
                                  std::uint64_t seed, int samples = 200);

}  // namespace h2s
