#pragma once

#include <cstdint>
#include <string>

#include "h2s/calibration.hpp"
#include "h2s/types.hpp"

namespace h2s {

enum class EstimatorVariant { Ml, Mcmc, Dcb1, Dcg, Dcc, Dcb2, Adaptive, Dist };

EstimatorVariant estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorVariant v);

struct EstimatorChoice {
    EstimatorVariant variant = EstimatorVariant::Adaptive;
    int mcmc_samples = 10000;
};

/// Arithmetic mean of the rows.
Vector center_mean(const Eigen::Ref<const Matrix>& points);

/// Distances of all points to their mean.
Vector deltas_from_mean(const Eigen::Ref<const Matrix>& points);

// ---------------------------------------------------------------------------
// Minimum enclosing ball (the maximum-likelihood fit under a uniform ball
// model). Solved on the dual simplex with Frank-Wolfe steps plus away steps;
// the returned radius is the exact maximum distance to the final center, so
// the ball always contains every point.
// ---------------------------------------------------------------------------
struct MlBallResult {
    Hypersphere sphere;
    int iterations = 0;
    bool converged = false;
};

MlBallResult fit_ml_ball(const Eigen::Ref<const Matrix>& points, double rel_tol = 1e-6,
                         int max_iterations = 10000);

// ---------------------------------------------------------------------------
// Posterior sampling for the uniform-ball model under flat improper priors.
// Feasible states satisfy r >= max distance-to-center; their log likelihood
// is -P * log(r^N * V1(N)). Random-walk Metropolis with a proposal scale
// adapted during a 20% burn-in toward 23% acceptance.
// ---------------------------------------------------------------------------
struct PosteriorSamples {
    Matrix centers;          // retained samples x N
    Vector radii;            // retained samples
    Vector log_likelihoods;  // retained samples
    double acceptance_rate = 0.0;
};

struct McmcResult {
    PosteriorSamples posterior;
    Hypersphere estimate;  // marginal medians
};

McmcResult mcmc_fit(const Eigen::Ref<const Matrix>& points, int mcmc_samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distance-to-center radius estimators; centers are the class means.
// ---------------------------------------------------------------------------

/// Max D2C inflated by (1 + P^-N).
double r_dcb1(const Eigen::Ref<const Matrix>& points);

/// Chi-mean-scaled standard deviation: chi_mean(N) * sqrt(sum(delta^2) / (N(P-1))).
double r_dcg(const Eigen::Ref<const Matrix>& points);

/// Median D2C.
double r_dcc(const Eigen::Ref<const Matrix>& points);

/// Median D2C corrected upward by xi(N) standard deviations of the D2C sample.
double r_dcb2(const Eigen::Ref<const Matrix>& points, const CalibrationTables& tables);

/// Dispatch threshold on var(delta / median(delta)): 2^(-1 - (4/3) log2 N).
double adaptive_variance_threshold(int n);

/// True when the normalized D2C variance marks the sample as Gaussian-like
/// (wide D2C) rather than ball/cube-like (narrow D2C).
bool adaptive_looks_gaussian(const Eigen::Ref<const Vector>& deltas, int n);

/// r_dcg when the D2C spread looks Gaussian, r_dcb2 otherwise.
double r_adapt(const Eigen::Ref<const Matrix>& points, const CalibrationTables& tables);

/// Radius from the mean pairwise distance within one class: zeta(N) * mean d.
double r_dist(const Eigen::Ref<const Matrix>& within_class_distances, int n,
              const CalibrationTables& tables);

// ---------------------------------------------------------------------------
// Whole-ensemble fitting.
// ---------------------------------------------------------------------------

/// Fit one class: mean center with the chosen radius estimator, or the joint
/// ML/MCMC fit for those variants. A class of identical points yields radius 0.
Hypersphere fit_single(const Eigen::Ref<const Matrix>& points, const EstimatorChoice& choice,
                       const CalibrationTables& tables, std::uint64_t seed = 0);

struct FitResult {
    HypersphereEnsemble ensemble;
    SummaryStats stats;
};

/// Point mode: centers are means (or the joint ML/MCMC centers for those
/// variants), radii via the chosen estimator.
FitResult fit_ensemble(const LabeledDataset& dataset, const EstimatorChoice& choice,
                       const CalibrationTables& tables, std::uint64_t seed = 0);

/// Distance mode: per-class radii via the pairwise estimator and squared
/// center distances via the centroid identity
///   d^2_ij = mean cross-class squared distance
///            - (mean within-i + mean within-j squared distance) / 2,
/// clipped at zero. Only EstimatorVariant::Dist is accepted; no coordinates
/// are produced. assumed_dim feeds the zeta lookup; the default is the
/// high-dimensional saturation point of the table.
FitResult fit_ensemble(const DistanceDataset& dataset, const EstimatorChoice& choice,
                       const CalibrationTables& tables, int assumed_dim = 4097);

}  // namespace h2s
