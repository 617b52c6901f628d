#pragma once

#include <cstdint>

#include "h2s/types.hpp"

namespace h2s {

/// Term weights of the embedding objective: alpha scales the margin term,
/// beta the radius term; the distance term has unit weight.
struct ObjectiveWeights {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Signed deviations of the embedding's statistics from the targets.
struct EmbeddingErrors {
    Matrix distance;  // T x T, achieved - target
    Matrix margin;    // T x T
    Vector radius;    // T
};

struct Embedding {
    int dim = 2;
    std::vector<std::string> labels;
    Matrix centers;  // T x dim
    Vector radii;    // T, nonnegative
    SummaryStats achieved;
    SummaryStats target;
    EmbeddingErrors errors;
    double objective = 0.0;
    ObjectiveWeights weights;
    bool converged = true;
    int iterations = 0;
};

/// Unit scale of a target configuration: mean off-diagonal center distance,
/// falling back to mean radius for a single class or coincident centers.
double embedding_scale(const SummaryStats& target);

/// Metric-stress MDS arrangement of the T centers in n dimensions: classical
/// scaling start refined by stress majorization. Exact (to round-off) when
/// the target distances are realizable in n dimensions, in particular for
/// T <= n+1.
Matrix mds_init(const SummaryStats& target, int n);

double objective_value(const Eigen::Ref<const Matrix>& centers,
                       const Eigen::Ref<const Vector>& radii, const SummaryStats& target,
                       const ObjectiveWeights& weights);

/// Analytic gradient of the objective with respect to all centers and radii.
/// Coincident centers contribute along a fixed first-axis direction.
void objective_gradient(const Eigen::Ref<const Matrix>& centers,
                        const Eigen::Ref<const Vector>& radii, const SummaryStats& target,
                        const ObjectiveWeights& weights, Matrix& grad_centers,
                        Vector& grad_radii);

/// Full embedding optimization: radii start at the target radii and centers
/// at the MDS arrangement; T <= n+1 returns that configuration directly.
/// Otherwise 8 seeded multi-starts of projected quasi-Newton descent run and
/// the lowest-objective result wins.
Embedding optimize(const SummaryStats& target, int n, const ObjectiveWeights& weights,
                   std::uint64_t seed);

/// The MDS arrangement with radii copied verbatim from the target; fast, with
/// exact radii at the cost of margin accuracy.
Embedding mds_only_embedding(const SummaryStats& target, int n,
                             const ObjectiveWeights& weights = {});

}  // namespace h2s
