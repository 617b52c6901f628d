#include "h2s/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "h2s/geometry.hpp"
#include "h2s/numeric.hpp"
#include "h2s/parallel.hpp"
#include "h2s/rng.hpp"

namespace h2s {

EstimatorVariant estimator_from_name(const std::string& name) {
    if (name == "ml") return EstimatorVariant::Ml;
    if (name == "mcmc") return EstimatorVariant::Mcmc;
    if (name == "dcb1") return EstimatorVariant::Dcb1;
    if (name == "dcg") return EstimatorVariant::Dcg;
    if (name == "dcc") return EstimatorVariant::Dcc;
    if (name == "dcb2") return EstimatorVariant::Dcb2;
    if (name == "adaptive") return EstimatorVariant::Adaptive;
    if (name == "dist") return EstimatorVariant::Dist;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

std::string estimator_name(EstimatorVariant v) {
    switch (v) {
        case EstimatorVariant::Ml: return "ml";
        case EstimatorVariant::Mcmc: return "mcmc";
        case EstimatorVariant::Dcb1: return "dcb1";
        case EstimatorVariant::Dcg: return "dcg";
        case EstimatorVariant::Dcc: return "dcc";
        case EstimatorVariant::Dcb2: return "dcb2";
        case EstimatorVariant::Adaptive: return "adaptive";
        case EstimatorVariant::Dist: return "dist";
    }
    return "?";
}

Vector center_mean(const Eigen::Ref<const Matrix>& points) {
    if (points.rows() < 1) throw std::invalid_argument("center_mean: empty point set");
    return points.colwise().mean();
}

Vector deltas_from_mean(const Eigen::Ref<const Matrix>& points) {
    return d2c(points, center_mean(points));
}

// ---------------------------------------------------------------------------
// Minimum enclosing ball
// ---------------------------------------------------------------------------

MlBallResult fit_ml_ball(const Eigen::Ref<const Matrix>& points, double rel_tol,
                         int max_iterations) {
    const Eigen::Index p = points.rows();
    if (p < 1) throw std::invalid_argument("fit_ml_ball: empty point set");

    MlBallResult out;
    if (p == 1) {
        out.sphere = Hypersphere(points.row(0), 0.0);
        out.converged = true;
        return out;
    }

    const Vector sq_norms = points.rowwise().squaredNorm();

    // Dual objective f(w) = b'w - |X'w|^2 over the simplex; its value is the
    // squared radius of the ball centered at c(w) = X'w restricted to the
    // support, and a lower bound on the squared MEB radius.
    Vector w = Vector::Zero(p);
    {
        const Vector mean = points.colwise().mean();
        Eigen::Index i0, i1;
        (points.rowwise() - mean.transpose()).rowwise().squaredNorm().maxCoeff(&i0);
        (points.rowwise() - points.row(i0)).rowwise().squaredNorm().maxCoeff(&i1);
        if (i0 == i1) {  // all points identical
            out.sphere = Hypersphere(points.row(0), 0.0);
            out.converged = true;
            return out;
        }
        w(i0) = 0.5;
        w(i1) = 0.5;
    }

    Vector center = points.transpose() * w;
    double b_dot_w = sq_norms.dot(w);
    const double gap_tol = (1.0 + rel_tol) * (1.0 + rel_tol);

    Vector best_center = center;
    double best_gmax = std::numeric_limits<double>::infinity();
    bool converged = false;
    int it = 0;

    for (; it < max_iterations; ++it) {
        if (it > 0 && it % 128 == 0) {  // counter fp drift in the running sums
            center = points.transpose() * w;
            b_dot_w = sq_norms.dot(w);
        }
        const Vector g =
            sq_norms.array() - 2.0 * (points * center).array() + center.squaredNorm();
        Eigen::Index i_fw;
        const double g_max = g.maxCoeff(&i_fw);
        if (g_max < best_gmax) {
            best_gmax = g_max;
            best_center = center;
        }

        const double f = b_dot_w - center.squaredNorm();
        if (f > 0.0 && g_max <= f * gap_tol) {
            converged = true;
            break;
        }

        Eigen::Index i_away = -1;
        double g_min_support = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < p; ++i) {
            if (w(i) > 0.0 && g(i) < g_min_support) {
                g_min_support = g(i);
                i_away = i;
            }
        }

        const double fw_gain = g_max - f;
        const double away_gain = i_away >= 0 ? f - g_min_support : -1.0;

        if (fw_gain >= away_gain) {
            if (g_max <= 0.0) break;
            const double alpha = std::clamp(fw_gain / (2.0 * g_max), 0.0, 1.0);
            if (alpha <= 0.0) {
                converged = true;
                break;
            }
            w *= (1.0 - alpha);
            w(i_fw) += alpha;
            center = (1.0 - alpha) * center + alpha * points.row(i_fw).transpose();
            b_dot_w = (1.0 - alpha) * b_dot_w + alpha * sq_norms(i_fw);
        } else {
            const double wk = w(i_away);
            if (wk >= 1.0 || g_min_support <= 0.0) break;
            const double alpha_max = wk / (1.0 - wk);
            const double alpha = std::clamp(away_gain / (2.0 * g_min_support), 0.0, alpha_max);
            if (alpha <= 0.0) {
                converged = true;
                break;
            }
            w *= (1.0 + alpha);
            w(i_away) = std::max(0.0, w(i_away) - alpha);
            center = (1.0 + alpha) * center - alpha * points.row(i_away).transpose();
            b_dot_w = (1.0 + alpha) * b_dot_w - alpha * sq_norms(i_away);
        }
    }

    const double radius =
        std::sqrt((points.rowwise() - best_center.transpose()).rowwise().squaredNorm().maxCoeff());
    out.sphere = Hypersphere(best_center, radius);
    out.iterations = it;
    out.converged = converged;
    return out;
}

// ---------------------------------------------------------------------------
// MCMC posterior
// ---------------------------------------------------------------------------

namespace {

double ball_log_likelihood(const Eigen::Ref<const Matrix>& points, const Vector& center,
                           double radius, double log_v1, double sq_radius_slack = 0.0) {
    if (radius <= 0.0) return -std::numeric_limits<double>::infinity();
    const double max_sq = (points.rowwise() - center.transpose()).rowwise().squaredNorm().maxCoeff();
    if (max_sq > radius * radius + sq_radius_slack)
        return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(points.cols());
    const double p = static_cast<double>(points.rows());
    return -p * (n * std::log(radius) + log_v1);
}

}  // namespace

McmcResult mcmc_fit(const Eigen::Ref<const Matrix>& points, int mcmc_samples, std::uint64_t seed) {
    const Eigen::Index p = points.rows();
    const int n = static_cast<int>(points.cols());
    if (p < 2) throw std::invalid_argument("mcmc_fit: need at least 2 points");
    if (mcmc_samples < 10) throw std::invalid_argument("mcmc_fit: too few samples");

    McmcResult out;

    const MlBallResult ml = fit_ml_ball(points);
    if (ml.sphere.radius == 0.0) {  // degenerate class: all points identical
        out.estimate = ml.sphere;
        out.posterior.centers = ml.sphere.center.transpose().replicate(mcmc_samples, 1);
        out.posterior.radii = Vector::Zero(mcmc_samples);
        out.posterior.log_likelihoods =
            Vector::Constant(mcmc_samples, std::numeric_limits<double>::infinity());
        out.posterior.acceptance_rate = 0.0;
        return out;
    }

    const double log_v1 = log_unit_ball_volume(n);
    Rng rng(seed);

    Vector center = ml.sphere.center;
    double radius = ml.sphere.radius * 1.1;
    double log_lik = ball_log_likelihood(points, center, radius, log_v1);

    const int burn_in = std::max(1, mcmc_samples / 5);
    const int retained = mcmc_samples - burn_in;
    double scale = 0.5 * ml.sphere.radius / std::sqrt(static_cast<double>(n) + 1.0);

    PosteriorSamples post;
    post.centers.resize(retained, n);
    post.radii.resize(retained);
    post.log_likelihoods.resize(retained);

    int accepted_retained = 0;
    int accepted_window = 0;
    int window = 0;
    Vector proposal_center(n);

    for (int s = 0; s < mcmc_samples; ++s) {
        for (int k = 0; k < n; ++k) proposal_center(k) = center(k) + scale * rng.gaussian();
        const double proposal_radius = radius + scale * rng.gaussian();
        const double proposal_lik =
            ball_log_likelihood(points, proposal_center, proposal_radius, log_v1);

        bool accept = false;
        if (proposal_lik > -std::numeric_limits<double>::infinity()) {
            const double log_u = std::log(rng.uniform() + 1e-300);
            accept = log_u < proposal_lik - log_lik;
        }
        if (accept) {
            center = proposal_center;
            radius = proposal_radius;
            log_lik = proposal_lik;
            ++accepted_window;
            if (s >= burn_in) ++accepted_retained;
        }
        ++window;

        if (s < burn_in && window >= 50) {  // Robbins-Monro toward 23% acceptance
            const double rate = static_cast<double>(accepted_window) / window;
            scale *= std::exp(rate - 0.23);
            accepted_window = 0;
            window = 0;
        }

        if (s >= burn_in) {
            const int idx = s - burn_in;
            post.centers.row(idx) = center.transpose();
            post.radii(idx) = radius;
            post.log_likelihoods(idx) = log_lik;
        }
    }

    post.acceptance_rate = static_cast<double>(accepted_retained) / retained;
    if (post.acceptance_rate < 0.01) {
        std::ostringstream msg;
        msg << "mcmc_fit: acceptance rate " << post.acceptance_rate
            << " below 1% (proposal scale " << scale << ", retained " << retained
            << " samples); proposal scale unsuitable for this data";
        throw std::runtime_error(msg.str());
    }

    Vector est_center(n);
    for (int k = 0; k < n; ++k) est_center(k) = median(Vector(post.centers.col(k)));
    const double est_radius = median(post.radii);

    out.posterior = std::move(post);
    out.estimate = Hypersphere(est_center, est_radius);
    return out;
}

// ---------------------------------------------------------------------------
// D2C radius estimators
// ---------------------------------------------------------------------------

double r_dcb1(const Eigen::Ref<const Matrix>& points) {
    if (points.rows() < 2) throw std::invalid_argument("r_dcb1: need at least 2 points");
    const Vector deltas = deltas_from_mean(points);
    const double correction =
        1.0 + std::pow(static_cast<double>(points.rows()), -static_cast<double>(points.cols()));
    return correction * deltas.maxCoeff();
}

double r_dcg(const Eigen::Ref<const Matrix>& points) {
    const Eigen::Index p = points.rows();
    if (p < 2) throw std::invalid_argument("r_dcg: need at least 2 points");
    const int n = static_cast<int>(points.cols());
    const Vector deltas = deltas_from_mean(points);
    return chi_mean(n) *
           std::sqrt(deltas.squaredNorm() / (static_cast<double>(n) * static_cast<double>(p - 1)));
}

double r_dcc(const Eigen::Ref<const Matrix>& points) {
    if (points.rows() < 2) throw std::invalid_argument("r_dcc: need at least 2 points");
    return median(deltas_from_mean(points));
}

double r_dcb2(const Eigen::Ref<const Matrix>& points, const CalibrationTables& tables) {
    if (points.rows() < 2) throw std::invalid_argument("r_dcb2: need at least 2 points");
    const Vector deltas = deltas_from_mean(points);
    return median(deltas) + sample_stddev(deltas) * tables.xi(static_cast<int>(points.cols()));
}

double adaptive_variance_threshold(int n) {
    return std::pow(2.0, -1.0 - (4.0 / 3.0) * std::log2(static_cast<double>(n)));
}

bool adaptive_looks_gaussian(const Eigen::Ref<const Vector>& deltas, int n) {
    const double med = median(Vector(deltas));
    if (med <= 0.0) return false;
    return sample_variance(deltas / med) > adaptive_variance_threshold(n);
}

double r_adapt(const Eigen::Ref<const Matrix>& points, const CalibrationTables& tables) {
    if (points.rows() < 2) throw std::invalid_argument("r_adapt: need at least 2 points");
    const Vector deltas = deltas_from_mean(points);
    if (median(deltas) <= 0.0) return 0.0;  // degenerate class
    return adaptive_looks_gaussian(deltas, static_cast<int>(points.cols()))
               ? r_dcg(points)
               : r_dcb2(points, tables);
}

double r_dist(const Eigen::Ref<const Matrix>& within_class_distances, int n,
              const CalibrationTables& tables) {
    const Eigen::Index p = within_class_distances.rows();
    if (p < 2 || within_class_distances.cols() != p)
        throw std::invalid_argument("r_dist: need a square matrix over at least 2 points");
    return tables.zeta(n) * mean_upper_triangle(within_class_distances);
}

// ---------------------------------------------------------------------------
// Ensemble fitting
// ---------------------------------------------------------------------------

namespace {

Matrix pairwise_distances(const Eigen::Ref<const Matrix>& points) {
    const Eigen::Index p = points.rows();
    Matrix d = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
        }
    }
    return d;
}

}  // namespace

Hypersphere fit_single(const Eigen::Ref<const Matrix>& points, const EstimatorChoice& choice,
                       const CalibrationTables& tables, std::uint64_t seed) {
    const Vector deltas = deltas_from_mean(points);
    if (deltas.maxCoeff() <= 0.0)  // all points identical
        return Hypersphere(points.row(0), 0.0);

    switch (choice.variant) {
        case EstimatorVariant::Ml: return fit_ml_ball(points).sphere;
        case EstimatorVariant::Mcmc: return mcmc_fit(points, choice.mcmc_samples, seed).estimate;
        case EstimatorVariant::Dcb1: return Hypersphere(center_mean(points), r_dcb1(points));
        case EstimatorVariant::Dcg: return Hypersphere(center_mean(points), r_dcg(points));
        case EstimatorVariant::Dcc: return Hypersphere(center_mean(points), r_dcc(points));
        case EstimatorVariant::Dcb2:
            return Hypersphere(center_mean(points), r_dcb2(points, tables));
        case EstimatorVariant::Adaptive:
            return Hypersphere(center_mean(points), r_adapt(points, tables));
        case EstimatorVariant::Dist:
            return Hypersphere(center_mean(points),
                               r_dist(pairwise_distances(points),
                                      static_cast<int>(points.cols()), tables));
    }
    throw std::logic_error("fit_single: unhandled estimator");
}

FitResult fit_ensemble(const LabeledDataset& dataset, const EstimatorChoice& choice,
                       const CalibrationTables& tables, std::uint64_t seed) {
    const int t = dataset.num_classes();
    std::vector<Hypersphere> spheres(static_cast<std::size_t>(t));
    parallel_for(static_cast<std::size_t>(t), [&](std::size_t i) {
        spheres[i] = fit_single(dataset.class_at(static_cast<int>(i)).points, choice, tables,
                                derive_seed(seed, i));
    });

    FitResult out;
    out.ensemble = HypersphereEnsemble(dataset.labels(), std::move(spheres));
    out.stats = summary_stats(out.ensemble);
    return out;
}

FitResult fit_ensemble(const DistanceDataset& dataset, const EstimatorChoice& choice,
                       const CalibrationTables& tables, int assumed_dim) {
    if (choice.variant != EstimatorVariant::Dist)
        throw std::invalid_argument("fit_ensemble: estimator '" + estimator_name(choice.variant) +
                                    "' needs point coordinates; distance-matrix input supports "
                                    "only the pairwise-distance estimator 'dist'");
    if (assumed_dim < 1) throw std::invalid_argument("fit_ensemble: assumed_dim must be >= 1");

    const auto labels = dataset.class_labels();
    const int t = static_cast<int>(labels.size());
    const Matrix& d = dataset.distances();
    const int effective_dim = assumed_dim;

    std::vector<std::vector<int>> members;
    members.reserve(labels.size());
    for (const auto& label : labels) members.push_back(dataset.class_indices(label));

    Vector radii(t);
    Matrix within_sq_mean = Matrix::Zero(t, t);  // diagonal: within; off-diagonal: cross
    for (int a = 0; a < t; ++a) {
        const auto& ia = members[static_cast<std::size_t>(a)];
        const int pa = static_cast<int>(ia.size());
        if (pa < 2)
            throw std::invalid_argument("fit_ensemble: class '" + labels[static_cast<std::size_t>(a)] +
                                        "' has fewer than 2 points");
        Matrix block(pa, pa);
        for (int u = 0; u < pa; ++u)
            for (int v = 0; v < pa; ++v)
                block(u, v) = d(ia[static_cast<std::size_t>(u)], ia[static_cast<std::size_t>(v)]);
        radii(a) = r_dist(block, effective_dim, tables);
        // Mean squared distance over all ordered pairs (self pairs included);
        // this makes the centroid identity below exact for empirical clouds.
        within_sq_mean(a, a) = block.array().square().sum() / (static_cast<double>(pa) * pa);
    }

    Matrix dists = Matrix::Zero(t, t);
    for (int a = 0; a < t; ++a) {
        for (int b = a + 1; b < t; ++b) {
            const auto& ia = members[static_cast<std::size_t>(a)];
            const auto& ib = members[static_cast<std::size_t>(b)];
            double cross = 0.0;
            for (int u : ia)
                for (int v : ib) cross += d(u, v) * d(u, v);
            cross /= static_cast<double>(ia.size()) * static_cast<double>(ib.size());
            const double sq =
                cross - 0.5 * (within_sq_mean(a, a) + within_sq_mean(b, b));
            dists(a, b) = dists(b, a) = std::sqrt(std::max(0.0, sq));
        }
    }

    std::vector<Hypersphere> spheres;
    spheres.reserve(static_cast<std::size_t>(t));
    for (int a = 0; a < t; ++a) spheres.emplace_back(Vector(), radii(a));

    FitResult out;
    out.ensemble = HypersphereEnsemble(labels, std::move(spheres));
    out.stats = summary_stats_from_distances(labels, radii, std::move(dists));
    return out;
}

}  // namespace h2s
