#include "h2s/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "h2s/geometry.hpp"
#include "h2s/parallel.hpp"
#include "h2s/rng.hpp"

namespace h2s {

namespace {

Matrix pairwise_distances(const Eigen::Ref<const Matrix>& centers) {
    const Eigen::Index t = centers.rows();
    Matrix d = Matrix::Zero(t, t);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = i + 1; j < t; ++j)
            d(i, j) = d(j, i) = (centers.row(i) - centers.row(j)).norm();
    return d;
}

void check_shapes(const Eigen::Ref<const Matrix>& centers, const Eigen::Ref<const Vector>& radii,
                  const SummaryStats& target) {
    if (centers.rows() != target.size() || radii.size() != target.size())
        throw std::invalid_argument("embedding: state size does not match target class count");
}

}  // namespace

double embedding_scale(const SummaryStats& target) {
    const int t = target.size();
    double scale = 0.0;
    if (t >= 2) {
        for (int i = 0; i < t; ++i)
            for (int j = i + 1; j < t; ++j) scale += target.distances(i, j);
        scale /= 0.5 * t * (t - 1);
    }
    if (scale <= 0.0 && target.radii.size() > 0) scale = target.radii.mean();
    return scale > 0.0 ? scale : 1.0;
}

Matrix mds_init(const SummaryStats& target, int n) {
    if (n < 1) throw std::invalid_argument("mds_init: dimension must be positive");
    const int t = target.size();
    if (t == 1) return Matrix::Zero(1, n);

    const Matrix& delta = target.distances;

    // Classical scaling start: double-centered squared distances.
    const Matrix d2 = delta.array().square();
    const Matrix j_center = Matrix::Identity(t, t) - Matrix::Constant(t, t, 1.0 / t);
    const Matrix b = -0.5 * j_center * d2 * j_center;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
    Matrix x = Matrix::Zero(t, n);
    for (int k = 0; k < n && k < t; ++k) {
        const int src = t - 1 - k;  // eigenvalues ascend
        const double lambda = eig.eigenvalues()(src);
        if (lambda > 0.0) x.col(k) = eig.eigenvectors().col(src) * std::sqrt(lambda);
    }

    // Stress majorization (Guttman transform) until the stress gradient is flat.
    const double scale = embedding_scale(target);
    const double tol = 1e-10 * scale;
    constexpr int kMaxIter = 5000;
    for (int it = 0; it < kMaxIter; ++it) {
        const Matrix d = pairwise_distances(x);

        double grad_sq = 0.0;
        for (int i = 0; i < t; ++i) {
            Vector g = Vector::Zero(n);
            for (int j = 0; j < t; ++j) {
                if (j == i || d(i, j) <= 0.0) continue;
                g += 2.0 * (d(i, j) - delta(i, j)) * (x.row(i) - x.row(j)).transpose() / d(i, j);
            }
            grad_sq += g.squaredNorm();
        }
        if (std::sqrt(grad_sq) < tol) break;

        Matrix guttman = Matrix::Zero(t, t);
        for (int i = 0; i < t; ++i) {
            double diag = 0.0;
            for (int j = 0; j < t; ++j) {
                if (j == i) continue;
                const double w = d(i, j) > 0.0 ? -delta(i, j) / d(i, j) : 0.0;
                guttman(i, j) = w;
                diag -= w;
            }
            guttman(i, i) = diag;
        }
        x = (guttman * x) / static_cast<double>(t);
    }
    return x;
}

double objective_value(const Eigen::Ref<const Matrix>& centers,
                       const Eigen::Ref<const Vector>& radii, const SummaryStats& target,
                       const ObjectiveWeights& weights) {
    check_shapes(centers, radii, target);
    const int t = target.size();
    double e = 0.0;
    for (int i = 0; i < t; ++i) {
        const double dr = radii(i) - target.radii(i);
        e += weights.beta * dr * dr;
        for (int j = i + 1; j < t; ++j) {
            const double d = (centers.row(i) - centers.row(j)).norm();
            const double m = d - radii(i) - radii(j);
            const double dd = d - target.distances(i, j);
            const double dm = m - target.margins(i, j);
            e += dd * dd + weights.alpha * dm * dm;
        }
    }
    return e;
}

void objective_gradient(const Eigen::Ref<const Matrix>& centers,
                        const Eigen::Ref<const Vector>& radii, const SummaryStats& target,
                        const ObjectiveWeights& weights, Matrix& grad_centers,
                        Vector& grad_radii) {
    check_shapes(centers, radii, target);
    const int t = target.size();
    const auto n = centers.cols();
    grad_centers = Matrix::Zero(t, n);
    grad_radii = Vector::Zero(t);

    for (int i = 0; i < t; ++i) grad_radii(i) = 2.0 * weights.beta * (radii(i) - target.radii(i));

    for (int i = 0; i < t; ++i) {
        for (int j = i + 1; j < t; ++j) {
            const Vector diff = (centers.row(i) - centers.row(j)).transpose();
            const double d = diff.norm();
            const double m = d - radii(i) - radii(j);
            const double dd = d - target.distances(i, j);
            const double dm = m - target.margins(i, j);

            Vector dir;
            if (d > 0.0) {
                dir = diff / d;
            } else {
                dir = Vector::Zero(n);  // coincident centers: fixed axis direction
                dir(0) = 1.0;
            }
            const Vector g = (2.0 * dd + 2.0 * weights.alpha * dm) * dir;
            grad_centers.row(i) += g.transpose();
            grad_centers.row(j) -= g.transpose();

            grad_radii(i) -= 2.0 * weights.alpha * dm;
            grad_radii(j) -= 2.0 * weights.alpha * dm;
        }
    }
}

namespace {

struct FlatState {
    // Layout: [centers row-major (t*n), radii (t)]
    static Vector pack(const Matrix& centers, const Vector& radii) {
        const auto t = centers.rows();
        const auto n = centers.cols();
        Vector x(t * n + t);
        for (Eigen::Index i = 0; i < t; ++i) x.segment(i * n, n) = centers.row(i).transpose();
        x.tail(t) = radii;
        return x;
    }
    static void unpack(const Vector& x, Matrix& centers, Vector& radii, Eigen::Index t,
                       Eigen::Index n) {
        for (Eigen::Index i = 0; i < t; ++i) centers.row(i) = x.segment(i * n, n).transpose();
        radii = x.tail(t);
    }
};

/// Clamp the radius block to be nonnegative.
void project(Vector& x, Eigen::Index t) {
    x.tail(t) = x.tail(t).cwiseMax(0.0);
}

struct DescentResult {
    Matrix centers;
    Vector radii;
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Projected quasi-Newton descent (L-BFGS direction, backtracking line
/// search, nonnegative radii). Accepted steps never increase the objective.
DescentResult minimize(const Matrix& centers0, const Vector& radii0, const SummaryStats& target,
                       const ObjectiveWeights& weights, double grad_tol, int max_iterations) {
    const Eigen::Index t = centers0.rows();
    const Eigen::Index n = centers0.cols();

    Matrix centers = centers0;
    Vector radii = radii0.cwiseMax(0.0);
    Vector x = FlatState::pack(centers, radii);

    Matrix gc;
    Vector gr;
    const auto eval_grad = [&](const Vector& at, Vector& grad) {
        FlatState::unpack(at, centers, radii, t, n);
        objective_gradient(centers, radii, target, weights, gc, gr);
        grad = FlatState::pack(gc, gr);
    };
    const auto eval_value = [&](const Vector& at) {
        FlatState::unpack(at, centers, radii, t, n);
        return objective_value(centers, radii, target, weights);
    };

    double e = eval_value(x);
    Vector g(x.size());
    eval_grad(x, g);

    std::deque<std::pair<Vector, Vector>> history;  // (step, gradient change)
    constexpr std::size_t kMemory = 8;

    DescentResult out;
    int it = 0;
    for (; it < max_iterations; ++it) {
        // Projected gradient: blocked radius components do not count.
        Vector pg = g;
        for (Eigen::Index i = 0; i < t; ++i)
            if (x(t * n + i) <= 0.0 && g(t * n + i) > 0.0) pg(t * n + i) = 0.0;
        if (pg.norm() < grad_tol) {
            out.converged = true;
            break;
        }

        // L-BFGS two-loop recursion.
        Vector dir = -g;
        if (!history.empty()) {
            std::vector<double> alpha_memo(history.size());
            std::vector<double> rho(history.size());
            for (std::size_t k = 0; k < history.size(); ++k)
                rho[k] = 1.0 / history[k].first.dot(history[k].second);
            for (std::size_t k = history.size(); k-- > 0;) {
                alpha_memo[k] = rho[k] * history[k].first.dot(dir);
                dir -= alpha_memo[k] * history[k].second;
            }
            const auto& [s_last, y_last] = history.back();
            dir *= s_last.dot(y_last) / y_last.squaredNorm();
            for (std::size_t k = 0; k < history.size(); ++k) {
                const double beta = rho[k] * history[k].second.dot(dir);
                dir += (alpha_memo[k] - beta) * history[k].first;
            }
        }
        bool steepest = false;
        if (g.dot(dir) >= 0.0) {  // not a descent direction; restart
            dir = -g;
            steepest = true;
        }

        const double slope = g.dot(dir);
        double step = 1.0;
        Vector x_new;
        double e_new = e;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            project(x_new, t);
            e_new = eval_value(x_new);
            if (e_new <= e + 1e-4 * step * slope && e_new <= e) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!steepest) {  // retry once along steepest descent
                dir = -g;
                step = 1.0;
                for (int ls = 0; ls < 60; ++ls) {
                    x_new = x + step * dir;
                    project(x_new, t);
                    e_new = eval_value(x_new);
                    if (e_new < e) {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
            }
            if (!accepted) {
                out.converged = pg.norm() < grad_tol * 100.0;  // numerical floor
                break;
            }
            history.clear();
        }

        Vector g_new(x.size());
        eval_grad(x_new, g_new);
        const Vector s = x_new - x;
        const Vector y = g_new - g;
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            history.emplace_back(s, y);
            if (history.size() > kMemory) history.pop_front();
        }
        x = x_new;
        g = g_new;
        e = e_new;
    }

    out.centers.resize(t, n);
    out.radii.resize(t);
    FlatState::unpack(x, out.centers, out.radii, t, n);
    out.objective = e;
    out.iterations = it;
    return out;
}

Embedding assemble(const SummaryStats& target, int n, Matrix centers, Vector radii,
                   const ObjectiveWeights& weights, bool converged, int iterations) {
    Embedding emb;
    emb.dim = n;
    emb.labels = target.labels;
    emb.centers = std::move(centers);
    emb.radii = std::move(radii);
    emb.target = target;
    emb.weights = weights;
    emb.converged = converged;
    emb.iterations = iterations;

    const int t = target.size();
    emb.achieved.labels = target.labels;
    emb.achieved.radii = emb.radii;
    emb.achieved.distances = pairwise_distances(emb.centers);
    emb.achieved.margins = Matrix::Zero(t, t);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j)
            emb.achieved.margins(i, j) =
                emb.achieved.distances(i, j) - emb.radii(i) - emb.radii(j);

    emb.errors.distance = emb.achieved.distances - target.distances;
    emb.errors.margin = emb.achieved.margins - target.margins;
    emb.errors.radius = emb.radii - target.radii;
    emb.objective = objective_value(emb.centers, emb.radii, target, weights);
    return emb;
}

}  // namespace

Embedding optimize(const SummaryStats& target, int n, const ObjectiveWeights& weights,
                   std::uint64_t seed) {
    if (n != 2 && n != 3) throw std::invalid_argument("optimize: embedding dimension must be 2 or 3");
    if (weights.alpha < 0.0 || weights.beta < 0.0)
        throw std::invalid_argument("optimize: weights must be nonnegative");
    const int t = target.size();
    if (t < 1) throw std::invalid_argument("optimize: empty target");

    const Matrix base = mds_init(target, n);
    const Vector radii0 = target.radii.cwiseMax(0.0);

    if (t <= n + 1)  // exactly representable; the MDS arrangement already is the optimum
        return assemble(target, n, base, radii0, weights, true, 0);

    const double scale = embedding_scale(target);
    const double grad_tol = 1e-8 * scale;
    constexpr int kStarts = 8;
    constexpr int kMaxIter = 10000;

    std::vector<DescentResult> results(kStarts);
    parallel_for(kStarts, [&](std::size_t s) {
        Matrix start = base;
        if (s > 0) {  // jittered restarts; start 0 is the plain MDS arrangement
            Rng rng(derive_seed(seed, s));
            for (Eigen::Index i = 0; i < start.rows(); ++i)
                for (Eigen::Index k = 0; k < start.cols(); ++k)
                    start(i, k) += 0.05 * scale * rng.gaussian();
        }
        results[s] = minimize(start, radii0, target, weights, grad_tol, kMaxIter);
    });

    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s)
        if (results[s].objective < results[best].objective) best = s;

    const auto& win = results[best];
    return assemble(target, n, win.centers, win.radii, weights, win.converged, win.iterations);
}

Embedding mds_only_embedding(const SummaryStats& target, int n, const ObjectiveWeights& weights) {
    if (n != 2 && n != 3)
        throw std::invalid_argument("mds_only_embedding: embedding dimension must be 2 or 3");
    return assemble(target, n, mds_init(target, n), target.radii.cwiseMax(0.0), weights, true, 0);
}

}  // namespace h2s
