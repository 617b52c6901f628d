#pragma once

#include <stdexcept>

#include "h2s/types.hpp"

namespace h2s {

/// Euclidean distance of every row of `points` to `center`.
template <typename DerivedP, typename DerivedC>
Vector d2c(const Eigen::MatrixBase<DerivedP>& points, const Eigen::MatrixBase<DerivedC>& center) {
    if (points.cols() != center.size())
        throw std::invalid_argument("d2c: point dimension does not match center dimension");
    return (points.rowwise() - center.transpose()).rowwise().norm();
}

/// Center distances, margins and radii of an ensemble. d_ij is the Euclidean
/// distance between centers; m_ij = d_ij - r_i - r_j; overlap is -m_ij.
inline SummaryStats summary_stats(const HypersphereEnsemble& ensemble) {
    const int t = ensemble.size();
    if (t < 1) throw std::invalid_argument("summary_stats: empty ensemble");

    SummaryStats out;
    out.labels = ensemble.labels;
    out.radii.resize(t);
    out.distances = Matrix::Zero(t, t);
    out.margins = Matrix::Zero(t, t);
    for (int i = 0; i < t; ++i) out.radii(i) = ensemble.spheres[static_cast<std::size_t>(i)].radius;
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
            const double d =
                i == j ? 0.0
                       : (ensemble.spheres[static_cast<std::size_t>(i)].center -
                          ensemble.spheres[static_cast<std::size_t>(j)].center)
                             .norm();
            out.distances(i, j) = d;
            out.margins(i, j) = d - out.radii(i) - out.radii(j);
        }
    }
    return out;
}

/// Stats assembled directly from known radii and center distances (distance
/// mode, where no coordinates exist).
inline SummaryStats summary_stats_from_distances(std::vector<std::string> labels, Vector radii,
                                                 Matrix distances) {
    const int t = static_cast<int>(radii.size());
    if (t < 1) throw std::invalid_argument("summary_stats: empty");
    if (distances.rows() != t || distances.cols() != t)
        throw std::invalid_argument("summary_stats: distance matrix shape mismatch");

    SummaryStats out;
    out.labels = std::move(labels);
    out.radii = std::move(radii);
    out.distances = std::move(distances);
    out.margins = Matrix::Zero(t, t);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < t; ++j)
            out.margins(i, j) = out.distances(i, j) - out.radii(i) - out.radii(j);
    return out;
}

}  // namespace h2s
