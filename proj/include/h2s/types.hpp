#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace h2s {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One labeled class: a P x N block of points in the original space.
struct LabeledClass {
    std::string label;
    Matrix points;
};

/// Per-class point clouds sharing one ambient dimension N.
class LabeledDataset {
public:
    LabeledDataset() = default;

    explicit LabeledDataset(std::vector<LabeledClass> classes) : classes_(std::move(classes)) {
        if (classes_.empty()) throw std::invalid_argument("dataset: no classes");
        const Eigen::Index n = classes_.front().points.cols();
        for (const auto& c : classes_) {
            if (c.points.rows() < 2)
                throw std::invalid_argument("dataset: class '" + c.label + "' has fewer than 2 points");
            if (c.points.cols() != n)
                throw std::invalid_argument("dataset: class '" + c.label + "' dimension mismatch");
            if (!c.points.allFinite())
                throw std::invalid_argument("dataset: class '" + c.label + "' has non-finite coordinates");
            for (const auto& other : classes_) {
                if (&other != &c && other.label == c.label)
                    throw std::invalid_argument("dataset: duplicate label '" + c.label + "'");
            }
        }
    }

    int num_classes() const { return static_cast<int>(classes_.size()); }
    int dimension() const { return classes_.empty() ? 0 : static_cast<int>(classes_.front().points.cols()); }
    const std::vector<LabeledClass>& classes() const { return classes_; }
    const LabeledClass& class_at(int i) const { return classes_.at(static_cast<std::size_t>(i)); }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(classes_.size());
        for (const auto& c : classes_) out.push_back(c.label);
        return out;
    }

private:
    std::vector<LabeledClass> classes_;
};

/// Labeled pairwise-distance matrix: P points, symmetric nonnegative D with zero diagonal.
class DistanceDataset {
public:
    DistanceDataset() = default;

    DistanceDataset(std::vector<std::string> point_labels, Matrix distances)
        : point_labels_(std::move(point_labels)), distances_(std::move(distances)) {
        const Eigen::Index p = distances_.rows();
        if (p == 0 || distances_.cols() != p)
            throw std::invalid_argument("distance dataset: matrix is not square");
        if (static_cast<Eigen::Index>(point_labels_.size()) != p)
            throw std::invalid_argument("distance dataset: label count does not match matrix size");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (distances_(i, i) != 0.0)
                throw std::invalid_argument("distance dataset: nonzero diagonal");
            for (Eigen::Index j = 0; j < p; ++j) {
                if (!(distances_(i, j) >= 0.0))
                    throw std::invalid_argument("distance dataset: negative or non-finite entry");
                if (distances_(i, j) != distances_(j, i))
                    throw std::invalid_argument("distance dataset: asymmetric matrix");
            }
        }
    }

    int num_points() const { return static_cast<int>(distances_.rows()); }
    const std::vector<std::string>& point_labels() const { return point_labels_; }
    const Matrix& distances() const { return distances_; }

    /// Unique class labels in order of first appearance.
    std::vector<std::string> class_labels() const {
        std::vector<std::string> out;
        for (const auto& l : point_labels_) {
            bool seen = false;
            for (const auto& o : out)
                if (o == l) { seen = true; break; }
            if (!seen) out.push_back(l);
        }
        return out;
    }

    /// Row/column indices belonging to one class.
    std::vector<int> class_indices(const std::string& label) const {
        std::vector<int> idx;
        for (int i = 0; i < num_points(); ++i)
            if (point_labels_[static_cast<std::size_t>(i)] == label) idx.push_back(i);
        return idx;
    }

private:
    std::vector<std::string> point_labels_;
    Matrix distances_;
};

/// Fitted center and radius in original-space units. An empty center marks
/// distance-only fits where no coordinates exist.
struct Hypersphere {
    Vector center;
    double radius = 0.0;

    Hypersphere() = default;
    Hypersphere(Vector c, double r) : center(std::move(c)), radius(r) {
        if (radius < 0.0) throw std::invalid_argument("hypersphere: negative radius");
        if (!center.allFinite()) throw std::invalid_argument("hypersphere: non-finite center");
    }

    int dimension() const { return static_cast<int>(center.size()); }
};

/// One fitted sphere per class, labels aligned with the source dataset.
struct HypersphereEnsemble {
    std::vector<std::string> labels;
    std::vector<Hypersphere> spheres;

    HypersphereEnsemble() = default;
    HypersphereEnsemble(std::vector<std::string> lab, std::vector<Hypersphere> sph)
        : labels(std::move(lab)), spheres(std::move(sph)) {
        if (spheres.empty()) throw std::invalid_argument("ensemble: empty");
        if (labels.size() != spheres.size())
            throw std::invalid_argument("ensemble: label/sphere count mismatch");
        for (const auto& s : spheres)
            if (s.dimension() != spheres.front().dimension())
                throw std::invalid_argument("ensemble: center dimension mismatch");
    }

    int size() const { return static_cast<int>(spheres.size()); }
    int dimension() const { return spheres.empty() ? 0 : spheres.front().dimension(); }
};

/// Radii, pairwise center distances and margins, all in original-space length
/// units. overlap(i,j) is the negative margin.
struct SummaryStats {
    std::vector<std::string> labels;
    Vector radii;      // T
    Matrix distances;  // T x T, symmetric, zero diagonal
    Matrix margins;    // T x T, m_ij = d_ij - r_i - r_j

    int size() const { return static_cast<int>(radii.size()); }
    double overlap(int i, int j) const { return -margins(i, j); }
};

}  // namespace h2s
