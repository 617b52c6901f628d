#include <doctest.h>

#include "h2s/geometry.hpp"
#include "h2s/rng.hpp"
#include "oracles.hpp"

using namespace h2s;

TEST_CASE("d2c basics") {
    Matrix pts(2, 2);
    pts << 0, 0, 2, 0;
    Vector c(2);
    c << 1, 0;
    const Vector d = d2c(pts, c);
    CHECK(d(0) == doctest::Approx(1.0));
    CHECK(d(1) == doctest::Approx(1.0));

    Matrix one(1, 2);
    one << 3, 4;
    CHECK(d2c(one, Vector::Zero(2))(0) == doctest::Approx(5.0));
}

TEST_CASE("d2c of normalized random vectors is 1") {
    Rng rng(42);
    const int n = 12;
    Matrix pts(100, n);
    for (int i = 0; i < 100; ++i) {
        Vector v(n);
        for (int k = 0; k < n; ++k) v(k) = rng.gaussian();
        pts.row(i) = (v / v.norm()).transpose();
    }
    const Vector d = d2c(pts, Vector::Zero(n));
    for (int i = 0; i < 100; ++i) CHECK(d(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("d2c rejects dimension mismatch") {
    CHECK_THROWS_AS(d2c(Matrix::Zero(3, 2), Vector::Zero(3)), std::invalid_argument);
}

namespace {

HypersphereEnsemble two_spheres(double x0, double y0, double x1, double y1, double r0, double r1) {
    Vector c0(2), c1(2);
    c0 << x0, y0;
    c1 << x1, y1;
    return HypersphereEnsemble({"a", "b"}, {Hypersphere(c0, r0), Hypersphere(c1, r1)});
}

}  // namespace

TEST_CASE("summary_stats hand values") {
    const auto s = summary_stats(two_spheres(0, 0, 3, 4, 1, 2));
    CHECK(s.distances(0, 1) == doctest::Approx(5.0));
    CHECK(s.margins(0, 1) == doctest::Approx(2.0));
    CHECK(s.overlap(0, 1) == doctest::Approx(-2.0));

    const auto concentric = summary_stats(two_spheres(1, 1, 1, 1, 1, 1));
    CHECK(concentric.distances(0, 1) == 0.0);
    CHECK(concentric.margins(0, 1) == doctest::Approx(-2.0));
    CHECK(concentric.overlap(0, 1) == doctest::Approx(2.0));

    const auto touching = summary_stats(two_spheres(0, 0, 2, 0, 1, 1));
    CHECK(touching.margins(0, 1) == 0.0);
}

TEST_CASE("summary_stats identities and rigid invariance") {
    Rng rng(7);
    const int t = 5, n = 6;
    std::vector<Hypersphere> spheres;
    std::vector<std::string> labels;
    for (int i = 0; i < t; ++i) {
        Vector c(n);
        for (int k = 0; k < n; ++k) c(k) = rng.gaussian();
        spheres.emplace_back(c, std::abs(rng.gaussian()) + 0.1);
        labels.push_back("c" + std::to_string(i));
    }
    const HypersphereEnsemble ens(labels, spheres);
    const auto s = summary_stats(ens);

    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) {
            CHECK(s.margins(i, j) + s.radii(i) + s.radii(j) ==
                  doctest::Approx(s.distances(i, j)).epsilon(1e-14));
            CHECK(s.overlap(i, j) == -s.margins(i, j));
            CHECK(s.distances(i, j) == s.distances(j, i));
        }
        CHECK(s.distances(i, i) == 0.0);
    }

    const Matrix rot = oracles::random_rotation(n, 99);
    Vector shift(n);
    for (int k = 0; k < n; ++k) shift(k) = rng.gaussian() * 3.0;
    std::vector<Hypersphere> moved;
    for (const auto& sp : spheres) moved.emplace_back(rot * sp.center + shift, sp.radius);
    const auto s2 = summary_stats(HypersphereEnsemble(labels, moved));
    CHECK((s2.distances - s.distances).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((s2.margins - s.margins).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("type invariants are enforced") {
    CHECK_THROWS(Hypersphere(Vector::Zero(2), -1.0));
    Matrix pts(2, 2);
    pts << 0, 0, 1, 1;
    CHECK_THROWS(LabeledDataset({{"a", pts}, {"a", pts}}));  // duplicate label
    Matrix single(1, 2);
    single << 0, 0;
    CHECK_THROWS(LabeledDataset({{"a", single}}));  // too few points
    Matrix other(2, 3);
    other.setZero();
    CHECK_THROWS(LabeledDataset({{"a", pts}, {"b", other}}));  // dimension mismatch

    Matrix asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS(DistanceDataset({"a", "b"}, asym));
    Matrix neg(2, 2);
    neg << 0, -1, -1, 0;
    CHECK_THROWS(DistanceDataset({"a", "b"}, neg));
}
