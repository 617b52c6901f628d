#include <doctest.h>

#include <cmath>
#include <numbers>

#include "h2s/estimators.hpp"
#include "h2s/geometry.hpp"
#include "h2s/numeric.hpp"
#include "h2s/rng.hpp"
#include "h2s/synthetic.hpp"
#include "oracles.hpp"

using namespace h2s;

namespace {
const CalibrationTables kTables = CalibrationTables::defaults();

Matrix random_points(int p, int n, std::uint64_t seed, double spread = 1.0) {
    Rng rng(seed);
    Matrix pts(p, n);
    for (int i = 0; i < p; ++i)
        for (int k = 0; k < n; ++k) pts(i, k) = spread * rng.gaussian();
    return pts;
}
}  // namespace

TEST_CASE("center_mean") {
    Matrix pts(2, 2);
    pts << 0, 0, 2, 0;
    const Vector m = center_mean(pts);
    CHECK(m(0) == doctest::Approx(1.0));
    CHECK(m(1) == doctest::Approx(0.0));

    Matrix single(1, 3);
    single << 1, 1, 1;
    CHECK(center_mean(single).isApprox(Vector::Ones(3)));

    CHECK_THROWS(center_mean(Matrix(0, 2)));

    // law of large numbers on a ball with a known center
    Vector c = Vector::Constant(8, 2.5);
    const Matrix cloud = sample_ball(8, 10000, c, 1.0, 11);
    CHECK((center_mean(cloud) - c).norm() < 0.05);
}

// ---------------------------------------------------------------------------
// Minimum enclosing ball
// ---------------------------------------------------------------------------

TEST_CASE("fit_ml_ball two-point diameter") {
    Matrix pts(2, 1);
    pts << -1, 1;
    const auto res = fit_ml_ball(pts);
    CHECK(res.converged);
    CHECK(res.sphere.center(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.sphere.radius == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_ml_ball equilateral triangle on the unit circle") {
    Matrix pts(3, 2);
    for (int i = 0; i < 3; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 3.0;
        pts(i, 0) = std::cos(a);
        pts(i, 1) = std::sin(a);
    }
    const auto res = fit_ml_ball(pts);
    const auto oracle = oracles::exact_meb(pts);
    CHECK(res.sphere.radius == doctest::Approx(oracle.radius).epsilon(1e-6));
    CHECK(res.sphere.radius == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.sphere.center.norm() < 1e-6);
}

TEST_CASE("fit_ml_ball encloses and matches the exhaustive oracle") {
    Rng seeds(3);
    for (int trial = 0; trial < 120; ++trial) {
        const int p = 2 + static_cast<int>(seeds.index(9));   // 2..10
        const int n = 1 + static_cast<int>(seeds.index(4));   // 1..4
        const Matrix pts = random_points(p, n, derive_seed(1000, trial));
        const auto res = fit_ml_ball(pts);

        const double max_d = d2c(pts, res.sphere.center).maxCoeff();
        CHECK(max_d <= res.sphere.radius * (1.0 + 1e-9) + 1e-12);

        const auto oracle = oracles::exact_meb(pts);
        CHECK(res.sphere.radius ==
              doctest::Approx(oracle.radius).epsilon(1e-6));
    }
}

TEST_CASE("fit_ml_ball enclosure on larger instances and subset monotonicity") {
    for (int trial = 0; trial < 25; ++trial) {
        const Matrix pts = random_points(60, 12, derive_seed(2000, trial), 2.0);
        const auto full = fit_ml_ball(pts);
        CHECK(d2c(pts, full.sphere.center).maxCoeff() <= full.sphere.radius * (1.0 + 1e-9));
        const auto sub = fit_ml_ball(pts.topRows(20));
        CHECK(sub.sphere.radius <= full.sphere.radius * (1.0 + 1e-8));
    }
}

TEST_CASE("fit_ml_ball degenerate inputs") {
    Matrix one(1, 3);
    one << 1, 2, 3;
    const auto res = fit_ml_ball(one);
    CHECK(res.sphere.radius == 0.0);
    CHECK(res.converged);

    Matrix same = Matrix::Ones(5, 2);
    const auto res2 = fit_ml_ball(same);
    CHECK(res2.sphere.radius == 0.0);
}

// ---------------------------------------------------------------------------
// MCMC
// ---------------------------------------------------------------------------

TEST_CASE("mcmc_fit on a 1D interval") {
    Rng rng(5);
    Matrix pts(12, 1);
    for (int i = 0; i < 12; ++i) pts(i, 0) = rng.uniform(-1.0, 1.0);
    const double half_spread = 0.5 * (pts.maxCoeff() - pts.minCoeff());

    const auto res = mcmc_fit(pts, 4000, 17);
    CHECK(res.posterior.acceptance_rate > 0.01);
    const int kept = static_cast<int>(res.posterior.radii.size());
    CHECK(kept == 4000 - 4000 / 5);

    const double log_v1 = log_unit_ball_volume(1);
    for (int s = 0; s < kept; ++s) {
        const double r = res.posterior.radii(s);
        const Vector c = res.posterior.centers.row(s).transpose();
        const double max_d = d2c(pts, c).maxCoeff();
        CHECK(r >= max_d);             // hard feasibility constraint
        CHECK(r >= half_spread);       // implied by feasibility
        CHECK(res.posterior.log_likelihoods(s) ==
              doctest::Approx(-12.0 * (1.0 * std::log(r) + log_v1)).epsilon(1e-12));
    }

    const double ml_radius = fit_ml_ball(pts).sphere.radius;
    CHECK(res.estimate.radius >= ml_radius - 1e-9);
}

TEST_CASE("mcmc_fit radius accuracy on the unit 2-ball") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        const Matrix pts = sample_ball(2, 200, Vector::Zero(2), 1.0, derive_seed(31, seed));
        const auto res = mcmc_fit(pts, 4000, seed);
        CHECK(std::abs(res.estimate.radius - 1.0) < 0.1);
    }
}

TEST_CASE("mcmc_fit rejects tiny inputs") {
    CHECK_THROWS(mcmc_fit(Matrix::Zero(1, 2), 1000, 0));
}

// ---------------------------------------------------------------------------
// D2C estimators
// ---------------------------------------------------------------------------

TEST_CASE("r_dcb1 hand values and asymptote") {
    Matrix pts(2, 1);
    pts << 0, 2;
    CHECK(r_dcb1(pts) == doctest::Approx(1.5).epsilon(1e-14));  // (1 + 2^-1) * 1

    // P=100, N=2, max delta = 1: factor 1 + 100^-2
    Matrix circle(100, 2);
    for (int i = 0; i < 100; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 100.0;
        circle(i, 0) = std::cos(a);
        circle(i, 1) = std::sin(a);
    }
    CHECK(r_dcb1(circle) == doctest::Approx(1.0001).epsilon(1e-10));

    Matrix many(1000, 3);
    many = random_points(1000, 3, 77);
    const double max_d = deltas_from_mean(many).maxCoeff();
    CHECK(r_dcb1(many) == doctest::Approx(max_d).epsilon(1e-8));
}

TEST_CASE("chi_mean closed forms") {
    CHECK(chi_mean(1) == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    CHECK(chi_mean(1) == doctest::Approx(0.79788).epsilon(1e-4));
    CHECK(chi_mean(2) == doctest::Approx(std::sqrt(std::numbers::pi / 2.0)).epsilon(1e-12));
    CHECK(chi_mean(2) == doctest::Approx(1.25331).epsilon(1e-4));
    CHECK(chi_mean(3) == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    CHECK(chi_mean(3) == doctest::Approx(1.59577).epsilon(1e-4));
    // log-gamma path stays finite at high N; chi mean approaches sqrt(N)
    CHECK(chi_mean(4096) == doctest::Approx(std::sqrt(4096.0)).epsilon(1e-3));
}

TEST_CASE("r_dcg hand value, simulation, and homogeneity") {
    Matrix pts(2, 1);
    pts << -1, 1;
    CHECK(r_dcg(pts) == doctest::Approx(std::sqrt(2.0) * chi_mean(1)).epsilon(1e-12));
    CHECK(r_dcg(pts) == doctest::Approx(1.1284).epsilon(1e-4));

    const Matrix g = sample_gaussian(64, 10000, Vector::Zero(64), 1.0, 123);
    CHECK(r_dcg(g) == doctest::Approx(chi_mean(64)).epsilon(0.02));

    const Matrix base = random_points(40, 5, 9);
    CHECK(r_dcg(base * 3.5) == doctest::Approx(3.5 * r_dcg(base)).epsilon(1e-12));
}

TEST_CASE("r_dcc median semantics") {
    // deltas from the mean are {1,1,2,2,3,3}; the median is 2
    Matrix pts(6, 1);
    pts << 1, -1, 2, -2, 3, -3;
    CHECK(r_dcc(pts) == doctest::Approx(2.0).epsilon(1e-14));

    // permutation invariance
    Matrix shuffled(6, 1);
    shuffled << 3, -2, 1, -3, 2, -1;
    CHECK(r_dcc(shuffled) == r_dcc(pts));

    const Matrix cube = sample_cube(256, 10000, Vector::Zero(256), 1.0, 5);
    CHECK(r_dcc(cube) == doctest::Approx(std::sqrt(256.0 / 12.0)).epsilon(0.02));
}

TEST_CASE("r_dcb2 zero-spread and ball accuracy") {
    Matrix ring(4, 2);
    ring << 2, 0, -2, 0, 0, 2, 0, -2;  // all deltas exactly 2
    CHECK(r_dcb2(ring, kTables) == doctest::Approx(2.0).epsilon(1e-14));

    double acc = 0.0;
    const int reps = 30;
    for (int rep = 0; rep < reps; ++rep)
        acc += r_dcb2(sample_ball(200, 200, Vector::Zero(200), 1.0, derive_seed(400, rep)), kTables);
    CHECK(std::abs(acc / reps - 1.0) < 0.05);
}

TEST_CASE("adaptive dispatch") {
    CHECK(adaptive_variance_threshold(4) == doctest::Approx(std::pow(2.0, -11.0 / 3.0)).epsilon(1e-14));
    CHECK(adaptive_variance_threshold(4) == doctest::Approx(0.07874).epsilon(1e-4));

    const Matrix g = sample_gaussian(16, 1000, Vector::Zero(16), 1.0, 21);
    CHECK(r_adapt(g, kTables) == r_dcg(g));

    const Matrix b = sample_ball(16, 1000, Vector::Zero(16), 1.0, 22);
    CHECK(r_adapt(b, kTables) == r_dcb2(b, kTables));

    CHECK(r_adapt(Matrix::Ones(10, 4), kTables) == 0.0);  // degenerate class
}

TEST_CASE("r_dist hand value and ball accuracy") {
    Matrix d(2, 2);
    d << 0, 2, 2, 0;
    CHECK(r_dist(d, 1, kTables) == doctest::Approx(2.0 / 0.6673).epsilon(1e-12));
    CHECK(r_dist(d, 1, kTables) == doctest::Approx(2.997).epsilon(1e-3));

    double acc = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        const Matrix pts = sample_ball(512, 200, Vector::Zero(512), 1.0, derive_seed(500, rep));
        Matrix pd(200, 200);
        pd.setZero();
        for (int i = 0; i < 200; ++i)
            for (int j = i + 1; j < 200; ++j)
                pd(i, j) = pd(j, i) = (pts.row(i) - pts.row(j)).norm();
        acc += r_dist(pd, 512, kTables);
    }
    CHECK(std::abs(acc / reps - 1.0) < 0.05);
}

// ---------------------------------------------------------------------------
// Shared estimator properties
// ---------------------------------------------------------------------------

TEST_CASE("scale equivariance and rigid invariance of every radius estimator") {
    const Matrix base = sample_ball(6, 50, Vector::Zero(6), 1.0, 900);
    const Matrix rot = oracles::random_rotation(6, 31);
    Vector shift = Vector::Constant(6, 0.7);
    const Matrix moved = (base * rot.transpose()).rowwise() + shift.transpose();

    const auto check_estimator = [&](auto fn) {
        const double r = fn(base);
        CHECK(fn(Matrix(2.5 * base)) == doctest::Approx(2.5 * r).epsilon(1e-10));
        CHECK(fn(moved) == doctest::Approx(r).epsilon(1e-9));
    };
    check_estimator([](const Matrix& m) { return r_dcb1(m); });
    check_estimator([](const Matrix& m) { return r_dcg(m); });
    check_estimator([](const Matrix& m) { return r_dcc(m); });
    check_estimator([](const Matrix& m) { return r_dcb2(m, kTables); });
    check_estimator([](const Matrix& m) { return r_adapt(m, kTables); });
    check_estimator([](const Matrix& m) { return fit_ml_ball(m).sphere.radius; });
}

TEST_CASE("ml radius never exceeds dcb1 on the same data") {
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix pts = random_points(30, 4, derive_seed(3000, trial));
        CHECK(fit_ml_ball(pts).sphere.radius <= r_dcb1(pts) * (1.0 + 1e-9));
    }
}

// ---------------------------------------------------------------------------
// fit_ensemble
// ---------------------------------------------------------------------------

TEST_CASE("fit_ensemble identical classes") {
    const Matrix pts = sample_ball(10, 40, Vector::Zero(10), 1.0, 3);
    const LabeledDataset ds({{"a", pts}, {"b", pts}});
    const auto fit = fit_ensemble(ds, {}, kTables, 1);
    CHECK(fit.stats.distances(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.stats.radii(0) == fit.stats.radii(1));
}

TEST_CASE("fit_ensemble touching 200-balls keeps the margin near zero") {
    for (std::uint64_t seed : {10ULL, 11ULL, 12ULL}) {
        ScenarioSpec spec;
        spec.kind = ScenarioKind::Touching;
        spec.dim = 200;
        spec.seed = seed;
        const auto scenario = generate_scenario(spec);
        const auto fit = fit_ensemble(scenario.dataset, {}, kTables, seed);
        CHECK(std::abs(fit.stats.margins(0, 1)) <= 0.15);
    }
}

TEST_CASE("distance-mode fit matches point-mode center distances") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Touching;
    spec.dim = 200;
    spec.distribution = Distribution::Gaussian;
    spec.seed = 8;
    const auto scenario = generate_scenario(spec);

    const auto point_fit = fit_ensemble(scenario.dataset, {}, kTables, 0);

    // Build the full pairwise distance matrix over both classes.
    const auto& a = scenario.dataset.class_at(0).points;
    const auto& b = scenario.dataset.class_at(1).points;
    const int pa = static_cast<int>(a.rows()), pb = static_cast<int>(b.rows());
    Matrix all(pa + pb, a.cols());
    all.topRows(pa) = a;
    all.bottomRows(pb) = b;
    std::vector<std::string> labels;
    for (int i = 0; i < pa; ++i) labels.push_back("class_0");
    for (int i = 0; i < pb; ++i) labels.push_back("class_1");
    Matrix d = Matrix::Zero(pa + pb, pa + pb);
    for (int i = 0; i < pa + pb; ++i)
        for (int j = i + 1; j < pa + pb; ++j) d(i, j) = d(j, i) = (all.row(i) - all.row(j)).norm();

    EstimatorChoice dist_choice;
    dist_choice.variant = EstimatorVariant::Dist;
    const auto dist_fit = fit_ensemble(DistanceDataset(labels, d), dist_choice, kTables, 200);

    CHECK(dist_fit.ensemble.dimension() == 0);  // no coordinates in distance mode
    CHECK(dist_fit.stats.distances(0, 1) ==
          doctest::Approx(point_fit.stats.distances(0, 1)).epsilon(0.05));
}

TEST_CASE("distance-mode rejects point-only estimators") {
    Matrix d(4, 4);
    d.setZero();
    d(0, 1) = d(1, 0) = d(2, 3) = d(3, 2) = 1.0;
    d(0, 2) = d(2, 0) = d(0, 3) = d(3, 0) = d(1, 2) = d(2, 1) = d(1, 3) = d(3, 1) = 2.0;
    const DistanceDataset ds({"a", "a", "b", "b"}, d);
    for (EstimatorVariant v : {EstimatorVariant::Ml, EstimatorVariant::Mcmc, EstimatorVariant::Dcb1,
                               EstimatorVariant::Dcg, EstimatorVariant::Dcc, EstimatorVariant::Dcb2,
                               EstimatorVariant::Adaptive}) {
        EstimatorChoice choice;
        choice.variant = v;
        CHECK_THROWS_AS(fit_ensemble(ds, choice, kTables), std::invalid_argument);
    }
    EstimatorChoice ok;
    ok.variant = EstimatorVariant::Dist;
    CHECK_NOTHROW(fit_ensemble(ds, ok, kTables));
}

TEST_CASE("degenerate class gets radius zero for every estimator") {
    Matrix same = Matrix::Constant(8, 3, 4.0);
    for (EstimatorVariant v : {EstimatorVariant::Ml, EstimatorVariant::Mcmc, EstimatorVariant::Dcb1,
                               EstimatorVariant::Dcg, EstimatorVariant::Dcc, EstimatorVariant::Dcb2,
                               EstimatorVariant::Adaptive, EstimatorVariant::Dist}) {
        EstimatorChoice choice;
        choice.variant = v;
        const auto s = fit_single(same, choice, kTables, 1);
        CHECK(s.radius == 0.0);
        CHECK(s.center.isApprox(Vector::Constant(3, 4.0)));
    }
}
