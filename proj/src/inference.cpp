#include "h2s/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

#include "h2s/geometry.hpp"
#include "h2s/numeric.hpp"
#include "h2s/parallel.hpp"
#include "h2s/rng.hpp"

namespace h2s {

std::string test_kind_name(TestKind kind) {
    switch (kind) {
        case TestKind::Separation: return "separation";
        case TestKind::Overlap: return "overlap";
        case TestKind::RadiusDiff: return "radius_diff";
        case TestKind::SeparationDiff: return "separation_diff";
        case TestKind::OverlapDiff: return "overlap_diff";
    }
    return "?";
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rng.index(static_cast<std::uint64_t>(i) + 1))]);
    return idx;
}

Matrix gather_rows(const Eigen::Ref<const Matrix>& m, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

Matrix resample_rows(const Eigen::Ref<const Matrix>& m, Rng& rng) {
    const auto p = static_cast<std::uint64_t>(m.rows());
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.row(i) = m.row(static_cast<Eigen::Index>(rng.index(p)));
    return out;
}

Matrix drop_row(const Eigen::Ref<const Matrix>& m, Eigen::Index row) {
    Matrix out(m.rows() - 1, m.cols());
    out.topRows(row) = m.topRows(row);
    out.bottomRows(m.rows() - 1 - row) = m.bottomRows(m.rows() - 1 - row);
    return out;
}

double crossval_split(const Eigen::Ref<const Matrix>& points_i,
                      const Eigen::Ref<const Matrix>& points_j, Rng& rng) {
    const auto split_mean = [&](const Eigen::Ref<const Matrix>& pts, Vector& mean_a,
                                Vector& mean_b) {
        const auto idx = shuffled_indices(static_cast<int>(pts.rows()), rng);
        const auto half = idx.size() / 2;
        Vector sum_a = Vector::Zero(pts.cols());
        Vector sum_b = Vector::Zero(pts.cols());
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < half ? sum_a : sum_b) += pts.row(idx[k]).transpose();
        mean_a = sum_a / static_cast<double>(half);
        mean_b = sum_b / static_cast<double>(idx.size() - half);
    };
    Vector ia, ib, ja, jb;
    split_mean(points_i, ia, ib);
    split_mean(points_j, ja, jb);
    const double inner = (ia - ja).dot(ib - jb);
    return std::copysign(std::sqrt(std::abs(inner)), inner);
}

double overlap_statistic(const Eigen::Ref<const Matrix>& points_i,
                         const Eigen::Ref<const Matrix>& points_j, const EstimatorChoice& choice,
                         const CalibrationTables& tables, std::uint64_t seed) {
    const Hypersphere si = fit_single(points_i, choice, tables, derive_seed(seed, 0));
    const Hypersphere sj = fit_single(points_j, choice, tables, derive_seed(seed, 1));
    return si.radius + sj.radius - (si.center - sj.center).norm();
}

void require_min_points(const Eigen::Ref<const Matrix>& pts, int min_points, const char* what) {
    if (pts.rows() < min_points)
        throw std::invalid_argument(std::string(what) + ": class with " +
                                    std::to_string(pts.rows()) + " points is too small (need >= " +
                                    std::to_string(min_points) + ")");
}

std::string large_class_note(Eigen::Index pi, Eigen::Index pj) {
    if (pi > 1000 || pj > 1000)
        return "class exceeds 1,000 points; bootstrap calibration degrades at this sample size";
    return {};
}

}  // namespace

double crossval_separation(const Eigen::Ref<const Matrix>& points_i,
                           const Eigen::Ref<const Matrix>& points_j, std::uint64_t split_seed) {
    if (points_i.cols() != points_j.cols())
        throw std::invalid_argument("crossval_separation: dimension mismatch");
    require_min_points(points_i, 4, "crossval_separation");
    require_min_points(points_j, 4, "crossval_separation");
    Rng rng(split_seed);
    return crossval_split(points_i, points_j, rng);
}

TestResult separation_test(const Eigen::Ref<const Matrix>& points_i,
                           const Eigen::Ref<const Matrix>& points_j,
                           const ResamplingConfig& config) {
    require_min_points(points_i, 4, "separation_test");
    require_min_points(points_j, 4, "separation_test");
    const int pi = static_cast<int>(points_i.rows());
    const int pj = static_cast<int>(points_j.rows());

    // A single random split is noisy, so the statistic averages several.
    // The same averaging applies to every permuted replicate: observed and
    // permuted values stay exchangeable under the null, keeping p uniform.
    constexpr int kSplits = 10;
    const auto averaged_stat = [&](const Eigen::Ref<const Matrix>& a,
                                   const Eigen::Ref<const Matrix>& b, Rng& rng) {
        double acc = 0.0;
        for (int s = 0; s < kSplits; ++s) acc += crossval_split(a, b, rng);
        return acc / kSplits;
    };

    double observed;
    {
        Rng rng(derive_seed(config.seed, 1));
        observed = averaged_stat(points_i, points_j, rng);
    }

    Matrix pooled(pi + pj, points_i.cols());
    pooled.topRows(pi) = points_i;
    pooled.bottomRows(pj) = points_j;

    std::vector<double> permuted(static_cast<std::size_t>(config.n_resamples));
    parallel_for(permuted.size(), [&](std::size_t b) {
        Rng rng(derive_seed(config.seed, 2, b));
        const auto idx = shuffled_indices(pi + pj, rng);
        const Matrix perm_i = gather_rows(pooled, {idx.begin(), idx.begin() + pi});
        const Matrix perm_j = gather_rows(pooled, {idx.begin() + pi, idx.end()});
        permuted[b] = averaged_stat(perm_i, perm_j, rng);
    });

    int n_ge = 0;
    for (double v : permuted)
        if (v >= observed) ++n_ge;

    TestResult r;
    r.kind = TestKind::Separation;
    r.estimate = observed;
    r.p_value = (1.0 + n_ge) / (1.0 + config.n_resamples);
    r.ci_low = quantile(permuted, 0.0);
    r.ci_high = quantile(permuted, 1.0 - config.alpha_level);
    r.ci_kind = "null_band";
    r.significant_raw = observed > r.ci_high;
    r.significant = r.significant_raw;
    return r;
}

std::pair<double, double> bca_interval(const std::vector<double>& bootstrap_estimates,
                                       const std::vector<double>& jackknife_estimates,
                                       double observed, double alpha_level) {
    const std::size_t nb = bootstrap_estimates.size();
    if (nb < 100) throw std::invalid_argument("bca_interval: need at least 100 bootstrap estimates");
    if (!(alpha_level > 0.0 && alpha_level < 1.0))
        throw std::invalid_argument("bca_interval: alpha_level outside (0,1)");

    const auto [mn, mx] = std::minmax_element(bootstrap_estimates.begin(), bootstrap_estimates.end());
    if (*mn == *mx) return {*mn, *mx};  // degenerate bootstrap distribution

    std::size_t below = 0;
    for (double v : bootstrap_estimates)
        if (v < observed) ++below;
    const double frac = std::clamp(static_cast<double>(below) / static_cast<double>(nb),
                                   1.0 / static_cast<double>(nb + 1),
                                   static_cast<double>(nb) / static_cast<double>(nb + 1));
    const double z0 = normal_quantile(frac);

    double accel = 0.0;
    if (!jackknife_estimates.empty()) {
        const double mean =
            std::accumulate(jackknife_estimates.begin(), jackknife_estimates.end(), 0.0) /
            static_cast<double>(jackknife_estimates.size());
        double s2 = 0.0, s3 = 0.0;
        for (double v : jackknife_estimates) {
            const double d = mean - v;
            s2 += d * d;
            s3 += d * d * d;
        }
        if (s2 > 0.0) accel = s3 / (6.0 * std::pow(s2, 1.5));
    }

    const auto adjusted = [&](double z_alpha) {
        const double y = z0 + z_alpha;
        const double denom = 1.0 - accel * y;
        if (denom <= 0.0) return 1.0;  // correction blew past the distribution's edge
        return normal_cdf(z0 + y / denom);
    };
    const double a1 = adjusted(normal_quantile(alpha_level / 2.0));
    const double a2 = adjusted(normal_quantile(1.0 - alpha_level / 2.0));
    return {quantile(bootstrap_estimates, a1), quantile(bootstrap_estimates, a2)};
}

namespace {

/// Smallest alpha at which 0 leaves the interval, located by bisection over
/// the interval construction itself so the p-value agrees with the test's own
/// decision rule at every level.
double implied_two_sided_p(const std::vector<double>& boot,
                           const std::function<std::pair<double, double>(double)>& interval) {
    const std::size_t nb = boot.size();
    const auto [mn, mx] = std::minmax_element(boot.begin(), boot.end());
    const double p_floor = 1.0 / static_cast<double>(nb + 1);
    if (*mn == *mx) return *mn == 0.0 ? 1.0 : p_floor;

    const auto excludes_zero = [&](double alpha) {
        const auto [lo, hi] = interval(alpha);
        return 0.0 < lo || 0.0 > hi;
    };
    if (excludes_zero(p_floor)) return p_floor;  // outside even the widest interval
    double lo = p_floor, hi = 1.0;
    if (!excludes_zero(1.0 - 1e-12)) return 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excludes_zero(mid) ? hi : lo) = mid;
    }
    return std::clamp(hi, p_floor, 1.0);
}


}  // namespace

double bca_implied_p(const std::vector<double>& bootstrap_estimates,
                     const std::vector<double>& jackknife_estimates, double observed) {
    return implied_two_sided_p(bootstrap_estimates, [&](double alpha) {
        return bca_interval(bootstrap_estimates, jackknife_estimates, observed, alpha);
    });
}

double percentile_implied_p(const std::vector<double>& bootstrap_estimates) {
    return implied_two_sided_p(bootstrap_estimates, [&](double alpha) {
        return std::pair<double, double>{quantile(bootstrap_estimates, alpha / 2.0),
                                         quantile(bootstrap_estimates, 1.0 - alpha / 2.0)};
    });
}

namespace {

/// Shared body of the two-class BCa tests (overlap, radius difference).
TestResult bca_two_class_test(const Eigen::Ref<const Matrix>& points_i,
                              const Eigen::Ref<const Matrix>& points_j,
                              const ResamplingConfig& config, TestKind kind,
                              const std::function<double(const Eigen::Ref<const Matrix>&,
                                                         const Eigen::Ref<const Matrix>&,
                                                         std::uint64_t)>& statistic) {
    require_min_points(points_i, 2, test_kind_name(kind).c_str());
    require_min_points(points_j, 2, test_kind_name(kind).c_str());
    const std::uint64_t tag = static_cast<std::uint64_t>(kind) + 11;

    const double observed = statistic(points_i, points_j, derive_seed(config.seed, tag, 0));

    std::vector<double> boot(static_cast<std::size_t>(config.n_resamples));
    parallel_for(boot.size(), [&](std::size_t b) {
        const std::uint64_t s = derive_seed(config.seed, tag, 1, b);
        Rng rng(s);
        const Matrix bi = resample_rows(points_i, rng);
        const Matrix bj = resample_rows(points_j, rng);
        boot[b] = statistic(bi, bj, derive_seed(s, 1));
    });

    std::vector<double> jack;
    jack.reserve(static_cast<std::size_t>(points_i.rows() + points_j.rows()));
    for (Eigen::Index u = 0; u < points_i.rows(); ++u)
        jack.push_back(statistic(drop_row(points_i, u), points_j,
                                 derive_seed(config.seed, tag, 2, static_cast<std::uint64_t>(u))));
    for (Eigen::Index v = 0; v < points_j.rows(); ++v)
        jack.push_back(statistic(points_i, drop_row(points_j, v),
                                 derive_seed(config.seed, tag, 3, static_cast<std::uint64_t>(v))));

    TestResult r;
    r.kind = kind;
    r.estimate = observed;
    std::tie(r.ci_low, r.ci_high) = bca_interval(boot, jack, observed, config.alpha_level);
    r.ci_kind = "bca";
    r.p_value = bca_implied_p(boot, jack, observed);
    r.significant_raw = 0.0 < r.ci_low || 0.0 > r.ci_high;
    r.significant = r.significant_raw;
    r.note = large_class_note(points_i.rows(), points_j.rows());
    return r;
}

}  // namespace

TestResult overlap_test(const Eigen::Ref<const Matrix>& points_i,
                        const Eigen::Ref<const Matrix>& points_j, const EstimatorChoice& choice,
                        const CalibrationTables& tables, const ResamplingConfig& config) {
    return bca_two_class_test(
        points_i, points_j, config, TestKind::Overlap,
        [&](const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
            std::uint64_t seed) { return overlap_statistic(a, b, choice, tables, seed); });
}

TestResult radius_diff_test(const Eigen::Ref<const Matrix>& points_i,
                            const Eigen::Ref<const Matrix>& points_j,
                            const EstimatorChoice& choice, const CalibrationTables& tables,
                            const ResamplingConfig& config) {
    return bca_two_class_test(
        points_i, points_j, config, TestKind::RadiusDiff,
        [&](const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
            std::uint64_t seed) {
            return fit_single(a, choice, tables, derive_seed(seed, 0)).radius -
                   fit_single(b, choice, tables, derive_seed(seed, 1)).radius;
        });
}

namespace {

/// Shared body of the second-order bootstrap tests.
TestResult diff_test(const LabeledDataset& dataset, std::pair<int, int> pair_a,
                     std::pair<int, int> pair_b, const EstimatorChoice& choice,
                     const CalibrationTables& tables, const ResamplingConfig& config,
                     TestKind kind, bool use_overlap) {
    const int t = dataset.num_classes();
    const auto check_pair = [&](std::pair<int, int> p) {
        if (p.first < 0 || p.second < 0 || p.first >= t || p.second >= t || p.first == p.second)
            throw std::invalid_argument(test_kind_name(kind) + ": invalid class pair");
    };
    check_pair(pair_a);
    check_pair(pair_b);
    const auto canon = [](std::pair<int, int> p) {
        return p.first < p.second ? p : std::pair<int, int>{p.second, p.first};
    };
    if (canon(pair_a) == canon(pair_b))
        throw std::invalid_argument(test_kind_name(kind) + ": the two pairs are identical");

    std::set<int> involved{pair_a.first, pair_a.second, pair_b.first, pair_b.second};
    const std::vector<int> classes(involved.begin(), involved.end());

    const std::uint64_t tag = static_cast<std::uint64_t>(kind) + 31 +
                              1000 * static_cast<std::uint64_t>(pair_a.first * t + pair_a.second) +
                              static_cast<std::uint64_t>(pair_b.first * t + pair_b.second);

    const auto pair_stat = [&](const std::vector<Matrix>& pts, std::pair<int, int> pr,
                               std::uint64_t seed) {
        const auto local = [&](int cls) {
            const auto it = std::find(classes.begin(), classes.end(), cls);
            return static_cast<std::size_t>(it - classes.begin());
        };
        const Matrix& a = pts[local(pr.first)];
        const Matrix& b = pts[local(pr.second)];
        if (use_overlap) return overlap_statistic(a, b, choice, tables, seed);
        return (center_mean(a) - center_mean(b)).norm();
    };

    std::vector<Matrix> full;
    full.reserve(classes.size());
    for (int c : classes) full.push_back(dataset.class_at(c).points);

    const double observed = pair_stat(full, pair_a, derive_seed(config.seed, tag, 0)) -
                            pair_stat(full, pair_b, derive_seed(config.seed, tag, 1));

    std::vector<double> boot(static_cast<std::size_t>(config.n_resamples));
    parallel_for(boot.size(), [&](std::size_t b) {
        const std::uint64_t s = derive_seed(config.seed, tag, 2, b);
        Rng rng(s);
        std::vector<Matrix> res;
        res.reserve(full.size());
        for (const auto& m : full) res.push_back(resample_rows(m, rng));
        boot[b] = pair_stat(res, pair_a, derive_seed(s, 3)) -
                  pair_stat(res, pair_b, derive_seed(s, 4));
    });

    TestResult r;
    r.kind = kind;
    r.estimate = observed;
    r.ci_low = quantile(boot, config.alpha_level / 2.0);
    r.ci_high = quantile(boot, 1.0 - config.alpha_level / 2.0);
    r.ci_kind = "percentile";
    r.p_value = percentile_implied_p(boot);
    r.significant_raw = 0.0 < r.ci_low || 0.0 > r.ci_high;
    r.significant = r.significant_raw;
    if (classes.size() != 3)
        r.note = "pairs do not share exactly one class; this shape is unvalidated";
    return r;
}

}  // namespace

TestResult separation_diff_test(const LabeledDataset& dataset, std::pair<int, int> pair_a,
                                std::pair<int, int> pair_b, const EstimatorChoice& choice,
                                const CalibrationTables& tables, const ResamplingConfig& config) {
    return diff_test(dataset, pair_a, pair_b, choice, tables, config, TestKind::SeparationDiff,
                     false);
}

TestResult overlap_diff_test(const LabeledDataset& dataset, std::pair<int, int> pair_a,
                             std::pair<int, int> pair_b, const EstimatorChoice& choice,
                             const CalibrationTables& tables, const ResamplingConfig& config) {
    return diff_test(dataset, pair_a, pair_b, choice, tables, config, TestKind::OverlapDiff, true);
}

std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double alpha) {
    const std::size_t m = p_values.size();
    std::vector<bool> reject(m, false);
    if (m == 0) return reject;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::size_t k = 0;  // largest rank whose p-value clears its threshold
    for (std::size_t r = 0; r < m; ++r) {
        if (p_values[order[r]] <= alpha * static_cast<double>(r + 1) / static_cast<double>(m))
            k = r + 1;
    }
    for (std::size_t r = 0; r < k; ++r) reject[order[r]] = true;
    return reject;
}

InferenceReport full_inference(const LabeledDataset& dataset, const EstimatorChoice& choice,
                               const CalibrationTables& tables, const ResamplingConfig& config) {
    const int t = dataset.num_classes();
    if (t < 2) throw std::invalid_argument("full_inference: need at least 2 classes");
    if (config.n_resamples < 100)
        throw std::invalid_argument("full_inference: need at least 100 resamples");

    InferenceReport report;
    report.labels = dataset.labels();
    report.fdr_alpha = config.alpha_level;
    for (int i = 0; i < t; ++i)
        for (int j = i + 1; j < t; ++j) report.pairs.emplace_back(i, j);
    const int k = static_cast<int>(report.pairs.size());

    report.first_order.assign(static_cast<std::size_t>(t),
                              std::vector<std::optional<TestResult>>(static_cast<std::size_t>(t)));
    report.second_order.assign(static_cast<std::size_t>(k),
                               std::vector<std::optional<TestResult>>(static_cast<std::size_t>(k)));

    struct Cell {
        TestKind kind;
        int row, col;  // grid coordinates in the target matrix
    };
    std::vector<Cell> cells;
    for (int u = 0; u < k; ++u) {
        const auto [i, j] = report.pairs[static_cast<std::size_t>(u)];
        cells.push_back({TestKind::Separation, j, i});  // lower triangle of first_order
        cells.push_back({TestKind::Overlap, i, j});     // upper triangle of first_order
        cells.push_back({TestKind::RadiusDiff, u, u});
        for (int v = 0; v < u; ++v) {
            cells.push_back({TestKind::SeparationDiff, u, v});  // lower triangle
            cells.push_back({TestKind::OverlapDiff, v, u});     // upper triangle
        }
    }

    // Every cell derives its own seed from (seed, kind, row, col), so the
    // outcome does not depend on scheduling.
    std::vector<std::optional<TestResult>> results(cells.size());
    parallel_for(cells.size(), [&](std::size_t c) {
        const Cell& cell = cells[c];
        ResamplingConfig cell_config = config;
        cell_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell.kind),
                                       static_cast<std::uint64_t>(cell.row),
                                       static_cast<std::uint64_t>(cell.col));
        try {
            switch (cell.kind) {
                case TestKind::Separation:
                    results[c] = separation_test(dataset.class_at(cell.col).points,
                                                 dataset.class_at(cell.row).points, cell_config);
                    break;
                case TestKind::Overlap:
                    results[c] = overlap_test(dataset.class_at(cell.row).points,
                                              dataset.class_at(cell.col).points, choice, tables,
                                              cell_config);
                    break;
                case TestKind::RadiusDiff: {
                    const auto [i, j] = report.pairs[static_cast<std::size_t>(cell.row)];
                    results[c] = radius_diff_test(dataset.class_at(i).points,
                                                  dataset.class_at(j).points, choice, tables,
                                                  cell_config);
                    break;
                }
                case TestKind::SeparationDiff:
                    results[c] = separation_diff_test(
                        dataset, report.pairs[static_cast<std::size_t>(cell.row)],
                        report.pairs[static_cast<std::size_t>(cell.col)], choice, tables,
                        cell_config);
                    break;
                case TestKind::OverlapDiff:
                    results[c] = overlap_diff_test(
                        dataset, report.pairs[static_cast<std::size_t>(cell.col)],
                        report.pairs[static_cast<std::size_t>(cell.row)], choice, tables,
                        cell_config);
                    break;
            }
        } catch (const std::exception&) {
            results[c] = std::nullopt;  // leave the cell absent, keep the report
        }
    });

    // FDR correction per family.
    for (const TestKind family :
         {TestKind::Separation, TestKind::Overlap, TestKind::RadiusDiff, TestKind::SeparationDiff,
          TestKind::OverlapDiff}) {
        std::vector<std::size_t> members;
        std::vector<double> ps;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].kind == family && results[c]) {
                members.push_back(c);
                ps.push_back(results[c]->p_value);
            }
        }
        const auto reject = benjamini_hochberg(ps, config.alpha_level);
        for (std::size_t idx = 0; idx < members.size(); ++idx)
            results[members[idx]]->significant = reject[idx];
    }

    for (std::size_t c = 0; c < cells.size(); ++c) {
        const Cell& cell = cells[c];
        auto& grid = (cell.kind == TestKind::Separation || cell.kind == TestKind::Overlap)
                         ? report.first_order
                         : report.second_order;
        grid[static_cast<std::size_t>(cell.row)][static_cast<std::size_t>(cell.col)] = results[c];
    }
    return report;
}

}  // namespace h2s
