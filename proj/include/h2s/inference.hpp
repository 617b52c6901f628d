#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "h2s/estimators.hpp"
#include "h2s/types.hpp"

namespace h2s {

enum class TestKind { Separation, Overlap, RadiusDiff, SeparationDiff, OverlapDiff };

std::string test_kind_name(TestKind kind);

struct ResamplingConfig {
    int n_resamples = 5000;
    double alpha_level = 0.05;
    std::uint64_t seed = 0;
};

struct TestResult {
    TestKind kind = TestKind::Separation;
    double estimate = 0.0;
    // For resampling-CI tests: the confidence interval of the estimate.
    // For the permutation separation test: the 0..(1-alpha) band of the
    // permutation null distribution.
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::string ci_kind;  // "null_band" | "bca" | "percentile"
    // Permutation p-value, or the resampling-implied two-sided p used to run
    // FDR uniformly across CI-based tests.
    double p_value = 1.0;
    bool significant_raw = false;  // the test's own decision, pre-FDR
    bool significant = false;      // post-FDR
    std::string note;
};

// ---------------------------------------------------------------------------
// First-order statistics and tests
// ---------------------------------------------------------------------------

/// Cross-validated center separation: signed sqrt of the inner product of the
/// center-difference vectors over two independent half-splits. Symmetric
/// about 0 when the true centers coincide.
double crossval_separation(const Eigen::Ref<const Matrix>& points_i,
                           const Eigen::Ref<const Matrix>& points_j, std::uint64_t split_seed);

/// One-sided label-permutation test of center separation > 0.
TestResult separation_test(const Eigen::Ref<const Matrix>& points_i,
                           const Eigen::Ref<const Matrix>& points_j,
                           const ResamplingConfig& config);

/// Bias-corrected accelerated bootstrap interval.
std::pair<double, double> bca_interval(const std::vector<double>& bootstrap_estimates,
                                       const std::vector<double>& jackknife_estimates,
                                       double observed, double alpha_level);

/// Smallest two-sided level at which 0 leaves the BCa interval.
double bca_implied_p(const std::vector<double>& bootstrap_estimates,
                     const std::vector<double>& jackknife_estimates, double observed);

/// Smallest two-sided level at which 0 leaves the percentile interval.
double percentile_implied_p(const std::vector<double>& bootstrap_estimates);

/// Two-sided BCa bootstrap test of overlap != 0.
TestResult overlap_test(const Eigen::Ref<const Matrix>& points_i,
                        const Eigen::Ref<const Matrix>& points_j, const EstimatorChoice& choice,
                        const CalibrationTables& tables, const ResamplingConfig& config);

/// Two-sided BCa bootstrap test of radius difference != 0.
TestResult radius_diff_test(const Eigen::Ref<const Matrix>& points_i,
                            const Eigen::Ref<const Matrix>& points_j,
                            const EstimatorChoice& choice, const CalibrationTables& tables,
                            const ResamplingConfig& config);

// ---------------------------------------------------------------------------
// Second-order (difference) tests. pair_a and pair_b index classes of the
// dataset; pairs sharing exactly one class form the validated triplet shape,
// other shapes run but carry a note.
// ---------------------------------------------------------------------------

TestResult separation_diff_test(const LabeledDataset& dataset, std::pair<int, int> pair_a,
                                std::pair<int, int> pair_b, const EstimatorChoice& choice,
                                const CalibrationTables& tables, const ResamplingConfig& config);

TestResult overlap_diff_test(const LabeledDataset& dataset, std::pair<int, int> pair_a,
                             std::pair<int, int> pair_b, const EstimatorChoice& choice,
                             const CalibrationTables& tables, const ResamplingConfig& config);

/// Benjamini-Hochberg step-up: rejection flags at level alpha.
std::vector<bool> benjamini_hochberg(const std::vector<double>& p_values, double alpha);

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

/// First-order cells sit in a T x T grid: separations below the diagonal,
/// overlaps above, nothing on the diagonal (nonzero radii need no test).
/// Second-order cells sit in a K x K grid over the K = T(T-1)/2 class pairs:
/// radius comparisons on the diagonal, separation comparisons below,
/// overlap comparisons above. FDR runs separately per test family.
struct InferenceReport {
    std::vector<std::string> labels;
    std::vector<std::pair<int, int>> pairs;  // row-major (i<j) order
    std::vector<std::vector<std::optional<TestResult>>> first_order;
    std::vector<std::vector<std::optional<TestResult>>> second_order;
    double fdr_alpha = 0.05;
};

InferenceReport full_inference(const LabeledDataset& dataset, const EstimatorChoice& choice,
                               const CalibrationTables& tables, const ResamplingConfig& config);

}  // namespace h2s
