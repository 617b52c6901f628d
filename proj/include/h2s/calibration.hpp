#pragma once

#include <map>
#include <string>

namespace h2s {

/// Dimension-dependent correction factors for the D2C and pairwise-distance
/// radius estimators. xi maps N in {2,4,...,4096}; inv_zeta maps N in
/// {1,2,...,4096} and saturates at sqrt(2) for N >= 4097. Lookups between
/// tabulated dimensions interpolate linearly in log2(N); queries outside the
/// tabulated range clamp to the nearest entry.
class CalibrationTables {
public:
    CalibrationTables() = default;
    CalibrationTables(std::map<int, double> xi, std::map<int, double> inv_zeta);

    /// The built-in tables.
    static CalibrationTables defaults();

    double xi(int n) const;
    double inv_zeta(int n) const;
    double zeta(int n) const { return 1.0 / inv_zeta(n); }

    const std::map<int, double>& xi_table() const { return xi_; }
    const std::map<int, double>& inv_zeta_table() const { return inv_zeta_; }

    std::string to_json() const;
    static CalibrationTables from_json(const std::string& text);

private:
    std::map<int, double> xi_;
    std::map<int, double> inv_zeta_;
};

}  // namespace h2s
