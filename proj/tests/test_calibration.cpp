#include <doctest.h>

#include <cmath>
#include <numbers>

#include "h2s/calibration.hpp"

using namespace h2s;

TEST_CASE("tabulated lookups are bit-exact") {
    const auto t = CalibrationTables::defaults();
    CHECK(t.xi(2) == 1.2733);
    CHECK(t.xi(16) == 0.8107);
    CHECK(t.xi(4096) == 2.4485);
    CHECK(t.inv_zeta(1) == 0.6673);
    CHECK(t.inv_zeta(64) == 1.3898);
    CHECK(t.inv_zeta(4096) == 1.4138);
}

TEST_CASE("interpolation is linear in log2(N)") {
    const auto t = CalibrationTables::defaults();
    // between N=2 and N=4 at N=3
    const double w = (std::log2(3.0) - 1.0) / (2.0 - 1.0);
    CHECK(t.xi(3) == doctest::Approx(1.2733 + w * (1.0115 - 1.2733)).epsilon(1e-14));
    // between N=64 and N=128 at N=100
    const double w2 = (std::log2(100.0) - 6.0) / (7.0 - 6.0);
    CHECK(t.inv_zeta(100) == doctest::Approx(1.3898 + w2 * (1.4020 - 1.3898)).epsilon(1e-14));
}

TEST_CASE("out-of-range queries clamp; zeta saturates at sqrt(2)") {
    const auto t = CalibrationTables::defaults();
    CHECK(t.xi(1) == 1.2733);      // below the first entry
    CHECK(t.xi(8192) == 2.4485);   // above the last entry
    CHECK(t.inv_zeta(4097) == std::numbers::sqrt2);
    CHECK(t.inv_zeta(1000000) == std::numbers::sqrt2);
    CHECK(t.zeta(1) == doctest::Approx(1.0 / 0.6673));
    CHECK_THROWS(t.xi(0));
}

TEST_CASE("JSON round trip preserves every entry exactly") {
    const auto t = CalibrationTables::defaults();
    const auto back = CalibrationTables::from_json(t.to_json());
    CHECK(back.xi_table() == t.xi_table());
    CHECK(back.inv_zeta_table() == t.inv_zeta_table());
}
