#include "h2s/calibration.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace h2s {

namespace {

double interp_log2(const std::map<int, double>& table, int n, const char* name) {
    if (table.empty()) throw std::logic_error(std::string(name) + ": empty calibration table");
    if (n < 1) throw std::invalid_argument(std::string(name) + ": dimension must be >= 1");

    auto it = table.lower_bound(n);
    if (it != table.end() && it->first == n) return it->second;  // tabulated: bit-exact
    if (it == table.begin()) return it->second;                  // clamp below
    if (it == table.end()) return std::prev(it)->second;         // clamp above

    const auto hi = it;
    const auto lo = std::prev(it);
    const double x = std::log2(static_cast<double>(n));
    const double x0 = std::log2(static_cast<double>(lo->first));
    const double x1 = std::log2(static_cast<double>(hi->first));
    const double w = (x - x0) / (x1 - x0);
    return lo->second + w * (hi->second - lo->second);
}

}  // namespace

CalibrationTables::CalibrationTables(std::map<int, double> xi, std::map<int, double> inv_zeta)
    : xi_(std::move(xi)), inv_zeta_(std::move(inv_zeta)) {
    for (const auto& [n, v] : xi_)
        if (n < 1 || !(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("calibration: invalid xi entry");
    for (const auto& [n, v] : inv_zeta_)
        if (n < 1 || !(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("calibration: invalid inv_zeta entry");
}

CalibrationTables CalibrationTables::defaults() {
    return CalibrationTables(
        {{2, 1.2733},
         {4, 1.0115},
         {8, 0.8796},
         {16, 0.8107},
         {32, 0.8384},
         {64, 0.8638},
         {128, 0.9579},
         {256, 1.0403},
         {512, 1.1938},
         {1024, 1.4268},
         {2048, 1.8384},
         {4096, 2.4485}},
        {{1, 0.6673},
         {2, 0.9039},
         {4, 1.1043},
         {8, 1.2407},
         {16, 1.3230},
         {32, 1.3657},
         {64, 1.3898},
         {128, 1.4020},
         {256, 1.4081},
         {512, 1.4111},
         {1024, 1.4127},
         {2048, 1.4134},
         {4096, 1.4138}});
}

double CalibrationTables::xi(int n) const { return interp_log2(xi_, n, "xi"); }

double CalibrationTables::inv_zeta(int n) const {
    if (n >= 4097) return std::numbers::sqrt2;
    return interp_log2(inv_zeta_, n, "inv_zeta");
}

std::string CalibrationTables::to_json() const {
    nlohmann::json j;
    for (const auto& [n, v] : xi_) j["xi"][std::to_string(n)] = v;
    for (const auto& [n, v] : inv_zeta_) j["inv_zeta"][std::to_string(n)] = v;
    return j.dump(2);
}

CalibrationTables CalibrationTables::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::map<int, double> xi, inv_zeta;
    for (const auto& [key, v] : j.at("xi").items()) xi[std::stoi(key)] = v.get<double>();
    for (const auto& [key, v] : j.at("inv_zeta").items()) inv_zeta[std::stoi(key)] = v.get<double>();
    return CalibrationTables(std::move(xi), std::move(inv_zeta));
}

}  // namespace h2s
