#pragma once

// Measured two-sided comparison records shared by the verification and
// volume-comparison code.

#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace finsler {

struct InequalityReport {
  std::string tag;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;      // rhs - lhs
  double tolerance = 0.0;  // slack below -tolerance is a red flag
  std::map<std::string, double> parameters;  // R, K, N, lambda, Lambda, rho, h, ...
  std::map<std::string, double> statistics;  // derived quantities (sigma, ratios, fits)
  std::vector<std::pair<double, double>> refinement;  // (h, lhs)
  std::vector<std::string> notes;

  void set_sides(double l, double r) {
    lhs = l;
    rhs = r;
    slack = r - l;
  }
  bool red_flag() const { return !std::isfinite(slack) || slack < -tolerance; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tag"] = tag;
    j["lhs"] = lhs;
    j["rhs"] = rhs;
    j["slack"] = slack;
    j["tolerance"] = tolerance;
    j["red_flag"] = red_flag();
    j["parameters"] = parameters;
    j["statistics"] = statistics;
    auto& trace = j["refinement"] = nlohmann::ordered_json::array();
    for (const auto& [h, v] : refinement) trace.push_back({{"h", h}, {"lhs", v}});
    j["notes"] = notes;
    return j;
  }

  static std::string csv_header() { return "tag,lhs,rhs,slack,tolerance,red_flag,parameters,statistics"; }

  std::string csv_row() const {
    std::ostringstream os;
    os.precision(17);
    auto kv = [&os](const std::map<std::string, double>& m) {
      bool first = true;
      for (const auto& [k, v] : m) {
        os << (first ? "" : ";") << k << '=' << v;
        first = false;
      }
    };
    os << tag << ',' << lhs << ',' << rhs << ',' << slack << ',' << tolerance << ',' << (red_flag() ? 1 : 0) << ',';
    kv(parameters);
    os << ',';
    kv(statistics);
    return os.str();
  }
};

}  // namespace finsler
