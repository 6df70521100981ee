#include "vpsfem/quadrature.hpp"

#include <cmath>

namespace vpsfem {

namespace {

QuadRule make_degree6_rule() {
  QuadRule rule;
  rule.degree = 6;

  const auto add_s21 = [&rule](double a, double w) {
    const double b = 0.5 * (1.0 - a);
    rule.points.push_back({a, b, b});
    rule.points.push_back({b, a, b});
    rule.points.push_back({b, b, a});
    for (int k = 0; k < 3; ++k) rule.weights.push_back(w);
  };
  const auto add_s111 = [&rule](double a, double b, double w) {
    const double c = 1.0 - a - b;
    rule.points.push_back({a, b, c});
    rule.points.push_back({a, c, b});
    rule.points.push_back({b, a, c});
    rule.points.push_back({b, c, a});
    rule.points.push_back({c, a, b});
    rule.points.push_back({c, b, a});
    for (int k = 0; k < 6; ++k) rule.weights.push_back(w);
  };

  // Orbit values solved to 25 digits from the degree-6 moment equations.
  add_s21(0.5014265096581795508071029, 0.1167862757263797591540220);
  add_s21(0.8738219710169966710786701, 0.0508449063702061135428837);
  add_s111(0.05314504984481678693226605, 0.3103524510337835601831462,
           0.08285107561837373031821382);
  return rule;
}

}  // namespace

const QuadRule& triangle_rule() {
  static const QuadRule rule = make_degree6_rule();
  return rule;
}

const TimeRule& gauss3_unit_interval() {
  static const TimeRule rule = [] {
    const double d = 0.5 * std::sqrt(0.6);
    return TimeRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
  }();
  return rule;
}

}  // namespace vpsfem
