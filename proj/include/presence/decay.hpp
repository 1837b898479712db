#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "presence/core_model.hpp"

namespace presence {

/// Weight of a visit instant as a function of its age in minutes
/// (age 0 is "now"). Values are clamped to [0,1] and non-increasing in age.
///
/// Built-in kinds integrate in closed form; custom kinds wrap an arbitrary
/// raw function and integrate with adaptive Simpson. A custom decay must
/// name a horizon past which it is zero, otherwise its normalization is
/// treated as divergent.
class DecaySpec {
 public:
  enum class Kind { exponential, linear, window, custom };

  static DecaySpec exponential(double rate_per_minute);
  static DecaySpec linear(double horizon_minutes);
  static DecaySpec window(double width_minutes);
  static DecaySpec custom(std::function<double(double)> raw, std::optional<double> horizon_minutes,
                          std::string label = "custom");
  /// Piecewise-linear raw function through (age, value) samples. Samples
  /// must have strictly increasing ages and strictly decreasing values; the
  /// last sample's age is the horizon.
  static DecaySpec tabulated(std::vector<std::pair<double, double>> samples);

  /// Parses `exp:<rate>`, `linear:<horizon>` or `window:<width>`.
  static DecaySpec parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return param_; }
  std::optional<double> horizon() const noexcept;
  /// Round-trips through parse() for the built-in kinds.
  std::string to_string() const;

  double eval(double age_minutes) const;
  double integrate(double from_age, double to_age) const;
  double normalization() const;

  /// Age scale used by tests and plots: 1/rate, horizon, or width.
  double characteristic_scale() const;

 private:
  DecaySpec(Kind kind, double param) : kind_(kind), param_(param) {}

  double raw_clamped(double age) const;

  Kind kind_;
  double param_;
  std::shared_ptr<const std::function<double(double)>> raw_;
  std::optional<double> horizon_;
  std::string label_;
};

/// Converts an epoch-second interval into an age range (minutes) relative
/// to `now`. Requires interval.end <= now.
std::pair<double, double> age_range(const VisitInterval& interval, Epoch now);

namespace quadrature {

/// Adaptive Simpson over [a,b] with absolute error target `tolerance`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tolerance, int max_depth = 48);

}  // namespace quadrature

}  // namespace presence
