#include "presence/decay.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "presence/text_util.hpp"

namespace presence {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(ErrorCode::invalid_argument, std::string(what) + " must be a positive finite number");
  }
}

void check_bounds(double from, double to) {
  if (!(from >= 0.0) || !(to >= 0.0)) fail(ErrorCode::invalid_argument, "negative decay age");
  if (from > to) fail(ErrorCode::invalid_argument, "reversed integration bounds");
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

namespace quadrature {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tolerance, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tolerance, max_depth);
}

}  // namespace quadrature

DecaySpec DecaySpec::exponential(double rate_per_minute) {
  require_positive(rate_per_minute, "exponential decay rate");
  return DecaySpec(Kind::exponential, rate_per_minute);
}

DecaySpec DecaySpec::linear(double horizon_minutes) {
  require_positive(horizon_minutes, "linear decay horizon");
  return DecaySpec(Kind::linear, horizon_minutes);
}

DecaySpec DecaySpec::window(double width_minutes) {
  require_positive(width_minutes, "window decay width");
  return DecaySpec(Kind::window, width_minutes);
}

DecaySpec DecaySpec::custom(std::function<double(double)> raw,
                            std::optional<double> horizon_minutes, std::string label) {
  if (!raw) fail(ErrorCode::invalid_argument, "custom decay needs a function");
  if (horizon_minutes) require_positive(*horizon_minutes, "custom decay horizon");
  DecaySpec spec(Kind::custom, horizon_minutes.value_or(0.0));
  spec.raw_ = std::make_shared<const std::function<double(double)>>(std::move(raw));
  spec.horizon_ = horizon_minutes;
  spec.label_ = std::move(label);
  return spec;
}

DecaySpec DecaySpec::tabulated(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) fail(ErrorCode::invalid_argument, "tabulated decay needs >= 2 samples");
  if (samples.front().first != 0.0) {
    fail(ErrorCode::invalid_argument, "tabulated decay must start at age 0");
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first > samples[i - 1].first)) {
      fail(ErrorCode::invalid_argument, "tabulated decay ages must be strictly increasing");
    }
    if (!(samples[i].second < samples[i - 1].second)) {
      fail(ErrorCode::invalid_argument, "tabulated decay values must be strictly decreasing");
    }
  }
  const double horizon = samples.back().first;
  auto raw = [table = std::move(samples)](double age) {
    auto it = std::upper_bound(table.begin(), table.end(), age,
                               [](double a, const auto& s) { return a < s.first; });
    if (it == table.begin()) return table.front().second;
    if (it == table.end()) return table.back().second;
    const auto& [a0, v0] = *std::prev(it);
    const auto& [a1, v1] = *it;
    return v0 + (v1 - v0) * (age - a0) / (a1 - a0);
  };
  return custom(std::move(raw), horizon, "tabulated");
}

DecaySpec DecaySpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorCode::invalid_argument, "decay spec '" + std::string(text) + "' lacks ':'");
  }
  const auto kind = trim(text.substr(0, colon));
  const auto value = parse_double(trim(text.substr(colon + 1)));
  if (!value) {
    fail(ErrorCode::invalid_argument, "decay spec '" + std::string(text) + "' has a bad number");
  }
  if (kind == "exp") return exponential(*value);
  if (kind == "linear") return linear(*value);
  if (kind == "window") return window(*value);
  fail(ErrorCode::invalid_argument, "unknown decay kind '" + std::string(kind) + "'");
}

std::optional<double> DecaySpec::horizon() const noexcept {
  switch (kind_) {
    case Kind::exponential: return std::nullopt;
    case Kind::linear:
    case Kind::window: return param_;
    case Kind::custom: return horizon_;
  }
  return std::nullopt;
}

std::string DecaySpec::to_string() const {
  switch (kind_) {
    case Kind::exponential: return "exp:" + shortest(param_);
    case Kind::linear: return "linear:" + shortest(param_);
    case Kind::window: return "window:" + shortest(param_);
    case Kind::custom: return label_;
  }
  return {};
}

double DecaySpec::raw_clamped(double age) const {
  if (horizon_ && age > *horizon_) return 0.0;
  return std::clamp((*raw_)(age), 0.0, 1.0);
}

double DecaySpec::eval(double age) const {
  if (!(age >= 0.0)) fail(ErrorCode::invalid_argument, "negative decay age");
  switch (kind_) {
    case Kind::exponential: return std::exp(-param_ * age);
    case Kind::linear: return std::max(0.0, 1.0 - age / param_);
    case Kind::window: return age <= param_ ? 1.0 : 0.0;
    case Kind::custom: return raw_clamped(age);
  }
  return 0.0;
}

double DecaySpec::integrate(double from, double to) const {
  check_bounds(from, to);
  if (from == to) return 0.0;
  switch (kind_) {
    case Kind::exponential:
      return std::exp(-param_ * from) * -std::expm1(-param_ * (to - from)) / param_;
    case Kind::linear: {
      auto antiderivative = [h = param_](double a) {
        a = std::min(a, h);
        return a - a * a / (2.0 * h);
      };
      return antiderivative(to) - antiderivative(from);
    }
    case Kind::window: return std::max(0.0, std::min(to, param_) - from);
    case Kind::custom: {
      const double upper = horizon_ ? std::min(to, *horizon_) : to;
      if (upper <= from) return 0.0;
      const double tol = 1e-9 * (to - from + 1.0);
      return quadrature::adaptive_simpson([this](double a) { return raw_clamped(a); }, from,
                                          upper, tol);
    }
  }
  return 0.0;
}

double DecaySpec::normalization() const {
  switch (kind_) {
    case Kind::exponential: return 1.0 / param_;
    case Kind::linear: return param_ / 2.0;
    case Kind::window: return param_;
    case Kind::custom: {
      if (!horizon_) {
        fail(ErrorCode::precondition,
             "decay '" + label_ + "' has no horizon; its normalization diverges");
      }
      const double area = integrate(0.0, *horizon_);
      if (!(area > 0.0)) {
        fail(ErrorCode::precondition, "decay '" + label_ + "' has zero normalization");
      }
      return area;
    }
  }
  return 0.0;
}

double DecaySpec::characteristic_scale() const {
  if (kind_ == Kind::exponential) return 1.0 / param_;
  if (auto h = horizon()) return *h;
  fail(ErrorCode::precondition, "decay '" + label_ + "' has no characteristic scale");
}

std::pair<double, double> age_range(const VisitInterval& interval, Epoch now) {
  if (interval.end > now) {
    fail(ErrorCode::precondition, "visit ends after the evaluation time");
  }
  return {static_cast<double>(now - interval.end) / 60.0,
          static_cast<double>(now - interval.start) / 60.0};
}

}  // namespace presence
