#pragma once

#include <span>
#include <string>
#include <vector>

namespace plap {

/// Named one-dimensional built-in function with closed-form derivatives,
/// antiderivative and (for monotone kinds) inverse.
///
/// Grammar (used by the config file):
///   constant(c)
///   tanh(a, k, c)          a * tanh(k (t - c))
///   atan(a, k, c)          a * atan(k (t - c))
///   polynomial(c0, c1, ...) c0 + c1 t + c2 t^2 + ...
///   gaussian-bump(a, c, w) a * exp(-((t - c) / w)^2)
/// Trailing parameters of tanh/atan may be omitted (defaults 1, 1, 0).
class Profile {
 public:
  enum class Kind { constant, tanh, atan, polynomial, gaussian_bump };

  Profile() = default;
  Profile(Kind kind, std::vector<double> params);

  static Profile constant(double c) { return {Kind::constant, {c}}; }
  static Profile tanh(double a = 1.0, double k = 1.0, double c = 0.0) {
    return {Kind::tanh, {a, k, c}};
  }
  static Profile atan(double a = 1.0, double k = 1.0, double c = 0.0) {
    return {Kind::atan, {a, k, c}};
  }
  static Profile polynomial(std::vector<double> coeffs) {
    return {Kind::polynomial, std::move(coeffs)};
  }
  static Profile gaussian_bump(double a, double c, double w) {
    return {Kind::gaussian_bump, {a, c, w}};
  }
  static Profile parse(const std::string& text);

  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  bool is_constant() const;

  double value(double t) const;
  /// k-th derivative, k in 0..3.
  double derivative(double t, int k) const;
  /// Antiderivative vanishing at t = 0.
  double antiderivative(double t) const;
  /// Inverse of a strictly increasing profile; throws for non-invertible kinds.
  double inverse(double r) const;
  /// Checks derivative > 0 on `samples` points of [a, b].
  bool strictly_increasing_on(double a, double b, int samples = 2001) const;
  double sup_abs_on(double a, double b, int samples = 2001) const;

  std::string to_string() const;
  bool operator==(const Profile&) const = default;

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> params_{0.0};
};

/// Function of the x-coordinates: a Profile applied to one x-axis.
/// Written as `<profile>` or `<profile> @ x<k>` (1-based k).
struct XFunction {
  Profile profile;
  int axis = 0;

  static XFunction parse(const std::string& text);
  static XFunction constant(double c) { return {Profile::constant(c), 0}; }

  double value(std::span<const double> x) const { return profile.value(x[axis]); }
  /// Derivative along x_axis (the only direction with a non-zero derivative).
  double d1(std::span<const double> x) const { return profile.derivative(x[axis], 1); }
  double d2(std::span<const double> x) const { return profile.derivative(x[axis], 2); }
  bool is_constant() const { return profile.is_constant(); }
  std::string to_string() const;
  bool operator==(const XFunction&) const = default;
};

}  // namespace plap
