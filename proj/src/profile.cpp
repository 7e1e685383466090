#include "plap/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/algorithm/string.hpp>

namespace plap {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double log_cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

const char* kind_name(Profile::Kind k) {
  switch (k) {
    case Profile::Kind::constant: return "constant";
    case Profile::Kind::tanh: return "tanh";
    case Profile::Kind::atan: return "atan";
    case Profile::Kind::polynomial: return "polynomial";
    case Profile::Kind::gaussian_bump: return "gaussian-bump";
  }
  return "?";
}

}  // namespace

Profile::Profile(Kind kind, std::vector<double> params)
    : kind_(kind), params_(std::move(params)) {
  switch (kind_) {
    case Kind::constant:
      if (params_.size() != 1) throw std::invalid_argument("constant(c) takes one parameter");
      break;
    case Kind::tanh:
    case Kind::atan:
      if (params_.size() > 3) throw std::invalid_argument("tanh/atan take at most 3 parameters");
      if (params_.size() < 1) params_.push_back(1.0);
      if (params_.size() < 2) params_.push_back(1.0);
      if (params_.size() < 3) params_.push_back(0.0);
      if (params_[1] == 0.0) throw std::invalid_argument("tanh/atan: rate k must be non-zero");
      break;
    case Kind::polynomial:
      if (params_.empty()) throw std::invalid_argument("polynomial needs coefficients");
      break;
    case Kind::gaussian_bump:
      if (params_.size() != 3 || params_[2] <= 0.0)
        throw std::invalid_argument("gaussian-bump(a, c, w) needs w > 0");
      break;
  }
}

Profile Profile::parse(const std::string& raw) {
  std::string text = boost::algorithm::trim_copy(raw);
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::invalid_argument("cannot parse function '" + raw + "'");
  const std::string name = boost::algorithm::trim_copy(text.substr(0, open));
  const std::string inner = text.substr(open + 1, close - open - 1);
  std::vector<double> params;
  if (!boost::algorithm::trim_copy(inner).empty()) {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, inner, boost::is_any_of(","));
    for (auto& p : parts) {
      boost::algorithm::trim(p);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(p, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != p.size() || p.empty())
        throw std::invalid_argument("bad number '" + p + "' in '" + raw + "'");
      params.push_back(v);
    }
  }
  if (name == "constant") return {Kind::constant, params};
  if (name == "tanh") return {Kind::tanh, params};
  if (name == "atan") return {Kind::atan, params};
  if (name == "polynomial") return {Kind::polynomial, params};
  if (name == "gaussian-bump") return {Kind::gaussian_bump, params};
  throw std::invalid_argument("unknown built-in function '" + name + "'");
}

bool Profile::is_constant() const {
  if (kind_ == Kind::constant) return true;
  if (kind_ == Kind::polynomial)
    return std::all_of(params_.begin() + 1, params_.end(), [](double c) { return c == 0.0; });
  return params_[0] == 0.0;
}

double Profile::value(double t) const { return derivative(t, 0); }

double Profile::derivative(double t, int k) const {
  const auto& p = params_;
  switch (kind_) {
    case Kind::constant:
      return k == 0 ? p[0] : 0.0;
    case Kind::tanh: {
      const double a = p[0], rate = p[1], z = rate * (t - p[2]);
      const double T = std::tanh(z);
      const double s = 1.0 - T * T;
      switch (k) {
        case 0: return a * T;
        case 1: return a * rate * s;
        case 2: return a * rate * rate * (-2.0 * T * s);
        default: return a * rate * rate * rate * s * (6.0 * T * T - 2.0);
      }
    }
    case Kind::atan: {
      const double a = p[0], rate = p[1], z = rate * (t - p[2]);
      const double q = 1.0 + z * z;
      switch (k) {
        case 0: return a * std::atan(z);
        case 1: return a * rate / q;
        case 2: return a * rate * rate * (-2.0 * z) / (q * q);
        default: return a * rate * rate * rate * (6.0 * z * z - 2.0) / (q * q * q);
      }
    }
    case Kind::polynomial: {
      double r = 0.0;
      for (std::size_t i = p.size(); i-- > static_cast<std::size_t>(k);) {
        double c = p[i];
        for (int j = 0; j < k; ++j) c *= static_cast<double>(i - j);
        r = r * t + c;
      }
      return r;
    }
    case Kind::gaussian_bump: {
      const double a = p[0], w = p[2], q = (t - p[1]) / w;
      const double e = a * std::exp(-q * q);
      switch (k) {
        case 0: return e;
        case 1: return e * (-2.0 * q) / w;
        case 2: return e * (4.0 * q * q - 2.0) / (w * w);
        default: return e * (-8.0 * q * q * q + 12.0 * q) / (w * w * w);
      }
    }
  }
  return 0.0;
}

double Profile::antiderivative(double t) const {
  const auto& p = params_;
  switch (kind_) {
    case Kind::constant:
      return p[0] * t;
    case Kind::tanh: {
      const double a = p[0], rate = p[1], c = p[2];
      return a / rate * (log_cosh(rate * (t - c)) - log_cosh(-rate * c));
    }
    case Kind::atan: {
      const double a = p[0], rate = p[1], c = p[2];
      auto G = [](double z) { return z * std::atan(z) - 0.5 * std::log1p(z * z); };
      return a / rate * (G(rate * (t - c)) - G(-rate * c));
    }
    case Kind::polynomial: {
      double r = 0.0;
      for (std::size_t i = p.size(); i-- > 0;) r = r * t + p[i] / static_cast<double>(i + 1);
      return r * t;
    }
    case Kind::gaussian_bump: {
      const double a = p[0], c = p[1], w = p[2];
      const double k = a * w * std::sqrt(std::numbers::pi) / 2.0;
      return k * (std::erf((t - c) / w) - std::erf(-c / w));
    }
  }
  return 0.0;
}

double Profile::inverse(double r) const {
  const auto& p = params_;
  switch (kind_) {
    case Kind::tanh: {
      const double q = r / p[0];
      if (!(std::abs(q) < 1.0)) throw std::domain_error("tanh inverse: value outside range");
      return p[2] + std::atanh(q) / p[1];
    }
    case Kind::atan: {
      const double q = r / p[0];
      if (!(std::abs(q) < std::numbers::pi / 2))
        throw std::domain_error("atan inverse: value outside range");
      return p[2] + std::tan(q) / p[1];
    }
    case Kind::polynomial: {
      if (p.size() == 2 && p[1] != 0.0) return (r - p[0]) / p[1];
      // Bracket then bisect/Newton.
      double lo = -1.0, hi = 1.0;
      for (int it = 0; it < 200 && value(lo) > r; ++it) lo *= 2.0;
      for (int it = 0; it < 200 && value(hi) < r; ++it) hi *= 2.0;
      if (value(lo) > r || value(hi) < r)
        throw std::domain_error("polynomial inverse: cannot bracket value");
      double t = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        const double f = value(t) - r;
        if (f > 0) hi = t; else lo = t;
        const double d = derivative(t, 1);
        double next = d > 0 ? t - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) return next;
        t = next;
      }
      return t;
    }
    default:
      throw std::domain_error(std::string(kind_name(kind_)) + " is not invertible");
  }
}

bool Profile::strictly_increasing_on(double a, double b, int samples) const {
  for (int i = 0; i < samples; ++i) {
    const double t = a + (b - a) * i / (samples - 1);
    if (!(derivative(t, 1) > 0.0)) return false;
  }
  return true;
}

double Profile::sup_abs_on(double a, double b, int samples) const {
  double s = 0.0;
  for (int i = 0; i < samples; ++i) s = std::max(s, std::abs(value(a + (b - a) * i / (samples - 1))));
  return s;
}

std::string Profile::to_string() const {
  std::string s = kind_name(kind_);
  s += "(";
  for (std::size_t i = 0; i < params_.size(); ++i) s += (i ? ", " : "") + fmt(params_[i]);
  return s + ")";
}

XFunction XFunction::parse(const std::string& raw) {
  const auto at = raw.rfind('@');
  XFunction f;
  if (at == std::string::npos) {
    f.profile = Profile::parse(raw);
    return f;
  }
  f.profile = Profile::parse(raw.substr(0, at));
  const std::string axis = boost::algorithm::trim_copy(raw.substr(at + 1));
  if (axis.size() < 2 || axis[0] != 'x')
    throw std::invalid_argument("expected '@ x<k>' in '" + raw + "'");
  f.axis = std::stoi(axis.substr(1)) - 1;
  if (f.axis < 0) throw std::invalid_argument("x-axis index is 1-based in '" + raw + "'");
  return f;
}

std::string XFunction::to_string() const {
  return axis == 0 ? profile.to_string() : profile.to_string() + " @ x" + std::to_string(axis + 1);
}

}  // namespace plap
