#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "bt/quadrature.hpp"
#include "bt/rng.hpp"

namespace bt {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Kind {
  exponential,
  uniform01,
  beta,
  arcsine,
  pointmass,
  finite_mixture,
  pareto,
  exp_of_gaussian,
  half_gaussian,
};

/// A distribution of player merits U. Positive support; Q(x) = P(U > x) is the
/// strict-inequality tail, so atoms show up as jumps that inverse_tail resolves
/// by the infimum rule. `alpha` is the near-top tail exponent
/// log Q(1-u) = alpha*log(u) + o(log u); it only makes sense when the support
/// maximum is 1, which the setter enforces.
class StrengthModel {
 public:
  static StrengthModel exponential(double rate) {
    require(rate > 0, "exponential: rate must be > 0");
    StrengthModel m(Kind::exponential, "exponential(" + fmt(rate) + ")", kInf);
    m.p1_ = rate;
    return m;
  }

  static StrengthModel uniform01() {
    StrengthModel m(Kind::uniform01, "uniform01", 1.0);
    m.alpha_ = 1.0;
    return m;
  }

  static StrengthModel beta(double a, double b) {
    require(a > 0 && b > 0, "beta: both shape parameters must be > 0");
    StrengthModel m(Kind::beta, "beta(" + fmt(a) + "," + fmt(b) + ")", 1.0);
    m.p1_ = a;
    m.p2_ = b;
    if (b < 2.0) m.alpha_ = b;
    return m;
  }

  static StrengthModel arcsine() {
    StrengthModel m(Kind::arcsine, "arcsine", 1.0);
    m.alpha_ = 0.5;
    return m;
  }

  static StrengthModel pointmass(double v) {
    require(v > 0, "pointmass: value must be > 0");
    StrengthModel m(Kind::pointmass, "pointmass(" + fmt(v) + ")", v);
    m.p1_ = v;
    if (v == 1.0) m.alpha_ = 0.0;
    return m;
  }

  static StrengthModel finite_mixture(std::vector<double> values, std::vector<double> weights) {
    require(!values.empty() && values.size() == weights.size(),
            "finite_mixture: values and weights must be non-empty and equal-length");
    double wsum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      require(values[i] > 0, "finite_mixture: values must be > 0");
      require(weights[i] > 0, "finite_mixture: weights must be > 0");
      wsum += weights[i];
    }
    require(std::abs(wsum - 1.0) <= 1e-12, "finite_mixture: weights must sum to 1");
    // Sort atoms ascending, merging duplicates, and precompute suffix tails.
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return values[i] < values[j]; });
    std::vector<double> v, w;
    for (auto i : idx) {
      if (!v.empty() && v.back() == values[i]) {
        w.back() += weights[i];
      } else {
        v.push_back(values[i]);
        w.push_back(weights[i]);
      }
    }
    std::string label = "mixture(";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) label += ",";
      label += fmt(v[i]) + ":" + fmt(w[i]);
    }
    label += ")";
    StrengthModel m(Kind::finite_mixture, label, v.back());
    m.values_ = std::move(v);
    m.weights_ = std::move(w);
    if (m.support_max_ == 1.0) m.alpha_ = 0.0;
    return m;
  }

  static StrengthModel pareto(double shape) {
    require(shape > 0, "pareto: shape must be > 0");
    StrengthModel m(Kind::pareto, "pareto(" + fmt(shape) + ")", kInf);
    m.p1_ = shape;
    return m;
  }

  static StrengthModel exp_of_gaussian(double mu, double sigma) {
    require(sigma > 0, "exp_of_gaussian: sigma must be > 0");
    StrengthModel m(Kind::exp_of_gaussian, "exp_of_gaussian(" + fmt(mu) + "," + fmt(sigma) + ")",
                    kInf);
    m.p1_ = mu;
    m.p2_ = sigma;
    return m;
  }

  static StrengthModel half_gaussian(double sigma) {
    require(sigma > 0, "half_gaussian: sigma must be > 0");
    StrengthModel m(Kind::half_gaussian, "half_gaussian(" + fmt(sigma) + ")", kInf);
    m.p1_ = sigma;
    return m;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double support_max() const { return support_max_; }
  std::optional<double> alpha() const { return alpha_; }

  void set_alpha(double alpha) {
    if (support_max_ != 1.0) {
      throw std::invalid_argument("alpha requires support_max = 1, but " + name_ +
                                  " has support_max = " + fmt(support_max_));
    }
    if (!(alpha >= 0.0 && alpha < 2.0)) {
      throw std::invalid_argument("alpha must lie in [0, 2)");
    }
    alpha_ = alpha;
  }

  double param1() const { return p1_; }
  double param2() const { return p2_; }
  const std::vector<double>& mixture_values() const { return values_; }
  const std::vector<double>& mixture_weights() const { return weights_; }

 private:
  StrengthModel(Kind kind, std::string name, double support_max)
      : kind_(kind), name_(std::move(name)), support_max_(support_max) {}

  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

  Kind kind_;
  std::string name_;
  double support_max_;
  std::optional<double> alpha_;
  double p1_ = 0, p2_ = 0;
  std::vector<double> values_, weights_;
};

/// Q(x) = P(U > x). Non-increasing, right-continuous, Q(0) = 1.
inline double tail(const StrengthModel& m, double x) {
  if (!(x >= 0)) throw std::domain_error("tail: x must be >= 0");
  switch (m.kind()) {
    case Kind::exponential:
      return std::exp(-m.param1() * x);
    case Kind::uniform01:
      return x >= 1.0 ? 0.0 : 1.0 - x;
    case Kind::beta:
      return x >= 1.0 ? 0.0 : boost::math::ibetac(m.param1(), m.param2(), x);
    case Kind::arcsine:
      return x >= 1.0 ? 0.0 : 1.0 - 2.0 / std::numbers::pi * std::asin(std::sqrt(x));
    case Kind::pointmass:
      return x < m.param1() ? 1.0 : 0.0;
    case Kind::finite_mixture: {
      const auto& v = m.mixture_values();
      const auto& w = m.mixture_weights();
      double q = 0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > x) q += w[i];
      return q;
    }
    case Kind::pareto:
      return x <= 1.0 ? 1.0 : std::pow(x, -m.param1());
    case Kind::exp_of_gaussian:
      if (x == 0.0) return 1.0;
      return 0.5 * std::erfc((std::log(x) - m.param1()) / (m.param2() * std::numbers::sqrt2));
    case Kind::half_gaussian:
      return std::erfc(x / (m.param1() * std::numbers::sqrt2));
  }
  throw std::logic_error("tail: unreachable");
}

/// Generalized inverse Q^{-1}(y) = inf{x > 0 : Q(x) <= y}, y in (0,1).
inline double inverse_tail(const StrengthModel& m, double y) {
  if (!(y > 0.0 && y < 1.0)) throw std::domain_error("inverse_tail: y must lie in (0,1)");
  switch (m.kind()) {
    case Kind::exponential:
      return -std::log(y) / m.param1();
    case Kind::uniform01:
      return 1.0 - y;
    case Kind::beta:
      return boost::math::ibetac_inv(m.param1(), m.param2(), y);
    case Kind::arcsine: {
      const double s = std::sin(std::numbers::pi * (1.0 - y) / 2.0);
      return s * s;
    }
    case Kind::pointmass:
      return m.param1();
    case Kind::finite_mixture: {
      // First atom whose tail is <= y; atoms are ascending, Q(last) = 0.
      const auto& v = m.mixture_values();
      for (double a : v)
        if (tail(m, a) <= y) return a;
      return v.back();
    }
    case Kind::pareto:
      return std::pow(y, -1.0 / m.param1());
    case Kind::exp_of_gaussian:
      return std::exp(m.param1() + m.param2() * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * y));
    case Kind::half_gaussian:
      return m.param1() * std::numbers::sqrt2 * boost::math::erfc_inv(y);
  }
  throw std::logic_error("inverse_tail: unreachable");
}

/// n i.i.d. draws by inverse transform: Q^{-1}(u) with u uniform in (0,1).
inline std::vector<double> sample(const StrengthModel& m, std::size_t n, Stream& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::vector<double> out(n);
  for (auto& x : out) x = inverse_tail(m, rng.next_double());
  return out;
}

/// Ascending order statistics V_1 <= ... <= V_N (stable, multiset-preserving).
inline std::vector<double> order_statistics(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("order_statistics: input must be non-empty");
  std::stable_sort(values.begin(), values.end());
  return values;
}

struct MomentSet {
  double mean = 0;
  double second_moment = 0;  // +inf for heavy tails
  double theta_u = 0;        // E[U/(1+U)^2]
  double inv_one_plus = 0;   // E[1/(1+U)]
};

namespace detail {

// Tail-integral quadrature after x = t/(1-t): E[g(U)] = g(0) + int_0^inf g'(x) Q(x) dx.
// The transformed integrands for theta_u and inv_one_plus are bounded on (0,1).
inline double map_x(double t) { return t / (1.0 - t); }

template <typename F>
double tail_integral(const StrengthModel& m, F&& weight, double abs_tol = 1e-11) {
  auto f = [&](double t) -> double {
    if (t >= 1.0) return 0.0;
    const double q = tail(m, map_x(t));
    return q == 0.0 ? 0.0 : weight(t) * q;
  };
  return adaptive_simpson(f, 0.0, 1.0, abs_tol);
}

inline void validate_moments(const MomentSet& ms) {
  if (!(ms.theta_u > 0.0 && ms.theta_u <= 0.25 + 1e-12))
    throw std::logic_error("moments: theta_u outside (0, 1/4]");
  if (!(ms.inv_one_plus > 0.0 && ms.inv_one_plus < 1.0))
    throw std::logic_error("moments: inv_one_plus outside (0, 1)");
}

}  // namespace detail

/// theta_u by quadrature of the tail integral (independent of closed forms).
inline double quadrature_theta_u(const StrengthModel& m) {
  // d/dx [x/(1+x)^2] = (1-x)/(1+x)^3, which transforms to (1-2t).
  return detail::tail_integral(m, [](double t) { return 1.0 - 2.0 * t; });
}

inline double quadrature_inv_one_plus(const StrengthModel& m) {
  // d/dx [1/(1+x)] = -1/(1+x)^2, which transforms to -1.
  return 1.0 - detail::tail_integral(m, [](double) { return 1.0; });
}

inline double quadrature_mean(const StrengthModel& m) {
  return detail::tail_integral(m, [](double t) {
    const double one_minus = 1.0 - t;
    return 1.0 / (one_minus * one_minus);
  });
}

/// Throws QuadratureError when E[U^2] diverges.
inline double quadrature_second_moment(const StrengthModel& m) {
  return detail::tail_integral(m, [](double t) {
    const double one_minus = 1.0 - t;
    return 2.0 * t / (one_minus * one_minus * one_minus);
  });
}

inline MomentSet moments_by_quadrature(const StrengthModel& m) {
  MomentSet ms{quadrature_mean(m), quadrature_second_moment(m), quadrature_theta_u(m),
               quadrature_inv_one_plus(m)};
  detail::validate_moments(ms);
  return ms;
}

/// Closed-form moments where available; quadrature fills the gaps.
inline MomentSet moments(const StrengthModel& m) {
  MomentSet ms;
  switch (m.kind()) {
    case Kind::pointmass: {
      const double v = m.param1();
      ms = {v, v * v, v / ((1 + v) * (1 + v)), 1 / (1 + v)};
      break;
    }
    case Kind::finite_mixture: {
      const auto& vals = m.mixture_values();
      const auto& wts = m.mixture_weights();
      ms = {};
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double v = vals[i], w = wts[i];
        ms.mean += w * v;
        ms.second_moment += w * v * v;
        ms.theta_u += w * v / ((1 + v) * (1 + v));
        ms.inv_one_plus += w / (1 + v);
      }
      break;
    }
    case Kind::uniform01:
      ms = {0.5, 1.0 / 3.0, std::numbers::ln2 - 0.5, std::numbers::ln2};
      break;
    case Kind::arcsine:
      // E[1/(1+U)] = 1/sqrt(2) and E[1/(1+U)^2] = 3/(4 sqrt(2)) for Beta(1/2,1/2).
      ms = {0.5, 0.375, 0.25 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2};
      break;
    case Kind::exponential: {
      const double lam = m.param1();
      ms.mean = 1.0 / lam;
      ms.second_moment = 2.0 / (lam * lam);
      if (lam <= 500.0) {
        const double e1 = -std::expint(-lam);  // E_1(lambda)
        const double scaled = lam * std::exp(lam) * e1;
        ms.inv_one_plus = scaled;
        ms.theta_u = (1.0 + lam) * scaled - lam;
      } else {
        ms.theta_u = quadrature_theta_u(m);
        ms.inv_one_plus = quadrature_inv_one_plus(m);
      }
      break;
    }
    case Kind::beta: {
      const double a = m.param1(), b = m.param2();
      ms.mean = a / (a + b);
      ms.second_moment = a * (a + 1) / ((a + b) * (a + b + 1));
      ms.theta_u = quadrature_theta_u(m);
      ms.inv_one_plus = quadrature_inv_one_plus(m);
      break;
    }
    case Kind::pareto: {
      const double s = m.param1();
      ms.mean = s > 1.0 ? s / (s - 1.0) : kInf;
      ms.second_moment = s > 2.0 ? s / (s - 2.0) : kInf;
      ms.theta_u = quadrature_theta_u(m);
      ms.inv_one_plus = quadrature_inv_one_plus(m);
      break;
    }
    case Kind::exp_of_gaussian: {
      const double mu = m.param1(), sg = m.param2();
      ms.mean = std::exp(mu + 0.5 * sg * sg);
      ms.second_moment = std::exp(2 * mu + 2 * sg * sg);
      ms.theta_u = quadrature_theta_u(m);
      ms.inv_one_plus = quadrature_inv_one_plus(m);
      break;
    }
    case Kind::half_gaussian: {
      const double sg = m.param1();
      ms.mean = sg * std::sqrt(2.0 / std::numbers::pi);
      ms.second_moment = sg * sg;
      ms.theta_u = quadrature_theta_u(m);
      ms.inv_one_plus = quadrature_inv_one_plus(m);
      break;
    }
  }
  detail::validate_moments(ms);
  return ms;
}

struct AssumptionAReport {
  double slope = 0;          // least-squares slope of log Q(1-u) vs log u
  double target_alpha = 0;
  double deviation = 0;
  double tolerance = 0.1;
  std::size_t points_used = 0;
  bool pass = false;
};

/// n log-spaced points in [lo, hi], ascending.
inline std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0 && hi > lo) || n < 2) throw std::invalid_argument("log_spaced_grid: bad range");
  std::vector<double> g(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(llo + (lhi - llo) * double(i) / double(n - 1));
  return g;
}

/// Regression check of log Q(1-u) = alpha log u + o(log u) over a grid in (0,1).
inline AssumptionAReport check_assumption_a(const StrengthModel& m, double target_alpha,
                                            std::span<const double> u_grid) {
  if (m.support_max() != 1.0) {
    throw std::invalid_argument("check_assumption_a requires support_max = 1 (" + m.name() +
                                " has support_max = " + std::to_string(m.support_max()) + ")");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (double u : u_grid) {
    if (!(u > 0 && u < 1)) throw std::invalid_argument("check_assumption_a: grid must lie in (0,1)");
    const double q = tail(m, 1.0 - u);
    if (q == 0.0) continue;  // numerically underflowed point
    const double x = std::log(u), y = std::log(q);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n == 0) throw std::runtime_error("check_assumption_a: Q(1-u) vanished on the whole grid");
  AssumptionAReport r;
  const double denom = double(n) * sxx - sx * sx;
  r.slope = n >= 2 ? (double(n) * sxy - sx * sy) / denom : 0.0;
  r.target_alpha = target_alpha;
  r.deviation = std::abs(r.slope - target_alpha);
  r.points_used = n;
  r.pass = r.deviation <= r.tolerance;
  return r;
}

inline AssumptionAReport check_assumption_a(const StrengthModel& m, double target_alpha) {
  const auto grid = log_spaced_grid(1e-6, 1e-2, 40);
  return check_assumption_a(m, target_alpha, grid);
}

struct ConvexityReport {
  double exponent = 0;  // 1/2 - beta
  double min_second_difference = 0;
  double tolerance = 1e-9;
  bool pass = false;
};

/// Second-difference convexity check of Q^{1/2-beta} on an ascending,
/// uniformly spaced grid of at least 3 points.
inline ConvexityReport check_convexity(const StrengthModel& m, double beta, double x0,
                                       std::span<const double> grid) {
  if (!(beta > 0 && beta < 0.5)) throw std::invalid_argument("check_convexity: beta must lie in (0, 1/2)");
  if (grid.size() < 3) throw std::invalid_argument("check_convexity: grid too short (need >= 3 points)");
  if (!(grid.front() >= x0)) throw std::invalid_argument("check_convexity: grid must start at or after x0");
  ConvexityReport r;
  r.exponent = 0.5 - beta;
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = std::pow(tail(m, grid[i]), r.exponent);
  double worst = kInf;
  for (std::size_t i = 1; i + 1 < f.size(); ++i)
    worst = std::min(worst, f[i - 1] - 2.0 * f[i] + f[i + 1]);
  r.min_second_difference = worst;
  r.pass = worst >= -r.tolerance;
  return r;
}

/// Uniform grid from x0 to the 1e-3 tail quantile (or the support max).
inline std::vector<double> convexity_grid(const StrengthModel& m, double x0, std::size_t n = 100) {
  if (n < 3) throw std::invalid_argument("convexity_grid: need >= 3 points");
  const double hi =
      std::isinf(m.support_max()) ? inverse_tail(m, 1e-3) : m.support_max();
  if (!(hi > x0)) throw std::invalid_argument("convexity_grid: x0 outside support range");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = x0 + (hi - x0) * double(i) / double(n - 1);
  return g;
}

/// Default diagnostic: beta = 1/4, x0 = median.
inline ConvexityReport check_convexity(const StrengthModel& m) {
  const double x0 = inverse_tail(m, 0.5);
  const auto grid = convexity_grid(m, x0);
  return check_convexity(m, 0.25, x0, grid);
}

}  // namespace bt
