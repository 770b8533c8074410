#pragma once

// Gamma and two-parameter Mittag-Leffler evaluation on the real line.
// The negative real axis is the hot path: relaxation kernels of the
// time-fractional solvers evaluate E_{g,b}(-lambda * t^g) with lambda >= 0.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracstar {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// sin(pi*x) with argument reduction done on x itself.
inline double sin_pi(double x) {
  double n = std::round(x);
  double r = x - n;
  double s = std::sin(kPi * r);
  return (static_cast<long long>(n) % 2 == 0) ? s : -s;
}

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients. Relative error is a few
// ulps times 1e-15 on the positive axis, well within the 1e-13 budget.
inline constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_sum(double x) {
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x + i);
  return a;
}

}  // namespace detail

// log Gamma(x), x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: requires x > 0");
  if (x < 0.5) {
    // reflection keeps the Lanczos argument away from 0
    return std::log(kPi / std::fabs(sin_pi(x))) - log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double t = z + 7.5;
  return 0.91893853320467274178 + (z + 0.5) * std::log(t) - t +
         std::log(detail::lanczos_sum(z));
}

// Gamma(x) for real x excluding non-positive integers.
inline double gamma_fn(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw std::invalid_argument("gamma_fn: pole at non-positive integer x=" +
                                std::to_string(x));
  if (x < 0.5) return kPi / (sin_pi(x) * gamma_fn(1.0 - x));
  if (x > 171.61) return std::numeric_limits<double>::infinity();
  double z = x - 1.0;
  double t = z + 7.5;
  return 2.5066282746310002 * std::pow(t, z + 0.5) * std::exp(-t) *
         detail::lanczos_sum(z);
}

// ln|1/Gamma(s)| and its sign, valid for any real s (sign 0 at poles of Gamma,
// where 1/Gamma vanishes). Log form so callers can pair it with large powers.
inline void rgamma_signed_ln(double s, double& ln_abs, double& sign) {
  if (s >= 0.5) {
    ln_abs = -log_gamma(s);
    sign = 1.0;
    return;
  }
  double sp = sin_pi(s);
  if (sp == 0.0) {
    ln_abs = -std::numeric_limits<double>::infinity();
    sign = 0.0;
    return;
  }
  // 1/Gamma(s) = Gamma(1-s) sin(pi s)/pi
  ln_abs = log_gamma(1.0 - s) + std::log(std::fabs(sp)) - std::log(kPi);
  sign = (sp > 0.0) ? 1.0 : -1.0;
}

inline double rgamma(double s) {
  double ln_abs, sign;
  rgamma_signed_ln(s, ln_abs, sign);
  return sign * std::exp(ln_abs);
}

// ---------------------------------------------------------------------------
// Double-double arithmetic (~31 significant digits). Used to push the
// Mittag-Leffler Taylor series through the cancellation zone between the
// plain-double series and the asymptotic expansion.
// ---------------------------------------------------------------------------

namespace dd {

struct DD {
  double hi = 0.0;
  double lo = 0.0;
  DD() = default;
  explicit DD(double h) : hi(h), lo(0.0) {}
  DD(double h, double l) : hi(h), lo(l) {}
};

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD add(const DD& a, const DD& b) {
  DD s = two_sum(a.hi, b.hi);
  return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline DD sub(const DD& a, const DD& b) { return add(a, DD(-b.hi, -b.lo)); }

inline DD mul(const DD& a, const DD& b) {
  DD p = two_prod(a.hi, b.hi);
  return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline DD mul(const DD& a, double b) {
  DD p = two_prod(a.hi, b);
  return quick_two_sum(p.hi, p.lo + a.lo * b);
}

inline DD div(const DD& a, const DD& b) {
  double q1 = a.hi / b.hi;
  DD r = sub(a, mul(b, q1));
  double q2 = r.hi / b.hi;
  r = sub(r, mul(b, q2));
  double q3 = r.hi / b.hi;
  DD q = quick_two_sum(q1, q2);
  return add(q, DD(q3));
}

inline DD ldexp(const DD& a, int n) {
  return {std::ldexp(a.hi, n), std::ldexp(a.lo, n)};
}

inline const DD kLn2{6.931471805599452862e-01, 2.319046813846299558e-17};
inline const DD kTwoPi{6.283185307179586232e+00, 2.449293598294706414e-16};

inline DD exp(const DD& a) {
  if (a.hi > 709.0) throw std::overflow_error("dd::exp overflow");
  if (a.hi < -745.0) return DD(0.0);
  double k = std::round(a.hi / kLn2.hi);
  DD r = sub(a, mul(kLn2, k));
  // |r| <= ln2/2; 26 Taylor terms reach ~1e-33
  DD sum(1.0);
  DD term(1.0);
  for (int i = 1; i <= 26; ++i) {
    term = mul(mul(term, r), 1.0 / i);
    sum = add(sum, term);
  }
  return ldexp(sum, static_cast<int>(k));
}

inline DD log(const DD& a) {
  if (!(a.hi > 0.0)) throw std::domain_error("dd::log: requires a > 0");
  double y = std::log(a.hi);
  // one Newton step with a second-order correction term
  DD u = sub(mul(a, exp(DD(-y))), DD(1.0));
  DD corr = sub(u, mul(mul(u, u), 0.5));
  return add(DD(y), corr);
}

// Stirling series: coefficients B_{2n} / (2n (2n-1)) as exact rationals.
inline const DD& stirling_coeff(int n) {
  static const std::vector<DD> coeffs = [] {
    const double num[12] = {1, -1, 1, -1, 1, -691, 1, -3617, 43867, -174611, 854513, -236364091};
    const double den[12] = {12, 360, 1260, 1680, 1188, 360360, 156, 122400, 244188, 125400, 63756, 1506960};
    std::vector<DD> c;
    for (int i = 0; i < 12; ++i) c.push_back(div(DD(num[i]), DD(den[i])));
    return c;
  }();
  return coeffs[n - 1];
}

// log Gamma(x), x > 0, to ~1e-31 relative: shift into x >= 32, then Stirling.
inline DD lgamma(DD x) {
  static const DD kHalfLn2Pi = mul(log(kTwoPi), 0.5);
  DD shift(0.0);
  while (x.hi < 32.0) {
    shift = add(shift, log(x));
    x = add(x, DD(1.0));
  }
  DD lx = log(x);
  DD res = sub(mul(sub(x, DD(0.5)), lx), x);
  res = add(res, kHalfLn2Pi);
  DD x2 = mul(x, x);
  DD p = div(DD(1.0), x);
  for (int n = 1; n <= 12; ++n) {
    res = add(res, mul(stirling_coeff(n), p));
    p = div(p, x2);
  }
  return sub(res, shift);
}

}  // namespace dd

// ---------------------------------------------------------------------------
// Mittag-Leffler E_{alpha,beta}(z), real z.
// ---------------------------------------------------------------------------

struct MLParams {
  double series_tol = 1e-14;  // relative stop tolerance of the Taylor series
  double crossover = 0.0;     // |z| handoff to the asymptotic regime; 0 = auto
  int max_terms = 2000;
};

class MLNonConvergence : public std::runtime_error {
 public:
  explicit MLNonConvergence(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// lgamma(alpha*n + beta) in double-double, memoized per (alpha, beta).
class LgammaTable {
 public:
  const dd::DD& at(double alpha, double beta, int n) {
    auto key = std::make_pair(alpha, beta);
    auto& vec = cache_[key];
    while (static_cast<int>(vec.size()) <= n) {
      double s = alpha * static_cast<double>(vec.size()) + beta;
      vec.push_back(dd::lgamma(dd::DD(s)));
    }
    return vec[n];
  }

 private:
  std::map<std::pair<double, double>, std::vector<dd::DD>> cache_;
};

inline LgammaTable& lgamma_table() {
  thread_local LgammaTable table;
  return table;
}

// Plain Kahan-summed Taylor series with log-form terms. Adequate whenever the
// largest term exceeds the result by no more than ~5 decades.
inline double ml_series_double(double alpha, double beta, double z,
                               const MLParams& p) {
  double sum = 0.0, comp = 0.0, max_abs = 0.0;
  double ln_az = (z == 0.0) ? -std::numeric_limits<double>::infinity()
                            : std::log(std::fabs(z));
  double n_peak = (std::fabs(z) > 1.0)
                      ? std::pow(std::fabs(z), 1.0 / alpha) / alpha
                      : 0.0;
  for (int n = 0; n < p.max_terms; ++n) {
    double ln_abs, sign;
    rgamma_signed_ln(alpha * n + beta, ln_abs, sign);
    double t = sign * std::exp(n * ln_az + ln_abs);
    if (z < 0.0 && (n & 1)) t = -t;
    double y = t - comp;
    double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    max_abs = std::max(max_abs, std::fabs(t));
    bool past_peak = n > n_peak;
    if (past_peak && (std::fabs(t) <= p.series_tol * std::fabs(sum) ||
                      std::fabs(t) < 1e-18 * std::max(max_abs, 1e-300)))
      return sum;
  }
  throw MLNonConvergence("ml: double series did not converge");
}

// Double-double Taylor series; terms are built from dd lgamma so that the
// cancellation between the two parity classes stays resolved.
inline double ml_series_dd(double alpha, double beta, double z,
                           const MLParams& p) {
  using dd::DD;
  auto& table = lgamma_table();
  DD sum(0.0);
  double max_abs = 0.0;
  DD ln_az = dd::log(DD(std::fabs(z)));
  double n_peak = std::pow(std::fabs(z), 1.0 / alpha) / alpha;
  for (int n = 0; n < p.max_terms; ++n) {
    DD e = dd::sub(dd::mul(ln_az, static_cast<double>(n)),
                   table.at(alpha, beta, n));
    DD t = dd::exp(e);
    if (z < 0.0 && (n & 1)) t = DD(-t.hi, -t.lo);
    sum = dd::add(sum, t);
    max_abs = std::max(max_abs, std::fabs(t.hi));
    if (n > n_peak && std::fabs(t.hi) <= 1e-30 * std::max(std::fabs(sum.hi), 1e-280))
      break;
    if (n == p.max_terms - 1)
      throw MLNonConvergence("ml: extended series did not converge");
  }
  double lost = max_abs / std::max(std::fabs(sum.hi), 1e-280);
  if (lost > 1e20)
    throw MLNonConvergence("ml: cancellation exceeds extended precision");
  return sum.hi + sum.lo;
}

// Asymptotic expansion for large negative z:
//   E_{alpha,beta}(z) ~ -sum_{k>=1} z^{-k} / Gamma(beta - alpha k).
// Optimal truncation; reports failure if the smallest term is still large.
inline bool ml_asymptotic(double alpha, double beta, double x /* = -z > 0 */,
                          double& out) {
  double ln_x = std::log(x);
  double sum = 0.0, comp = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  double min_term = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 400; ++k) {
    double ln_abs, sign;
    rgamma_signed_ln(beta - alpha * k, ln_abs, sign);
    double mag = std::exp(-k * ln_x + ln_abs);
    if (sign != 0.0 && mag > prev) break;  // divergence onset
    if (sign != 0.0) prev = mag;
    min_term = std::min(min_term, mag);
    double t = -sign * mag;
    if (k & 1) t = -t;  // z^{-k} = (-1)^k x^{-k}
    double y = t - comp;
    double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    if (mag <= 1e-17 * std::fabs(sum) || mag < 1e-300) {
      out = sum;
      return true;
    }
  }
  if (min_term <= 1e-11 * std::fabs(sum)) {
    out = sum;
    return true;
  }
  return false;
}

}  // namespace detail

// E_{alpha,beta}(z) for real z. Relative accuracy ~1e-12 or better on the
// negative axis for alpha in (0,1], including the series/asymptotic handoff.
inline double ml(double alpha, double beta, double z, const MLParams& p = {}) {
  if (!(alpha > 0.0) || alpha > 2.0)
    throw std::invalid_argument("ml: alpha must lie in (0, 2]");
  if (!(beta > 0.0)) throw std::invalid_argument("ml: beta must be > 0");
  if (!(p.series_tol > 0.0) || p.series_tol > 1e-6)
    throw std::invalid_argument("ml: series_tol must lie in (0, 1e-6]");
  if (z == 0.0) return rgamma(beta);

  if (z > 0.0) {
    if (std::pow(z, 1.0 / alpha) > 700.0)
      throw MLNonConvergence("ml: argument too large on the positive axis");
    return detail::ml_series_double(alpha, beta, z, p);
  }

  double x = -z;
  // spec default 5*max(1,beta) is far too small for alpha near 1; auto picks
  // the point where both regimes hold >= 1e-11 with margin.
  double crossover = (p.crossover > 0.0) ? p.crossover : std::pow(35.0, alpha);
  if (x >= crossover) {
    double out;
    if (detail::ml_asymptotic(alpha, beta, x, out)) return out;
    // fall through to the series if the expansion refused
  }
  if (std::pow(x, 1.0 / alpha) <= 5.0)
    return detail::ml_series_double(alpha, beta, z, p);
  if (std::pow(x, 1.0 / alpha) <= 55.0) return detail::ml_series_dd(alpha, beta, z, p);
  double out;
  if (detail::ml_asymptotic(alpha, beta, x, out)) return out;
  throw MLNonConvergence("ml: no regime converged for alpha=" +
                         std::to_string(alpha) + " beta=" + std::to_string(beta) +
                         " z=" + std::to_string(z));
}

// ---------------------------------------------------------------------------
// Mode relaxation kernels of the spectral solvers.
// ---------------------------------------------------------------------------

enum class ModeKernel {
  state,          // E_{g,1}(-lambda t^g)
  rl_state,       // t^{g-1} E_{g,g}(-lambda t^g)
  cell_integral,  // int_0^t s^{g-1} E_{g,g}(-lambda s^g) ds = t^g E_{g,g+1}(-lambda t^g)
};

inline double mode_kernel(double gamma, double lambda, double t, ModeKernel kind) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("mode_kernel: gamma must lie in (0, 1]");
  if (lambda < 0.0) throw std::invalid_argument("mode_kernel: lambda must be >= 0");
  if (kind == ModeKernel::rl_state && !(t > 0.0))
    throw std::invalid_argument("mode_kernel: rl_state kernel is singular at t <= 0");
  if (!(t > 0.0)) throw std::invalid_argument("mode_kernel: requires t > 0");

  if (gamma == 1.0) {
    switch (kind) {
      case ModeKernel::state:
      case ModeKernel::rl_state:
        return std::exp(-lambda * t);
      case ModeKernel::cell_integral:
        return (lambda == 0.0) ? t : -std::expm1(-lambda * t) / lambda;
    }
  }
  double x = lambda * std::pow(t, gamma);
  switch (kind) {
    case ModeKernel::state:
      return ml(gamma, 1.0, -x);
    case ModeKernel::rl_state:
      return std::pow(t, gamma - 1.0) * ml(gamma, gamma, -x);
    case ModeKernel::cell_integral:
      return std::pow(t, gamma) * ml(gamma, gamma + 1.0, -x);
  }
  return 0.0;  // unreachable
}

}  // namespace fracstar
