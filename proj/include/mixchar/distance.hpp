#pragma once

// L_p distances to stationarity, relative entropy, mixing times for the
// continuous, discrete and averaged chains, and the closed-form
// constrained minima behind the entropy characterization targets.
// Natural logarithm throughout.

#include "mixchar/hitting.hpp"

namespace mixchar {

enum class Metric { L1, L2, Linf, Entropy };
enum class KernelMode { Continuous, Discrete, Averaged };

// D(mu || pi) with the 0 log 0 = 0 convention, in nats.
inline double rel_entropy(const Vector& mu, const Vector& pi) {
  double d = 0.0;
  for (int x = 0; x < mu.size(); ++x) {
    if (mu[x] <= 0.0) continue;
    if (pi[x] <= 0.0) throw SupportViolation("mu charges a pi-null state");
    d += mu[x] * std::log(mu[x] / pi[x]);
  }
  return std::max(d, 0.0);
}

inline double lp_measure_distance(const Vector& mu, const Vector& pi, double p) {
  if (p == std::numeric_limits<double>::infinity()) {
    double worst = 0.0;
    for (int x = 0; x < mu.size(); ++x) worst = std::max(worst, std::abs(mu[x] / pi[x] - 1.0));
    return worst;
  }
  double acc = 0.0;
  for (int x = 0; x < mu.size(); ++x) acc += pi[x] * std::pow(std::abs(mu[x] / pi[x] - 1.0), p);
  return std::pow(acc, 1.0 / p);
}

namespace detail {

inline double distance_of_row(const Vector& row, const Vector& pi, Metric metric) {
  switch (metric) {
    case Metric::L1: return lp_measure_distance(row, pi, 1.0);
    case Metric::L2: return lp_measure_distance(row, pi, 2.0);
    case Metric::Linf: return lp_measure_distance(row, pi, std::numeric_limits<double>::infinity());
    case Metric::Entropy: return rel_entropy(row, pi);
  }
  throw BadMode("unknown metric");
}

}  // namespace detail

// Worker bundling the spectra a distance profile needs; build once per
// chain and query many times.
class DistanceProfile {
 public:
  explicit DistanceProfile(const ChainModel& chain) : chain_(chain) {
    cont_ = continuous_spectrum(chain);
    if (chain.unit_rate()) disc_ = decompose(chain);
  }

  const ContinuousSpectrum& continuous() const { return cont_; }
  const SpectralDecomposition& discrete() const {
    if (!chain_.unit_rate()) throw BadMode("discrete kernels need a unit-rate chain");
    return disc_;
  }
  const ChainModel& chain() const { return chain_; }

  double lp(int x, double t, double p, KernelMode mode) const {
    Metric metric;
    if (p == 1.0) metric = Metric::L1;
    else if (p == 2.0) metric = Metric::L2;
    else if (p == std::numeric_limits<double>::infinity()) metric = Metric::Linf;
    else throw BadMode("p must be 1, 2 or infinity");
    return value(x, t, metric, mode);
  }

  double value(int x, double t, Metric metric, KernelMode mode) const {
    if (mode == KernelMode::Continuous) {
      if (t < 0.0) throw NegativeTime("distance needs t >= 0");
      if (metric == Metric::L2) return l2_continuous(x, t);
      return detail::distance_of_row(heat_kernel_row(cont_, x, t), cont_.pi, metric);
    }
    long k = static_cast<long>(std::llround(t));
    if (std::abs(t - static_cast<double>(k)) > 1e-9) throw BadTime("integer time required");
    if (mode == KernelMode::Averaged && k < 1) throw BadTime("averaged kernel needs t >= 1");
    if (k < 0) throw BadTime("discrete kernel needs t >= 0");
    const auto& dec = discrete();
    if (metric == Metric::L2) {
      double acc = 0.0;
      for (int i = 1; i < dec.n(); ++i) {
        double f2 = dec.basis(x, i) * dec.basis(x, i);
        if (mode == KernelMode::Discrete) {
          acc += std::pow(dec.eigenvalues[i], 2.0 * k) * f2;
        } else {
          double factor = 0.5 * (1.0 + dec.eigenvalues[i]);
          acc += std::pow(dec.eigenvalues[i], 2.0 * (k - 1)) * factor * factor * f2;
        }
      }
      return std::sqrt(std::max(acc, 0.0));
    }
    Vector row = mode == KernelMode::Discrete ? discrete_kernel_row(dec, x, k)
                                              : averaged_kernel_row(dec, x, k);
    return detail::distance_of_row(row, dec.pi, metric);
  }

  double worst_case(double t, Metric metric, KernelMode mode) const {
    double worst = 0.0;
    for (int x = 0; x < chain_.n(); ++x) worst = std::max(worst, value(x, t, metric, mode));
    return worst;
  }

 private:
  double l2_continuous(int x, double t) const {
    double acc = 0.0;
    for (int i = 1; i < cont_.n(); ++i)
      acc += std::exp(-2.0 * cont_.gamma[i] * t) * cont_.basis(x, i) * cont_.basis(x, i);
    return std::sqrt(std::max(acc, 0.0));
  }

  ChainModel chain_;
  ContinuousSpectrum cont_;
  SpectralDecomposition disc_;
};

inline double lp_distance(const ChainModel& chain, int x, double t, double p, KernelMode mode) {
  return DistanceProfile(chain).lp(x, t, p, mode);
}

struct MixingQuery {
  Metric metric = Metric::L2;
  KernelMode mode = KernelMode::Continuous;
  double epsilon = 0.5;        // entropy metric uses the 1/2 target
  int start = -1;              // -1: worst case over starting states
  long scan_cap = 1000000;     // discrete/averaged scan bound
};

namespace detail {

inline double continuous_mixing_from(const DistanceProfile& profile, int x, Metric metric,
                                     double eps) {
  auto dist = [&](double t) { return profile.value(x, t, metric, KernelMode::Continuous); };
  if (dist(0.0) <= eps) return 0.0;
  double scale = 1.0 / std::max(profile.continuous().gap(), 1e-12);
  // pre-flight monotonicity check backing the bisection; the continuous
  // profiles are nonincreasing, fall back to scan+refine if rounding
  // ever breaks that on the sampled grid
  double hi = scale;
  int doublings = 0;
  while (dist(hi) > eps) {
    hi *= 2.0;
    if (++doublings > 300) throw NumericalFailure("mixing bracket failed to close");
  }
  bool monotone = true;
  double prev = dist(0.0);
  for (int i = 1; i <= 16; ++i) {
    double cur = dist(hi * i / 16.0);
    if (cur > prev + 1e-9) monotone = false;
    prev = cur;
  }
  double lo = 0.0;
  if (!monotone) {
    // first crossing by scan, then refine within the bracketing cell
    const int grid = 4096;
    const double hi0 = hi;
    for (int i = 1; i <= grid; ++i) {
      double t = hi0 * i / grid;
      if (dist(t) <= eps) {
        hi = t;
        lo = hi0 * (i - 1) / grid;
        break;
      }
    }
  }
  while (hi - lo > 1e-12 + 1e-11 * hi) {
    double mid = 0.5 * (lo + hi);
    (dist(mid) > eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double integer_mixing_from(const DistanceProfile& profile, int x, Metric metric,
                                  KernelMode mode, double eps, long cap) {
  long start_t = mode == KernelMode::Averaged ? 1 : 0;
  const auto& dec = profile.discrete();
  if (mode == KernelMode::Discrete) {
    // mass on eigenvalues of modulus 1 (other than the constant mode)
    // persists for all times; detect never-mixing exactly for L2 and as
    // a parity-limit check otherwise
    if (metric == Metric::L2) {
      double stuck = 0.0;
      for (int i = 1; i < dec.n(); ++i)
        if (std::abs(std::abs(dec.eigenvalues[i]) - 1.0) < kEigenClusterTol)
          stuck += dec.basis(x, i) * dec.basis(x, i);
      if (std::sqrt(stuck) > eps + 1e-12)
        throw NotMixing("L2 distance is bounded below by the unit-modulus spectral mass");
    } else {
      Vector even = Vector::Zero(dec.n()), odd = Vector::Zero(dec.n());
      for (int i = 0; i < dec.n(); ++i) {
        if (std::abs(std::abs(dec.eigenvalues[i]) - 1.0) >= kEigenClusterTol) continue;
        double sign = dec.eigenvalues[i] > 0 ? 1.0 : -1.0;
        for (int y = 0; y < dec.n(); ++y) {
          double mass = dec.basis(x, i) * dec.basis(y, i) * dec.pi[y];
          even[y] += mass;
          odd[y] += sign * mass;
        }
      }
      double lim = std::min(detail::distance_of_row(even.cwiseMax(0.0), dec.pi, metric),
                            detail::distance_of_row(odd.cwiseMax(0.0), dec.pi, metric));
      if (lim > eps + 1e-9)
        throw NotMixing("parity-limit distance stays above the threshold");
    }
  }
  for (long t = start_t; t <= cap; ++t)
    if (profile.value(x, static_cast<double>(t), metric, mode) <= eps) return static_cast<double>(t);
  throw NotMixing("scan cap reached before the threshold");
}

}  // namespace detail

inline double mixing_time(const ChainModel& chain, const MixingQuery& query) {
  if (!(query.epsilon > 0.0)) throw BadParams("epsilon must be positive");
  DistanceProfile profile(chain);
  double eps = query.epsilon;
  auto from = [&](int x) {
    return query.mode == KernelMode::Continuous
               ? detail::continuous_mixing_from(profile, x, query.metric, eps)
               : detail::integer_mixing_from(profile, x, query.metric, query.mode, eps,
                                             query.scan_cap);
  };
  if (query.start >= 0) return from(query.start);
  std::vector<double> per_state(chain.n());
  parallel_for(chain.n(), [&](std::size_t x) { per_state[x] = from(static_cast<int>(x)); });
  return *std::max_element(per_state.begin(), per_state.end());
}

// ---------------------------------------------------------------------------
// Constrained minima over P_{A,delta} = { mu : mu(A) >= pi(A) + delta pi(A^c) }

// u(x, y) = [y + x(1-y)] log(1 + y(1-x)/x) + (1-y)(1-x) log(1-y),
// the minimal relative entropy when a (pi(A) = x)-set is overweighted by
// delta = y; evaluated in log1p form for stability near the edges.
inline double entropy_lower_u(double x, double y) {
  if (!(x > 0.0 && x < 1.0) || !(y >= 0.0 && y < 1.0)) throw DomainError("u needs x,y in (0,1)");
  if (y == 0.0) return 0.0;
  double first = (y + x * (1.0 - y)) * std::log1p(y * (1.0 - x) / x);
  double second = (1.0 - y) * (1.0 - x) * std::log1p(-y);
  return first + second;
}

struct LagrangeMinima {
  double l2;
  double entropy;
};

inline LagrangeMinima lagrange_minima(double pi_a, double delta) {
  if (!(pi_a > 0.0 && pi_a < 1.0)) throw DomainError("pi(A) must be in (0,1)");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must be in [0,1)");
  LagrangeMinima out;
  out.l2 = delta * std::sqrt((1.0 - pi_a) / pi_a);
  out.entropy = delta == 0.0 ? 0.0 : entropy_lower_u(pi_a, delta);
  return out;
}

// ---------------------------------------------------------------------------
// Numeric derivation of the entropy-target constants (C', C_ent)

struct EntropyConstants {
  double c_prime;
  double c_ent;
};

namespace detail {

// Feasibility of C': u(x, min(C'/|log x|, (99/100 - x)/(1 - x))) >= 1/2
// on the whole grid.
inline double u_condition_min(double c_prime, const std::vector<double>& grid) {
  double worst = std::numeric_limits<double>::infinity();
  for (double x : grid) {
    double cap = (0.99 - x) / (1.0 - x);
    double y = std::min(c_prime / std::abs(std::log(x)), cap);
    worst = std::min(worst, entropy_lower_u(x, y));
  }
  return worst;
}

inline std::vector<double> c_ent_grid() {
  std::vector<double> grid;
  const int coarse = 4000;
  double lo = std::log(1e-9), hi = std::log(0.5);
  for (int i = 0; i <= coarse; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / coarse));
  // extra resolution toward both ends
  for (int i = 0; i <= 400; ++i) grid.push_back(0.5 - 0.4999 * i / 400.0 * 1e-3);
  for (int i = 1; i <= 400; ++i) grid.push_back(std::exp(lo * (1.0 + i / 400.0)));
  std::sort(grid.begin(), grid.end());
  return grid;
}

}  // namespace detail

// Critical C' by bisection (to 1e-6) on the u-condition over a dense
// grid, then C_ent = sup_x (x |log x| + C'(1 - x)) over (0, 1/2].
inline EntropyConstants derive_entropy_constants() {
  static const EntropyConstants cached = [] {
    std::vector<double> grid = detail::c_ent_grid();
    double lo = 0.01, hi = 16.0;
    if (detail::u_condition_min(hi, grid) < 0.5)
      throw NumericalFailure("u-condition infeasible at the upper bracket");
    while (hi - lo > 1e-6) {
      double mid = 0.5 * (lo + hi);
      (detail::u_condition_min(mid, grid) >= 0.5 ? hi : lo) = mid;
    }
    EntropyConstants out;
    out.c_prime = hi;  // smallest grid-feasible value, rounded up
    // sup over the same grid with a golden refinement around the best cell
    double best = 0.0, best_x = 0.25;
    auto objective = [&](double x) { return x * std::abs(std::log(x)) + out.c_prime * (1.0 - x); };
    for (double x : grid) {
      double v = objective(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    double a = best_x * 0.5, b = std::min(best_x * 2.0, 0.5);
    for (int iter = 0; iter < 200; ++iter) {
      double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
      if (objective(m1) < objective(m2)) a = m1;
      else b = m2;
    }
    out.c_ent = std::max(best, objective(0.5 * (a + b)));
    return out;
  }();
  return cached;
}

}  // namespace mixchar
