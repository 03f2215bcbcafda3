#pragma once

// Starr maximal functions.  The continuous f*(x) = sup_t |S_t f(x)| is
// the sup of an exponential sum, located through derivative sign changes
// on a log grid plus bisection; the discrete versions scan the spectral
// residual down to rounding level and add the parity limits.

#include "mixchar/sets.hpp"
#include "mixchar/spectral.hpp"

namespace mixchar {

enum class MaximalMode { Continuous, Discrete, DiscreteEven };

struct MaximalProfile {
  Vector f;
  Vector f_star;           // per-state sup
  Vector argmax_time;      // attaining time (continuous) or step
  MaximalMode mode;
  double tolerance = 0.0;  // recorded accuracy of the sup search
  bool dense_fallback = false;
};

namespace detail {

struct ExpSum {
  Vector gamma;  // rates, gamma[0] == 0
  Vector coeff;

  double value(double t) const {
    double acc = 0.0;
    for (int i = 0; i < gamma.size(); ++i) acc += coeff[i] * std::exp(-gamma[i] * t);
    return acc;
  }
  double derivative(double t) const {
    double acc = 0.0;
    for (int i = 1; i < gamma.size(); ++i) acc -= gamma[i] * coeff[i] * std::exp(-gamma[i] * t);
    return acc;
  }
};

// sup over [0, inf) of |phi| for an exponential sum with nonnegative
// rates; returns {sup, argmax} with the limit recorded as t_max.
inline std::pair<double, double> exp_sum_sup(const ExpSum& phi, double t_rel, double tol,
                                             bool* dense_fallback, int grid_hint = 1024) {
  double tail = 0.0;
  for (int i = 1; i < phi.gamma.size(); ++i) tail += std::abs(phi.coeff[i]);
  double best = std::abs(phi.value(0.0));
  double best_t = 0.0;
  double limit = std::abs(phi.coeff[0]);
  if (tail <= tol) return {std::max(best, limit), best > limit ? 0.0 : 1e300};
  double t_max = t_rel * std::log(tail / tol) + 1.0;
  if (!(t_max > 0.0)) t_max = 1.0;

  // clustered rates degrade the bracketing; fall back to denser sampling
  bool clustered = false;
  for (int i = 1; i < phi.gamma.size(); ++i)
    for (int j = i + 1; j < phi.gamma.size(); ++j)
      if (std::abs(phi.gamma[i] - phi.gamma[j]) < 1e-9 && std::abs(phi.coeff[i]) > tol &&
          std::abs(phi.coeff[j]) > tol)
        clustered = true;
  const int grid = clustered ? 8 * grid_hint : grid_hint;
  if (dense_fallback) *dense_fallback = clustered;

  std::vector<double> ts;
  ts.push_back(0.0);
  for (int i = 0; i <= grid; ++i)
    ts.push_back(t_max * (std::exp(3.0 * i / grid) - 1.0) / (std::exp(3.0) - 1.0));
  double prev_d = phi.derivative(ts[0]);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    double cur_d = phi.derivative(ts[i]);
    double candidate = std::abs(phi.value(ts[i]));
    if (candidate > best) {
      best = candidate;
      best_t = ts[i];
    }
    if (prev_d == 0.0 || (prev_d > 0.0) != (cur_d > 0.0)) {
      // critical point of phi inside (ts[i-1], ts[i])
      double lo = ts[i - 1], hi = ts[i];
      double dlo = prev_d;
      for (int iter = 0; iter < 100 && hi - lo > 1e-13 * (1.0 + hi); ++iter) {
        double mid = 0.5 * (lo + hi);
        double dmid = phi.derivative(mid);
        if (dmid == 0.0) { lo = hi = mid; break; }
        if ((dmid > 0.0) == (dlo > 0.0)) {
          lo = mid;
          dlo = dmid;
        } else {
          hi = mid;
        }
      }
      double t_crit = 0.5 * (lo + hi);
      double candidate_crit = std::abs(phi.value(t_crit));
      if (candidate_crit > best) {
        best = candidate_crit;
        best_t = t_crit;
      }
    }
    prev_d = cur_d;
  }
  if (limit > best) return {limit, 1e300};
  return {best, best_t};
}

}  // namespace detail

inline MaximalProfile maximal_function(const ChainModel& chain, const SpectralDecomposition& dec,
                                       const Vector& f, MaximalMode mode, int grid_hint = 1024) {
  if (!chain.reversible) throw NotReversible("maximal functions assume reversibility");
  if (!chain.unit_rate()) throw BadMode("maximal functions apply to unit-rate chains");
  const int n = dec.n();
  Vector coeff_base(n);
  for (int i = 0; i < n; ++i) {
    double c = 0.0;
    for (int x = 0; x < n; ++x) c += dec.pi[x] * dec.basis(x, i) * f[x];
    coeff_base[i] = c;
  }

  MaximalProfile profile;
  profile.f = f;
  profile.mode = mode;
  profile.f_star = Vector::Zero(n);
  profile.argmax_time = Vector::Zero(n);
  profile.tolerance = 1e-9;

  if (mode == MaximalMode::Continuous) {
    double t_rel = 1.0 / std::max(dec.gap(), 1e-12);
    std::vector<char> fallback(n, 0);
    std::vector<double> sups(n), arg(n);
    parallel_for(n, [&](std::size_t x) {
      detail::ExpSum phi;
      phi.gamma = (1.0 - dec.eigenvalues.array()).cwiseMax(0.0);
      phi.coeff = Vector(n);
      for (int i = 0; i < n; ++i) phi.coeff[i] = coeff_base[i] * dec.basis(static_cast<int>(x), i);
      bool dense = false;
      auto [sup, at] = detail::exp_sum_sup(phi, t_rel, 1e-13, &dense, grid_hint);
      sups[x] = sup;
      arg[x] = at;
      fallback[x] = dense;
    });
    for (int x = 0; x < n; ++x) {
      profile.f_star[x] = sups[x];
      profile.argmax_time[x] = arg[x];
      if (fallback[x]) profile.dense_fallback = true;
    }
    return profile;
  }

  // discrete: phi_k(x) = sum_i coeff_i lambda_i^k basis(x, i); scan until
  // the |lambda| < 1 residual is below rounding, then add parity limits
  double top_sub_unit = 0.0;
  double coeff_mass = 0.0;
  for (int i = 1; i < n; ++i) {
    double al = std::abs(dec.eigenvalues[i]);
    if (al < 1.0 - kEigenClusterTol) top_sub_unit = std::max(top_sub_unit, al);
    coeff_mass += std::abs(coeff_base[i]);
  }
  long k_max = 1;
  if (top_sub_unit > 0.0 && coeff_mass > 0.0) {
    k_max = static_cast<long>(std::ceil(std::log(1e-12 / (coeff_mass * std::sqrt(1.0 / chain.min_pi()))) /
                                        std::log(top_sub_unit))) + 2;
    k_max = std::clamp<long>(k_max, 1, 2000000);
  }
  long step = mode == MaximalMode::DiscreteEven ? 2 : 1;
  parallel_for(n, [&](std::size_t xs) {
    int x = static_cast<int>(xs);
    double best = 0.0, best_k = 0.0;
    for (long k = 0; k <= k_max; k += step) {
      double v = 0.0;
      for (int i = 0; i < n; ++i)
        v += coeff_base[i] * std::pow(dec.eigenvalues[i], static_cast<double>(k)) * dec.basis(x, i);
      if (std::abs(v) > best) {
        best = std::abs(v);
        best_k = static_cast<double>(k);
      }
    }
    // parity limits from the unit-modulus part of the spectrum
    double even = 0.0, odd = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::abs(std::abs(dec.eigenvalues[i]) - 1.0) >= kEigenClusterTol) continue;
      double mass = coeff_base[i] * dec.basis(x, i);
      even += mass;
      odd += dec.eigenvalues[i] > 0.0 ? mass : -mass;
    }
    if (std::abs(even) > best) {
      best = std::abs(even);
      best_k = 1e300;
    }
    if (mode == MaximalMode::Discrete && std::abs(odd) > best) {
      best = std::abs(odd);
      best_k = 1e300;
    }
    profile.f_star[x] = best;
    profile.argmax_time[x] = best_k;
  });
  return profile;
}

inline MaximalProfile maximal_function(const ChainModel& chain, const Vector& f,
                                       MaximalMode mode) {
  return maximal_function(chain, decompose(chain), f, mode);
}

// Norris-Peres-Zhai style bound for indicator densities
// f_A = 1_A / pi(A): both ||f_A^*||_1 and ||(f_A)_*||_1 / 2 are at most
// e max(1, |log pi(A)|).
struct SurpriseRecord {
  std::vector<int> set;
  double mass = 0.0;
  double continuous_l1 = 0.0;  // ||f_A^*||_1
  double discrete_l1 = 0.0;    // ||(f_A)_*||_1
  double bound = 0.0;          // e max(1, |log pi(A)|)
};

inline std::vector<SurpriseRecord> surprise_bound_check(const ChainModel& chain,
                                                        const ConnectedSetFamily& family) {
  SpectralDecomposition dec = decompose(chain);
  // under-resolution of the sup only weakens the checked direction, so a
  // coarser grid is used when the family is large
  int grid = family.sets.size() > 2000 ? 192 : 1024;
  std::vector<SurpriseRecord> records(family.sets.size());
  parallel_for(family.sets.size(), [&](std::size_t a) {
    SurpriseRecord rec;
    rec.set = family.sets[a];
    for (int s : rec.set) rec.mass += chain.pi[s];
    Vector f = Vector::Zero(chain.n());
    for (int s : rec.set) f[s] = 1.0 / rec.mass;
    auto cont = maximal_function(chain, dec, f, MaximalMode::Continuous, grid);
    auto disc = maximal_function(chain, dec, f, MaximalMode::Discrete, grid);
    rec.continuous_l1 = (chain.pi.array() * cont.f_star.array()).sum();
    rec.discrete_l1 = (chain.pi.array() * disc.f_star.array()).sum();
    rec.bound = std::exp(1.0) * std::max(1.0, std::abs(std::log(rec.mass)));
    records[a] = rec;
  });
  return records;
}

inline double lp_norm_function(const Vector& f, const Vector& pi, double p) {
  double acc = 0.0;
  for (int x = 0; x < f.size(); ++x) acc += pi[x] * std::pow(std::abs(f[x]), p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace mixchar
