#pragma once

// Hitting-time characterizations: the rho family (escape-probability
// thresholds over connected sets), the weighted restricted gap kappa,
// the stationary-start threshold t_ht, and hit(eps).

#include <cfloat>

#include "mixchar/distance.hpp"

namespace mixchar {

struct HittingTarget {
  enum class Kind { Rho, RhoEnt, RhoBar, RhoBarEnt, THt, HitEps } kind = Kind::Rho;
  double c_ent = 0.0;  // used by RhoEnt
  double eps = 0.5;    // used by HitEps

  static HittingTarget rho() { return {Kind::Rho, 0.0, 0.0}; }
  static HittingTarget rho_ent() { return {Kind::RhoEnt, derive_entropy_constants().c_ent, 0.0}; }
  static HittingTarget rho_bar() { return {Kind::RhoBar, 0.0, 0.0}; }
  static HittingTarget rho_bar_ent() { return {Kind::RhoBarEnt, 0.0, 0.0}; }
  static HittingTarget t_ht() { return {Kind::THt, 0.0, 0.0}; }

  // Escape-probability target g(pi(A)); evaluated in extended precision
  // and clamped at DBL_MIN with a flag when the true value underflows.
  double g(double mass, bool* clamped = nullptr) const {
    long double m = mass;
    long double v;
    switch (kind) {
      case Kind::Rho: v = m + 0.5L * std::sqrt(m * (1.0L - m)); break;
      case Kind::RhoEnt: {
        long double cap = 0.99L;
        v = std::min(static_cast<long double>(c_ent) / std::abs(std::log(m)), cap);
        break;
      }
      case Kind::RhoBar: v = m * m * m; break;
      case Kind::RhoBarEnt: {
        long double lg = std::log(std::exp(1.5L) / m);
        v = 1.0L / (16.0L * std::exp(2.0L) * lg * lg * lg);
        break;
      }
      case Kind::THt: v = std::pow(m, 0.25L); break;  // from the pi_A start
      case Kind::HitEps: v = eps; break;
    }
    if (clamped) *clamped = false;
    if (v < static_cast<long double>(DBL_MIN)) {
      if (clamped) *clamped = true;
      return DBL_MIN;
    }
    return static_cast<double>(std::min(v, 1.0L - 1e-15L));
  }
};

struct CharacterizationReport {
  HittingTarget::Kind kind;
  TimeMode mode;
  std::vector<double> per_state;        // rho-type value per starting state
  std::vector<int> argmax_set;          // index into family.sets; -1 if none binds
  double worst = 0.0;
  int worst_state = -1;
  bool complete_family = true;          // false downgrades to a lower-bound estimate
  bool target_clamped = false;
  double c_ent_used = 0.0;
};

namespace detail {

// Shared per-set machinery: the restricted negative generator is
// decomposed once per set and queried for every start inside it.
struct SetCurves {
  RestrictedGenerator gen;
  double mass = 0.0;

  SurvivalCurve from_state(int x) const {
    const int m = static_cast<int>(gen.set.size());
    auto it = std::lower_bound(gen.set.begin(), gen.set.end(), x);
    if (it == gen.set.end() || *it != x) return SurvivalCurve::zero();
    int pos = static_cast<int>(it - gen.set.begin());
    Vector coeff(m);
    for (int i = 0; i < m; ++i) coeff[i] = gen.basis(pos, i) * gen.ones_coeff[i];
    return SurvivalCurve::continuous(gen.gamma, std::move(coeff));
  }

  SurvivalCurve from_pi_a() const {
    const int m = static_cast<int>(gen.set.size());
    Vector coeff(m);
    for (int i = 0; i < m; ++i) coeff[i] = gen.ones_coeff[i] * gen.ones_coeff[i] / mass;
    return SurvivalCurve::continuous(gen.gamma, std::move(coeff));
  }
};

inline SetCurves make_set_curves(const ChainModel& chain, const std::vector<int>& set) {
  SetCurves sc;
  sc.gen = restricted_generator(chain, set);
  for (int s : sc.gen.set) sc.mass += chain.pi[s];
  return sc;
}

inline double discrete_threshold_from_state(const ChainModel& chain, const std::vector<int>& set,
                                            int x, double target) {
  SurvivalCurve curve = survival_curve(chain, Start::at(x), set, TimeMode::Discrete);
  return curve.threshold(target);
}

}  // namespace detail

// rho-type value per state: for each x, max over family sets containing
// x of the time at which the escape probability drops to g(pi(A)).
inline CharacterizationReport rho_family(const ChainModel& chain, const HittingTarget& target,
                                         const ConnectedSetFamily& family, TimeMode mode) {
  if (!chain.reversible) throw NotReversible("hitting characterizations assume reversibility");
  const int n = chain.n();
  CharacterizationReport report;
  report.kind = target.kind;
  report.mode = mode;
  report.per_state.assign(n, 0.0);
  report.argmax_set.assign(n, -1);
  report.complete_family = family.complete;
  report.c_ent_used = target.kind == HittingTarget::Kind::RhoEnt ? target.c_ent : 0.0;

  if (target.kind == HittingTarget::Kind::THt) {
    // start = pi_A with target pi(A)^{1/4}; a single worst-case value
    std::vector<double> per_set(family.sets.size(), 0.0);
    std::vector<char> clamped_flags(family.sets.size(), 0);
    parallel_for(family.sets.size(), [&](std::size_t a) {
      auto sc = detail::make_set_curves(chain, family.sets[a]);
      bool clamped = false;
      double g = target.g(sc.mass, &clamped);
      clamped_flags[a] = clamped;
      if (mode == TimeMode::Discrete) {
        SurvivalCurve curve =
            survival_curve(chain, Start::pi_a(), family.sets[a], TimeMode::Discrete);
        per_set[a] = curve.threshold(g);
      } else {
        per_set[a] = sc.from_pi_a().threshold(g);
      }
    });
    for (std::size_t a = 0; a < per_set.size(); ++a) {
      if (clamped_flags[a]) report.target_clamped = true;
      if (per_set[a] > report.worst) {
        report.worst = per_set[a];
        report.worst_state = -1;
      }
    }
    return report;
  }

  std::vector<std::vector<std::pair<double, int>>> partial(family.sets.size());
  std::vector<char> clamped_flags(family.sets.size(), 0);
  parallel_for(family.sets.size(), [&](std::size_t a) {
    const auto& set = family.sets[a];
    bool clamped = false;
    double mass = 0.0;
    for (int s : set) mass += chain.pi[s];
    double g = target.g(mass, &clamped);
    clamped_flags[a] = clamped;
    auto& rows = partial[a];
    if (mode == TimeMode::Continuous) {
      auto sc = detail::make_set_curves(chain, set);
      for (int x : set) rows.push_back({sc.from_state(x).threshold(g), x});
    } else {
      for (int x : set) rows.push_back({detail::discrete_threshold_from_state(chain, set, x, g), x});
    }
  });
  for (std::size_t a = 0; a < partial.size(); ++a) {
    if (clamped_flags[a]) report.target_clamped = true;
    for (auto [value, x] : partial[a])
      if (value > report.per_state[x]) {
        report.per_state[x] = value;
        report.argmax_set[x] = static_cast<int>(a);
      }
  }
  for (int x = 0; x < n; ++x)
    if (report.per_state[x] > report.worst) {
      report.worst = report.per_state[x];
      report.worst_state = x;
    }
  return report;
}

// ---------------------------------------------------------------------------
// kappa = max_A |log pi(A)| / lambda(A) and its discrete analog
// kappa_discrete = max_A log_{1/beta(A)} (1/pi(A)), beta(A) = 1 - lambda(A).

struct KappaResult {
  double kappa = 0.0;
  double alpha = std::numeric_limits<double>::infinity();  // 1/kappa
  int argmin_set = -1;                                     // index into family.sets
  std::vector<double> alpha_per_set;
  double lambda_min_over_family = std::numeric_limits<double>::infinity();
  double lambda_max_over_family = 0.0;
  bool complete_family = true;
};

inline KappaResult kappa(const ChainModel& chain, const ConnectedSetFamily& family,
                         TimeMode mode = TimeMode::Continuous) {
  KappaResult out;
  out.complete_family = family.complete;
  out.alpha_per_set.assign(family.sets.size(), 0.0);
  Matrix Q = detail::additive_symmetrization(chain);
  std::vector<double> kappa_per_set(family.sets.size(), 0.0);
  std::vector<double> lambda_per_set(family.sets.size(), 0.0);
  parallel_for(family.sets.size(), [&](std::size_t a) {
    const auto& set = family.sets[a];
    if (static_cast<int>(set.size()) >= chain.n()) return;  // full set carries no gap
    double lambda = restricted_gap(Q, chain.pi, set);
    lambda_per_set[a] = lambda;
    double mass = 0.0;
    for (int s : set) mass += chain.pi[s];
    double log_mass = std::abs(std::log(mass));
    if (mode == TimeMode::Continuous) {
      out.alpha_per_set[a] = lambda / log_mass;
      kappa_per_set[a] = log_mass / lambda;
    } else {
      double beta = 1.0 - lambda;
      if (beta <= 0.0) {
        kappa_per_set[a] = 0.0;
        out.alpha_per_set[a] = std::numeric_limits<double>::infinity();
      } else if (beta >= 1.0) {
        kappa_per_set[a] = std::numeric_limits<double>::infinity();
        out.alpha_per_set[a] = 0.0;
      } else {
        kappa_per_set[a] = log_mass / std::abs(std::log(beta));
        out.alpha_per_set[a] = 1.0 / kappa_per_set[a];
      }
    }
  });
  for (std::size_t a = 0; a < family.sets.size(); ++a) {
    if (static_cast<int>(family.sets[a].size()) >= chain.n()) continue;
    out.lambda_min_over_family = std::min(out.lambda_min_over_family, lambda_per_set[a]);
    out.lambda_max_over_family = std::max(out.lambda_max_over_family, lambda_per_set[a]);
    if (kappa_per_set[a] > out.kappa) {
      out.kappa = kappa_per_set[a];
      out.argmin_set = static_cast<int>(a);
    }
  }
  out.alpha = out.kappa > 0.0 ? 1.0 / out.kappa : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// hit(eps).  Two readings of the set family are implemented:
//   LiteralSmallSets  -- the hitting time of A itself, A in Con_{1/2};
//   ComplementLargeSets -- the hitting time of large sets, equivalently
//   the escape time from every B in Con_{1/2}.

enum class HitEpsSelector { LiteralSmallSets, ComplementLargeSets };

inline double hit_eps(const ChainModel& chain, const ConnectedSetFamily& family, double eps,
                      HitEpsSelector selector = HitEpsSelector::LiteralSmallSets) {
  if (!(eps > 0.0 && eps < 1.0)) throw BadParams("eps must be in (0,1)");
  const int n = chain.n();
  std::vector<double> per_state(n, 0.0);
  std::vector<std::vector<std::pair<double, int>>> partial(family.sets.size());
  parallel_for(family.sets.size(), [&](std::size_t a) {
    const auto& set = family.sets[a];
    auto& rows = partial[a];
    if (selector == HitEpsSelector::ComplementLargeSets) {
      auto sc = detail::make_set_curves(chain, set);
      for (int x : set) rows.push_back({sc.from_state(x).threshold(eps), x});
    } else {
      // survival of T_A from x is survival inside the complement of A
      std::vector<char> in_set(n, 0);
      for (int s : set) in_set[s] = 1;
      std::vector<int> complement;
      for (int v = 0; v < n; ++v)
        if (!in_set[v]) complement.push_back(v);
      if (complement.empty()) return;
      auto sc = detail::make_set_curves(chain, complement);
      for (int x : complement) rows.push_back({sc.from_state(x).threshold(eps), x});
    }
  });
  for (const auto& rows : partial)
    for (auto [value, x] : rows) per_state[x] = std::max(per_state[x], value);
  return *std::max_element(per_state.begin(), per_state.end());
}

}  // namespace mixchar
