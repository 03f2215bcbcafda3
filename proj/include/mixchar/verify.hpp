#pragma once

// Inequality verification records and the analyze/verify entry points
// behind the CLI.  Each record carries the equation anchor it checks,
// both sides, the slack in force, and a pass / fail / report-only
// status; report-only records never fail.

#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "mixchar/io.hpp"
#include "mixchar/maximal.hpp"
#include "mixchar/suite.hpp"
#include "mixchar/trees.hpp"

namespace mixchar {

using Json = nlohmann::ordered_json;

struct VerificationRecord {
  std::string id;
  std::string anchor;
  std::string chain_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  std::string slack_kind = "absolute";  // or "relative"
  std::string status = "pass";          // pass | fail | report-only
  std::string note;
};

struct VerifyConfig {
  double slack = 1e-6;
  std::uint64_t seed = kDefaultSeed;
  std::size_t max_subsets = 1000000;
  int random_checks = 100;
  bool timings = false;
};

namespace detail {

inline double round_sig(double v, int digits = 12) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

inline Json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return round_sig(v);
}

}  // namespace detail

class RecordSink {
 public:
  RecordSink(std::string chain_id, double default_slack)
      : chain_id_(std::move(chain_id)), slack_(default_slack) {}

  void check(const std::string& id, const std::string& anchor, double lhs, double rhs,
             double slack = -1.0, const std::string& kind = "absolute") {
    VerificationRecord rec;
    rec.id = id;
    rec.anchor = anchor;
    rec.chain_id = chain_id_;
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.slack = slack < 0.0 ? slack_ : slack;
    rec.slack_kind = kind;
    double allowance = kind == "relative" ? rec.slack * std::abs(rhs) : rec.slack;
    rec.status = lhs <= rhs + allowance ? "pass" : "fail";
    records_.push_back(std::move(rec));
  }

  void report(const std::string& id, const std::string& anchor, double lhs, double rhs,
              const std::string& note = "") {
    VerificationRecord rec;
    rec.id = id;
    rec.anchor = anchor;
    rec.chain_id = chain_id_;
    rec.lhs = lhs;
    rec.rhs = rhs;
    rec.slack = 0.0;
    rec.status = "report-only";
    rec.note = note;
    records_.push_back(std::move(rec));
  }

  void diagnostic(const std::string& id, const std::string& anchor, const std::string& note) {
    VerificationRecord rec;
    rec.id = id;
    rec.anchor = anchor;
    rec.chain_id = chain_id_;
    rec.lhs = std::numeric_limits<double>::quiet_NaN();
    rec.rhs = std::numeric_limits<double>::quiet_NaN();
    rec.status = "report-only";
    rec.note = note;
    records_.push_back(std::move(rec));
  }

  std::vector<VerificationRecord> take() {
    std::stable_sort(records_.begin(), records_.end(),
                     [](const VerificationRecord& a, const VerificationRecord& b) {
                       return a.id < b.id;
                     });
    return std::move(records_);
  }

 private:
  std::string chain_id_;
  double slack_;
  std::vector<VerificationRecord> records_;
};

// ---------------------------------------------------------------------------
// Cached per-chain analysis shared by the verification suites

struct ChainAnalysis {
  ChainModel chain;
  std::string chain_id;
  ConnectedSetFamily family;
  SpectralDecomposition dec;
  RelaxationTimes relax;
  CharacterizationReport rho, rho_bar, rho_ent, rho_bar_ent;
  KappaResult kap;
  double t_ht = 0.0;
  LSResult ls;
  std::vector<double> tau2_x, tau_ent_x;
  double tau1 = 0.0, tau2 = 0.0, tau_inf = 0.0, tau_ent = 0.0, tau2_inv_e = 0.0;
  EntropyConstants ents{};
};

namespace detail {

inline std::vector<double> per_state_mixing(const ChainModel& chain, Metric metric, double eps) {
  DistanceProfile profile(chain);
  std::vector<double> out(chain.n());
  parallel_for(chain.n(), [&](std::size_t x) {
    out[x] = continuous_mixing_from(profile, static_cast<int>(x), metric, eps);
  });
  return out;
}

}  // namespace detail

inline ChainAnalysis build_analysis(const ChainModel& chain, const std::string& chain_id,
                                    const VerifyConfig& cfg = {}) {
  if (!chain.reversible) throw NotReversible("the verification suites assume reversibility");
  if (!chain.unit_rate()) throw BadMode("the verification suites assume a unit-rate chain");
  ChainAnalysis a;
  a.chain = chain;
  a.chain_id = chain_id;
  a.family = enumerate_connected(chain, 0.5, cfg.max_subsets);
  a.dec = decompose(chain);
  a.relax = relaxation_times(a.dec);
  a.ents = derive_entropy_constants();
  a.rho = rho_family(chain, HittingTarget::rho(), a.family, TimeMode::Continuous);
  a.rho_bar = rho_family(chain, HittingTarget::rho_bar(), a.family, TimeMode::Continuous);
  a.rho_ent = rho_family(chain, HittingTarget::rho_ent(), a.family, TimeMode::Continuous);
  a.rho_bar_ent = rho_family(chain, HittingTarget::rho_bar_ent(), a.family, TimeMode::Continuous);
  a.kap = kappa(chain, a.family, TimeMode::Continuous);
  a.t_ht = rho_family(chain, HittingTarget::t_ht(), a.family, TimeMode::Continuous).worst;
  LSConfig ls_cfg;
  ls_cfg.seed = cfg.seed;
  a.ls = c_ls(chain, a.family, ls_cfg);
  a.tau2_x = detail::per_state_mixing(chain, Metric::L2, 0.5);
  a.tau_ent_x = detail::per_state_mixing(chain, Metric::Entropy, 0.5);
  a.tau2 = *std::max_element(a.tau2_x.begin(), a.tau2_x.end());
  a.tau_ent = *std::max_element(a.tau_ent_x.begin(), a.tau_ent_x.end());
  MixingQuery q1{Metric::L1, KernelMode::Continuous, 0.5, -1};
  a.tau1 = mixing_time(chain, q1);
  MixingQuery qi{Metric::Linf, KernelMode::Continuous, 0.5, -1};
  a.tau_inf = mixing_time(chain, qi);
  MixingQuery qe{Metric::L2, KernelMode::Continuous, std::exp(-1.0), -1};
  a.tau2_inv_e = mixing_time(chain, qe);
  return a;
}

// ---------------------------------------------------------------------------
// Core suite: the explicit-constant sandwich plus the functional checks

namespace detail {

inline double max_diff(const std::vector<double>& lhs, const std::vector<double>& rhs) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lhs.size(); ++i) worst = std::max(worst, lhs[i] - rhs[i]);
  return worst;
}

inline Vector random_distribution(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector mu(n);
  for (int x = 0; x < n; ++x) mu[x] = -std::log(1.0 - unif(rng));
  return mu / mu.sum();
}

inline Vector random_function(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector f(n);
  for (int x = 0; x < n; ++x) f[x] = gauss(rng);
  return f;
}

}  // namespace detail

inline void core_sandwich_records(const ChainAnalysis& a, RecordSink& sink) {
  const double t_rel = a.relax.t_rel;
  const double ln2 = std::log(2.0);
  sink.check("main3-lower", "eq:main3", a.rho.worst, a.tau2);
  sink.check("main3-upper", "eq:main3", a.tau2, (9.0 + 15.0 / ln2) * a.rho.worst);
  sink.check("main1-mid", "eq:main1", detail::max_diff(a.tau2_x, a.rho_bar.per_state),
             5.0 * t_rel);
  sink.check("main1-upper", "eq:main1", detail::max_diff(a.tau2_x, a.rho.per_state),
             8.0 * a.kap.kappa + (5.0 + 6.0 * ln2) * t_rel);
  sink.check("main31-lower", "eq:main31", detail::max_diff(a.rho_ent.per_state, a.tau_ent_x), 0.0);
  sink.check("main31-upper", "eq:main31", detail::max_diff(a.tau_ent_x, a.rho_bar_ent.per_state),
             14.0 * t_rel);
  sink.check("kappa-tell-lower", "eq:kappa=tell", a.kap.kappa, a.ls.t_ls);
  sink.check("kappa-tell-upper", "eq:kappa=tell", a.ls.t_ls,
             2.0 * (a.kap.kappa + t_rel * (1.0 + std::log(49.0))));
  sink.check("kappa-tell-17", "eq:kappa=tell", a.ls.t_ls, 17.0 * a.kap.kappa);
  sink.check("com1", "eq:com1", a.kap.kappa, 3.0 * a.rho.worst);
  sink.check("rhovsbarrho", "eq:rhovsbarrho", detail::max_diff(a.rho_bar.per_state, a.rho.per_state),
             8.0 * a.kap.kappa + 2.0 * t_rel * std::log(8.0));
  sink.check("rhobarrho-lower", "eq:rhobarrho", a.rho.worst, a.rho_bar.worst);
  sink.check("rhobarrho-upper", "eq:rhobarrho", a.rho_bar.worst, 9.0 * a.rho.worst);
  sink.check("laAla-kappa", "eq:laAla", t_rel * ln2, a.kap.kappa);
  double lambda = a.dec.gap();
  sink.check("laAla-gap-lower", "eq:laAla", 0.5 * lambda, a.kap.lambda_min_over_family);
  sink.check("laAla-gap-upper", "eq:laAla", a.kap.lambda_min_over_family, lambda);
  double pi_star = a.chain.min_pi();
  sink.check("classic-lower", "eq:classic", 0.5 * a.ls.t_ls, a.tau2_inv_e);
  sink.check("classic-upper", "eq:classic", a.tau2_inv_e,
             a.ls.t_ls * (1.0 + 0.25 * std::log(std::log(1.0 / pi_star))));
  // hypercontractive checks with q = 4, r = kappa / 2, M = 7
  NormEstimate norm = two_q_norm(a.chain, 0.5 * a.kap.kappa, 4.0, a.ls.seed);
  sink.check("hyper-norm-7", "sec:5.3-norm-le-7", norm.value, 7.0);
  sink.check("hyper-upper-tls", "eq:hyper", a.ls.t_ls,
             hyper_upper(a.chain, 4.0, 0.5 * a.kap.kappa, 7.0));
}

inline void functional_records(const ChainAnalysis& a, RecordSink& sink, const VerifyConfig& cfg) {
  const ChainModel& chain = a.chain;
  const int n = chain.n();
  std::mt19937_64 rng(split_seed(cfg.seed, 17));
  DistanceProfile profile(chain);

  // Starr maximal inequalities, continuous and discrete
  double worst_cont = -1e300, worst_disc = -1e300;
  for (int trial = 0; trial < cfg.random_checks; ++trial) {
    Vector f = detail::random_function(rng, n);
    for (double p : {2.0, 3.0}) {
      double pstar = p / (p - 1.0);
      auto cont = maximal_function(chain, a.dec, f, MaximalMode::Continuous, 256);
      worst_cont = std::max(worst_cont, lp_norm_function(cont.f_star, chain.pi, p) -
                                            pstar * lp_norm_function(f, chain.pi, p));
      auto disc = maximal_function(chain, a.dec, f, MaximalMode::Discrete);
      double lhs = std::pow(lp_norm_function(disc.f_star, chain.pi, p), p);
      double rhs = 2.0 * std::pow(pstar, p) * std::pow(lp_norm_function(f, chain.pi, p), p);
      worst_disc = std::max(worst_disc, lhs - rhs);
    }
  }
  sink.check("starr-continuous", "eq:ergodic1", worst_cont, 0.0, 1e-8);
  sink.check("starr-discrete", "eq:Starrdisc", worst_disc, 0.0, 1e-8);

  // surprise bound over the enumerated family (strided when huge)
  {
    ConnectedSetFamily fam = a.family;
    if (fam.sets.size() > 4000) {
      std::vector<std::vector<int>> sampled;
      std::size_t stride = fam.sets.size() / 4000 + 1;
      for (std::size_t i = 0; i < fam.sets.size(); i += stride) sampled.push_back(fam.sets[i]);
      fam.sets = std::move(sampled);
    }
    auto records = surprise_bound_check(chain, fam);
    double worst = -1e300, worst_reverse = -1e300;
    for (const auto& rec : records) {
      worst = std::max(worst, std::max(rec.continuous_l1, 0.5 * rec.discrete_l1) - rec.bound);
      double reverse = (1.0 - std::exp(-1.0)) * rec.continuous_l1 - 1.0 -
                       std::abs(std::log(rec.mass));
      worst_reverse = std::max(worst_reverse, reverse);
    }
    sink.check("surprise-bound", "lem:surprise", worst, 0.0, 1e-8);
    sink.check("surprise-reverse", "sec:3.3-starr-reverse", worst_reverse, 0.0, 1e-8);
  }

  // relative entropy comparisons for random distributions
  double worst_su = -1e300, worst_pinsker = -1e300;
  for (int trial = 0; trial < cfg.random_checks; ++trial) {
    Vector mu = detail::random_distribution(rng, n);
    double d = rel_entropy(mu, chain.pi);
    double l2 = lp_measure_distance(mu, chain.pi, 2.0);
    double l1 = lp_measure_distance(mu, chain.pi, 1.0);
    worst_su = std::max(worst_su, d - std::log1p(l2 * l2));
    worst_pinsker = std::max(worst_pinsker, l1 * l1 - 2.0 * d);
  }
  sink.check("entropy-vs-l2", "eq:su", worst_su, 0.0, 1e-10);
  sink.check("pinsker", "eq:entL1", worst_pinsker, 0.0, 1e-10);

  // quasi-stationary domination on a 20-point grid, plus the discrete
  // power domination, over (a sample of) the family
  {
    double worst_pi_dom = -1e300, worst_pow_dom = -1e300, worst_identity = -1e300;
    std::size_t stride = a.family.sets.size() > 2000 ? a.family.sets.size() / 2000 + 1 : 1;
    for (std::size_t i = 0; i < a.family.sets.size(); i += stride) {
      const auto& set = a.family.sets[i];
      if (static_cast<int>(set.size()) >= n) continue;
      RestrictedSpectrum rs = restricted(chain, set);
      SurvivalCurve from_pi = survival_curve(chain, Start::pi_a(), set, TimeMode::Continuous);
      SurvivalCurve from_mu = survival_curve(chain, Start::quasi_stationary(), set,
                                             TimeMode::Continuous);
      double horizon = 3.0 / rs.lambda;
      for (int g = 0; g <= 20; ++g) {
        double t = horizon * g / 20.0;
        double exact = std::exp(-rs.lambda * t);
        worst_pi_dom = std::max(worst_pi_dom, from_pi.value(t) - exact);
        worst_identity = std::max(worst_identity, std::abs(from_mu.value(t) - exact));
      }
      SurvivalCurve disc_pi = survival_curve(chain, Start::pi_a(), set, TimeMode::Discrete);
      for (long k = 0; k <= 50; ++k)
        worst_pow_dom = std::max(
            worst_pow_dom, disc_pi.at_step(k) - std::pow(1.0 - rs.lambda, static_cast<double>(k)));
    }
    sink.check("quasi-domination", "eq:stationary<quasi", worst_pi_dom, 0.0, 1e-10);
    sink.check("quasi-exponential", "eq:stationary<quasi", worst_identity, 0.0, 1e-10);
    sink.check("quasi-domination-discrete", "eq:stationary<quasi", worst_pow_dom, 0.0, 1e-12);
  }

  // d_inf(2t) = d_2(t)^2 on a grid (relative slack)
  {
    double t_rel = a.relax.t_rel;
    double worst = 0.0;
    for (double t : {0.0, 0.1 * t_rel, 0.5 * t_rel, t_rel, 2.0 * t_rel, 4.0 * t_rel}) {
      double d2 = profile.worst_case(t, Metric::L2, KernelMode::Continuous);
      double dinf = profile.worst_case(2.0 * t, Metric::Linf, KernelMode::Continuous);
      worst = std::max(worst, std::abs(dinf - d2 * d2) / std::max(1e-300, std::abs(d2 * d2)));
    }
    sink.check("l2-linf-identity", "eq:generalLp", worst, 0.0, 1e-9, "relative");
  }

  // Poincare contraction on a (t, s) grid
  {
    double t_rel = a.relax.t_rel;
    double worst = -1e300;
    for (double t : {0.0, 0.3 * t_rel, t_rel})
      for (double s : {0.1 * t_rel, t_rel, 3.0 * t_rel})
        for (int x = 0; x < n; ++x) {
          double lhs = profile.value(x, t + s, Metric::L2, KernelMode::Continuous);
          double rhs = std::exp(-s / t_rel) * profile.value(x, t, Metric::L2, KernelMode::Continuous);
          worst = std::max(worst, lhs - rhs);
        }
    sink.check("poincare", "eq:L2contraction", worst, 0.0, 1e-10);
  }

  // level-set bound for the L2 distance
  {
    double worst = -1e300;
    for (double t : {0.1, 0.5, 1.0, 2.0})
      for (double ell : {1.0, 2.0, 5.0})
        for (int x = 0; x < n; ++x) {
          Vector h = heat_density(profile.continuous(), x, t);
          double d2 = profile.value(x, t, Metric::L2, KernelMode::Continuous);
          double integral = 0.0;
          for (int y = 0; y < n; ++y) {
            double v = h[y] - 1.0;
            if (v > ell) integral += chain.pi[y] * (v * v - ell * ell);
          }
          worst = std::max(worst, d2 * d2 - (ell * ell + integral));
        }
    sink.check("level-set-l2", "lem:L2calculation", worst, 0.0, 1e-8);
  }

  // submultiplicativity of escape probabilities
  {
    double worst = -1e300;
    std::size_t stride = a.family.sets.size() > 500 ? a.family.sets.size() / 500 + 1 : 1;
    for (std::size_t i = 0; i < a.family.sets.size(); i += stride) {
      const auto& set = a.family.sets[i];
      auto sc = detail::make_set_curves(chain, set);
      double t = 0.7 / std::max(sc.gen.gamma[0], 1e-9);
      double max_single = 0.0;
      std::vector<SurvivalCurve> curves;
      for (int x : set) curves.push_back(sc.from_state(x));
      for (auto& c : curves) max_single = std::max(max_single, c.value(t));
      for (int m : {2, 3}) {
        double bound = std::pow(max_single, m);
        for (auto& c : curves) worst = std::max(worst, c.value(m * t) - bound);
      }
    }
    sink.check("submultiplicative", "eq:rhobarrho-proof", worst, 0.0, 1e-10);
  }

  // discrete vs continuous hitting comparison
  {
    double worst = -1e300;
    std::size_t stride = a.family.sets.size() > 500 ? a.family.sets.size() / 500 + 1 : 1;
    for (std::size_t i = 0; i < a.family.sets.size(); i += stride) {
      const auto& set = a.family.sets[i];
      for (int x : set) {
        SurvivalCurve cont = survival_curve(chain, Start::at(x), set, TimeMode::Continuous);
        SurvivalCurve disc = survival_curve(chain, Start::at(x), set, TimeMode::Discrete);
        for (long t = 1; t <= 8; ++t)
          worst = std::max(worst, 0.25 * disc.at_step(4 * t) - cont.value(static_cast<double>(t)));
      }
    }
    sink.check("disc-vs-cont-quarter", "lem:rhodiscrhocts-proof", worst, 0.0, 1e-10);
  }

  // LS objective: scale invariance and gradient vs finite differences
  {
    detail::LSObjective obj;
    obj.K = Matrix::Identity(n, n) - detail::additive_symmetrization(chain);
    obj.pi = chain.pi;
    double worst_scale = 0.0, worst_grad = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Vector f = detail::random_function(rng, n).cwiseAbs() + Vector::Constant(n, 0.05);
      double base = obj.value(f);
      for (double c : {0.5, 2.0, 7.5})
        worst_scale = std::max(worst_scale, std::abs(obj.value(c * f) - base));
      Vector grad = obj.gradient(f);
      const double h = 1e-6;
      for (int x = 0; x < n; ++x) {
        Vector up = f, down = f;
        up[x] += h;
        down[x] -= h;
        double fd = (obj.value(up) - obj.value(down)) / (2.0 * h * chain.pi[x]);
        // gradient is taken in L2(pi); euclidean partials carry pi(x)
        worst_grad = std::max(worst_grad, std::abs(fd - grad[x]) /
                                              std::max(1.0, std::abs(grad[x])));
      }
    }
    sink.check("ls-scale-invariance", "eq:deftl", worst_scale, 0.0, 1e-10);
    sink.check("ls-gradient", "eq:deftl", worst_grad, 0.0, 1e-5);
  }

  // L1 lower bound via the relaxation time
  sink.check("lower-l1-rel", "eq:lowerL1rel", a.relax.t_rel * std::log(2.0), a.tau1, 1e-9);

  // metric ordering d_1 <= d_2 <= d_inf on a grid
  {
    double t_rel = a.relax.t_rel;
    double worst = -1e300;
    for (double t : {0.0, 0.5 * t_rel, t_rel, 3.0 * t_rel})
      for (int x = 0; x < n; ++x) {
        double d1 = profile.value(x, t, Metric::L1, KernelMode::Continuous);
        double d2 = profile.value(x, t, Metric::L2, KernelMode::Continuous);
        double di = profile.value(x, t, Metric::Linf, KernelMode::Continuous);
        worst = std::max(worst, std::max(d1 - d2, d2 - di));
      }
    sink.check("lp-ordering", "eq:L2Linfty", worst, 0.0, 1e-10);
  }
}

inline void exploratory_records(const ChainAnalysis& a, RecordSink& sink,
                                const VerifyConfig& cfg) {
  // hit(eps), both readings
  double literal = hit_eps(a.chain, a.family, 0.25, HitEpsSelector::LiteralSmallSets);
  double complement = hit_eps(a.chain, a.family, 0.25, HitEpsSelector::ComplementLargeSets);
  sink.report("hit-eps-literal", "eq:hit", literal, 0.0, "eps=0.25, sets hit directly");
  sink.report("hit-eps-complement", "eq:hit", complement, 0.0, "eps=0.25, escape reading");

  // c_MLS exploration against the entropy quantities
  double mls = c_mls(a.chain, cfg.seed);
  sink.report("cmls-vs-rho-ent", "sec:7-questions", 1.0 / mls, a.rho_ent.worst,
              "1/c_MLS against rho_ent");
  sink.report("cmls-vs-tau-ent", "sec:7-questions", 1.0 / mls, a.tau_ent,
              "1/c_MLS against tau_ent");
  sink.report("tht-vs-tls", "open:1", a.t_ht, a.ls.t_ls, "t_ht against t_LS");

  // generator row-rescaling robustness ratios
  for (double M : {1.0, 2.0, 4.0}) {
    double worst_ratio = 1.0;
    std::mt19937_64 rng(split_seed(cfg.seed, 23 + static_cast<std::uint64_t>(M)));
    std::uniform_real_distribution<double> logu(-std::log(M), std::log(M));
    for (int trial = 0; trial < 5; ++trial) {
      Vector r(a.chain.n());
      for (int x = 0; x < a.chain.n(); ++x) r[x] = std::exp(logu(rng));
      ChainModel tilted = rescale_rows(a.chain, r);
      MixingQuery q{Metric::L2, KernelMode::Continuous, 0.5, -1};
      double tau2_tilted = mixing_time(tilted, q);
      worst_ratio = std::max(worst_ratio,
                             std::max(a.tau2 / tau2_tilted, tau2_tilted / a.tau2));
      if (M == 1.0) break;  // identity perturbation
    }
    sink.report("laziness-robustness-M" + std::to_string(static_cast<int>(M)), "eq:laziness",
                worst_ratio, M * std::max(1.0, std::log(M)), "max tau2 ratio over trials");
  }

  // discrete-vs-continuous rho ratio (abstract constant)
  auto rho_disc = rho_family(a.chain, HittingTarget::rho(), a.family, TimeMode::Discrete);
  sink.report("rho-discrete-ratio", "lem:rhodiscrhocts", rho_disc.worst,
              std::max(a.rho.worst, 1e-12), "rho_discrete against rho");
}

inline std::vector<VerificationRecord> verify_core(const ChainAnalysis& a,
                                                   const VerifyConfig& cfg) {
  RecordSink sink(a.chain_id, cfg.slack);
  core_sandwich_records(a, sink);
  functional_records(a, sink, cfg);
  exploratory_records(a, sink, cfg);
  return sink.take();
}

// ---------------------------------------------------------------------------
// Discrete / averaged suite

inline std::vector<VerificationRecord> verify_discrete(const ChainAnalysis& a,
                                                       const VerifyConfig& cfg) {
  RecordSink sink(a.chain_id, cfg.slack);
  const ChainModel& chain = a.chain;
  const int n = chain.n();
  auto rho_disc = rho_family(chain, HittingTarget::rho(), a.family, TimeMode::Discrete);
  auto rho_ent_disc = rho_family(chain, HittingTarget::rho_ent(), a.family, TimeMode::Discrete);
  auto kap_disc = kappa(chain, a.family, TimeMode::Discrete);
  double t_rel_abs = a.relax.t_rel_absolute;

  auto integer_mix = [&](Metric metric, KernelMode mode) -> std::optional<double> {
    MixingQuery q;
    q.metric = metric;
    q.mode = mode;
    q.epsilon = 0.5;
    try {
      return mixing_time(chain, q);
    } catch (const NotMixing&) {
      return std::nullopt;
    }
  };

  auto tau2_ave = integer_mix(Metric::L2, KernelMode::Averaged);
  auto tau_ent_ave = integer_mix(Metric::Entropy, KernelMode::Averaged);
  auto tau2_disc = integer_mix(Metric::L2, KernelMode::Discrete);
  auto tau_ent_disc = integer_mix(Metric::Entropy, KernelMode::Discrete);

  if (tau2_ave) sink.check("aveL2-lower", "eq:aveL2", rho_disc.worst, *tau2_ave);
  else sink.diagnostic("aveL2-lower", "eq:aveL2", "averaged chain did not mix within the cap");
  if (tau_ent_ave) sink.check("avent-lower", "eq:avent", rho_ent_disc.worst, *tau_ent_ave);
  else sink.diagnostic("avent-lower", "eq:avent", "averaged chain did not mix within the cap");
  if (tau2_disc) {
    double lower = std::max(rho_disc.worst,
                            std::isinf(t_rel_abs) ? 0.0 : t_rel_abs * std::log(2.0));
    sink.check("discL2-lower", "eq:discL2", lower, *tau2_disc);
  } else {
    sink.diagnostic("discL2-lower", "eq:discL2",
                    "NotMixing: discrete chain is periodic (t_rel_absolute = inf)");
  }
  if (tau_ent_disc) sink.check("discent-lower", "eq:discent", rho_ent_disc.worst, *tau_ent_disc);
  else sink.diagnostic("discent-lower", "eq:discent", "NotMixing: discrete entropy never crossed");

  sink.check("com1-discrete", "eq:com1", kap_disc.kappa, 3.0 * rho_disc.worst);
  sink.check("kappa-disc-le-kappa", "sec:2.3-kappa-discrete", kap_disc.kappa, a.kap.kappa);

  // Poincare bounds for powers and averaged kernels, random mu
  std::mt19937_64 rng(split_seed(cfg.seed, 29));
  double worst_disc = -1e300, worst_ave = -1e300, worst_avcts = -1e300;
  double t_rel = a.relax.t_rel;
  for (int trial = 0; trial < 40; ++trial) {
    Vector mu = detail::random_distribution(rng, n);
    double base = lp_measure_distance(mu, chain.pi, 2.0);
    Vector state = mu;
    for (long k = 1; k <= 12; ++k) {
      state = chain.P.transpose() * state;
      double dist = lp_measure_distance(state, chain.pi, 2.0);
      double decay = std::isinf(t_rel_abs) ? 1.0 : std::exp(-static_cast<double>(k) / t_rel_abs);
      worst_disc = std::max(worst_disc, dist - base * decay);
    }
  }
  sink.check("discpoincare", "eq:discpoincare", worst_disc, 0.0, 1e-8);

  for (int trial = 0; trial < 40; ++trial) {
    Vector mu = detail::random_distribution(rng, n);
    double base = lp_measure_distance(mu, chain.pi, 2.0);
    Vector prev = mu, cur = mu;
    for (long k = 1; k <= 12; ++k) {
      prev = cur;
      cur = chain.P.transpose() * cur;
      Vector ave = 0.5 * (cur + prev);
      double dist = lp_measure_distance(ave, chain.pi, 2.0);
      double bound = std::max(std::exp(-static_cast<double>(k) / t_rel),
                              1.0 / (2.0 * std::exp(1.0) * static_cast<double>(k)));
      worst_ave = std::max(worst_ave, dist - base * bound);
    }
  }
  sink.check("avepoincare", "eq:avepoincare", worst_ave, 0.0, 1e-8);

  // averaged-vs-continuous refinement for k in {2..6}, k' in {1..6}
  {
    DistanceProfile profile(chain);
    double lambda = a.dec.gap();
    for (int x = 0; x < n; ++x)
      for (long k = 2; k <= 6; ++k)
        for (long kp = 1; kp <= 6; ++kp) {
          double lhs = profile.value(x, static_cast<double>(k + kp), Metric::L2,
                                     KernelMode::Averaged);
          double cont = profile.value(x, static_cast<double>(k - 2), Metric::L2,
                                      KernelMode::Continuous);
          double c2 = cont * cont;
          double term1 = std::pow(1.0 / (2.0 * std::exp(1.0) * kp), 2.0) * (c2 + 1.0);
          double term2 = std::pow(1.0 - lambda, 2.0 * kp + 2.0) * c2;
          worst_avcts = std::max(worst_avcts, lhs * lhs - (term1 + term2));
        }
    sink.check("avcts", "prop:avcts", worst_avcts, 0.0, 1e-8);
  }

  // report-only upper ratios (abstract constants)
  if (tau2_ave)
    sink.report("aveL2-upper-ratio", "eq:aveL2", *tau2_ave,
                rho_disc.worst + std::max(kap_disc.kappa, 1e-12), "tau2_ave vs rho_disc + kappa_disc");
  if (tau2_disc && !std::isinf(t_rel_abs))
    sink.report("discL2-upper-ratio", "eq:discL2", *tau2_disc,
                rho_disc.worst + kap_disc.kappa + t_rel_abs, "tau2_disc vs lower-order terms");
  return sink.take();
}

// ---------------------------------------------------------------------------
// Trees suite

inline std::vector<VerificationRecord> verify_trees(const ChainAnalysis& a,
                                                    const VerifyConfig& cfg,
                                                    std::vector<RobustnessRow>* robustness_rows) {
  RecordSink sink(a.chain_id, cfg.slack);
  const ChainModel& chain = a.chain;
  RootedTree tree = root_tree(chain);
  const int n = chain.n();
  double t_rel = a.relax.t_rel;

  sink.check("trees-lower", "eq:trees", std::max(a.tau1, a.ls.t_ls / 4.0), a.tau2, 1e-7);
  double denom = std::max(a.ls.t_ls, std::sqrt(a.ls.t_ls * a.tau1));
  sink.report("trees-upper-ratio", "eq:trees", a.tau2 - a.tau1, denom,
              "(tau2 - tau1) over max(t_LS, sqrt(t_LS tau1))");

  // Kac identity and the edge decomposition of hitting times
  {
    double worst_kac = 0.0, worst_mean = 0.0, worst_var = 0.0, worst_second = -1e300;
    for (int v = 0; v < n; ++v) {
      if (v == tree.root) continue;
      int z = tree.parent[v];
      double phi = kac_phi(chain, tree, v);
      double mean = expected_hitting(chain, v, {z}, TimeMode::Continuous, 1);
      worst_kac = std::max(worst_kac, std::abs(phi * mean - 1.0));
      double second = expected_hitting(chain, v, {z}, TimeMode::Continuous, 2);
      worst_second = std::max(worst_second, second - 4.0 * t_rel * mean);
    }
    for (int leaf : leaves_of(tree)) {
      std::vector<int> path = path_to_root(tree, leaf);
      double mean_sum = 0.0, var_sum = 0.0;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        double m1 = expected_hitting(chain, path[i], {path[i + 1]}, TimeMode::Continuous, 1);
        double m2 = expected_hitting(chain, path[i], {path[i + 1]}, TimeMode::Continuous, 2);
        mean_sum += m1;
        var_sum += m2 - m1 * m1;
      }
      double direct_mean = expected_hitting(chain, leaf, {tree.root}, TimeMode::Continuous, 1);
      double direct_m2 = expected_hitting(chain, leaf, {tree.root}, TimeMode::Continuous, 2);
      worst_mean = std::max(worst_mean, std::abs(direct_mean - mean_sum));
      worst_var = std::max(worst_var, std::abs(direct_m2 - direct_mean * direct_mean - var_sum));
    }
    sink.check("kac-identity", "eq:Kac", worst_kac, 0.0, 1e-9);
    sink.check("edge-decomposition-mean", "sec:6.2-independence", worst_mean, 0.0, 1e-8);
    sink.check("edge-decomposition-var", "sec:6.2-independence", worst_var, 0.0, 1e-8);
    sink.check("second-moment-rel", "lem:leafisworst-proof", worst_second, 0.0, 1e-8);
  }

  // leaf cuts: alpha_x >= alpha, the b_x profile, large deviations and
  // the escape bound through x_delta
  {
    double alpha = a.kap.alpha;
    double worst_alpha = -1e300;
    double worst_tdelta = -1e300, worst_ld = -1e300, worst_laplace = -1e300;
    double kappa_v = a.kap.kappa;
    std::vector<int> leaves = leaves_of(tree);
    for (int leaf : leaves) {
      BxProfile profile = b_x(chain, tree, leaf);
      double alpha_x = 0.0;
      for (double d : profile.deltas) {
        LeafCut cut = leaf_cut(chain, tree, leaf, d);
        if (!cut.component.empty()) alpha_x = std::max(alpha_x, cut.alpha);
      }
      if (alpha_x > 0.0) worst_alpha = std::max(worst_alpha, alpha - alpha_x);

      for (double d : {0.25, 0.11, 0.04}) {
        LeafCut cut = leaf_cut(chain, tree, leaf, d);
        if (cut.component.empty()) continue;
        SurvivalCurve curve =
            survival_curve(chain, Start::at(leaf), cut.component, TimeMode::Continuous);
        double mean = expected_hitting(chain, leaf, {cut.x_delta}, TimeMode::Continuous, 1);
        // LD2 on [0, 2E], LD3 beyond
        for (int g = 1; g <= 10; ++g) {
          double t = 2.0 * mean * g / 10.0;
          double bound = std::exp(-t * t * cut.lambda / (8.0 * mean));
          worst_ld = std::max(worst_ld, curve.value(mean + t) - bound);
        }
        for (double t : {2.0 * mean, 3.0 * mean, 5.0 * mean}) {
          double bound = std::exp(-cut.lambda * t / 4.0);
          worst_ld = std::max(worst_ld, curve.value(mean + t) - bound);
        }
        // Laplace transform bound along the cut component edges
        for (double beta : {cut.lambda / 4.0, cut.lambda / 2.0}) {
          for (int y : cut.component) {
            int z = tree.parent[y];
            if (z < 0) continue;
            SurvivalCurve edge_curve =
                survival_curve(chain, Start::at(y), subtree_of(tree, y), TimeMode::Continuous);
            double m1 = expected_hitting(chain, y, {z}, TimeMode::Continuous, 1);
            double bound = 1.0 + m1 * beta * (1.0 + 2.0 * beta / cut.lambda);
            worst_laplace = std::max(worst_laplace, edge_curve.mgf(beta) - bound);
          }
        }
        // escape bound through x_delta for family sets of mass <= delta:
        // P_x[T_{A^c} > b_x + 3 kappa + 10 t_rel] <= P_x[T_{x_delta} > b_x]
        //   + P_{x_delta}[T_{Abar} > 3 kappa + 10 t_rel] < delta^3 / 2
        double b_here = std::max(profile.sup, b_x_at(chain, tree, leaf, d));
        double tail_time = 3.0 * kappa_v + 10.0 * t_rel;
        double first_term = curve.value(b_here);
        auto fam = enumerate_connected(chain, d, 4000);
        std::size_t stride = fam.sets.size() > 60 ? fam.sets.size() / 60 + 1 : 1;
        for (std::size_t s = 0; s < fam.sets.size(); s += stride) {
          const auto& set_a = fam.sets[s];
          if (std::find(set_a.begin(), set_a.end(), leaf) == set_a.end()) continue;
          SurvivalCurve esc = survival_curve(chain, Start::at(leaf), set_a, TimeMode::Continuous);
          double lhs = esc.value(b_here + tail_time);
          // complement of Abar = D_delta plus A itself
          std::vector<char> keep(n, 0);
          for (int v : cut.component) keep[v] = 1;
          for (int v : set_a) keep[v] = 1;
          std::vector<int> not_abar;
          for (int v = 0; v < n; ++v)
            if (keep[v]) not_abar.push_back(v);
          double second_term =
              static_cast<int>(not_abar.size()) < n
                  ? survival_curve(chain, Start::at(cut.x_delta), not_abar, TimeMode::Continuous)
                        .value(tail_time)
                  : 1.0;
          worst_tdelta = std::max(worst_tdelta, lhs - (first_term + second_term));
          worst_tdelta = std::max(worst_tdelta, (first_term + second_term) - d * d * d / 2.0);
        }
      }
    }
    sink.check("alpha-x-dominates", "sec:6.2-alpha_x", worst_alpha, 0.0, 1e-9);
    sink.check("tdelta-escape", "prop:Tdelta", worst_tdelta, 0.0, 1e-9);
    sink.check("large-deviation", "eq:LD2", worst_ld, 0.0, 1e-8);
    sink.check("laplace-bound", "eq:Laplace", worst_laplace, 0.0, 1e-8);

    // report-only: b_x against tau1 + max(kappa, sqrt(kappa tau1))
    double worst_bx = 0.0;
    for (int leaf : leaves) worst_bx = std::max(worst_bx, b_x(chain, tree, leaf).sup);
    sink.report("ld1-bx-ratio", "eq:LD1", worst_bx,
                a.tau1 + std::max(kappa_v, std::sqrt(kappa_v * a.tau1)),
                "sup_x b_x vs tau1 + max(kappa, sqrt(kappa tau1))");
  }

  // weight-perturbation robustness (report-only; constants are abstract)
  auto rows = robustness_experiment(chain, a.chain_id, 2.0, 20, cfg.seed);
  double max_ratio = 1.0, max_inf = 1.0;
  for (const auto& row : rows) {
    max_ratio = std::max(max_ratio, row.ratio);
    max_inf = std::max(max_inf, row.tau_inf_ratio);
  }
  sink.report("trees2-robustness", "eq:trees2", max_inf, 2.0, "max tau_inf ratio, M=2, 20 trials");
  sink.report("trees2-robustness-l2", "eq:trees2", max_ratio, 2.0, "max tau2 ratio, M=2, 20 trials");
  if (robustness_rows)
    robustness_rows->insert(robustness_rows->end(), rows.begin(), rows.end());
  return sink.take();
}

// ---------------------------------------------------------------------------
// Suite dispatch and report assembly

inline bool is_tree_chain(const ChainModel& chain) {
  try {
    detail::tree_adjacency(chain);
    return true;
  } catch (const NotATree&) {
    return false;
  }
}

inline std::vector<VerificationRecord> run_suite(const ChainModel& chain,
                                                 const std::string& chain_id,
                                                 const std::string& suite, const VerifyConfig& cfg,
                                                 std::vector<RobustnessRow>* robustness_rows =
                                                     nullptr) {
  ChainAnalysis a = build_analysis(chain, chain_id, cfg);
  std::vector<VerificationRecord> records;
  auto append = [&](std::vector<VerificationRecord> part) {
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  };
  if (suite == "core" || suite == "all") append(verify_core(a, cfg));
  if (suite == "discrete" || suite == "all") append(verify_discrete(a, cfg));
  if ((suite == "trees" || suite == "all") && is_tree_chain(chain))
    append(verify_trees(a, cfg, robustness_rows));
  if (records.empty() && suite != "core" && suite != "discrete" && suite != "trees" &&
      suite != "all")
    throw BadParams("unknown suite: " + suite);
  return records;
}

inline Json records_to_json(const std::vector<VerificationRecord>& records) {
  Json arr = Json::array();
  for (const auto& rec : records) {
    Json row;
    row["id"] = rec.id;
    row["anchor"] = rec.anchor;
    row["chain"] = rec.chain_id;
    row["lhs"] = detail::json_number(rec.lhs);
    row["rhs"] = detail::json_number(rec.rhs);
    row["slack"] = detail::json_number(rec.slack);
    row["slack_kind"] = rec.slack_kind;
    row["status"] = rec.status;
    if (!rec.note.empty()) row["note"] = rec.note;
    arr.push_back(std::move(row));
  }
  return arr;
}

inline bool any_failure(const std::vector<VerificationRecord>& records) {
  for (const auto& rec : records)
    if (rec.status == "fail") return true;
  return false;
}

// ---------------------------------------------------------------------------
// analyze: compute requested quantities into a deterministic JSON report

inline Json analyze(const ChainModel& chain, const std::string& chain_id,
                    const std::vector<std::string>& quantities, const VerifyConfig& cfg = {}) {
  Json report;
  report["schema"] = "mixchar/1";
  report["chain"] = chain_id;
  report["states"] = chain.n();
  report["reversible"] = chain.reversible;
  EntropyConstants ents = derive_entropy_constants();
  report["constants"] = {{"c_prime", detail::json_number(ents.c_prime)},
                         {"c_ent", detail::json_number(ents.c_ent)}};
  Json values;
  Json timings;
  Json diagnostics;

  struct Lazy {
    std::optional<ConnectedSetFamily> family;
    std::optional<SpectralDecomposition> dec;
    std::optional<LSResult> ls;
  } lazy_state;
  auto family = [&]() -> const ConnectedSetFamily& {
    if (!lazy_state.family) {
      lazy_state.family = enumerate_connected(chain, 0.5, cfg.max_subsets);
      report["family"] = {{"delta", 0.5},
                          {"sets", lazy_state.family->sets.size()},
                          {"complete", lazy_state.family->complete}};
    }
    return *lazy_state.family;
  };
  auto dec = [&]() -> const SpectralDecomposition& {
    if (!lazy_state.dec) lazy_state.dec = decompose(chain);
    return *lazy_state.dec;
  };
  auto ls = [&]() -> const LSResult& {
    if (!lazy_state.ls) {
      LSConfig ls_cfg;
      ls_cfg.seed = cfg.seed;
      lazy_state.ls = c_ls(chain, family(), ls_cfg);
      diagnostics["ls"] = {{"restarts", lazy_state.ls->restarts},
                           {"dispersion", detail::json_number(lazy_state.ls->dispersion)},
                           {"bracket",
                            {detail::json_number(lazy_state.ls->bracket_lower),
                             detail::json_number(lazy_state.ls->bracket_upper)}},
                           {"seed", lazy_state.ls->seed}};
    }
    return *lazy_state.ls;
  };
  auto mix = [&](Metric metric, KernelMode mode, double eps) {
    MixingQuery q;
    q.metric = metric;
    q.mode = mode;
    q.epsilon = eps;
    return mixing_time(chain, q);
  };

  for (const std::string& q : quantities) {
    auto started = std::chrono::steady_clock::now();
    try {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (q == "tau1") v = mix(Metric::L1, KernelMode::Continuous, 0.5);
      else if (q == "tau2") v = mix(Metric::L2, KernelMode::Continuous, 0.5);
      else if (q == "tau_inf") v = mix(Metric::Linf, KernelMode::Continuous, 0.5);
      else if (q == "tau_ent") v = mix(Metric::Entropy, KernelMode::Continuous, 0.5);
      else if (q == "tau2_discrete") v = mix(Metric::L2, KernelMode::Discrete, 0.5);
      else if (q == "tau2_ave") v = mix(Metric::L2, KernelMode::Averaged, 0.5);
      else if (q == "tau_ent_discrete") v = mix(Metric::Entropy, KernelMode::Discrete, 0.5);
      else if (q == "tau_ent_ave") v = mix(Metric::Entropy, KernelMode::Averaged, 0.5);
      else if (q == "t_rel") v = relaxation_times(dec()).t_rel;
      else if (q == "t_rel_abs") v = relaxation_times(dec()).t_rel_absolute;
      else if (q == "rho")
        v = rho_family(chain, HittingTarget::rho(), family(), TimeMode::Continuous).worst;
      else if (q == "rho_ent")
        v = rho_family(chain, HittingTarget::rho_ent(), family(), TimeMode::Continuous).worst;
      else if (q == "rho_bar")
        v = rho_family(chain, HittingTarget::rho_bar(), family(), TimeMode::Continuous).worst;
      else if (q == "rho_bar_ent")
        v = rho_family(chain, HittingTarget::rho_bar_ent(), family(), TimeMode::Continuous).worst;
      else if (q == "rho_discrete")
        v = rho_family(chain, HittingTarget::rho(), family(), TimeMode::Discrete).worst;
      else if (q == "rho_ent_discrete")
        v = rho_family(chain, HittingTarget::rho_ent(), family(), TimeMode::Discrete).worst;
      else if (q == "t_ht")
        v = rho_family(chain, HittingTarget::t_ht(), family(), TimeMode::Continuous).worst;
      else if (q == "kappa") v = kappa(chain, family(), TimeMode::Continuous).kappa;
      else if (q == "kappa_discrete") v = kappa(chain, family(), TimeMode::Discrete).kappa;
      else if (q == "alpha") v = kappa(chain, family(), TimeMode::Continuous).alpha;
      else if (q == "c_ls") v = ls().c_ls;
      else if (q == "t_ls") v = ls().t_ls;
      else if (q == "c_mls") v = c_mls(chain, cfg.seed);
      else if (q == "hit_eps_literal")
        v = hit_eps(chain, family(), 0.25, HitEpsSelector::LiteralSmallSets);
      else if (q == "hit_eps_complement")
        v = hit_eps(chain, family(), 0.25, HitEpsSelector::ComplementLargeSets);
      else throw BadParams("unknown quantity: " + q);
      values[q] = detail::json_number(v);
      if (!family().complete &&
          (q.rfind("rho", 0) == 0 || q == "kappa" || q == "t_ht" || q.rfind("hit", 0) == 0))
        values[q + "_label"] = "lower-bound estimate (incomplete family)";
    } catch (const NotMixing& e) {
      values[q] = nullptr;
      values[q + "_label"] = std::string("NotMixing: ") + e.what();
      diagnostics["t_rel_abs"] =
          detail::json_number(relaxation_times(dec()).t_rel_absolute);
    }
    auto elapsed =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started);
    timings[q] = detail::round_sig(elapsed.count(), 4);
  }
  report["quantities"] = std::move(values);
  if (!diagnostics.empty()) report["diagnostics"] = std::move(diagnostics);
  if (cfg.timings) report["timings_ms"] = std::move(timings);
  return report;
}

inline Json verify_report(const ChainModel& chain, const std::string& chain_id,
                          const std::string& suite, const VerifyConfig& cfg,
                          std::vector<RobustnessRow>* robustness_rows = nullptr) {
  Json report;
  report["schema"] = "mixchar/1";
  report["chain"] = chain_id;
  report["suite"] = suite;
  report["slack_default"] = detail::json_number(cfg.slack);
  EntropyConstants ents = derive_entropy_constants();
  report["constants"] = {{"c_prime", detail::json_number(ents.c_prime)},
                         {"c_ent", detail::json_number(ents.c_ent)}};
  auto records = run_suite(chain, chain_id, suite, cfg, robustness_rows);
  report["records"] = records_to_json(records);
  int pass = 0, fail = 0, report_only = 0;
  for (const auto& rec : records) {
    if (rec.status == "pass") ++pass;
    else if (rec.status == "fail") ++fail;
    else ++report_only;
  }
  report["summary"] = {{"pass", pass}, {"fail", fail}, {"report_only", report_only}};
  return report;
}

}  // namespace mixchar
