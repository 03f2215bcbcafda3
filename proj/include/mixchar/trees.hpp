#pragma once

// Weighted nearest-neighbor walks on trees: central-vertex rooting,
// induced-subtree masses, the leaf cut x_delta with its component
// D_delta, the threshold profile b_x, and the edge-weight perturbation
// experiment.

#include <sstream>

#include "mixchar/logsob.hpp"

namespace mixchar {

struct RootedTree {
  int root = -1;
  std::vector<int> parent;           // -1 at the root
  std::vector<double> subtree_mass;  // pi(T_u)
  std::vector<std::vector<int>> children;
  std::vector<int> order;            // depth-first, root first
};

namespace detail {

// Off-diagonal support must form a tree; self-loops are tolerated (they
// only rescale holding times).
inline std::vector<std::vector<int>> tree_adjacency(const ChainModel& chain) {
  const int n = chain.n();
  std::vector<std::vector<int>> adj(n);
  int edges = 0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      bool xy = chain.P(x, y) > 0.0, yx = chain.P(y, x) > 0.0;
      if (xy != yx) throw NotATree("one-directional edge in the support graph");
      if (xy) {
        adj[x].push_back(y);
        adj[y].push_back(x);
        ++edges;
      }
    }
  if (edges != n - 1) throw NotATree("support graph is not a tree");
  return adj;
}

inline double component_mass(const std::vector<std::vector<int>>& adj, const Vector& pi,
                             int removed, int seed_vertex) {
  std::vector<char> seen(adj.size(), 0);
  seen[removed] = 1;
  seen[seed_vertex] = 1;
  std::vector<int> stack{seed_vertex};
  double mass = pi[seed_vertex];
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        mass += pi[v];
        stack.push_back(v);
      }
  }
  return mass;
}

}  // namespace detail

// Central vertex: every component of the tree minus it has stationary
// mass at most 1/2.  Ties break to the smallest state label.
inline RootedTree root_tree(const ChainModel& chain) {
  auto adj = detail::tree_adjacency(chain);
  const int n = chain.n();
  std::vector<int> central;
  for (int v = 0; v < n; ++v) {
    bool ok = true;
    for (int u : adj[v])
      if (detail::component_mass(adj, chain.pi, v, u) > 0.5 + 1e-12) {
        ok = false;
        break;
      }
    if (ok) central.push_back(v);
  }
  if (central.empty()) throw NumericalFailure("no central vertex found");
  int root = central[0];
  for (int v : central)
    if (chain.states[v] < chain.states[root]) root = v;

  RootedTree tree;
  tree.root = root;
  tree.parent.assign(n, -1);
  tree.children.assign(n, {});
  tree.subtree_mass.assign(n, 0.0);
  std::vector<int> stack{root};
  std::vector<char> seen(n, 0);
  seen[root] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    tree.order.push_back(u);
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        tree.parent[v] = u;
        tree.children[u].push_back(v);
        stack.push_back(v);
      }
  }
  for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
    tree.subtree_mass[*it] = chain.pi[*it];
    for (int c : tree.children[*it]) tree.subtree_mass[*it] += tree.subtree_mass[c];
  }
  return tree;
}

inline std::vector<int> leaves_of(const RootedTree& tree) {
  std::vector<int> out;
  for (std::size_t v = 0; v < tree.children.size(); ++v)
    if (tree.children[v].empty()) out.push_back(static_cast<int>(v));
  return out;
}

inline std::vector<int> path_to_root(const RootedTree& tree, int x) {
  std::vector<int> path{x};
  while (tree.parent[path.back()] != -1) path.push_back(tree.parent[path.back()]);
  return path;
}

// Vertex set of the induced subtree T_u, sorted.
inline std::vector<int> subtree_of(const RootedTree& tree, int u) {
  std::vector<int> out;
  std::vector<int> stack{u};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    for (int c : tree.children[v]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Phi(T_y) = pi(y) P(y, z) / pi(T_y) for y with parent z; the Kac
// calibration is Phi(T_y) E_y[T_z] = 1.
inline double kac_phi(const ChainModel& chain, const RootedTree& tree, int y) {
  int z = tree.parent[y];
  if (z < 0) throw BadParams("kac_phi needs a non-root vertex");
  return chain.pi[y] * chain.P(y, z) / tree.subtree_mass[y];
}

struct LeafCut {
  int leaf = -1;
  double delta = 0.0;
  int x_delta = -1;
  std::vector<int> component;  // D_delta, empty when x_delta == leaf
  double alpha = std::numeric_limits<double>::infinity();  // alpha(D_delta)
  double lambda = std::numeric_limits<double>::infinity(); // lambda(D_delta)
  double mass = 0.0;                                       // pi(D_delta)
};

inline LeafCut leaf_cut(const ChainModel& chain, const RootedTree& tree, int leaf, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw BadDelta("leaf cut needs delta in (0, 1/2)");
  LeafCut cut;
  cut.leaf = leaf;
  cut.delta = delta;
  std::vector<int> path = path_to_root(tree, leaf);
  int below = -1;
  for (int y : path) {
    if (tree.subtree_mass[y] >= delta - 1e-15) {
      cut.x_delta = y;
      break;
    }
    below = y;
  }
  if (cut.x_delta < 0) throw NumericalFailure("no vertex of sufficient subtree mass");
  if (cut.x_delta == leaf) return cut;  // empty component, b_x(delta) = 0
  // D_delta is the subtree hanging below x_delta toward the leaf
  std::vector<int> stack{below};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    cut.component.push_back(u);
    for (int c : tree.children[u]) stack.push_back(c);
  }
  std::sort(cut.component.begin(), cut.component.end());
  for (int v : cut.component) cut.mass += chain.pi[v];
  RestrictedSpectrum rs = restricted(chain, cut.component);
  cut.lambda = rs.lambda;
  cut.alpha = rs.lambda / std::abs(std::log(cut.mass));
  return cut;
}

// b_x(delta) = min { t : P_x[T_{x_delta} > t] <= delta^3 / 4 }, with the
// sup over delta in (0, 1/4] taken on a 64-point log grid plus one
// refinement pass around the observed maximum.
struct BxProfile {
  std::vector<double> deltas;
  std::vector<double> values;
  double sup = 0.0;
  double argmax_delta = 0.0;
};

inline double b_x_at(const ChainModel& chain, const RootedTree& tree, int leaf, double delta) {
  LeafCut cut = leaf_cut(chain, tree, leaf, delta);
  if (cut.component.empty()) return 0.0;
  double target = delta * delta * delta / 4.0;
  SurvivalCurve curve =
      survival_curve(chain, Start::at(leaf), cut.component, TimeMode::Continuous);
  return curve.threshold(target);
}

inline BxProfile b_x(const ChainModel& chain, const RootedTree& tree, int leaf,
                     int grid_points = 64) {
  BxProfile profile;
  const double lo = 1e-4, hi = 0.25;
  for (int i = 0; i < grid_points; ++i) {
    double d = lo * std::pow(hi / lo, static_cast<double>(i) / (grid_points - 1));
    profile.deltas.push_back(d);
  }
  profile.values.resize(profile.deltas.size());
  parallel_for(profile.deltas.size(), [&](std::size_t i) {
    profile.values[i] = b_x_at(chain, tree, leaf, profile.deltas[i]);
  });
  std::size_t best = 0;
  for (std::size_t i = 0; i < profile.values.size(); ++i)
    if (profile.values[i] > profile.values[best]) best = i;
  // one refinement pass around the maximum
  double left = best > 0 ? profile.deltas[best - 1] : lo;
  double right = best + 1 < profile.deltas.size() ? profile.deltas[best + 1] : hi;
  profile.sup = profile.values[best];
  profile.argmax_delta = profile.deltas[best];
  for (int i = 0; i <= 32; ++i) {
    double d = left + (right - left) * i / 32.0;
    double v = b_x_at(chain, tree, leaf, d);
    if (v > profile.sup) {
      profile.sup = v;
      profile.argmax_delta = d;
    }
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Edge-weight perturbation experiment

struct RobustnessRow {
  std::string tree_id;
  std::uint64_t seed = 0;
  double m_factor = 1.0;
  double tau2 = 0.0;
  double tau2_pert = 0.0;
  double ratio = 1.0;          // max(tau2/tau2', tau2'/tau2)
  double tau_inf_ratio = 1.0;
  double tau_ent_ratio = 1.0;
};

inline std::string robustness_csv(const std::vector<RobustnessRow>& rows) {
  std::ostringstream out;
  out << "tree_id,seed,M,tau2,tau2_pert,ratio,tau_inf_ratio,tau_ent_ratio\n";
  for (const auto& r : rows) {
    out << r.tree_id << ',' << r.seed << ',' << r.m_factor << ',' << r.tau2 << ',' << r.tau2_pert
        << ',' << r.ratio << ',' << r.tau_inf_ratio << ',' << r.tau_ent_ratio << '\n';
  }
  return out.str();
}

namespace detail {

inline double mixing_of(const ChainModel& chain, Metric metric, double eps) {
  MixingQuery query;
  query.metric = metric;
  query.mode = KernelMode::Continuous;
  query.epsilon = eps;
  return mixing_time(chain, query);
}

}  // namespace detail

// Multiplies each conductance by an independent log-uniform factor in
// [1/M, M] and records the mixing-time ratios; report-only since the
// comparison constants are not explicit.
inline std::vector<RobustnessRow> robustness_experiment(const ChainModel& tree_chain,
                                                        const std::string& tree_id, double M,
                                                        int trials, std::uint64_t seed) {
  if (!(M >= 1.0)) throw BadParams("robustness experiment needs M >= 1");
  detail::tree_adjacency(tree_chain);  // validates tree shape
  const int n = tree_chain.n();
  double tau2 = detail::mixing_of(tree_chain, Metric::L2, 0.5);
  double tau_inf = detail::mixing_of(tree_chain, Metric::Linf, 0.5);
  double tau_ent = detail::mixing_of(tree_chain, Metric::Entropy, 0.5);

  std::vector<RobustnessRow> rows;
  for (int trial = 0; trial < trials; ++trial) {
    std::uint64_t row_seed = split_seed(seed, static_cast<std::uint64_t>(trial));
    std::mt19937_64 rng(row_seed);
    std::uniform_real_distribution<double> logu(-std::log(M), std::log(M));
    WeightedNetwork net;
    net.vertices = tree_chain.states;
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y)
        if (tree_chain.P(x, y) > 0.0) {
          double base = tree_chain.pi[x] * tree_chain.P(x, y);  // conductance up to scale
          net.edges.push_back({net.vertices[x], net.vertices[y], base * std::exp(logu(rng))});
        }
    ChainModel pert = from_network(net);
    RobustnessRow row;
    row.tree_id = tree_id;
    row.seed = row_seed;
    row.m_factor = M;
    row.tau2 = tau2;
    row.tau2_pert = detail::mixing_of(pert, Metric::L2, 0.5);
    row.ratio = std::max(row.tau2 / row.tau2_pert, row.tau2_pert / row.tau2);
    double ti = detail::mixing_of(pert, Metric::Linf, 0.5);
    double te = detail::mixing_of(pert, Metric::Entropy, 0.5);
    row.tau_inf_ratio = std::max(tau_inf / ti, ti / tau_inf);
    row.tau_ent_ratio = std::max(tau_ent / te, te / tau_ent);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Record for the tree mixing-time theorem and its ingredients

struct TreeTheoremRecord {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double t_ls = 0.0;
  double lower_bound = 0.0;             // max(tau1, t_ls / 4)
  double upper_ratio = 0.0;             // (tau2 - tau1) / max(t_ls, sqrt(t_ls tau1))
  double kappa_value = 0.0;
  double t_rel = 0.0;
  std::vector<double> b_x_sup;          // per leaf
  std::vector<int> leaves;
};

inline TreeTheoremRecord tree_theorem_check(const ChainModel& chain) {
  RootedTree tree = root_tree(chain);
  TreeTheoremRecord rec;
  rec.tau1 = detail::mixing_of(chain, Metric::L1, 0.5);
  rec.tau2 = detail::mixing_of(chain, Metric::L2, 0.5);
  auto family = enumerate_connected(chain, 0.5);
  rec.t_ls = c_ls(chain, family).t_ls;
  rec.kappa_value = kappa(chain, family).kappa;
  rec.t_rel = relaxation_times(chain).t_rel;
  rec.lower_bound = std::max(rec.tau1, rec.t_ls / 4.0);
  double denom = std::max(rec.t_ls, std::sqrt(rec.t_ls * rec.tau1));
  rec.upper_ratio = (rec.tau2 - rec.tau1) / denom;
  rec.leaves = leaves_of(tree);
  for (int leaf : rec.leaves) rec.b_x_sup.push_back(b_x(chain, tree, leaf).sup);
  return rec;
}

}  // namespace mixchar
