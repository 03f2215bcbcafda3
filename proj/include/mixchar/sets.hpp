#pragma once

// Enumeration of the families Con_delta of connected sets with
// pi(A) <= delta.  A set is connected when the chain restricted to it is
// irreducible; for reversible chains this is plain connectivity of the
// induced support graph.

#include "mixchar/chain.hpp"

namespace mixchar {

constexpr double kMassTol = 1e-12;

struct ConnectedSetFamily {
  double delta = 0.0;
  std::vector<std::vector<int>> sets;  // each sorted ascending
  bool complete = true;                // false when the cap was hit
  std::size_t cap = 0;
};

namespace detail {

inline std::vector<std::vector<int>> support_adjacency(const ChainModel& chain) {
  const int n = chain.n();
  std::vector<std::vector<int>> adj(n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y && (chain.P(x, y) > 0.0 || chain.P(y, x) > 0.0)) adj[x].push_back(y);
  return adj;
}

}  // namespace detail

// P_a[T_b < T_{A^c}] > 0 for all a, b in A: the sub-digraph induced by A
// must be strongly connected.
inline bool is_connected(const ChainModel& chain, const std::vector<int>& set) {
  if (set.empty()) throw EmptySet("connectivity of the empty set is undefined");
  if (set.size() == 1) return true;
  std::vector<int> pos(chain.n(), -1);
  for (std::size_t i = 0; i < set.size(); ++i) pos[set[i]] = static_cast<int>(i);
  auto reach_all = [&](bool forward) {
    std::vector<int> seen(set.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < set.size(); ++j) {
        if (seen[j]) continue;
        double w = forward ? chain.P(set[i], set[j]) : chain.P(set[j], set[i]);
        if (w > 0.0) {
          seen[j] = 1;
          ++count;
          stack.push_back(static_cast<int>(j));
        }
      }
    }
    return count == set.size();
  };
  return reach_all(true) && reach_all(false);
}

namespace detail {

// Detects a degree <= 2 support graph and classifies it; intervals are
// then enumerated directly instead of running the generic expansion.
enum class LineTopology { None, Path, Cycle };

inline LineTopology line_topology(const std::vector<std::vector<int>>& adj) {
  int deg1 = 0;
  for (const auto& nb : adj) {
    if (nb.size() > 2) return LineTopology::None;
    if (nb.size() == 1) ++deg1;
    if (nb.empty()) return LineTopology::None;
  }
  if (deg1 == 2) return LineTopology::Path;
  if (deg1 == 0) return LineTopology::Cycle;
  return LineTopology::None;
}

inline std::vector<int> line_order(const std::vector<std::vector<int>>& adj, LineTopology topo) {
  const int n = static_cast<int>(adj.size());
  int start = 0;
  if (topo == LineTopology::Path)
    for (int v = 0; v < n; ++v)
      if (adj[v].size() == 1) { start = v; break; }
  std::vector<int> order{start};
  std::vector<int> used(n, 0);
  used[start] = 1;
  while (static_cast<int>(order.size()) < n) {
    bool advanced = false;
    for (int nb : adj[order.back()])
      if (!used[nb]) {
        used[nb] = 1;
        order.push_back(nb);
        advanced = true;
        break;
      }
    if (!advanced) break;
  }
  return order;
}

inline ConnectedSetFamily enumerate_intervals(const ChainModel& chain,
                                              const std::vector<std::vector<int>>& adj,
                                              LineTopology topo, double delta, std::size_t cap) {
  ConnectedSetFamily family;
  family.delta = delta;
  family.cap = cap;
  const int n = chain.n();
  std::vector<int> order = line_order(adj, topo);
  if (static_cast<int>(order.size()) != n) throw NumericalFailure("line order failed");
  const bool wrap = topo == LineTopology::Cycle;
  auto emit = [&](std::vector<int> set) {
    std::sort(set.begin(), set.end());
    if (family.sets.size() >= cap) {
      family.complete = false;
      return false;
    }
    family.sets.push_back(std::move(set));
    return true;
  };
  // Intervals [start, start+len) in line order; distinct (start, len)
  // pairs give distinct sets, so no deduplication is needed.
  for (int start = 0; start < n; ++start) {
    double mass = 0.0;
    std::vector<int> set;
    int max_len = wrap ? n - 1 : n - start;
    for (int len = 1; len <= max_len; ++len) {
      int v = order[(start + len - 1) % n];
      mass += chain.pi[v];
      if (mass > delta + kMassTol) break;
      set.push_back(v);
      if (!emit(set)) return family;
    }
  }
  double total = chain.pi.sum();
  if (total <= delta + kMassTol) {
    std::vector<int> all(n);
    for (int v = 0; v < n; ++v) all[v] = v;
    emit(all);
  }
  return family;
}

}  // namespace detail

// Canonical connected-induced-subgraph expansion: sets whose minimum
// vertex is v are grown using vertices > v only, with an extension list
// that bans re-adding a vertex once its branch is exhausted, so every
// set is produced exactly once.
inline ConnectedSetFamily enumerate_connected(const ChainModel& chain, double delta,
                                              std::size_t cap = 1000000,
                                              bool strict_cap = false) {
  if (!(delta > 0.0 && delta <= 1.0)) throw BadParams("delta must be in (0, 1]");
  if (cap < 1) throw BadParams("cap must be >= 1");
  auto adj = detail::support_adjacency(chain);

  auto topo = detail::line_topology(adj);
  if (topo != detail::LineTopology::None && chain.n() >= 3) {
    ConnectedSetFamily family = detail::enumerate_intervals(chain, adj, topo, delta, cap);
    if (!family.complete && strict_cap) throw CapExceeded("connected-set cap exceeded");
    return family;
  }

  ConnectedSetFamily family;
  family.delta = delta;
  family.cap = cap;
  const int n = chain.n();
  std::vector<int> current;
  std::vector<char> in_set(n, 0);

  auto emit = [&]() {
    if (family.sets.size() >= cap) {
      family.complete = false;
      return false;
    }
    std::vector<int> sorted = current;
    std::sort(sorted.begin(), sorted.end());
    family.sets.push_back(std::move(sorted));
    return true;
  };

  // ext: candidate extensions, each usable once per branch
  std::function<bool(double, std::vector<int>, std::vector<char>&)> grow =
      [&](double mass, std::vector<int> ext, std::vector<char>& banned) {
        for (std::size_t pick = 0; pick < ext.size(); ++pick) {
          int u = ext[pick];
          if (banned[u]) continue;
          double new_mass = mass + chain.pi[u];
          banned[u] = 1;  // later branches at this level must not reuse u
          if (new_mass > delta + kMassTol) continue;
          current.push_back(u);
          in_set[u] = 1;
          if (!emit()) {
            in_set[u] = 0;
            current.pop_back();
            return false;
          }
          std::vector<int> next_ext(ext.begin() + pick + 1, ext.end());
          std::vector<int> added;
          for (int w : adj[u])
            if (w > current.front() && !in_set[w] && !banned[w]) {
              bool dup = false;
              for (std::size_t k = pick + 1; k < ext.size(); ++k)
                if (ext[k] == w) { dup = true; break; }
              if (!dup) {
                next_ext.push_back(w);
                added.push_back(w);
              }
            }
          std::vector<char> child_banned = banned;
          bool ok = grow(new_mass, std::move(next_ext), child_banned);
          in_set[u] = 0;
          current.pop_back();
          if (!ok) return false;
        }
        return true;
      };

  for (int v = 0; v < n && family.complete; ++v) {
    if (chain.pi[v] > delta + kMassTol) continue;
    current = {v};
    in_set[v] = 1;
    if (!emit()) {
      in_set[v] = 0;
      break;
    }
    std::vector<int> ext;
    for (int w : adj[v])
      if (w > v) ext.push_back(w);
    std::vector<char> banned(n, 0);
    grow(chain.pi[v], std::move(ext), banned);
    in_set[v] = 0;
  }
  if (!family.complete && strict_cap) throw CapExceeded("connected-set cap exceeded");
  return family;
}

// Brute-force reference over all 2^n subsets; used as the oracle for
// small chains and for the "all subsets" cross-checks.
inline std::vector<std::vector<int>> brute_force_connected(const ChainModel& chain, double delta) {
  const int n = chain.n();
  if (n > 24) throw BadParams("brute force enumeration limited to n <= 24");
  std::vector<std::vector<int>> out;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> set;
    double mass = 0.0;
    for (int v = 0; v < n; ++v)
      if (mask & (1u << v)) {
        set.push_back(v);
        mass += chain.pi[v];
      }
    if (mass > delta + kMassTol) continue;
    if (is_connected(chain, set)) out.push_back(std::move(set));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mixchar
