#pragma once

// Shared by unit tests and the acceptance runner: random model generators
// and brute-force reference implementations that share no code with the
// library routines they check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "causeprobe/causal_graph.hpp"
#include "causeprobe/scm.hpp"

namespace support {

using causeprobe::CausalGraph;
using causeprobe::EdgeState;

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Binary endogenous variables, each with a private ternary noise term of
// full support: U = 0 forces 0, U = 1 forces 1, U = 2 applies a random
// Boolean function of the parents. Declaration order is shuffled so that it
// rarely coincides with the causal order.
inline causeprobe::scm::StructuralCausalModel random_markovian_scm(std::mt19937_64& rng,
                                                                   std::size_t n) {
  using namespace causeprobe::scm;
  std::vector<std::string> names(n);
  for (std::size_t k = 0; k < n; ++k) names[k] = "V" + std::to_string(k);
  std::vector<std::size_t> declared(n);
  std::iota(declared.begin(), declared.end(), 0);
  std::shuffle(declared.begin(), declared.end(), rng);

  std::vector<ExogenousVariable> exo;
  std::vector<EndogenousVariable> endo(n);
  for (std::size_t k = 0; k < n; ++k) {
    ExogenousVariable u{"U" + std::to_string(k), {0, 1, 2}, {}};
    double w[3];
    double total = 0;
    for (double& x : w) total += (x = 1.0 + static_cast<double>(uniform_index(rng, 5)));
    for (double x : w) u.probabilities.push_back(x / total);
    u.probabilities[2] = 1.0 - u.probabilities[0] - u.probabilities[1];
    exo.push_back(u);

    EndogenousVariable v;
    v.name = names[k];
    v.domain = {0, 1};
    for (std::size_t p = 0; p < k; ++p) {
      if (uniform_index(rng, 2) == 1) v.parents.push_back(names[p]);
    }
    v.parents.push_back(u.name);
    TableMechanism table;
    const std::size_t arity = v.parents.size() - 1;
    for (std::size_t mask = 0; mask < (std::size_t{1} << arity); ++mask) {
      std::vector<Value> key;
      for (std::size_t b = 0; b < arity; ++b) key.push_back((mask >> b) & 1);
      const Value random_bit = static_cast<Value>(uniform_index(rng, 2));
      for (Value noise = 0; noise < 3; ++noise) {
        auto row = key;
        row.push_back(noise);
        table.rows[row] = noise == 2 ? random_bit : noise;
      }
    }
    v.mechanism = table;
    endo[declared[k]] = std::move(v);
  }
  return StructuralCausalModel(std::move(exo), std::move(endo), "random");
}

inline CausalGraph random_graph(std::mt19937_64& rng, std::size_t n, bool dag_only) {
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) labels.push_back(std::string(1, static_cast<char>('A' + k)));
  CausalGraph g(labels);
  if (dag_only) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (uniform_index(rng, 2) == 1) g.add_directed(order[a], order[b]);
    return g;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      g.set_state(i, j, static_cast<EdgeState>(uniform_index(rng, 4)));
  return g;
}

// Every DAG on n labelled nodes, by filtering all 3^(n choose 2) directed
// pair states through a DFS cycle check.
inline bool dfs_acyclic(const CausalGraph& g) {
  const std::size_t n = g.size();
  std::vector<int> color(n, 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    color[v] = 1;
    for (std::size_t w = 0; w < n; ++w) {
      if (w == v || g.state(v, w) != EdgeState::Forward) continue;
      if (color[w] == 1) return false;
      if (color[w] == 0 && !visit(w)) return false;
    }
    color[v] = 2;
    return true;
  };
  for (std::size_t v = 0; v < n; ++v)
    if (color[v] == 0 && !visit(v)) return false;
  return true;
}

inline std::vector<CausalGraph> all_dags(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < n; ++k) labels.push_back(std::string(1, static_cast<char>('A' + k)));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::size_t total = 1;
  for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
  std::vector<CausalGraph> out;
  for (std::size_t code = 0; code < total; ++code) {
    CausalGraph g(labels);
    std::size_t c = code;
    for (const auto& [i, j] : pairs) {
      const std::size_t s = c % 3;
      c /= 3;
      if (s == 1) g.add_directed(i, j);
      if (s == 2) g.add_directed(j, i);
    }
    if (dfs_acyclic(g)) out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reachability by Floyd-Warshall on a boolean matrix.

inline std::vector<std::vector<bool>> transitive_closure(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (const auto& [a, b] : edges) r[a][b] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = true;
  return r;
}

// ---------------------------------------------------------------------------
// Structural Hamming distance recounted from adjacency matrices.

inline std::size_t shd_oracle(const CausalGraph& a, const CausalGraph& b) {
  const std::size_t n = a.size();
  auto matrix = [n](const CausalGraph& g) {
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) {
          const auto s = g.state(i, j);
          m[i][j] = s == EdgeState::Forward || s == EdgeState::Symmetric;
        }
    return m;
  };
  const auto ma = matrix(a);
  const auto mb = matrix(b);
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (ma[i][j] != mb[i][j] || ma[j][i] != mb[j][i]) ++d;
  return d;
}

// ---------------------------------------------------------------------------
// Structural intervention distance from first principles: enumerate every
// simple path of the skeleton, classify it as causal (all edges pointing
// away from i) or not, and test adjustment validity with the generalized
// back-door criterion on explicit paths.

struct PathOracle {
  const CausalGraph& g;
  std::size_t n;

  explicit PathOracle(const CausalGraph& graph) : g(graph), n(graph.size()) {}

  bool directed(std::size_t a, std::size_t b) const { return g.state(a, b) == EdgeState::Forward; }

  std::vector<std::vector<std::size_t>> simple_paths(std::size_t from, std::size_t to) const {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> path{from};
    std::vector<bool> used(n, false);
    used[from] = true;
    std::function<void(std::size_t)> walk = [&](std::size_t v) {
      if (v == to) {
        out.push_back(path);
        return;
      }
      for (std::size_t w = 0; w < n; ++w) {
        if (used[w] || w == v || g.state(v, w) == EdgeState::Absent) continue;
        used[w] = true;
        path.push_back(w);
        walk(w);
        path.pop_back();
        used[w] = false;
      }
    };
    walk(from);
    return out;
  }

  bool is_causal(const std::vector<std::size_t>& p) const {
    for (std::size_t k = 0; k + 1 < p.size(); ++k)
      if (!directed(p[k], p[k + 1])) return false;
    return true;
  }

  // Inclusive descendants by repeated DFS over explicit child lists.
  std::vector<bool> descendants_inclusive(std::size_t v) const {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{v};
    seen[v] = true;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (std::size_t y = 0; y < n; ++y)
        if (y != x && !seen[y] && directed(x, y)) {
          seen[y] = true;
          stack.push_back(y);
        }
    }
    return seen;
  }

  // A path is blocked by Z if some non-endpoint collider has no descendant
  // (inclusive) in Z, or some non-collider lies in Z.
  bool blocked(const std::vector<std::size_t>& p, const std::vector<bool>& z) const {
    for (std::size_t k = 1; k + 1 < p.size(); ++k) {
      const bool collider = directed(p[k - 1], p[k]) && directed(p[k + 1], p[k]);
      if (collider) {
        const auto de = descendants_inclusive(p[k]);
        bool any = false;
        for (std::size_t v = 0; v < n; ++v) any = any || (de[v] && z[v]);
        if (!any) return true;
      } else if (z[p[k]]) {
        return true;
      }
    }
    return false;
  }

  // Z is a valid adjustment set for (i, j) iff no member of Z is a
  // descendant of a non-i node on a causal path from i to j, and Z blocks
  // every path from i to j that does not start with an edge out of i along
  // a causal path (the non-causal paths).
  bool valid_adjustment(std::size_t i, std::size_t j, const std::vector<bool>& z) const {
    if (z[i] || z[j]) return false;
    const auto paths = simple_paths(i, j);
    std::vector<bool> forbidden(n, false);
    for (const auto& p : paths) {
      if (!is_causal(p)) continue;
      for (std::size_t k = 1; k < p.size(); ++k) {
        const auto de = descendants_inclusive(p[k]);
        for (std::size_t v = 0; v < n; ++v) forbidden[v] = forbidden[v] || de[v];
      }
    }
    for (std::size_t v = 0; v < n; ++v)
      if (z[v] && forbidden[v]) return false;
    for (const auto& p : paths) {
      if (is_causal(p)) continue;
      if (!blocked(p, z)) return false;
    }
    return true;
  }
};

// SID(pred, truth) for a DAG prediction.
inline std::size_t sid_oracle(const CausalGraph& pred, const CausalGraph& truth) {
  const std::size_t n = truth.size();
  PathOracle t(truth);
  PathOracle p(pred);
  std::size_t mistakes = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<bool> pa(n, false);
    for (std::size_t v = 0; v < n; ++v)
      if (v != i && pred.state(v, i) == EdgeState::Forward) pa[v] = true;
    const auto de_pred = p.descendants_inclusive(i);
    const auto de_truth = t.descendants_inclusive(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (!de_pred[j]) {
        // The prediction claims a null effect; it is right iff j is not a
        // descendant of i in the truth.
        if (de_truth[j]) ++mistakes;
        continue;
      }
      if (!t.valid_adjustment(i, j, pa)) ++mistakes;
    }
  }
  return mistakes;
}

}  // namespace support
