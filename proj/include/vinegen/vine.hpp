#pragma once

#include "bicop.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace vinegen {

//! Edge of a vine tree.
//!
//! `ends` are the two nodes joined by the edge: variable indices in the first
//! tree, edge indices of the previous tree otherwise. The conditioned pair
//! (j, k) with j < k and the sorted conditioning set `cond` are derived from
//! the ends.
struct VineEdge
{
  std::array<size_t, 2> ends{};
  size_t j{ 0 };
  size_t k{ 0 };
  std::vector<size_t> cond;

  //! {j, k} united with the conditioning set, sorted.
  std::vector<size_t> variables() const
  {
    std::vector<size_t> v = cond;
    v.push_back(j);
    v.push_back(k);
    std::sort(v.begin(), v.end());
    return v;
  }

  bool conditions_on(size_t v) const { return v == j || v == k; }

  bool operator==(const VineEdge&) const = default;
};

//! outcome of validate_structure; `tree` and `edge` locate the first
//! violation (0-based).
struct StructureCheck
{
  bool ok{ true };
  std::string message;
  size_t tree{ 0 };
  size_t edge{ 0 };

  explicit operator bool() const { return ok; }
};

//! Regular vine: a sequence of d - 1 nested trees.
class RVineStructure
{
public:
  RVineStructure() = default;

  //! builds a structure from the ends of each edge; trees[m] lists the edges
  //! of tree m + 1. Conditioned and conditioning sets are derived; the
  //! result is not validated.
  static RVineStructure from_ends(size_t d,
                                  const std::vector<std::vector<std::array<size_t, 2>>>& ends)
  {
    RVineStructure s;
    s.d_ = d;
    s.trees_.resize(ends.size());
    for (size_t m = 0; m < ends.size(); ++m) {
      for (const auto& e : ends[m]) {
        VineEdge edge;
        edge.ends = e;
        if (m == 0) {
          edge.j = std::min(e[0], e[1]);
          edge.k = std::max(e[0], e[1]);
        } else {
          s.derive_sets(edge, m);
        }
        s.trees_[m].push_back(edge);
      }
    }
    return s;
  }

  //! conditioned pair and conditioning set of one edge.
  struct PairSpec
  {
    size_t j;
    size_t k;
    std::vector<size_t> cond;
  };

  //! builds a structure from (j, k | D) triples, resolving the ends in the
  //! previous tree by matching variable sets. Throws FormatError when no
  //! matching parent edges exist.
  static RVineStructure from_pairs(size_t d, const std::vector<std::vector<PairSpec>>& trees)
  {
    RVineStructure s;
    s.d_ = d;
    s.trees_.resize(trees.size());
    for (size_t m = 0; m < trees.size(); ++m) {
      for (size_t e = 0; e < trees[m].size(); ++e) {
        const auto& p = trees[m][e];
        VineEdge edge;
        edge.j = std::min(p.j, p.k);
        edge.k = std::max(p.j, p.k);
        edge.cond = p.cond;
        std::sort(edge.cond.begin(), edge.cond.end());
        if (m == 0) {
          edge.ends = { edge.j, edge.k };
        } else {
          auto find = [&](size_t v) {
            std::vector<size_t> target = edge.cond;
            target.push_back(v);
            std::sort(target.begin(), target.end());
            for (size_t a = 0; a < s.trees_[m - 1].size(); ++a)
              if (s.trees_[m - 1][a].variables() == target)
                return a;
            throw FormatError("vine structure: tree " + std::to_string(m + 1) + " edge " +
                              std::to_string(e) + " has no parent edge in tree " +
                              std::to_string(m));
          };
          edge.ends = { find(edge.j), find(edge.k) };
        }
        s.trees_[m].push_back(edge);
      }
    }
    return s;
  }

  size_t dim() const { return d_; }
  size_t num_trees() const { return trees_.size(); }
  const std::vector<VineEdge>& tree(size_t m) const { return trees_.at(m); }
  const std::vector<std::vector<VineEdge>>& trees() const { return trees_; }

  size_t num_edges() const
  {
    size_t n = 0;
    for (const auto& t : trees_)
      n += t.size();
    return n;
  }

  //! index of the end of edge (m, e) that carries variable v, m >= 1.
  size_t parent_of(size_t m, size_t e, size_t v) const
  {
    const VineEdge& edge = trees_[m][e];
    const VineEdge& a = trees_[m - 1][edge.ends[0]];
    return (a.conditions_on(v) ? edge.ends[0] : edge.ends[1]);
  }

  bool operator==(const RVineStructure&) const = default;

private:
  friend class VineModel;
  friend StructureCheck validate_structure(const RVineStructure& s);

  // sets of an edge in tree m (0-based, m >= 1) from the variable sets of
  // its ends; non-proximal ends produce an oversized conditioned set
  void derive_sets(VineEdge& edge, size_t m) const
  {
    const auto& prev = trees_[m - 1];
    if (edge.ends[0] >= prev.size() || edge.ends[1] >= prev.size())
      return;
    auto a = prev[edge.ends[0]].variables();
    auto b = prev[edge.ends[1]].variables();
    std::vector<size_t> both, only_a, only_b;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    edge.cond = both;
    if (only_a.size() == 1 && only_b.size() == 1) {
      edge.j = std::min(only_a[0], only_b[0]);
      edge.k = std::max(only_a[0], only_b[0]);
    } else {
      // marks an invalid edge; validate_structure reports it
      edge.j = edge.k = d_;
    }
  }

  size_t d_{ 0 };
  std::vector<std::vector<VineEdge>> trees_;
};

//! checks the vine conditions: edge counts, conditioned/conditioning sets,
//! that each tree is a spanning tree over its nodes, and proximity.
inline StructureCheck
validate_structure(const RVineStructure& s)
{
  auto fail = [](size_t m, size_t e, std::string msg) {
    return StructureCheck{ false, std::move(msg), m, e };
  };
  const size_t d = s.d_;
  if (d < 2)
    return fail(0, 0, "dimension must be at least 2");
  if (s.trees_.size() != d - 1)
    return fail(0, 0, "expected " + std::to_string(d - 1) + " trees, got " +
                        std::to_string(s.trees_.size()));
  for (size_t m = 0; m < d - 1; ++m) {
    const auto& tree = s.trees_[m];
    const size_t nodes = d - m;
    const std::string where = "tree " + std::to_string(m + 1);
    // union-find over the nodes of this tree
    std::vector<size_t> root(nodes);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](size_t x) {
      while (root[x] != x)
        x = root[x] = root[root[x]];
      return x;
    };
    for (size_t e = 0; e < tree.size(); ++e) {
      const VineEdge& edge = tree[e];
      const std::string at = where + ", edge " + std::to_string(e) + ": ";
      if (edge.ends[0] >= nodes || edge.ends[1] >= nodes)
        return fail(m, e, at + "node index out of range");
      if (edge.ends[0] == edge.ends[1])
        return fail(m, e, at + "self loop");
      if (m > 0) {
        const auto& a = s.trees_[m - 1][edge.ends[0]];
        const auto& b = s.trees_[m - 1][edge.ends[1]];
        bool share = a.ends[0] == b.ends[0] || a.ends[0] == b.ends[1] ||
                     a.ends[1] == b.ends[0] || a.ends[1] == b.ends[1];
        if (!share)
          return fail(m, e, at + "proximity condition violated (parent edges " +
                              std::to_string(edge.ends[0]) + " and " +
                              std::to_string(edge.ends[1]) + " share no node)");
      }
      if (edge.j >= d || edge.k >= d || edge.j >= edge.k)
        return fail(m, e, at + "invalid conditioned pair");
      if (edge.cond.size() != m)
        return fail(m, e, at + "conditioning set must have " + std::to_string(m) + " elements");
      for (size_t c = 0; c < edge.cond.size(); ++c) {
        if (edge.cond[c] >= d || edge.cond[c] == edge.j || edge.cond[c] == edge.k ||
            (c > 0 && edge.cond[c] <= edge.cond[c - 1]))
          return fail(m, e, at + "invalid conditioning set");
      }
      if (m > 0) {
        // conditioned and conditioning sets must agree with the parents
        RVineStructure tmp;
        tmp.d_ = d;
        tmp.trees_.assign(s.trees_.begin(), s.trees_.begin() + static_cast<long>(m));
        VineEdge derived = edge;
        tmp.derive_sets(derived, m);
        if (derived.j != edge.j || derived.k != edge.k || derived.cond != edge.cond)
          return fail(m, e, at + "conditioned/conditioning sets inconsistent with parent edges");
      }
      size_t ra = find(edge.ends[0]), rb = find(edge.ends[1]);
      if (ra == rb)
        return fail(m, e, at + "edge closes a cycle");
      root[ra] = rb;
    }
    if (tree.size() != nodes - 1)
      return fail(m, tree.size(), where + ": expected " + std::to_string(nodes - 1) +
                                    " edges, got " + std::to_string(tree.size()));
  }
  return {};
}

inline size_t
default_trunc_level(size_t d)
{
  return std::min<size_t>(5, d - 1);
}

//! Vine copula model: structure, one pair-copula per edge, truncation level.
//! Edges in trees above the truncation level are independence copulas.
class VineModel
{
public:
  VineModel() = default;

  VineModel(RVineStructure structure,
            std::vector<std::vector<BivariateCopula>> pair_copulas,
            size_t trunc_level)
    : structure_(std::move(structure))
    , copulas_(std::move(pair_copulas))
    , trunc_(trunc_level)
  {
    auto check = validate_structure(structure_);
    if (!check)
      throw FormatError("vine model: invalid structure: " + check.message);
    const size_t d = structure_.dim();
    if (trunc_ < 1 || trunc_ > d - 1)
      throw DomainError("vine model: truncation level must lie in [1, d-1]");
    if (copulas_.size() != d - 1)
      throw FormatError("vine model: need one copula list per tree");
    for (size_t m = 0; m < d - 1; ++m) {
      if (copulas_[m].size() != structure_.tree(m).size())
        throw FormatError("vine model: copula count does not match tree " +
                          std::to_string(m + 1));
      if (m >= trunc_)
        for (const auto& c : copulas_[m])
          if (c.family() != Family::independence)
            throw FormatError("vine model: non-independence copula above truncation level");
    }
    build_plan();
  }

  //! selects the structure tree by tree (maximum spanning trees on |tau|)
  //! and fits the pair-copulas sequentially up to the truncation level.
  static VineModel fit(const Matrix& u, Family family, size_t trunc_level)
  {
    const size_t n = static_cast<size_t>(u.rows());
    const size_t d = static_cast<size_t>(u.cols());
    if (d < 2)
      throw DegenerateInputError("vine fit: need at least 2 columns");
    if (trunc_level < 1 || trunc_level > d - 1)
      throw DomainError("vine fit: truncation level must lie in [1, d-1], got " +
                        std::to_string(trunc_level));
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (!(u.data()[i] > 0.0 && u.data()[i] < 1.0))
        throw DomainError("vine fit: pseudo-observations must lie in (0,1)");

    RVineStructure s;
    s.d_ = d;
    s.trees_.resize(d - 1);
    std::vector<std::vector<BivariateCopula>> copulas(d - 1);

    // pseudo-observations carried by the nodes of the current tree:
    // pseudo[node] holds, for each variable conditioned at that node, its
    // conditional values. In tree 1 a node is a variable.
    std::vector<std::vector<double>> cols(d);
    for (size_t v = 0; v < d; ++v)
      cols[v] = stats::column(u, static_cast<Eigen::Index>(v));
    // out[e] = {u_{j|D,k}, u_{k|D,j}} for edges of the previous tree
    std::vector<std::array<std::vector<double>, 2>> prev_out;

    for (size_t m = 0; m < d - 1; ++m) {
      const bool fitted = m < trunc_level;
      const size_t nodes = d - m;
      // candidate edges allowed in this tree
      std::vector<Candidate> cand;
      for (size_t a = 0; a < nodes; ++a) {
        for (size_t b = a + 1; b < nodes; ++b) {
          VineEdge e;
          e.ends = { a, b };
          if (m == 0) {
            e.j = a;
            e.k = b;
          } else {
            const auto& ea = s.trees_[m - 1][a];
            const auto& eb = s.trees_[m - 1][b];
            bool share = ea.ends[0] == eb.ends[0] || ea.ends[0] == eb.ends[1] ||
                         ea.ends[1] == eb.ends[0] || ea.ends[1] == eb.ends[1];
            if (!share)
              continue;
            s.derive_sets(e, m);
          }
          cand.push_back({ e, 0.0 });
        }
      }
      if (fitted) {
        parallel_for(cand.size(), [&](size_t c) {
          auto [x, y] = edge_inputs(s, m, cand[c].edge, cols, prev_out);
          cand[c].weight = std::abs(stats::kendall_tau(*x, *y));
        });
      }
      s.trees_[m] = max_spanning_tree(nodes, cand);

      const auto& tree = s.trees_[m];
      copulas[m].assign(tree.size(), BivariateCopula::independence());
      if (!fitted)
        continue;
      std::vector<std::array<std::vector<double>, 2>> out(tree.size());
      const bool need_out = m + 1 < trunc_level;
      parallel_for(tree.size(), [&](size_t e) {
        auto [x, y] = edge_inputs(s, m, tree[e], cols, prev_out);
        copulas[m][e] = BivariateCopula::fit(*x, *y, family);
        if (need_out) {
          out[e][0].resize(n);
          out[e][1].resize(n);
          for (size_t i = 0; i < n; ++i) {
            out[e][0][i] = clamp_unit(copulas[m][e].hfunc2((*x)[i], (*y)[i]));
            out[e][1][i] = clamp_unit(copulas[m][e].hfunc1((*x)[i], (*y)[i]));
          }
        }
      });
      prev_out = std::move(out);
    }
    return VineModel(std::move(s), std::move(copulas), trunc_level);
  }

  //! all-independence vine on d variables (a D-vine structure).
  static VineModel independence(size_t d)
  {
    std::vector<std::vector<std::array<size_t, 2>>> ends(d - 1);
    for (size_t m = 0; m + 1 < d; ++m)
      for (size_t e = 0; e + m + 1 < d; ++e)
        ends[m].push_back({ e, e + 1 });
    auto s = RVineStructure::from_ends(d, ends);
    std::vector<std::vector<BivariateCopula>> cops(d - 1);
    for (size_t m = 0; m + 1 < d; ++m)
      cops[m].assign(ends[m].size(), BivariateCopula::independence());
    return VineModel(std::move(s), std::move(cops), default_trunc_level(d));
  }

  size_t dim() const { return structure_.dim(); }
  size_t trunc_level() const { return trunc_; }
  const RVineStructure& structure() const { return structure_; }
  const std::vector<std::vector<BivariateCopula>>& pair_copulas() const { return copulas_; }
  const BivariateCopula& pair_copula(size_t m, size_t e) const { return copulas_.at(m).at(e); }

  //! log copula density of each row.
  Vector log_density(const Matrix& u) const
  {
    check_input(u);
    const size_t n = static_cast<size_t>(u.rows());
    Vector ll = Vector::Zero(u.rows());
    parallel_for(n, [&](size_t i) {
      Row row(*this, u, i);
      double s = 0.0;
      for (size_t m = 0; m < trunc_; ++m) {
        for (size_t e = 0; e < structure_.tree(m).size(); ++e) {
          const auto& c = copulas_[m][e];
          if (c.family() == Family::independence) {
            row.forward(m, e);
            continue;
          }
          auto [x, y] = row.inputs(m, e);
          s += std::log(std::max(c.pdf(x, y), 1e-20));
          row.forward(m, e);
        }
      }
      ll(static_cast<Eigen::Index>(i)) = s;
    });
    return ll;
  }

  double log_density(std::span<const double> u) const
  {
    Matrix m(1, static_cast<Eigen::Index>(u.size()));
    for (size_t j = 0; j < u.size(); ++j)
      m(0, static_cast<Eigen::Index>(j)) = u[j];
    return log_density(m)(0);
  }

  double loglik(const Matrix& u) const { return log_density(u).sum(); }

  //! forward Rosenblatt transform; iid uniform output when u follows the
  //! model.
  Matrix rosenblatt_residuals(const Matrix& u) const
  {
    check_input(u);
    Matrix w(u.rows(), u.cols());
    parallel_for(static_cast<size_t>(u.rows()), [&](size_t i) {
      Row row(*this, u, i);
      const auto ii = static_cast<Eigen::Index>(i);
      for (size_t pos = 0; pos < order_.size(); ++pos) {
        size_t x = order_[pos];
        const auto& path = paths_[pos];
        if (path.empty()) {
          w(ii, static_cast<Eigen::Index>(x)) = row.u[x];
          continue;
        }
        for (const auto& [m, e] : path)
          row.forward(m, e);
        const auto& [m, e] = path.back();
        w(ii, static_cast<Eigen::Index>(x)) = row.output(m, e, x);
      }
    });
    return w;
  }

  //! inverse Rosenblatt transform of independent uniforms; column x of w
  //! drives variable x.
  Matrix inverse_rosenblatt(const Matrix& w) const
  {
    check_input(w);
    Matrix u(w.rows(), w.cols());
    parallel_for(static_cast<size_t>(w.rows()), [&](size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Row row(*this);
      for (size_t pos = 0; pos < order_.size(); ++pos) {
        size_t x = order_[pos];
        double val = w(ii, static_cast<Eigen::Index>(x));
        const auto& path = paths_[pos];
        // invert from the highest tree down to the first
        for (size_t p = path.size(); p-- > 0;) {
          auto [m, e] = path[p];
          const VineEdge& edge = structure_.tree(m)[e];
          const auto& c = copulas_[m][e];
          double partner = row.input(m, e, edge.j == x ? edge.k : edge.j);
          row.set_output(m, e, x, val);
          if (edge.j == x)
            val = clamp_unit(c.hinv2(val, partner));
          else
            val = clamp_unit(c.hinv1(val, partner));
        }
        row.u[x] = val;
        // partner outputs of the edges just completed
        for (const auto& [m, e] : path) {
          const VineEdge& edge = structure_.tree(m)[e];
          size_t partner = edge.j == x ? edge.k : edge.j;
          auto [xj, xk] = row.inputs(m, e);
          const auto& c = copulas_[m][e];
          double v = partner == edge.j ? c.hfunc2(xj, xk) : c.hfunc1(xj, xk);
          row.set_output(m, e, partner, clamp_unit(v));
        }
        u(ii, static_cast<Eigen::Index>(x)) = val;
      }
    });
    return u;
  }

  //! draws n observations from the vine copula.
  Matrix sample(size_t n, uint64_t seed) const
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        w(i, j) = clamp_unit(unif(rng));
    return inverse_rosenblatt(w);
  }

  //! variables in the order they are simulated.
  const std::vector<size_t>& sampling_order() const { return order_; }

private:
  using EdgeRef = std::pair<size_t, size_t>; // (tree, edge)

  struct Candidate
  {
    VineEdge edge;
    double weight;
  };

  static std::pair<const std::vector<double>*, const std::vector<double>*>
  edge_inputs(const RVineStructure& s,
              size_t m,
              const VineEdge& edge,
              const std::vector<std::vector<double>>& cols,
              const std::vector<std::array<std::vector<double>, 2>>& prev_out)
  {
    if (m == 0)
      return { &cols[edge.j], &cols[edge.k] };
    auto pick = [&](size_t v) {
      const auto& a = s.trees_[m - 1][edge.ends[0]];
      size_t p = a.conditions_on(v) ? edge.ends[0] : edge.ends[1];
      const auto& pe = s.trees_[m - 1][p];
      return &prev_out[p][pe.j == v ? 0 : 1];
    };
    return { pick(edge.j), pick(edge.k) };
  }

  // Prim's algorithm maximizing the total weight; ties go to the
  // lexicographically smallest (j, k, cond).
  static std::vector<VineEdge> max_spanning_tree(size_t nodes, const std::vector<Candidate>& cand)
  {
    std::vector<VineEdge> tree;
    std::vector<bool> in(nodes, false);
    in[0] = true;
    for (size_t step = 1; step < nodes; ++step) {
      const VineEdge* best = nullptr;
      double best_w = -1.0;
      for (const auto& c : cand) {
        if (in[c.edge.ends[0]] == in[c.edge.ends[1]])
          continue;
        bool better = c.weight > best_w;
        if (!better && c.weight == best_w) {
          better = std::tie(c.edge.j, c.edge.k, c.edge.cond) <
                   std::tie(best->j, best->k, best->cond);
        }
        if (better) {
          best = &c.edge;
          best_w = c.weight;
        }
      }
      if (best == nullptr)
        throw NumericError("structure selection: candidate graph is disconnected");
      in[best->ends[0]] = in[best->ends[1]] = true;
      tree.push_back(*best);
    }
    return tree;
  }

  void check_input(const Matrix& u) const
  {
    if (static_cast<size_t>(u.cols()) != dim())
      throw DimensionError("vine: expected " + std::to_string(dim()) + " columns, got " +
                           std::to_string(u.cols()));
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (!(u.data()[i] > 0.0 && u.data()[i] < 1.0))
        throw DomainError("vine: values must lie in the open unit cube");
  }

  // Peels variables off the vine: the conditioned variable of the last
  // tree's edge is removed with its edges, leaving a vine on one variable
  // less. The reverse removal order is the simulation order.
  void build_plan()
  {
    const size_t d = dim();
    std::vector<std::vector<bool>> active(d - 1);
    for (size_t m = 0; m + 1 < d; ++m)
      active[m].assign(structure_.tree(m).size(), true);
    std::vector<size_t> removed;
    std::vector<std::vector<EdgeRef>> removed_paths;
    for (size_t r = d; r >= 2; --r) {
      size_t top = r - 2;
      size_t top_edge = 0;
      while (!active[top][top_edge])
        ++top_edge;
      const VineEdge& te = structure_.tree(top)[top_edge];
      bool done = false;
      for (size_t x : { te.k, te.j }) {
        std::vector<EdgeRef> path;
        bool ok = true;
        for (size_t m = 0; m <= top && ok; ++m) {
          size_t count = 0, found = 0;
          for (size_t e = 0; e < structure_.tree(m).size(); ++e) {
            if (!active[m][e])
              continue;
            const auto& edge = structure_.tree(m)[e];
            if (edge.conditions_on(x)) {
              ++count;
              found = e;
            }
            if (std::binary_search(edge.cond.begin(), edge.cond.end(), x))
              ok = false;
          }
          if (count != 1)
            ok = false;
          else
            path.emplace_back(m, found);
        }
        if (!ok)
          continue;
        for (const auto& [m, e] : path)
          active[m][e] = false;
        removed.push_back(x);
        removed_paths.push_back(std::move(path));
        done = true;
        break;
      }
      if (!done)
        throw FormatError("vine model: structure admits no simulation order");
    }
    std::vector<bool> gone(d, false);
    for (size_t x : removed)
      gone[x] = true;
    size_t first = static_cast<size_t>(std::find(gone.begin(), gone.end(), false) - gone.begin());
    order_ = { first };
    paths_ = { {} };
    for (size_t p = removed.size(); p-- > 0;) {
      order_.push_back(removed[p]);
      auto path = removed_paths[p];
      // trees above the truncation level are independence: skip them
      path.resize(std::min(path.size(), trunc_));
      paths_.push_back(std::move(path));
    }
    // offsets for per-row scratch storage
    offsets_.assign(d, 0);
    size_t total = 0;
    for (size_t m = 0; m + 1 < d; ++m) {
      offsets_[m] = total;
      total += structure_.tree(m).size();
    }
    total_edges_ = total;
  }

  // scratch state for processing one observation
  struct Row
  {
    const VineModel& model;
    std::vector<double> u;
    std::vector<std::array<double, 2>> out;

    explicit Row(const VineModel& mdl)
      : model(mdl)
      , u(mdl.dim(), 0.5)
      , out(mdl.total_edges_, { 0.5, 0.5 })
    {}

    Row(const VineModel& mdl, const Matrix& data, size_t i)
      : Row(mdl)
    {
      for (size_t v = 0; v < u.size(); ++v)
        u[v] = data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v));
    }

    double output(size_t m, size_t e, size_t v) const
    {
      const VineEdge& edge = model.structure_.tree(m)[e];
      return out[model.offsets_[m] + e][edge.j == v ? 0 : 1];
    }

    void set_output(size_t m, size_t e, size_t v, double val)
    {
      const VineEdge& edge = model.structure_.tree(m)[e];
      out[model.offsets_[m] + e][edge.j == v ? 0 : 1] = val;
    }

    // value of variable v entering edge (m, e)
    double input(size_t m, size_t e, size_t v) const
    {
      if (m == 0)
        return u[v];
      size_t p = model.structure_.parent_of(m, e, v);
      return output(m - 1, p, v);
    }

    std::pair<double, double> inputs(size_t m, size_t e) const
    {
      const VineEdge& edge = model.structure_.tree(m)[e];
      return { input(m, e, edge.j), input(m, e, edge.k) };
    }

    void forward(size_t m, size_t e)
    {
      auto [x, y] = inputs(m, e);
      const auto& c = model.copulas_[m][e];
      auto& o = out[model.offsets_[m] + e];
      o[0] = clamp_unit(c.hfunc2(x, y));
      o[1] = clamp_unit(c.hfunc1(x, y));
    }
  };

  RVineStructure structure_;
  std::vector<std::vector<BivariateCopula>> copulas_;
  size_t trunc_{ 1 };
  std::vector<size_t> order_;
  std::vector<std::vector<EdgeRef>> paths_;
  std::vector<size_t> offsets_;
  size_t total_edges_{ 0 };
};

//! Kendall's tau; see stats::kendall_tau.
inline double
kendall_tau(std::span<const double> x, std::span<const double> y)
{
  return stats::kendall_tau(x, y);
}

//! selects a vine structure by sequential maximum spanning trees on |tau|,
//! fitting pair-copulas of `family` to obtain the pseudo-observations of
//! higher trees.
inline RVineStructure
select_structure(const Matrix& u, Family family = Family::tll)
{
  return VineModel::fit(u, family, u.cols() - 1).structure();
}

} // namespace vinegen
