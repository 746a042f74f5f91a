#ifndef COULOMB_NETWORK_SIMPLEX_HPP
#define COULOMB_NETWORK_SIMPLEX_HPP

// Primal network simplex for the dense transportation problem
//
//   min sum_ij c_ij f_ij  s.t.  sum_j f_ij = a_i,  sum_i f_ij = b_j,  f >= 0
//
// on the complete bipartite graph. Spanning-tree bookkeeping (parent, pred,
// thread, rev_thread, succ_num, last_succ) and the block-search pivot rule
// follow the LEMON implementation. Arcs are uncapacitated, so only tree arcs
// carry flow; it is stored per node (the flow on the node's pred arc).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace coulomb {

struct TransportFlow {
  std::size_t source = 0;
  std::size_t sink = 0;
  double mass = 0.0;
};

struct TransportSolution {
  double cost = 0.0;
  std::vector<TransportFlow> flows;
  // Dual variables with alpha_i + beta_j <= c_ij and equality on the support.
  std::vector<double> alpha;
  std::vector<double> beta;
  std::size_t iterations = 0;
};

class NetworkSimplex {
 public:
  // cost(i, j) is queried once per arc.
  NetworkSimplex(std::vector<double> supply, std::vector<double> demand,
                 const std::function<double(std::size_t, std::size_t)>& cost)
      : ns_(supply.size()), nd_(demand.size()) {
    if (ns_ == 0 || nd_ == 0) throw std::invalid_argument("NetworkSimplex: empty marginal");
    double total_a = 0.0, total_b = 0.0;
    for (double v : supply) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("NetworkSimplex: bad supply");
      total_a += v;
    }
    for (double v : demand) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("NetworkSimplex: bad demand");
      total_b += v;
    }
    if (std::abs(total_a - total_b) > 1e-9 * std::max(1.0, total_a))
      throw std::invalid_argument("NetworkSimplex: unbalanced marginals");
    arc_num_ = ns_ * nd_;
    cost_.resize(arc_num_);
    double max_cost = 0.0;
    for (std::size_t i = 0; i < ns_; ++i) {
      for (std::size_t j = 0; j < nd_; ++j) {
        const double c = cost(i, j);
        if (!std::isfinite(c)) throw std::invalid_argument("NetworkSimplex: non-finite cost");
        cost_[i * nd_ + j] = c;
        max_cost = std::max(max_cost, std::abs(c));
      }
    }
    epsilon_ = 1e-12 * std::max(1.0, max_cost);
    node_num_ = static_cast<int>(ns_ + nd_);
    supply_.resize(node_num_ + 1);
    for (std::size_t i = 0; i < ns_; ++i) supply_[i] = supply[i];
    for (std::size_t j = 0; j < nd_; ++j) supply_[ns_ + j] = -demand[j];
    art_cost_ = (max_cost + 1.0) * node_num_;
  }

  TransportSolution solve(std::size_t max_iterations = 0) {
    init();
    if (max_iterations == 0) max_iterations = 100 * arc_num_ + 1000000;
    std::size_t iterations = 0;
    while (find_entering_arc()) {
      if (++iterations > max_iterations)
        throw std::runtime_error("NetworkSimplex: iteration limit reached");
      find_join_node();
      find_leaving_arc();
      change_flow();
      update_tree_structure();
      update_potential();
    }
    TransportSolution out;
    out.iterations = iterations;
    // Artificial arcs must be empty up to rounding of the input masses.
    for (int u = 0; u < node_num_; ++u) {
      if (pred_[u] >= static_cast<std::int64_t>(arc_num_) && node_flow_[u] > 1e-9)
        throw std::runtime_error("NetworkSimplex: infeasible problem (residual " +
                                 std::to_string(node_flow_[u]) + ")");
    }
    for (int u = 0; u < node_num_; ++u) {
      const std::int64_t e = pred_[u];
      if (e < 0 || e >= static_cast<std::int64_t>(arc_num_) || node_flow_[u] <= 0.0) continue;
      const std::size_t i = static_cast<std::size_t>(e) / nd_, j = static_cast<std::size_t>(e) % nd_;
      out.flows.push_back({i, j, node_flow_[u]});
      out.cost += node_flow_[u] * cost_[e];
    }
    std::sort(out.flows.begin(), out.flows.end(), [](const TransportFlow& a, const TransportFlow& b) {
      return a.source != b.source ? a.source < b.source : a.sink < b.sink;
    });
    out.alpha.resize(ns_);
    out.beta.resize(nd_);
    for (std::size_t i = 0; i < ns_; ++i) out.alpha[i] = -pi_[i];
    for (std::size_t j = 0; j < nd_; ++j) out.beta[j] = pi_[ns_ + j];
    return out;
  }

 private:
  static constexpr int kUp = 1;
  static constexpr int kDown = -1;

  [[nodiscard]] int source(std::int64_t e) const {
    if (e < static_cast<std::int64_t>(arc_num_)) return static_cast<int>(static_cast<std::size_t>(e) / nd_);
    return art_source_[e - arc_num_];
  }
  [[nodiscard]] int target(std::int64_t e) const {
    if (e < static_cast<std::int64_t>(arc_num_))
      return static_cast<int>(ns_ + static_cast<std::size_t>(e) % nd_);
    return art_target_[e - arc_num_];
  }
  [[nodiscard]] double arc_cost(std::int64_t e) const {
    return e < static_cast<std::int64_t>(arc_num_) ? cost_[e] : art_cost_arc_[e - arc_num_];
  }

  void init() {
    const int n = node_num_;
    root_ = n;
    parent_.assign(n + 1, -1);
    pred_.assign(n + 1, -1);
    thread_.assign(n + 1, 0);
    rev_thread_.assign(n + 1, 0);
    succ_num_.assign(n + 1, 0);
    last_succ_.assign(n + 1, 0);
    pred_dir_.assign(n + 1, kUp);
    pi_.assign(n + 1, 0.0);
    node_flow_.assign(n + 1, 0.0);
    art_source_.assign(n, 0);
    art_target_.assign(n, 0);
    art_cost_arc_.assign(n, 0.0);

    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = n + 1;
    last_succ_[root_] = root_ - 1;
    for (int u = 0; u < n; ++u) {
      const int a = u;  // artificial arc index offset
      parent_[u] = root_;
      pred_[u] = static_cast<std::int64_t>(arc_num_) + a;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      if (supply_[u] >= 0.0) {
        pred_dir_[u] = kUp;
        pi_[u] = 0.0;
        art_source_[a] = u;
        art_target_[a] = root_;
        node_flow_[u] = supply_[u];
        art_cost_arc_[a] = 0.0;
      } else {
        pred_dir_[u] = kDown;
        pi_[u] = art_cost_;
        art_source_[a] = root_;
        art_target_[a] = u;
        node_flow_[u] = -supply_[u];
        art_cost_arc_[a] = art_cost_;
      }
    }
    block_size_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::sqrt(static_cast<double>(arc_num_))));
    next_arc_ = 0;
  }

  // Block search over rows. Tree arcs have zero reduced cost and all other
  // arcs sit at their lower bound, so no state test is needed.
  bool find_entering_arc() {
    double min = -epsilon_;
    std::int64_t best = -1;
    std::size_t row = next_arc_ / nd_;
    std::size_t col = next_arc_ % nd_;
    std::size_t scanned = 0, in_block = 0;
    const double* pi_sink = pi_.data() + ns_;
    while (scanned < arc_num_) {
      const std::size_t len = std::min(nd_ - col, block_size_ - in_block);
      const double* c = cost_.data() + row * nd_;
      const double shift = pi_[row];
      for (std::size_t j = col; j < col + len; ++j) {
        const double r = c[j] + shift - pi_sink[j];
        if (r < min) {
          min = r;
          best = static_cast<std::int64_t>(row * nd_ + j);
        }
      }
      scanned += len;
      in_block += len;
      col += len;
      if (col == nd_) {
        col = 0;
        if (++row == ns_) row = 0;
      }
      if (in_block == block_size_) {
        if (best >= 0) break;
        in_block = 0;
      }
    }
    if (best < 0) return false;
    in_arc_ = best;
    next_arc_ = row * nd_ + col;
    return true;
  }

  void find_join_node() {
    int u = source(in_arc_), v = target(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  void find_leaving_arc() {
    // Entering arc is at its lower bound, so the cycle follows its direction.
    first_ = source(in_arc_);
    second_ = target(in_arc_);
    delta_ = std::numeric_limits<double>::infinity();
    int result = 0;
    for (int u = first_; u != join_; u = parent_[u]) {
      if (pred_dir_[u] == kUp && node_flow_[u] < delta_) {
        delta_ = node_flow_[u];
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second_; u != join_; u = parent_[u]) {
      if (pred_dir_[u] == kDown && node_flow_[u] <= delta_) {
        delta_ = node_flow_[u];
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw std::logic_error("NetworkSimplex: unbounded cycle");
    if (result == 1) {
      u_in_ = first_;
      v_in_ = second_;
    } else {
      u_in_ = second_;
      v_in_ = first_;
    }
  }

  void change_flow() {
    if (delta_ > 0.0) {
      for (int u = source(in_arc_); u != join_; u = parent_[u]) node_flow_[u] -= pred_dir_[u] * delta_;
      for (int u = target(in_arc_); u != join_; u = parent_[u]) node_flow_[u] += pred_dir_[u] * delta_;
    }
    node_flow_[u_out_] = 0.0;
    in_flow_ = delta_;
  }

  void update_tree_structure() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
      node_flow_[u_in_] = in_flow_;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      // When old_rev_thread == v_in, join and v_out coincide.
      const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

      // Re-hang the stem u_in -> ... -> u_out under v_in.
      int stem = u_in_;
      int par_stem = v_in_;
      int next_stem = 0;
      int last = last_succ_[u_in_];
      int before = 0, after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);

        before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;

        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;

        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;

      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      // Shift pred arcs (and their flows) along the reversed stem.
      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        node_flow_[u] = node_flow_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kUp : kDown;
      node_flow_[u_in_] = in_flow_;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  std::size_t ns_, nd_, arc_num_ = 0;
  int node_num_ = 0;
  int root_ = 0;
  double epsilon_ = 0.0;
  double art_cost_ = 0.0;
  std::vector<double> cost_;
  std::vector<double> supply_;
  std::vector<int> art_source_, art_target_;
  std::vector<double> art_cost_arc_;

  std::vector<int> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<int> thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
  std::vector<double> pi_;
  std::vector<double> node_flow_;
  std::vector<int> dirty_revs_;

  std::size_t block_size_ = 10;
  std::size_t next_arc_ = 0;
  std::int64_t in_arc_ = 0;
  int join_ = 0, first_ = 0, second_ = 0;
  int u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0, in_flow_ = 0.0;
};

}  // namespace coulomb

#endif  // COULOMB_NETWORK_SIMPLEX_HPP
