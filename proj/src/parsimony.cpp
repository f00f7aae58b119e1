#include "netpars/parsimony.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace netpars {

namespace {

struct PlanNode {
  std::vector<int> child_nodes;
  std::vector<int> modems;
};

// Internal nodes in bottom-up (post) order, root last, with child links as
// indices into the order.  Shared by the exact and soft scorers.
std::vector<PlanNode> build_plan(const NetworkInstance& instance) {
  const Topology& topo = instance.topology();
  std::vector<PlanNode> nodes;
  std::map<NodeId, int> index_of;

  // Iterative post-order from the root.
  std::vector<std::pair<NodeId, bool>> stack{{topo.root(), false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      PlanNode node;
      for (NodeId c : topo.child_splitters(id)) node.child_nodes.push_back(index_of.at(c));
      if (id != topo.root()) node.modems = instance.modems_of(id);
      index_of[id] = static_cast<int>(nodes.size());
      nodes.push_back(std::move(node));
    } else {
      stack.push_back({id, true});
      for (NodeId c : topo.child_splitters(id)) stack.push_back({c, false});
    }
  }
  return nodes;
}

void check_column(const NetworkInstance& instance, std::span<const std::uint8_t> column) {
  if (static_cast<int>(column.size()) != instance.modem_count())
    throw std::invalid_argument("parsimony: column length does not match modem count");
  for (std::uint8_t b : column)
    if (b > 1) throw std::invalid_argument("parsimony: column entries must be 0 or 1");
}

int fitch_column_planned(const std::vector<PlanNode>& nodes, std::span<const std::uint8_t> column) {
  std::vector<int> cost0(nodes.size()), cost1(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    int c0 = 0, c1 = 0;
    for (int m : nodes[i].modems) (column[m] ? c0 : c1) += 1;
    for (int u : nodes[i].child_nodes) {
      c0 += std::min(cost0[u], cost1[u] + 1);
      c1 += std::min(cost0[u] + 1, cost1[u]);
    }
    cost0[i] = c0;
    cost1[i] = c1;
  }
  return std::min(cost0.back(), cost1.back());
}

struct SoftMin {
  double value;
  double weight_first;  // d value / d first argument
};

SoftMin softmin(double a, double b, double beta) {
  if (a <= b) {
    const double e = std::exp(-beta * (b - a));
    return {a - std::log1p(e) / beta, 1.0 / (1.0 + e)};
  }
  const double e = std::exp(-beta * (a - b));
  return {b - std::log1p(e) / beta, e / (1.0 + e)};
}

}  // namespace

int fitch_column(const NetworkInstance& instance, std::span<const std::uint8_t> column) {
  check_column(instance, column);
  return fitch_column_planned(build_plan(instance), column);
}

std::vector<int> parsimony_vector(const NetworkInstance& instance, const EventMatrix& x) {
  if (x.rows() != instance.modem_count())
    throw std::invalid_argument("parsimony_vector: matrix rows do not match modem count");
  const auto nodes = build_plan(instance);
  std::vector<std::uint8_t> column(x.rows());
  std::vector<int> scores(x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    for (int m = 0; m < x.rows(); ++m) {
      column[m] = x(m, j);
      if (column[m] > 1) throw std::invalid_argument("parsimony_vector: entries must be 0 or 1");
    }
    scores[j] = fitch_column_planned(nodes, column);
  }
  return scores;
}

int brute_force_column(const NetworkInstance& instance, std::span<const std::uint8_t> column) {
  check_column(instance, column);
  const Topology& topo = instance.topology();
  const int s = topo.splitter_count();
  if (1 + s > 20) throw std::length_error("brute_force_column: more than 20 internal nodes");

  // Bit positions: root first, then splitters in id order.
  std::map<NodeId, int> bit_of{{topo.root(), 0}};
  for (int i = 0; i < s; ++i) bit_of[topo.splitter_ids()[i]] = i + 1;

  int best = std::numeric_limits<int>::max();
  for (std::uint32_t mask = 0; mask < (1u << (1 + s)); ++mask) {
    int changes = 0;
    for (const InternalEdge& e : topo.internal_edges()) {
      const int sp = (mask >> bit_of.at(e.parent)) & 1;
      const int sc = (mask >> bit_of.at(e.child)) & 1;
      changes += (sp != sc);
    }
    for (int m = 0; m < instance.modem_count(); ++m) {
      const int sp = (mask >> bit_of.at(instance.modem_parent()[m])) & 1;
      changes += (sp != column[m]);
    }
    best = std::min(best, changes);
  }
  return best;
}

std::vector<int> brute_force_vector(const NetworkInstance& instance, const EventMatrix& x) {
  if (x.rows() != instance.modem_count())
    throw std::invalid_argument("brute_force_vector: matrix rows do not match modem count");
  std::vector<std::uint8_t> column(x.rows());
  std::vector<int> scores(x.cols());
  for (int j = 0; j < x.cols(); ++j) {
    for (int m = 0; m < x.rows(); ++m) column[m] = x(m, j);
    scores[j] = brute_force_column(instance, column);
  }
  return scores;
}

SoftParsimony::SoftParsimony(const NetworkInstance& instance, const ProbMatrix& p, double beta) {
  if (beta <= 0) throw std::invalid_argument("SoftParsimony: beta must be positive");
  if (p.rows() != instance.modem_count())
    throw std::invalid_argument("SoftParsimony: matrix rows do not match modem count");

  const auto plan = build_plan(instance);
  nodes_.resize(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) nodes_[i] = {plan[i].child_nodes, plan[i].modems};

  num_modems_ = p.rows();
  num_timepoints_ = p.cols();
  beta_ = beta;

  // Slot layout per column: child-splitter slots are 0..S-1 (splitters are
  // nodes_ indices except the root, which is last), modem slot for modem m
  // is S+m, and the final root softmin sits at 2*(S+M).
  const int num_splitters = static_cast<int>(nodes_.size()) - 1;
  stride_ = 2 * (num_splitters + num_modems_) + 1;
  weights_.assign(static_cast<std::size_t>(stride_) * num_timepoints_, 0.0);
  scores_.assign(num_timepoints_, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int j = 0; j < num_timepoints_; ++j) {
    double* w = weights_.data() + static_cast<std::size_t>(j) * stride_;
    std::vector<double> cost0(nodes_.size()), cost1(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      double c0 = 0.0, c1 = 0.0;
      for (int m : nodes_[i].modems) {
        const double pm = p(m, j);
        // Leaf costs: pm for state 0, 1-pm for state 1.
        const SoftMin s0 = softmin(pm, (1.0 - pm) + 1.0, beta_);
        const SoftMin s1 = softmin(pm + 1.0, 1.0 - pm, beta_);
        c0 += s0.value;
        c1 += s1.value;
        w[2 * (num_splitters + m) + 0] = s0.weight_first;
        w[2 * (num_splitters + m) + 1] = s1.weight_first;
      }
      for (int u : nodes_[i].child_nodes) {
        const SoftMin s0 = softmin(cost0[u], cost1[u] + 1.0, beta_);
        const SoftMin s1 = softmin(cost0[u] + 1.0, cost1[u], beta_);
        c0 += s0.value;
        c1 += s1.value;
        w[2 * u + 0] = s0.weight_first;
        w[2 * u + 1] = s1.weight_first;
      }
      cost0[i] = c0;
      cost1[i] = c1;
    }
    const SoftMin root = softmin(cost0.back(), cost1.back(), beta_);
    scores_[j] = root.value;
    w[2 * (num_splitters + num_modems_)] = root.weight_first;
  }
}

Matrix<double> SoftParsimony::backward(std::span<const double> score_grads) const {
  if (static_cast<int>(score_grads.size()) != num_timepoints_)
    throw std::invalid_argument("SoftParsimony::backward: gradient length mismatch");

  const int num_splitters = static_cast<int>(nodes_.size()) - 1;
  Matrix<double> dp(num_modems_, num_timepoints_, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int j = 0; j < num_timepoints_; ++j) {
    const double* w = weights_.data() + static_cast<std::size_t>(j) * stride_;
    std::vector<double> g0(nodes_.size(), 0.0), g1(nodes_.size(), 0.0);
    const double seed = score_grads[j];
    const double wr = w[2 * (num_splitters + num_modems_)];
    g0.back() = seed * wr;
    g1.back() = seed * (1.0 - wr);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      for (int u : nodes_[i].child_nodes) {
        const double w00 = w[2 * u + 0];
        const double w01 = w[2 * u + 1];
        g0[u] += g0[i] * w00 + g1[i] * w01;
        g1[u] += g0[i] * (1.0 - w00) + g1[i] * (1.0 - w01);
      }
      for (int m : nodes_[i].modems) {
        const double w0 = w[2 * (num_splitters + m) + 0];
        const double w1 = w[2 * (num_splitters + m) + 1];
        const double gc0 = g0[i] * w0 + g1[i] * w1;
        const double gc1 = g0[i] * (1.0 - w0) + g1[i] * (1.0 - w1);
        dp(m, j) = gc0 - gc1;
      }
    }
  }
  return dp;
}

std::vector<double> soft_parsimony_vector(const NetworkInstance& instance, const ProbMatrix& p, double beta) {
  return SoftParsimony(instance, p, beta).scores();
}

}  // namespace netpars
