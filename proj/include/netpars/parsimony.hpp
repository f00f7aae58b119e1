#pragma once
// Per-timepoint small-parsimony scores of binary leaf matrices on a network:
// exact integer scoring, an exhaustive oracle, and a smooth min-sum
// relaxation with reverse-mode gradients for training.
//
// Leaves (modems) hang off splitters; internal states are free at the root
// and all splitters.  The exact scorer runs the two-state min-sum recursion
//   cost_v(s) = sum_children min(cost_c(s), cost_c(1-s) + 1)
// bottom-up with leaves fixed to the observed column, which equals the
// minimum number of edge changes on trees of any arity.

#include <cstdint>
#include <span>
#include <vector>

#include "netpars/matrix.hpp"
#include "netpars/topology.hpp"

namespace netpars {

// Minimum number of state changes over all internal assignments, leaves
// fixed to `column` (one bit per modem).
int fitch_column(const NetworkInstance& instance, std::span<const std::uint8_t> column);

// fitch_column applied to every column of X.
std::vector<int> parsimony_vector(const NetworkInstance& instance, const EventMatrix& x);

// Exhaustive oracle: tries all 2^(1+S) internal assignments and counts
// mismatched edges directly.  Requires 1+S <= 20.
int brute_force_column(const NetworkInstance& instance, std::span<const std::uint8_t> column);
std::vector<int> brute_force_vector(const NetworkInstance& instance, const EventMatrix& x);

// Smooth relaxation: per column, a min-sum dynamic program over states {0,1}
// where every min is replaced by
//   softmin_b(a,b) = -(1/beta) log(exp(-beta a) + exp(-beta b))
// and leaf costs are p (state 0) and 1-p (state 1).  Differentiable in P
// everywhere; approaches the exact score from below as beta grows.
class SoftParsimony {
 public:
  SoftParsimony(const NetworkInstance& instance, const ProbMatrix& p, double beta);

  const std::vector<double>& scores() const { return scores_; }
  double beta() const { return beta_; }

  // dLoss/dP given dLoss/dscores, replaying the recorded softmin weights.
  Matrix<double> backward(std::span<const double> score_grads) const;

 private:
  struct PlanNode {
    std::vector<int> child_nodes;  // indices into nodes_, already processed
    std::vector<int> modems;
  };
  std::vector<PlanNode> nodes_;  // bottom-up order, root last
  int num_modems_ = 0;
  int num_timepoints_ = 0;
  double beta_ = 0;
  int stride_ = 0;               // weights per column: 2*(S+M) + 1
  std::vector<double> weights_;  // recorded softmin weights, per column
  std::vector<double> scores_;
};

// Convenience wrapper matching the scoring-only call shape.
std::vector<double> soft_parsimony_vector(const NetworkInstance& instance, const ProbMatrix& p, double beta);

}  // namespace netpars
