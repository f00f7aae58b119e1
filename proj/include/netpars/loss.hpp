#pragma once
// Contrastive parsimony loss: the summed score of the true topology plus a
// pairwise repulsion term over all candidate score vectors,
//   L = sum_j pos[j] + (alpha/2) sqrt( sum_{g1 != g2} 1 / (||P_g1 - P_g2||^2 + 1)^2 ),
// where the double sum runs over ordered pairs from {pos} union negatives.
// Small pairwise distances are punished, large ones rewarded.

#include <span>
#include <vector>

#include "netpars/rng.hpp"
#include "netpars/topology.hpp"

namespace netpars {

struct LossConfig {
  double alpha = 2.0;
  int num_negatives = -1;  // -1: all non-true topologies

  void validate() const;
};

struct ContrastiveLoss {
  double value = 0;
  double term1 = 0;  // summed positive parsimony
  double term2 = 0;  // pairwise repulsion
  std::vector<double> grad_pos;               // dL/dpos[j]
  std::vector<std::vector<double>> grad_negs; // dL/dnegs[k][j]
};

ContrastiveLoss contrastive_loss(std::span<const double> pos, const std::vector<std::vector<double>>& negs,
                                 double alpha);

// Uniform without replacement from all topologies except the true one.
std::vector<int> sample_negatives(int num_topologies, int true_topology, int k, Rng& rng);
std::vector<Topology> sample_negatives(const std::vector<Topology>& all, const Topology& true_topology, int k,
                                       Rng& rng);

}  // namespace netpars
