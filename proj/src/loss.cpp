#include "netpars/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netpars {

void LossConfig::validate() const {
  if (alpha < 0) throw std::invalid_argument("LossConfig: alpha must be >= 0");
  if (num_negatives != -1 && num_negatives < 1)
    throw std::invalid_argument("LossConfig: num_negatives must be >= 1 (or -1 for all)");
}

ContrastiveLoss contrastive_loss(std::span<const double> pos, const std::vector<std::vector<double>>& negs,
                                 double alpha) {
  if (negs.empty()) throw std::invalid_argument("contrastive_loss: at least one negative required");
  const std::size_t t = pos.size();
  for (const auto& v : negs)
    if (v.size() != t) throw std::invalid_argument("contrastive_loss: score vector length mismatch");

  ContrastiveLoss out;
  out.term1 = std::accumulate(pos.begin(), pos.end(), 0.0);
  out.grad_pos.assign(t, 1.0);
  out.grad_negs.assign(negs.size(), std::vector<double>(t, 0.0));

  // Member 0 is the positive, then the negatives in order.
  const int n = static_cast<int>(negs.size()) + 1;
  auto member = [&](int g) -> std::span<const double> {
    if (g == 0) return pos;
    return negs[g - 1];
  };

  // Squared pairwise distances over unordered pairs; each contributes twice
  // to the ordered double sum, which the alpha/2 prefactor expects.
  std::vector<double> dist2(static_cast<std::size_t>(n) * n, 0.0);
  double pair_sum = 0.0;
  for (int g1 = 0; g1 < n; ++g1) {
    for (int g2 = g1 + 1; g2 < n; ++g2) {
      const auto a = member(g1);
      const auto b = member(g2);
      double d2 = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        const double d = a[j] - b[j];
        d2 += d * d;
      }
      dist2[g1 * n + g2] = d2;
      const double base = 1.0 / (d2 + 1.0);
      pair_sum += 2.0 * base * base;
    }
  }
  const double root = std::sqrt(pair_sum);
  out.term2 = 0.5 * alpha * root;
  out.value = out.term1 + out.term2;
  if (alpha == 0.0 || root == 0.0) return out;

  // d term2 / d member_g[j]:
  //   term2 = (alpha/2) sqrt(S), S = sum over ordered pairs of (d2+1)^-2,
  //   dS/d d2(g1,g2) = -4 (d2+1)^-3 per unordered pair, d d2/d a[j] = 2(a-b).
  auto grad_of = [&](int g) -> std::vector<double>& { return g == 0 ? out.grad_pos : out.grad_negs[g - 1]; };
  const double scale = 0.5 * alpha / (2.0 * root);
  for (int g1 = 0; g1 < n; ++g1) {
    for (int g2 = g1 + 1; g2 < n; ++g2) {
      const double d2 = dist2[g1 * n + g2];
      const double base = 1.0 / (d2 + 1.0);
      const double dS = -4.0 * base * base * base;
      const auto a = member(g1);
      const auto b = member(g2);
      auto& ga = grad_of(g1);
      auto& gb = grad_of(g2);
      for (std::size_t j = 0; j < t; ++j) {
        const double contrib = scale * dS * 2.0 * (a[j] - b[j]);
        ga[j] += contrib;
        gb[j] -= contrib;
      }
    }
  }
  return out;
}

std::vector<int> sample_negatives(int num_topologies, int true_topology, int k, Rng& rng) {
  if (true_topology < 0 || true_topology >= num_topologies)
    throw std::invalid_argument("sample_negatives: true topology index out of range");
  if (k < 1 || k > num_topologies - 1)
    throw std::invalid_argument("sample_negatives: k must be in [1, candidates-1]");

  std::vector<int> pool;
  pool.reserve(num_topologies - 1);
  for (int i = 0; i < num_topologies; ++i)
    if (i != true_topology) pool.push_back(i);

  // Partial Fisher-Yates.
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::vector<Topology> sample_negatives(const std::vector<Topology>& all, const Topology& true_topology, int k,
                                       Rng& rng) {
  const auto it = std::find(all.begin(), all.end(), true_topology);
  if (it == all.end()) throw std::invalid_argument("sample_negatives: true topology not among candidates");
  const auto ids = sample_negatives(static_cast<int>(all.size()), static_cast<int>(it - all.begin()), k, rng);
  std::vector<Topology> result;
  result.reserve(ids.size());
  for (int id : ids) result.push_back(all[id]);
  return result;
}

}  // namespace netpars
