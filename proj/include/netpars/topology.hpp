#pragma once
// Rooted labeled tree topologies over one root plus S splitters, and the
// modem attachment that turns a topology into a concrete access network.
// Modems hang off splitters only; the root never carries leaves.

#include <map>
#include <vector>

#include "json.hpp"
#include "netpars/rng.hpp"

namespace netpars {

using NodeId = int;

// A root->splitter or splitter->splitter edge.
struct InternalEdge {
  NodeId parent = -1;
  NodeId child = -1;  // always a splitter
  bool operator==(const InternalEdge&) const = default;
};

// Immutable rooted tree over the root and S >= 1 labeled splitters.
class Topology {
 public:
  Topology(NodeId root, const std::map<NodeId, NodeId>& parent_of_splitter);

  NodeId root() const { return root_; }
  int splitter_count() const { return static_cast<int>(splitters_.size()); }
  const std::vector<NodeId>& splitter_ids() const { return splitters_; }
  bool is_splitter(NodeId id) const { return parent_.contains(id); }
  NodeId parent_of(NodeId splitter) const;
  // Child splitters of a node (root or splitter), ascending by id.
  const std::vector<NodeId>& child_splitters(NodeId node) const;
  // One edge per splitter, ordered by child id.
  std::vector<InternalEdge> internal_edges() const;
  bool has_edge(const InternalEdge& edge) const;
  // The node plus every splitter below it.
  std::vector<NodeId> subtree(NodeId node) const;
  // Parents in splitter_ids() order; the canonical identity of the tree.
  std::vector<NodeId> parent_vector() const;

  nlohmann::ordered_json to_json() const;
  static Topology from_json(const nlohmann::json& j);

  bool operator==(const Topology& other) const {
    return root_ == other.root_ && splitters_ == other.splitters_ && parent_vector() == other.parent_vector();
  }

 private:
  NodeId root_ = 0;
  std::vector<NodeId> splitters_;                 // ascending
  std::map<NodeId, NodeId> parent_;               // splitter -> parent
  std::map<NodeId, std::vector<NodeId>> children_;  // node -> child splitters
};

// All distinct rooted labeled trees on num_internal_total nodes (root id 0,
// splitters 1..n-1), in lexicographic parent-vector order.  Cayley gives
// n^(n-2) of them.
std::vector<Topology> enumerate_topologies(int num_internal_total);

// Uniform draw; reproducible from the rng state.
Topology sample_topology(Rng& rng, const std::vector<Topology>& candidates);

// A topology plus the modem->splitter attachment.  Every modem is parented
// by a splitter and every splitter carries at least one modem.
class NetworkInstance {
 public:
  NetworkInstance(Topology topology, std::vector<NodeId> modem_parent);

  const Topology& topology() const { return topology_; }
  const std::vector<NodeId>& modem_parent() const { return modem_parent_; }
  int modem_count() const { return static_cast<int>(modem_parent_.size()); }
  // Modem ids attached to one splitter, ascending.
  const std::vector<int>& modems_of(NodeId splitter) const;

 private:
  Topology topology_;
  std::vector<NodeId> modem_parent_;
  std::map<NodeId, std::vector<int>> modems_by_splitter_;
};

// Modems attached to any splitter in the subtree rooted at edge.child.
std::vector<int> affected_modems(const NetworkInstance& instance, const InternalEdge& edge);

}  // namespace netpars
