#include "netpars/topology.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace netpars {

Topology::Topology(NodeId root, const std::map<NodeId, NodeId>& parent_of_splitter) : root_(root), parent_(parent_of_splitter) {
  if (parent_.empty()) throw std::invalid_argument("Topology: at least one splitter required");
  if (parent_.contains(root_)) throw std::invalid_argument("Topology: root must not have a parent");

  for (const auto& [child, parent] : parent_) {
    splitters_.push_back(child);
    if (parent != root_ && !parent_.contains(parent))
      throw std::invalid_argument("Topology: parent " + std::to_string(parent) + " of splitter " + std::to_string(child) +
                                  " is not a node");
    if (parent == child) throw std::invalid_argument("Topology: splitter cannot be its own parent");
  }

  // Every splitter must reach the root; bounded walk catches cycles.
  const int n = splitter_count() + 1;
  for (NodeId s : splitters_) {
    NodeId cur = s;
    int steps = 0;
    while (cur != root_) {
      cur = parent_.at(cur);
      if (++steps > n) throw std::invalid_argument("Topology: cycle detected at splitter " + std::to_string(s));
    }
  }

  children_[root_] = {};
  for (NodeId s : splitters_) children_[s] = {};
  for (const auto& [child, parent] : parent_) children_[parent].push_back(child);
  for (auto& [node, kids] : children_) std::sort(kids.begin(), kids.end());
}

NodeId Topology::parent_of(NodeId splitter) const {
  auto it = parent_.find(splitter);
  if (it == parent_.end()) throw std::invalid_argument("Topology: unknown splitter " + std::to_string(splitter));
  return it->second;
}

const std::vector<NodeId>& Topology::child_splitters(NodeId node) const {
  auto it = children_.find(node);
  if (it == children_.end()) throw std::invalid_argument("Topology: unknown node " + std::to_string(node));
  return it->second;
}

std::vector<InternalEdge> Topology::internal_edges() const {
  std::vector<InternalEdge> edges;
  edges.reserve(splitters_.size());
  for (NodeId s : splitters_) edges.push_back({parent_.at(s), s});
  return edges;
}

bool Topology::has_edge(const InternalEdge& edge) const {
  auto it = parent_.find(edge.child);
  return it != parent_.end() && it->second == edge.parent;
}

std::vector<NodeId> Topology::subtree(NodeId node) const {
  if (node != root_ && !parent_.contains(node)) throw std::invalid_argument("Topology: unknown node " + std::to_string(node));
  std::vector<NodeId> result;
  std::vector<NodeId> stack{node};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    result.push_back(cur);
    for (NodeId child : children_.at(cur)) stack.push_back(child);
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<NodeId> Topology::parent_vector() const {
  std::vector<NodeId> v;
  v.reserve(splitters_.size());
  for (NodeId s : splitters_) v.push_back(parent_.at(s));
  return v;
}

nlohmann::ordered_json Topology::to_json() const {
  nlohmann::ordered_json j;
  j["root"] = root_;
  nlohmann::ordered_json parents = nlohmann::ordered_json::object();
  for (NodeId s : splitters_) parents[std::to_string(s)] = parent_.at(s);
  j["parents"] = parents;
  return j;
}

Topology Topology::from_json(const nlohmann::json& j) {
  std::map<NodeId, NodeId> parents;
  for (const auto& [key, value] : j.at("parents").items()) parents[std::stoi(key)] = value.get<NodeId>();
  return Topology(j.at("root").get<NodeId>(), parents);
}

std::vector<Topology> enumerate_topologies(int num_internal_total) {
  if (num_internal_total < 2 || num_internal_total > 8)
    throw std::invalid_argument("enumerate_topologies: num_internal_total must be in [2, 8]");

  const int n = num_internal_total;
  const int s = n - 1;  // splitters 1..s, root 0

  // Candidate parents per splitter, ascending, so the odometer emits parent
  // vectors in lexicographic order.
  std::vector<std::vector<NodeId>> choices(s);
  for (int i = 1; i <= s; ++i)
    for (int p = 0; p < n; ++p)
      if (p != i) choices[i - 1].push_back(p);

  std::vector<Topology> result;
  std::vector<int> idx(s, 0);
  for (;;) {
    std::map<NodeId, NodeId> parents;
    for (int i = 0; i < s; ++i) parents[i + 1] = choices[i][idx[i]];

    // Keep acyclic assignments only (every splitter reaches the root).
    bool acyclic = true;
    for (int start = 1; start <= s && acyclic; ++start) {
      NodeId cur = start;
      int steps = 0;
      while (cur != 0) {
        cur = parents[cur];
        if (++steps > n) {
          acyclic = false;
          break;
        }
      }
    }
    if (acyclic) result.emplace_back(0, parents);

    int pos = s - 1;
    while (pos >= 0 && ++idx[pos] == static_cast<int>(choices[pos].size())) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return result;
}

Topology sample_topology(Rng& rng, const std::vector<Topology>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("sample_topology: empty candidate list");
  return candidates[rng.next_below(candidates.size())];
}

NetworkInstance::NetworkInstance(Topology topology, std::vector<NodeId> modem_parent)
    : topology_(std::move(topology)), modem_parent_(std::move(modem_parent)) {
  if (modem_parent_.empty()) throw std::invalid_argument("NetworkInstance: at least one modem required");
  for (NodeId s : topology_.splitter_ids()) modems_by_splitter_[s] = {};
  for (int m = 0; m < modem_count(); ++m) {
    NodeId p = modem_parent_[m];
    if (!topology_.is_splitter(p))
      throw std::invalid_argument("NetworkInstance: modem " + std::to_string(m) + " must be attached to a splitter");
    modems_by_splitter_[p].push_back(m);
  }
  for (const auto& [splitter, modems] : modems_by_splitter_)
    if (modems.empty())
      throw std::invalid_argument("NetworkInstance: splitter " + std::to_string(splitter) + " has no modems");
}

const std::vector<int>& NetworkInstance::modems_of(NodeId splitter) const {
  auto it = modems_by_splitter_.find(splitter);
  if (it == modems_by_splitter_.end())
    throw std::invalid_argument("NetworkInstance: unknown splitter " + std::to_string(splitter));
  return it->second;
}

std::vector<int> affected_modems(const NetworkInstance& instance, const InternalEdge& edge) {
  if (!instance.topology().has_edge(edge))
    throw std::invalid_argument("affected_modems: edge " + std::to_string(edge.parent) + "->" + std::to_string(edge.child) +
                                " is not in the topology");
  std::vector<int> result;
  for (NodeId s : instance.topology().subtree(edge.child)) {
    const auto& modems = instance.modems_of(s);
    result.insert(result.end(), modems.begin(), modems.end());
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace netpars
