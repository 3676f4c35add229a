#include "hierflow/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "hierflow/csv.hpp"
#include "hierflow/error.hpp"

namespace hierflow {

std::optional<NodeId> TypeHierarchy::parent(NodeId n) const {
  if (n == root()) return std::nullopt;
  return parents_[n];
}

std::span<const NodeId> TypeHierarchy::children(NodeId n) const {
  return std::span<const NodeId>(child_ids_).subspan(child_begin_[n],
                                                     child_begin_[n + 1] - child_begin_[n]);
}

std::optional<NodeId> TypeHierarchy::find(std::string_view code) const {
  auto it = index_.find(std::string(code));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId TypeHierarchy::id(std::string_view code) const {
  if (auto n = find(code)) return *n;
  fail(ErrorCode::UnknownCode, "unknown event type code '" + std::string(code) + "'");
}

EventType TypeHierarchy::node(NodeId n) const {
  EventType t{codes_[n], labels_[n], std::nullopt, depths_[n]};
  if (n != root()) t.parent = codes_[parents_[n]];
  return t;
}

std::size_t TypeHierarchy::leaf_count() const {
  std::size_t leaves = 0;
  for (NodeId n = 0; n < size(); ++n) leaves += is_leaf(n) ? 1 : 0;
  return leaves;
}

std::vector<std::string> TypeHierarchy::subtree(std::string_view code) const {
  NodeId n = id(code);
  return {codes_.begin() + n, codes_.begin() + subtree_end_[n]};
}

std::vector<NodeId> TypeHierarchy::ancestor_ids(NodeId n) const {
  std::vector<NodeId> chain;
  while (n != root()) {
    n = parents_[n];
    chain.push_back(n);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<std::string> TypeHierarchy::ancestors(std::string_view code) const {
  std::vector<std::string> out;
  for (NodeId a : ancestor_ids(id(code))) out.push_back(codes_[a]);
  return out;
}

std::vector<HierarchyEdge> TypeHierarchy::edges() const {
  std::vector<HierarchyEdge> out;
  out.reserve(size());
  for (NodeId n = 0; n < size(); ++n) {
    out.push_back({codes_[n], n == root() ? std::string() : codes_[parents_[n]], labels_[n]});
  }
  return out;
}

TypeHierarchy build_hierarchy(std::span<const HierarchyEdge> edges) {
  std::unordered_map<std::string, std::size_t> input_index;
  input_index.reserve(edges.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].code.empty()) fail(ErrorCode::ParseError, "empty event type code");
    if (!input_index.emplace(edges[i].code, i).second) {
      fail(ErrorCode::DuplicateCode, "duplicate event type code '" + edges[i].code + "'");
    }
    if (edges[i].parent.empty()) roots.push_back(i);
  }
  if (roots.empty()) fail(ErrorCode::NoRoot, "hierarchy has no root");
  if (roots.size() > 1) {
    fail(ErrorCode::MultipleRoots, "hierarchy has multiple roots: '" + edges[roots[0]].code +
                                       "' and '" + edges[roots[1]].code + "'");
  }

  std::vector<std::vector<std::size_t>> kids(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].parent.empty()) continue;
    auto it = input_index.find(edges[i].parent);
    if (it == input_index.end()) {
      fail(ErrorCode::MissingParent, "parent '" + edges[i].parent + "' of '" + edges[i].code +
                                         "' does not exist");
    }
    kids[it->second].push_back(i);
  }
  for (auto& k : kids) {
    std::sort(k.begin(), k.end(),
              [&](std::size_t a, std::size_t b) { return edges[a].code < edges[b].code; });
  }

  TypeHierarchy h;
  const std::size_t n = edges.size();
  h.codes_.reserve(n);
  h.labels_.reserve(n);
  h.parents_.reserve(n);
  h.depths_.reserve(n);

  // Preorder walk; anything unreachable from the root sits on a cycle.
  std::vector<std::size_t> assigned(n, n);
  std::vector<std::pair<std::size_t, NodeId>> stack{{roots[0], 0}};
  while (!stack.empty()) {
    auto [input, parent] = stack.back();
    stack.pop_back();
    NodeId id = static_cast<NodeId>(h.codes_.size());
    assigned[input] = id;
    h.codes_.push_back(edges[input].code);
    h.labels_.push_back(edges[input].label.empty() ? edges[input].code : edges[input].label);
    h.parents_.push_back(id == 0 ? 0 : parent);
    h.depths_.push_back(id == 0 ? 0 : h.depths_[parent] + 1);
    for (auto it = kids[input].rbegin(); it != kids[input].rend(); ++it) {
      stack.emplace_back(*it, id);
    }
  }
  if (h.codes_.size() != n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (assigned[i] == n) {
        fail(ErrorCode::CycleDetected, "event type '" + edges[i].code + "' is on a parent cycle");
      }
    }
  }

  std::vector<std::uint32_t> child_count(n, 0);
  for (NodeId id = 1; id < n; ++id) ++child_count[h.parents_[id]];
  h.child_begin_.assign(n + 1, 0);
  for (NodeId id = 0; id < n; ++id) h.child_begin_[id + 1] = h.child_begin_[id] + child_count[id];
  h.child_ids_.resize(n == 0 ? 0 : n - 1);
  std::vector<NodeId> fill(h.child_begin_.begin(), h.child_begin_.end() - 1);
  // Preorder visits children in code order, so appending keeps them sorted.
  for (NodeId id = 1; id < n; ++id) h.child_ids_[fill[h.parents_[id]]++] = id;

  std::vector<NodeId> size(n, 1);
  for (NodeId id = static_cast<NodeId>(n); id-- > 1;) size[h.parents_[id]] += size[id];
  h.subtree_end_.resize(n);
  for (NodeId id = 0; id < n; ++id) h.subtree_end_[id] = id + size[id];

  h.index_.reserve(n);
  for (NodeId id = 0; id < n; ++id) h.index_.emplace(h.codes_[id], id);
  return h;
}

TypeHierarchy derive_prefix_hierarchy(std::span<const std::string> codes) {
  if (codes.empty()) fail(ErrorCode::EmptyInput, "no codes supplied");
  std::set<std::string> all;
  for (const auto& c : codes) {
    if (c.empty()) continue;
    all.insert(c);
    if (auto dot = c.find('.'); dot != std::string::npos) {
      if (dot > 0) all.insert(c.substr(0, dot));
      for (std::size_t len = dot + 2; len < c.size(); ++len) all.insert(c.substr(0, len));
    }
  }
  if (all.empty()) fail(ErrorCode::EmptyInput, "no codes supplied");

  std::vector<HierarchyEdge> edges;
  edges.push_back({std::string(kRootCode), "", "All event types"});
  for (const auto& c : all) {
    std::string parent(kRootCode);
    for (std::size_t len = c.size() - 1; len > 0; --len) {
      if (all.count(c.substr(0, len))) {
        parent = c.substr(0, len);
        break;
      }
    }
    edges.push_back({c, parent, c});
  }
  return build_hierarchy(edges);
}

std::vector<HierarchyEdge> read_hierarchy_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<HierarchyEdge> edges;
  bool first = true;
  while (auto row = reader.next()) {
    if (first) {
      first = false;
      if (!row->empty() && (*row)[0] == "code") continue;
    }
    if (row->size() < 2 || row->size() > 3) {
      fail(ErrorCode::ParseError,
           "hierarchy row " + std::to_string(reader.line()) + ": expected code,parent,label");
    }
    edges.push_back({(*row)[0], (*row)[1], row->size() == 3 ? (*row)[2] : std::string()});
  }
  return edges;
}

void write_hierarchy_csv(std::ostream& out, const TypeHierarchy& hierarchy) {
  csv::write_row(out, {"code", "parent", "label"});
  for (const auto& e : hierarchy.edges()) csv::write_row(out, {e.code, e.parent, e.label});
}

}  // namespace hierflow
