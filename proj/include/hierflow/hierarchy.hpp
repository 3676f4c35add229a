#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hierflow {

using NodeId = std::uint32_t;

struct HierarchyEdge {
  std::string code;
  std::string parent;  // empty for the root
  std::string label;
};

struct EventType {
  std::string code;
  std::string label;
  std::optional<std::string> parent;
  std::uint32_t depth = 0;
};

// Rooted tree of event-type codes.
//
// Nodes are numbered in preorder with children visited in code order, so the
// subtree of node n is the contiguous id range [n, subtree_end(n)) and every
// parent id is smaller than its children's. Bottom-up passes iterate ids in
// reverse. Immutable once built.
class TypeHierarchy {
 public:
  std::size_t size() const { return codes_.size(); }
  NodeId root() const { return 0; }

  const std::string& code(NodeId n) const { return codes_[n]; }
  const std::string& label(NodeId n) const { return labels_[n]; }
  std::optional<NodeId> parent(NodeId n) const;
  std::uint32_t depth(NodeId n) const { return depths_[n]; }
  std::span<const NodeId> children(NodeId n) const;
  bool is_leaf(NodeId n) const { return child_begin_[n] == child_begin_[n + 1]; }
  NodeId subtree_end(NodeId n) const { return subtree_end_[n]; }
  bool contains(NodeId ancestor, NodeId n) const {
    return ancestor <= n && n < subtree_end_[ancestor];
  }

  std::optional<NodeId> find(std::string_view code) const;
  // Throws UnknownCode.
  NodeId id(std::string_view code) const;

  EventType node(NodeId n) const;
  std::size_t leaf_count() const;

  // Codes in the subtree of `code`, including itself, in preorder.
  std::vector<std::string> subtree(std::string_view code) const;
  // Codes from the root down to the parent of `code`.
  std::vector<std::string> ancestors(std::string_view code) const;
  std::vector<NodeId> ancestor_ids(NodeId n) const;

  // Edges in preorder; build_hierarchy(edges()) reproduces this hierarchy.
  std::vector<HierarchyEdge> edges() const;

  bool operator==(const TypeHierarchy& other) const {
    return codes_ == other.codes_ && labels_ == other.labels_ && parents_ == other.parents_;
  }

 private:
  friend TypeHierarchy build_hierarchy(std::span<const HierarchyEdge> edges);

  std::vector<std::string> codes_;
  std::vector<std::string> labels_;
  std::vector<NodeId> parents_;  // root's entry is itself
  std::vector<std::uint32_t> depths_;
  std::vector<NodeId> child_begin_;  // size()+1 offsets into child_ids_
  std::vector<NodeId> child_ids_;
  std::vector<NodeId> subtree_end_;
  std::unordered_map<std::string, NodeId> index_;
};

inline constexpr std::string_view kRootCode = "ROOT";

// Errors: DuplicateCode, MissingParent, MultipleRoots, NoRoot, CycleDetected.
TypeHierarchy build_hierarchy(std::span<const HierarchyEdge> edges);

// Builds a hierarchy from dotted codes such as ICD-10 "I50.41". Every code
// before the dot and every truncation after the dot ("I50", "I50.4") is
// inserted; each node's parent is its longest strict prefix present, and
// codes without one hang off a synthetic ROOT. Throws EmptyInput.
TypeHierarchy derive_prefix_hierarchy(std::span<const std::string> codes);

std::vector<HierarchyEdge> read_hierarchy_csv(std::istream& in);
void write_hierarchy_csv(std::ostream& out, const TypeHierarchy& hierarchy);

}  // namespace hierflow
