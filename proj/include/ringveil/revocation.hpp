#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ringveil/bytes.hpp"
#include "ringveil/error.hpp"

// Complete-subtree revocation over a heap-indexed binary tree: root = 1,
// children of x are 2x and 2x+1, leaves are [2^h, 2^(h+1) - 1].
namespace ringveil::revocation {

using NodeId = std::uint64_t;
using Epoch = std::uint64_t;

inline constexpr unsigned kMaxHeight = 62;

/// Leaf assignments of the TRC's tree. Pseudonyms are stored by their
/// canonical encoding so the tree is independent of the pairing suite.
class RevocationTree {
 public:
  explicit RevocationTree(unsigned height) : height_(height) {
    if (height < 1 || height > kMaxHeight) throw Error(Errc::InvalidArgument, "tree height out of range");
  }

  unsigned height() const noexcept { return height_; }
  NodeId root() const noexcept { return 1; }
  NodeId first_leaf() const noexcept { return NodeId{1} << height_; }
  NodeId last_leaf() const noexcept { return (NodeId{1} << (height_ + 1)) - 1; }
  std::uint64_t capacity() const noexcept { return NodeId{1} << height_; }
  std::size_t assigned() const noexcept { return by_leaf_.size(); }

  bool is_node(NodeId id) const noexcept { return id >= 1 && id <= last_leaf(); }
  bool is_leaf(NodeId id) const noexcept { return id >= first_leaf() && id <= last_leaf(); }

  /// Assigns the pseudonym to the lowest-numbered empty leaf.
  NodeId assign(const Bytes& pid) {
    if (by_pid_.contains(pid)) throw Error(Errc::DuplicateIdentity, "pseudonym already assigned");
    if (next_free_ > last_leaf()) throw Error(Errc::TreeFull);
    const NodeId leaf = next_free_++;
    by_leaf_.emplace(leaf, pid);
    by_pid_.emplace(pid, leaf);
    return leaf;
  }

  std::optional<NodeId> leaf_of(const Bytes& pid) const {
    auto it = by_pid_.find(pid);
    if (it == by_pid_.end()) return std::nullopt;
    return it->second;
  }

  const Bytes* pid_at(NodeId leaf) const {
    auto it = by_leaf_.find(leaf);
    return it == by_leaf_.end() ? nullptr : &it->second;
  }

  const std::map<NodeId, Bytes>& assignments() const noexcept { return by_leaf_; }

 private:
  unsigned height_;
  NodeId next_free_ = NodeId{1} << height_;
  std::map<NodeId, Bytes> by_leaf_;
  std::map<Bytes, NodeId> by_pid_;
};

/// [leaf, parent(leaf), ..., root]
inline std::vector<NodeId> path(unsigned height, NodeId leaf) {
  const NodeId first = NodeId{1} << height;
  if (leaf < first || leaf > 2 * first - 1) throw Error(Errc::NotALeaf, std::to_string(leaf));
  std::vector<NodeId> out;
  out.reserve(height + 1);
  for (NodeId x = leaf; x >= 1; x >>= 1) out.push_back(x);
  return out;
}

inline std::vector<NodeId> path(const RevocationTree& bt, NodeId leaf) { return path(bt.height(), leaf); }

struct RevocationEntry {
  NodeId leaf;
  Epoch time;
  friend bool operator==(const RevocationEntry&, const RevocationEntry&) = default;
};

class RevocationList {
 public:
  RevocationList() = default;

  /// Validating constructor used by decoders.
  explicit RevocationList(std::vector<RevocationEntry> entries) {
    for (const auto& e : entries) {
      if (contains(e.leaf)) throw Error(Errc::InvalidEncoding, "duplicate revocation entry");
      if (!entries_.empty() && e.time < entries_.back().time)
        throw Error(Errc::InvalidEncoding, "revocation times not monotone");
      entries_.push_back(e);
    }
  }

  const std::vector<RevocationEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool contains(NodeId leaf) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.leaf == leaf; });
  }

  /// Appends (leaf, t). Re-revoking a leaf is a no-op. Times must not go backwards.
  void add(NodeId leaf, Epoch t) {
    if (contains(leaf)) return;
    if (!entries_.empty() && t < entries_.back().time)
      throw Error(Errc::InvalidArgument, "revocation time precedes last entry");
    entries_.push_back({leaf, t});
  }

  friend bool operator==(const RevocationList&, const RevocationList&) = default;

 private:
  std::vector<RevocationEntry> entries_;
};

/// Per-epoch cover handed to RSUs. Cover is sorted ascending.
struct KeyUpdate {
  Epoch epoch = 0;
  std::vector<NodeId> cover;
  friend bool operator==(const KeyUpdate&, const KeyUpdate&) = default;
};

/// Revoke the leaf holding `pid`.
inline void revoke(RevocationList& rl, const RevocationTree& bt, const Bytes& pid, Epoch t) {
  const auto leaf = bt.leaf_of(pid);
  if (!leaf) throw Error(Errc::UnknownPid);
  rl.add(*leaf, t);
}

/// KUNodes: minimal set of nodes whose subtrees hold exactly the leaves not
/// revoked at or before `t`. When every leaf is revoked the cover is empty;
/// the root is returned only when nothing is revoked yet.
inline KeyUpdate kunodes(const RevocationTree& bt, const RevocationList& rl, Epoch t) {
  std::set<NodeId> marked;
  for (const auto& e : rl.entries()) {
    if (e.time > t) continue;
    for (NodeId x : path(bt, e.leaf)) marked.insert(x);
  }

  KeyUpdate ku{t, {}};
  if (marked.empty()) {
    ku.cover.push_back(bt.root());
    return ku;
  }
  std::set<NodeId> cover;
  for (NodeId x : marked) {
    if (bt.is_leaf(x)) continue;
    if (!marked.contains(2 * x)) cover.insert(2 * x);
    if (!marked.contains(2 * x + 1)) cover.insert(2 * x + 1);
  }
  ku.cover.assign(cover.begin(), cover.end());
  return ku;
}

/// A path is authorized iff exactly one of its nodes is in the cover.
inline bool is_authorized(const std::vector<NodeId>& leaf_path, const KeyUpdate& ku) {
  std::size_t hits = 0;
  for (NodeId x : leaf_path)
    if (std::binary_search(ku.cover.begin(), ku.cover.end(), x)) ++hits;
  return hits == 1;
}

/// Checks that `p` is a well-formed leaf-to-root path in a tree of `height`.
inline bool is_well_formed_path(const std::vector<NodeId>& p, unsigned height) {
  if (p.size() != height + 1u) return false;
  const NodeId first = NodeId{1} << height;
  if (p.front() < first || p.front() > 2 * first - 1) return false;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] != p[i - 1] >> 1) return false;
  return p.back() == 1;
}

}  // namespace ringveil::revocation
