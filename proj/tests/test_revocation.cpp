#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "ringveil/random.hpp"
#include "ringveil/revocation.hpp"

using namespace ringveil;
using namespace ringveil::revocation;

namespace {

// Minimal complete-subtree cover by direct recursion: a subtree with no
// revoked leaf is taken whole, a fully revoked one contributes nothing.
void oracle_cover(NodeId x, unsigned height, const std::set<NodeId>& revoked, std::set<NodeId>& out) {
  const unsigned depth = static_cast<unsigned>(std::bit_width(x)) - 1;
  const unsigned below = height - depth;
  const NodeId lo = x << below;
  const NodeId hi = ((x + 1) << below) - 1;
  const auto first = revoked.lower_bound(lo);
  const std::size_t hits = static_cast<std::size_t>(std::distance(first, revoked.upper_bound(hi)));
  if (hits == 0) {
    out.insert(x);
    return;
  }
  if (hits == hi - lo + 1) return;
  oracle_cover(2 * x, height, revoked, out);
  oracle_cover(2 * x + 1, height, revoked, out);
}

std::vector<NodeId> oracle(unsigned height, const std::set<NodeId>& revoked) {
  std::set<NodeId> out;
  oracle_cover(1, height, revoked, out);
  return {out.begin(), out.end()};
}

RevocationList list_of(const std::set<NodeId>& revoked) {
  RevocationList rl;
  for (auto leaf : revoked) rl.add(leaf, 0);
  return rl;
}

// Checks the partition property leaf by leaf.
void expect_partition(unsigned height, const std::set<NodeId>& revoked, const KeyUpdate& ku) {
  const NodeId first = NodeId{1} << height;
  for (NodeId leaf = first; leaf < 2 * first; ++leaf) {
    const bool authorized = is_authorized(path(height, leaf), ku);
    ASSERT_EQ(authorized, !revoked.contains(leaf)) << "leaf " << leaf;
    std::size_t hits = 0;
    for (auto x : path(height, leaf)) hits += std::binary_search(ku.cover.begin(), ku.cover.end(), x);
    ASSERT_EQ(hits, revoked.contains(leaf) ? 0u : 1u);
  }
}

void expect_antichain(const KeyUpdate& ku) {
  for (auto a : ku.cover)
    for (auto b : ku.cover) {
      if (a == b) continue;
      for (NodeId x = b >> 1; x >= 1; x >>= 1) ASSERT_NE(x, a) << a << " is an ancestor of " << b;
    }
}

}  // namespace

TEST(Path, HeapIndexArithmetic) {
  EXPECT_EQ(path(3, 8), (std::vector<NodeId>{8, 4, 2, 1}));
  EXPECT_EQ(path(1, 3), (std::vector<NodeId>{3, 1}));
  EXPECT_EQ(path(3, 15), (std::vector<NodeId>{15, 7, 3, 1}));
  EXPECT_TRUE(is_well_formed_path(path(5, 40), 5));
}

TEST(Path, InternalNodeRejected) {
  try {
    (void)path(3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotALeaf);
  }
  EXPECT_THROW((void)path(3, 16), Error);
  EXPECT_THROW((void)path(3, 0), Error);
}

TEST(Tree, HeightBounds) {
  EXPECT_THROW(RevocationTree(0), Error);
  EXPECT_THROW(RevocationTree(kMaxHeight + 1), Error);
  RevocationTree bt(4);
  EXPECT_EQ(bt.capacity(), 16u);
  EXPECT_EQ(bt.first_leaf(), 16u);
  EXPECT_EQ(bt.last_leaf(), 31u);
}

TEST(Tree, FillsThenReportsFull) {
  RevocationTree bt(4);
  for (int i = 0; i < 16; ++i) {
    const auto leaf = bt.assign(to_bytes("pid-" + std::to_string(i)));
    EXPECT_TRUE(bt.is_leaf(leaf));
  }
  try {
    bt.assign(to_bytes("pid-16"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TreeFull);
  }
  try {
    RevocationTree t2(2);
    t2.assign(to_bytes("a"));
    t2.assign(to_bytes("a"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateIdentity);
  }
}

TEST(KUNodes, EmptyListGivesRoot) {
  RevocationTree bt(3);
  const auto ku = kunodes(bt, RevocationList{}, 7);
  EXPECT_EQ(ku.cover, std::vector<NodeId>{1});
  EXPECT_EQ(ku.epoch, 7u);
}

// One revocation among eight leaves: sibling, parent's sibling, grandparent's sibling.
TEST(KUNodes, SingleRevocationInEightLeafTree) {
  RevocationTree bt(3);
  RevocationList rl;
  rl.add(10, 0);
  const auto ku = kunodes(bt, rl, 0);
  EXPECT_EQ(ku.cover, (std::vector<NodeId>{3, 4, 11}));
}

TEST(KUNodes, SiblingLeavesInHeightTwo) {
  RevocationTree bt(2);
  const auto ku = kunodes(bt, list_of({4, 5}), 0);
  EXPECT_EQ(ku.cover, std::vector<NodeId>{3});
  EXPECT_EQ(ku.cover, oracle(2, {4, 5}));
}

TEST(KUNodes, FailClosedWhenEverythingRevoked) {
  RevocationTree bt(2);
  const auto ku = kunodes(bt, list_of({4, 5, 6, 7}), 0);
  EXPECT_TRUE(ku.cover.empty());
  for (NodeId leaf = 4; leaf < 8; ++leaf) EXPECT_FALSE(is_authorized(path(2, leaf), ku));
}

TEST(KUNodes, FutureEntriesIgnored) {
  RevocationTree bt(3);
  RevocationList rl;
  rl.add(9, 5);
  EXPECT_EQ(kunodes(bt, rl, 4).cover, std::vector<NodeId>{1});
  EXPECT_EQ(kunodes(bt, rl, 5).cover, oracle(3, {9}));
}

TEST(KUNodes, ExhaustivePartitionUpToHeightFour) {
  for (unsigned h = 1; h <= 4; ++h) {
    RevocationTree bt(h);
    const NodeId n = NodeId{1} << h;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      std::set<NodeId> revoked;
      for (NodeId i = 0; i < n; ++i)
        if (mask >> i & 1) revoked.insert(n + i);
      const auto ku = kunodes(bt, list_of(revoked), 0);
      if (!revoked.empty()) ASSERT_EQ(ku.cover, oracle(h, revoked)) << "h=" << h << " mask=" << mask;
      expect_partition(h, revoked, ku);
      expect_antichain(ku);
    }
  }
}

TEST(KUNodes, RandomisedPartitionHeightsSixAndTen) {
  SimRng rng(40);
  for (unsigned h : {5u, 6u, 10u}) {
    RevocationTree bt(h);
    const NodeId n = NodeId{1} << h;
    for (int trial = 0; trial < 300; ++trial) {
      std::set<NodeId> revoked;
      const auto r = uniform_index(rng, n);
      while (revoked.size() < r) revoked.insert(n + uniform_index(rng, n));
      const auto ku = kunodes(bt, list_of(revoked), 0);
      if (!revoked.empty()) ASSERT_EQ(ku.cover, oracle(h, revoked));
      expect_partition(h, revoked, ku);
      expect_antichain(ku);
    }
  }
}

TEST(KUNodes, CoverSizeBound) {
  SimRng rng(41);
  for (unsigned h = 1; h <= 10; ++h) {
    const NodeId n = NodeId{1} << h;
    RevocationTree bt(h);
    for (int trial = 0; trial < 50; ++trial) {
      const auto r = 1 + uniform_index(rng, n / 2);
      std::set<NodeId> revoked;
      while (revoked.size() < r) revoked.insert(n + uniform_index(rng, n));
      const auto ku = kunodes(bt, list_of(revoked), 0);
      const double bound = static_cast<double>(r) * (std::log2(static_cast<double>(n) / r) + 1);
      ASSERT_LE(static_cast<double>(ku.cover.size()), bound) << "h=" << h << " r=" << r;
    }
  }
}

TEST(KUNodes, SingleRevocationGivesHeightNodes) {
  for (unsigned h = 1; h <= 10; ++h) {
    RevocationTree bt(h);
    RevocationList rl;
    rl.add(bt.first_leaf() + 3 % bt.capacity(), 0);
    EXPECT_EQ(kunodes(bt, rl, 0).cover.size(), h);
  }
}

TEST(KUNodes, MonotoneUnderAdditionalRevocation) {
  SimRng rng(42);
  const unsigned h = 6;
  RevocationTree bt(h);
  RevocationList rl;
  std::set<NodeId> revoked;
  for (int step = 0; step < 40; ++step) {
    const NodeId leaf = bt.first_leaf() + uniform_index(rng, bt.capacity());
    rl.add(leaf, static_cast<Epoch>(step));
    revoked.insert(leaf);
    const auto ku = kunodes(bt, rl, static_cast<Epoch>(step));
    for (auto r : revoked) ASSERT_FALSE(is_authorized(path(h, r), ku));
  }
}

TEST(Revoke, RegisteredPidAppendsOnce) {
  RevocationTree bt(3);
  const Bytes a = to_bytes("A");
  const Bytes b = to_bytes("B");
  bt.assign(a);
  bt.assign(b);
  RevocationList rl;
  revoke(rl, bt, b, 1);
  ASSERT_EQ(rl.size(), 1u);
  EXPECT_EQ(rl.entries()[0].leaf, *bt.leaf_of(b));
  const auto before = kunodes(bt, rl, 2);
  revoke(rl, bt, b, 2);
  EXPECT_EQ(rl.size(), 1u);
  EXPECT_EQ(kunodes(bt, rl, 2), before);
}

TEST(Revoke, UnknownPid) {
  RevocationTree bt(3);
  RevocationList rl;
  try {
    revoke(rl, bt, to_bytes("nobody"), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownPid);
  }
}

TEST(RevocationList, RejectsNonMonotoneTimes) {
  RevocationList rl;
  rl.add(8, 5);
  EXPECT_THROW(rl.add(9, 4), Error);
  EXPECT_THROW(RevocationList({{8, 5}, {9, 4}}), Error);
  EXPECT_THROW(RevocationList({{8, 5}, {8, 6}}), Error);
}

TEST(IsAuthorized, EmptyCoverRejectsAll) {
  const KeyUpdate ku{0, {}};
  for (NodeId leaf = 8; leaf < 16; ++leaf) EXPECT_FALSE(is_authorized(path(3, leaf), ku));
}

TEST(IsAuthorized, MatchesDirectLookupAtHeightFour) {
  SimRng rng(43);
  RevocationTree bt(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::set<NodeId> revoked;
    const auto r = uniform_index(rng, 16);
    while (revoked.size() < r) revoked.insert(16 + uniform_index(rng, 16));
    const auto rl = list_of(revoked);
    const auto ku = kunodes(bt, rl, 0);
    for (NodeId leaf = 16; leaf < 32; ++leaf) ASSERT_EQ(is_authorized(path(4, leaf), ku), !rl.contains(leaf));
  }
}
