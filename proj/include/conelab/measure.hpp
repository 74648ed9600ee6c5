#pragma once

// Lazy weighted hierarchies representing probability measures, with
// interval-valued region queries and measure-distributed sampling.

#include "conelab/core.hpp"
#include "conelab/interval.hpp"
#include "conelab/random.hpp"
#include "conelab/region.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace conelab {

using NodeAddress = std::vector<std::uint32_t>;

struct Node {
    int level = 0;
    std::uint32_t index = 0;  // position among its siblings
    double mass = 1.0;        // absolute mass
    Region region;
    double turn = 0.0;        // accumulated rotation angle (planar similarity trees)
};

// Rule producing the children of a node. Implementations must be pure:
// the children of a node depend only on the node.
class Generator {
public:
    virtual ~Generator() = default;

    virtual int dimension() const = 0;
    virtual Node root() const = 0;

    // Appends the children of `parent` to `out` (which arrives empty).
    // No children means `parent` is a leaf.
    virtual void children(const Node& parent, std::vector<Node>& out) const = 0;

    // Branching factor k of a k-adic cube tree, 0 for other trees.
    virtual int cube_base() const { return 0; }
    bool is_cube_tree() const { return cube_base() > 0; }

    // Diameter of a typical node at `level`.
    virtual double level_diameter(int level) const = 0;

    // Generator for the descendants of a level-`level` node, expressed in
    // that node's own coordinates (root region = this generator's root
    // region, root mass 1). Only self-similar constructions provide one.
    virtual std::shared_ptr<const Generator> local_generator(int /*level*/) const { return nullptr; }

    virtual std::string describe() const = 0;
};

namespace detail {

struct MemoEntry {
    std::once_flag once;
    std::vector<Node> kids;
    std::vector<std::unique_ptr<MemoEntry>> sub;
};

struct TreeState {
    std::shared_ptr<const Generator> generator;
    Node root;
    MemoEntry root_entry;
    int memo_levels = 6;
    std::size_t memo_budget = std::size_t{1} << 18;
    std::atomic<std::size_t> memo_used{0};
};

} // namespace detail

// Immutable view of a generated measure. Children of shallow nodes are
// memoized behind std::call_once; copies share the memo.
class MeasureTree {
public:
    explicit MeasureTree(std::shared_ptr<const Generator> generator, int memo_levels = 6,
                         std::size_t memo_budget = std::size_t{1} << 18)
        : state_(std::make_shared<detail::TreeState>())
    {
        if (!generator)
            throw ArgumentError("MeasureTree: null generator");
        state_->generator = std::move(generator);
        state_->root = state_->generator->root();
        state_->memo_levels = memo_levels;
        state_->memo_budget = memo_budget;
    }

    const Generator& generator() const { return *state_->generator; }
    std::shared_ptr<const Generator> generator_ptr() const { return state_->generator; }
    int dimension() const { return state_->generator->dimension(); }
    const Node& root() const { return state_->root; }
    detail::MemoEntry* root_entry() const { return &state_->root_entry; }

    // Calls fn(child, child_memo) for each child of `node`. `memo` is the
    // memo entry of `node` or null; `scratch` must outlive the loop and
    // must not be reused by nested calls.
    template <class Fn>
    void for_each_child(const Node& node, detail::MemoEntry* memo, std::vector<Node>& scratch, Fn&& fn) const
    {
        if (memo) {
            ensure(node, *memo);
            for (std::size_t i = 0; i < memo->kids.size(); ++i)
                fn(memo->kids[i], memo->sub.empty() ? nullptr : memo->sub[i].get());
            return;
        }
        scratch.clear();
        state_->generator->children(node, scratch);
        for (const Node& c : scratch)
            fn(c, static_cast<detail::MemoEntry*>(nullptr));
    }

    // Children of `node` as a fresh vector.
    std::vector<Node> children(const Node& node) const
    {
        std::vector<Node> out;
        state_->generator->children(node, out);
        return out;
    }

private:
    void ensure(const Node& node, detail::MemoEntry& e) const
    {
        std::call_once(e.once, [&] {
            state_->generator->children(node, e.kids);
            const std::size_t used = state_->memo_used.fetch_add(e.kids.size()) + e.kids.size();
            if (node.level + 1 < state_->memo_levels && used <= state_->memo_budget) {
                e.sub.resize(e.kids.size());
                for (auto& s : e.sub)
                    s = std::make_unique<detail::MemoEntry>();
            }
        });
    }

    std::shared_ptr<detail::TreeState> state_;
};

inline Node node_at(const MeasureTree& tree, const NodeAddress& addr)
{
    Node node = tree.root();
    std::vector<Node> kids;
    for (std::size_t d = 0; d < addr.size(); ++d) {
        kids.clear();
        tree.generator().children(node, kids);
        if (addr[d] >= kids.size())
            throw ArgumentError("node address: index " + std::to_string(addr[d]) + " at depth " +
                                std::to_string(d + 1) + " exceeds fan size " + std::to_string(kids.size()));
        node = kids[addr[d]];
    }
    return node;
}

inline double node_measure(const MeasureTree& tree, const NodeAddress& addr) { return node_at(tree, addr).mass; }

struct FanEntry {
    Region region;
    double mass = 0.0;
};

// The addressed node together with all of its siblings, with absolute masses.
inline std::vector<FanEntry> branch_fan(const MeasureTree& tree, const NodeAddress& addr)
{
    if (addr.empty())
        throw ArgumentError("branch_fan: the root has no siblings");
    const NodeAddress parent_addr(addr.begin(), addr.end() - 1);
    const Node parent = node_at(tree, parent_addr);
    std::vector<Node> kids = tree.children(parent);
    if (addr.back() >= kids.size())
        throw ArgumentError("branch_fan: index exceeds fan size");
    std::vector<FanEntry> fan;
    fan.reserve(kids.size());
    for (const Node& c : kids)
        fan.push_back({c.region, c.mass});
    return fan;
}

namespace detail {

struct QueryAccumulator {
    const MeasureTree& tree;
    const CompiledQuery& query;
    int budget;
    std::deque<std::vector<Node>> scratch;
    double lo = 0.0;
    double hi = 0.0;
    int deepest = 0;

    void visit(const Node& node, MemoEntry* memo, int depth)
    {
        if (!(node.mass > 0.0))
            return;
        const Relation rel = query.classify(node.region);
        if (rel == Relation::outside)
            return;
        if (rel == Relation::inside) {
            lo += node.mass;
            hi += node.mass;
            return;
        }
        if (node.level >= budget) {
            hi += node.mass;
            deepest = std::max(deepest, node.level);
            return;
        }
        if (scratch.size() <= static_cast<std::size_t>(depth))
            scratch.resize(depth + 1);
        bool any = false;
        tree.for_each_child(node, memo, scratch[depth], [&](const Node& c, MemoEntry* m) {
            any = true;
            visit(c, m, depth + 1);
        });
        if (!any) {
            hi += node.mass;
            deepest = std::max(deepest, node.level);
        }
    }
};

} // namespace detail

// Certified enclosure of mu(query) from nodes down to level `depth_budget`.
inline MeasureInterval region_measure(const MeasureTree& tree, const RegionQuery& query, int depth_budget)
{
    if (depth_budget < 0)
        throw ArgumentError("region_measure: depth budget must be non-negative");
    if (query.dimension() != tree.dimension())
        throw ArgumentError("region_measure: query dimension does not match the tree");
    const CompiledQuery compiled(query);
    detail::QueryAccumulator acc{tree, compiled, depth_budget, {}, 0.0, 0.0, 0};
    acc.visit(tree.root(), tree.root_entry(), 0);
    const double hi = std::min(1.0, acc.hi);
    const double lo = std::min(acc.lo, hi);
    return MeasureInterval(lo, hi, std::max(acc.deepest, depth_budget));
}

// Smallest level whose typical node diameter is at most `r`.
inline int level_for_radius(const MeasureTree& tree, double r, int max_level = 4096)
{
    if (!(r > 0.0))
        throw ArgumentError("level_for_radius: radius must be positive");
    const Generator& g = tree.generator();
    for (int l = 0; l < max_level; ++l)
        if (g.level_diameter(l) <= r)
            return l;
    return max_level;
}

// Absolute depth budget resolving a ball of radius r to `extra` further levels.
inline int budget_for(const MeasureTree& tree, double r, int extra)
{
    return level_for_radius(tree, r) + std::max(0, extra);
}

// Weighted descent from the root to `depth` (or a leaf), returning the path.
inline NodeAddress sample_branch(const MeasureTree& tree, int depth, Rng& rng, Node* reached = nullptr)
{
    NodeAddress path;
    Node node = tree.root();
    std::vector<Node> kids;
    for (int d = 0; d < depth; ++d) {
        kids.clear();
        tree.generator().children(node, kids);
        if (kids.empty())
            break;
        double u = uniform01(rng) * node.mass;
        std::size_t pick = kids.size();
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (!(kids[i].mass > 0.0))
                continue;
            pick = i;
            if (u < kids[i].mass)
                break;
            u -= kids[i].mass;
        }
        if (pick == kids.size())
            throw ConstructionError("sample_branch: node with positive mass has no positive child");
        path.push_back(static_cast<std::uint32_t>(pick));
        node = kids[pick];
    }
    if (reached)
        *reached = node;
    return path;
}

// mu-distributed points: region centres of randomly descended branches.
inline std::vector<Point> sample_points(const MeasureTree& tree, int count, int depth, std::uint64_t seed)
{
    if (count < 1)
        throw ArgumentError("sample_points: count must be positive");
    Rng rng = make_rng(seed);
    std::vector<Point> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Node leaf;
        sample_branch(tree, depth, rng, &leaf);
        out.push_back(region_center(leaf.region));
    }
    return out;
}

// Address of the first node at `level` whose region contains x.
inline std::optional<NodeAddress> locate(const MeasureTree& tree, const Point& x, int level)
{
    if (x.size() != tree.dimension())
        throw ArgumentError("locate: dimension mismatch");
    Node node = tree.root();
    if (!region_contains(node.region, x))
        return std::nullopt;
    NodeAddress path;
    std::vector<Node> kids;
    for (int d = 0; d < level; ++d) {
        kids.clear();
        tree.generator().children(node, kids);
        bool found = false;
        for (std::size_t i = 0; i < kids.size(); ++i) {
            if (region_contains(kids[i].region, x)) {
                path.push_back(static_cast<std::uint32_t>(i));
                node = kids[i];
                found = true;
                break;
            }
        }
        if (!found)
            return std::nullopt;
    }
    return path;
}

// Checks normalisation and containment of every fan down to `depth`
// (full traversal, so only for small trees). Returns the number of
// violations found.
inline std::size_t audit_tree(const MeasureTree& tree, int depth, double tol = 1e-12)
{
    std::size_t bad = 0;
    std::vector<std::vector<Node>> frontier{{tree.root()}};
    for (int d = 0; d < depth; ++d) {
        std::vector<Node> next;
        for (const Node& p : frontier.back()) {
            std::vector<Node> kids = tree.children(p);
            if (kids.empty())
                continue;
            double sum = 0.0;
            for (const Node& c : kids) {
                sum += c.mass;
                if (c.mass < 0.0)
                    ++bad;
                const Vec cc = region_center(c.region);
                const double slack = 1e-12 + tol * region_diameter(p.region);
                if (const Ball* pb = std::get_if<Ball>(&p.region)) {
                    const double rad = std::holds_alternative<Ball>(c.region) ? std::get<Ball>(c.region).radius
                                                                              : 0.5 * region_diameter(c.region);
                    if ((cc - pb->center).norm() + rad > pb->radius + slack)
                        ++bad;
                } else {
                    const Box& pbox = std::get<Box>(p.region);
                    if (const Box* cb = std::get_if<Box>(&c.region)) {
                        if (((cb->lo - pbox.lo).array() < -slack).any() || ((cb->hi - pbox.hi).array() > slack).any())
                            ++bad;
                    } else if (pbox.distance_to(cc) > slack) {
                        ++bad;
                    }
                }
            }
            if (std::abs(sum - p.mass) > tol * std::max(1.0, p.mass))
                ++bad;
            for (Node& c : kids)
                next.push_back(std::move(c));
        }
        frontier.push_back(std::move(next));
        frontier.erase(frontier.begin());
    }
    return bad;
}

} // namespace conelab
