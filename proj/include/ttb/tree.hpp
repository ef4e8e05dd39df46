#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttb {

/// Raised when a candidate tree violates one of the partition-tree clauses.
class TreeError : public std::runtime_error {
public:
    enum class Kind { RootMismatch, NonPartitionChildren, SingleChild, NonSingletonLeaf, Parse };

    TreeError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Non-empty, strictly increasing set of 0-based mode indices.
class ModeSet {
public:
    ModeSet() = default;
    explicit ModeSet(std::vector<int> indices);

    static ModeSet range(int d);  // {0,...,d-1}
    static ModeSet singleton(int j) { return ModeSet({j}); }

    const std::vector<int>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    int min_index() const { return indices_.front(); }
    bool contains(int j) const;
    bool is_subset_of(const ModeSet& other) const;

    /// modes of `other` not in *this (other must be a superset user-side check)
    ModeSet complement_in(const ModeSet& other) const;

    bool operator==(const ModeSet& o) const { return indices_ == o.indices_; }
    bool operator!=(const ModeSet& o) const { return !(*this == o); }
    bool operator<(const ModeSet& o) const { return indices_ < o.indices_; }

    /// 1-based, comma separated, e.g. "1,4,5"
    std::string to_string() const;

private:
    std::vector<int> indices_;
};

/// Candidate node for tree validation; children recursively nested.
struct TreeSpecNode {
    std::vector<int> modes;  // 0-based
    std::vector<TreeSpecNode> children;
};

enum class TreeKind { Tucker, TT, Balanced };

/// Validated dimension partition tree over modes {0,...,d-1}.
/// Immutable after construction; node 0 is the root, children are ordered
/// canonically by smallest contained mode index.
class DimensionTree {
public:
    /// Empty tree; inert until assigned from validate/standard/parse.
    DimensionTree() = default;

    /// Validates the candidate against the partition-tree clauses:
    /// root covers all modes, children of an internal node partition it into
    /// at least two blocks, singletons are childless leaves.
    static DimensionTree validate(const TreeSpecNode& candidate, int d);

    static DimensionTree standard(TreeKind kind, int d);

    int mode_count() const { return d_; }
    std::size_t node_count() const { return nodes_.size(); }

    const ModeSet& node(int id) const { return nodes_[id]; }
    const std::vector<int>& children(int id) const { return children_[id]; }
    int parent(int id) const { return parent_[id]; }  // -1 at the root
    bool is_leaf(int id) const { return children_[id].empty(); }
    bool is_root(int id) const { return id == 0; }
    int root() const { return 0; }

    int leaf_id(int mode) const { return leaf_of_mode_[mode]; }
    /// ids of leaves in mode order
    std::vector<int> leaf_ids() const;
    /// ids of internal nodes, root first (pre-order)
    std::vector<int> internal_ids() const;
    /// all node ids in pre-order (root first)
    std::vector<int> preorder() const;
    /// node id for a given mode set, or -1
    int find(const ModeSet& modes) const;

    bool operator==(const DimensionTree& o) const;

    std::string serialize() const;
    static DimensionTree parse(const std::string& text);
    static DimensionTree parse(std::istream& in);

private:
    int add_node(const TreeSpecNode& spec, int parent);

    int d_ = 0;
    std::vector<ModeSet> nodes_;
    std::vector<std::vector<int>> children_;
    std::vector<int> parent_;
    std::vector<int> leaf_of_mode_;
};

}  // namespace ttb
