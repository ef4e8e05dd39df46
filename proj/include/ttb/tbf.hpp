#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ttb/dense.hpp"
#include "ttb/tree.hpp"

namespace ttb {

/// Per-node rank tuple, indexed by tree node id.
struct TBRank {
    std::vector<int> r;
    int operator[](int id) const { return r[id]; }
    int& operator[](int id) { return r[id]; }
    bool operator==(const TBRank& o) const { return r == o.r; }
};

/// Tree-based format: orthonormal (or general) leaf frames plus one transfer
/// tensor per internal node. transfer[id] has dims (r_id, r_child_1, ...,
/// r_child_k) in canonical child order, row-major; at the root r_id = 1.
/// The zero tensor is represented by all ranks 0.
struct TBFTensor {
    DimensionTree tree;
    std::vector<int> mode_dims;              // n_j per mode
    std::vector<Eigen::MatrixXd> leaf_frame;  // by node id; n_j x r_j at leaves
    std::vector<DenseTensor> transfer;        // by node id; set at internal nodes
    bool orthonormal = false;

    int rank(int id) const;
    bool is_zero() const { return rank(tree.root()) == 0; }
    TBRank ranks() const;
};

/// Contract the format leaves-to-root into a dense tensor.
DenseTensor evaluate(const TBFTensor& x);

/// Compress a dense tensor to the tree-based format. Every node's frame is an
/// unfolding SVD of v itself; transfer tensors are obtained by projecting
/// parent bases onto the tensor product of child frames. Pass tol = 0 for a
/// machine-precision exact-rank compression. rank_caps, when given, caps the
/// rank kept at each node.
TBFTensor from_dense(const DenseTensor& v, const DimensionTree& tree, double tol = 0.0,
                     const std::optional<TBRank>& rank_caps = std::nullopt);

/// Tree-based rank: rank of the alpha-unfolding per node (r_D = 1 for v != 0).
TBRank tb_rank(const DenseTensor& v, const DimensionTree& tree, double tol = kDefaultTol);

struct AdmissibilityReport {
    bool admissible = true;
    std::vector<std::string> violations;  // one line per violated condition
};

/// The four necessary conditions for a rank tuple to be admissible.
AdmissibilityReport check_admissible(const TBRank& r, const DimensionTree& tree,
                                     const std::vector<int>& mode_dims);

struct FullRankEntry {
    int node;
    int axis;  // 0 = parent index, 1..k = children in canonical order
    int rank;
    int max_rank;
    bool full;
};

struct FullRankReport {
    bool all_full = true;
    std::vector<FullRankEntry> entries;
};

/// Checks that every single-axis matricization of every transfer tensor has
/// maximal rank (membership of the coefficients in the full-rank set).
FullRankReport check_full_rank(const TBFTensor& x, double tol = kDefaultTol);

/// Same represented tensor with orthonormal leaf frames and orthonormal
/// transfer rows below the root; leaves-to-root QR with R factors absorbed
/// into parents.
TBFTensor orthonormalize(const TBFTensor& x);

struct TruncationResult {
    TBFTensor tensor;
    double error_bound = 0.0;  // sqrt of total discarded singular mass
    std::vector<Eigen::VectorXd> discarded;  // per non-root node, discarded sigmas
};

/// Rank truncation of a dense tensor via per-node unfolding SVDs.
TruncationResult truncate(const DenseTensor& v, const DimensionTree& tree,
                          const TBRank& target);
TruncationResult truncate(const TBFTensor& x, const TBRank& target);

struct NestednessEntry {
    int node;
    double inclusion_defect;    // ||(I - P_children) U_alpha||
    int parent_dim;
    int product_dim;            // dim of (x)_beta U_beta^min
    bool contraction_spans_ok;  // sibling-contraction span check per child
};

struct NestednessReport {
    bool ok = true;
    double tol = 0.0;
    std::vector<NestednessEntry> entries;
};

/// Verifies the minimal-subspace inclusion U_alpha <= (x)_beta U_beta at every
/// internal node, and that contracting parent basis vectors against sibling
/// dual bases spans each child's minimal subspace.
NestednessReport nestedness_check(const DenseTensor& v, const DimensionTree& tree,
                                  double tol = kDefaultTol);

/// Matrix whose columns are outer products of one column per block, indexed
/// row-major over the blocks (last block fastest); rows are row-major over
/// the union of the block modes.
Eigen::MatrixXd product_basis(const std::vector<ModeSet>& blocks,
                              const std::vector<Eigen::MatrixXd>& bases,
                              const std::vector<int>& mode_dims);

/// Dense basis matrix of a node's represented subspace: columns are the
/// vectors u^(alpha)_i laid out over the node's modes (row-major, canonical
/// mode order). Leaves return the leaf frame.
Eigen::MatrixXd node_basis(const TBFTensor& x, int node_id);

/// TBF text format: header, serialized tree, per-leaf FRAME and per-internal
/// TRANSFER blocks.
void write_tbf(std::ostream& out, const TBFTensor& x);
TBFTensor read_tbf(std::istream& in);
void write_tbf_file(const std::string& path, const TBFTensor& x);
TBFTensor read_tbf_file(const std::string& path);

}  // namespace ttb
