// Test-only reference implementations, independent of the library kernels
// they are used to check.
#pragma once

#include <Eigen/Dense>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "ttb/dense.hpp"
#include "ttb/dynamics.hpp"
#include "ttb/tbf.hpp"

namespace oracles {

inline ttb::DenseTensor random_dense(const std::vector<int>& dims, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ttb::DenseTensor v(dims);
    for (std::int64_t i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    return v;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

inline Eigen::MatrixXd random_orthonormal(int rows, int cols, std::uint64_t seed) {
    Eigen::MatrixXd m = random_matrix(rows, cols, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

/// Random point of exact tree-based rank `ranks`: random orthonormal frames
/// and random transfer tensors, re-compressed so the representation is the
/// library's canonical one.
inline ttb::TBFTensor random_point(const ttb::DimensionTree& tree,
                                   const std::vector<int>& mode_dims,
                                   const ttb::TBRank& ranks, std::uint64_t seed) {
    ttb::TBFTensor x;
    x.tree = tree;
    x.mode_dims = mode_dims;
    x.leaf_frame.resize(tree.node_count());
    x.transfer.resize(tree.node_count());
    std::uint64_t s = seed;
    for (int id : tree.leaf_ids())
        x.leaf_frame[id] =
            random_orthonormal(mode_dims[tree.node(id).min_index()], ranks[id], ++s);
    for (int id : tree.internal_ids()) {
        std::vector<int> dims{ranks[id]};
        for (int c : tree.children(id)) dims.push_back(ranks[c]);
        ttb::DenseTensor C = random_dense(dims, ++s);
        x.transfer[id] = C;
    }
    x.orthonormal = false;
    return ttb::from_dense(ttb::evaluate(ttb::orthonormalize(x)), tree, 1e-8);
}

/// sin of the largest principal angle between the column spans of two
/// orthonormal frames (norm of the projector gap).
inline double projector_gap(const Eigen::MatrixXd& q1, const Eigen::MatrixXd& q2) {
    return (q1 * q1.transpose() - q2 * q2.transpose()).norm();
}

/// Dense matrix of a sum-of-products operator in the row-major vec
/// convention (last mode fastest => plain left-to-right Kronecker products).
inline Eigen::MatrixXd sop_matrix(const ttb::SumOfProductsOperator& A) {
    std::int64_t N = 1;
    for (int n : A.mode_dims) N *= n;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    for (const auto& term : A.terms) {
        Eigen::MatrixXd K = Eigen::MatrixXd::Identity(1, 1);
        for (const auto& f : term.factors)
            K = Eigen::kroneckerProduct(K, f).eval();
        M += term.weight * K;
    }
    return M;
}

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m) { return m.exp(); }

/// Brute-force best fixed-rank approximation error by alternating linear
/// least squares over the format parameters, with random restarts. Always an
/// upper bound for the distance of v to the rank-`ranks` set.
inline double als_best_error(const ttb::DenseTensor& v, const ttb::DimensionTree& tree,
                             const ttb::TBRank& ranks, int restarts = 5, int sweeps = 120,
                             std::uint64_t seed = 99) {
    using ttb::DenseTensor;
    using ttb::TBFTensor;
    double best = ttb::frobenius_norm(v);
    for (int rs = 0; rs < restarts; ++rs) {
        TBFTensor x;
        x.tree = tree;
        x.mode_dims = v.dims();
        x.leaf_frame.resize(tree.node_count());
        x.transfer.resize(tree.node_count());
        std::uint64_t s = seed + 1000 * rs;
        for (int id : tree.leaf_ids())
            x.leaf_frame[id] =
                random_matrix(v.dim(tree.node(id).min_index()), ranks[id], ++s);
        for (int id : tree.internal_ids()) {
            std::vector<int> dims{ranks[id]};
            for (int c : tree.children(id)) dims.push_back(ranks[c]);
            x.transfer[id] = random_dense(dims, ++s);
        }
        // groups: each leaf frame, each internal transfer; the evaluation is
        // linear in each group with the rest held fixed
        for (int sweep = 0; sweep < sweeps; ++sweep) {
            for (int id : tree.preorder()) {
                const bool leaf = tree.is_leaf(id);
                const std::int64_t m =
                    leaf ? x.leaf_frame[id].size() : x.transfer[id].size();
                if (m == 0) continue;
                Eigen::MatrixXd design(v.size(), m);
                auto with_param = [&](std::int64_t i, double value) {
                    if (leaf)
                        x.leaf_frame[id](static_cast<Eigen::Index>(i) %
                                             x.leaf_frame[id].rows(),
                                         static_cast<Eigen::Index>(i) /
                                             x.leaf_frame[id].rows()) = value;
                    else
                        x.transfer[id][i] = value;
                };
                Eigen::VectorXd current(m);
                for (std::int64_t i = 0; i < m; ++i)
                    current(i) = leaf ? x.leaf_frame[id](static_cast<Eigen::Index>(i) %
                                                             x.leaf_frame[id].rows(),
                                                         static_cast<Eigen::Index>(i) /
                                                             x.leaf_frame[id].rows())
                                      : x.transfer[id][i];
                for (std::int64_t i = 0; i < m; ++i) with_param(i, 0.0);
                for (std::int64_t i = 0; i < m; ++i) {
                    with_param(i, 1.0);
                    design.col(i) = ttb::evaluate(x).vec();
                    with_param(i, 0.0);
                }
                Eigen::VectorXd theta =
                    design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(v.vec());
                if (!theta.allFinite()) theta = current;
                for (std::int64_t i = 0; i < m; ++i) with_param(i, theta(i));
            }
        }
        best = std::min(best, ttb::frobenius_norm(v - ttb::evaluate(x)));
    }
    return best;
}

}  // namespace oracles
