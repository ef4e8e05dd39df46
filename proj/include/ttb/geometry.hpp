#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "ttb/dense.hpp"
#include "ttb/tbf.hpp"
#include "ttb/tree.hpp"

namespace ttb {

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

class ChartError : public std::runtime_error {
public:
    enum class Kind { CommonComplementFails, NotInNeighborhood, RankMismatch };
    ChartError(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Condition-number ceiling for oblique-projection and Gram solves.
inline constexpr double kConditionLimit = 1e12;

/// Principal angles below this are treated as exact subspace membership, so
/// that charting a point at its own base yields literal zero parameters.
inline constexpr double kChartSnapTol = 1e-13;

/// Oblique projection of x onto span(U) along span(W); requires
/// dim U + dim W = ambient and [U W] invertible (condition-bounded).
Eigen::VectorXd project_onto_along(const Eigen::VectorXd& x, const Eigen::MatrixXd& U,
                                   const Eigen::MatrixXd& W);

/// Orthonormal basis of the orthogonal complement of the frame U
/// (deterministic, via full QR with the column-sign convention).
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& U);

/// Grassmann chart: the linear map L : span(U) -> span(W) whose graph
/// {u + L(u)} equals span(Uprime). Returned in coordinates: L is
/// (cols W) x (cols U), mapping U-coordinates to W-coordinates.
/// Throws ChartError(CommonComplementFails) when the projection of Uprime
/// onto U along W is not invertible.
Eigen::MatrixXd grassmann_chart(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                                const Eigen::MatrixXd& Uprime);

/// Frame of the graph of L: columns (id + L) u_i = U + W * L.
Eigen::MatrixXd graph_frame(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& L);

/// Chart-level parameters relative to an orthonormal base point: one leaf map
/// per leaf (in complement coordinates, (n_k - r_k) x r_k) and one coefficient
/// tensor per internal node. Tangent parameters share the same layout.
struct TreeParams {
    std::vector<Eigen::MatrixXd> leaf_L;  // by node id
    std::vector<DenseTensor> C;           // by node id (internal nodes)

    static TreeParams zeros_like(const TBFTensor& base);
    TreeParams& operator+=(const TreeParams& o);
    TreeParams& operator*=(double s);
    friend TreeParams operator+(TreeParams a, const TreeParams& b) { return a += b; }
    friend TreeParams operator*(double s, TreeParams a) { return a *= s; }
};

using ChartParams = TreeParams;
using TangentParams = TreeParams;

/// Orthonormal complement frames W_k for every leaf of the base point.
std::vector<Eigen::MatrixXd> leaf_complements(const TBFTensor& base);

/// Chart coordinates of w relative to the orthonormal base point; inverse of
/// chart_decode up to floating point. Fails with NotInNeighborhood when a
/// leaf chart has no common complement, RankMismatch when TB ranks differ.
ChartParams chart_encode(const TBFTensor& base, const DenseTensor& w, double tol = kDefaultTol);

/// Reassembled point: leaf frames (id + L_k) U_k, transfer tensors from p.
TBFTensor chart_decode(const TBFTensor& base, const ChartParams& p);

/// The dense tangent vector for tangent parameters at the base point
/// (leaf variations into the complements, coefficient variations per node).
DenseTensor tangent_assemble(const TBFTensor& base, const TangentParams& t);

/// Directional derivative of the evaluation map at an arbitrary point x of
/// the format: product rule over leaf-frame deltas and transfer deltas.
DenseTensor evaluate_directional(const TBFTensor& x,
                                 const std::vector<Eigen::MatrixXd>& leaf_delta,
                                 const std::vector<DenseTensor>& transfer_delta);

/// Generator matrix of the tangent space: one column per parameter-space unit
/// vector, each column the vectorized assembled tangent tensor. `params_out`
/// receives the corresponding unit parameter vectors when non-null.
Eigen::MatrixXd tangent_generators(const TBFTensor& base,
                                   std::vector<TangentParams>* params_out = nullptr);

/// Orthonormal dense tensors spanning the tangent space at the base point.
std::vector<DenseTensor> tangent_basis(const TBFTensor& base, double tol = kDefaultTol);

/// Dimension of the tangent space: sum over internal nodes of r_a * prod r_b,
/// plus sum over leaves of r_k (n_k - r_k), minus the gauge dimension r_a^2
/// of every internal non-root node.
int tangent_dimension(const TBFTensor& base);

struct TangentProjection {
    DenseTensor projected;
    TangentParams params;
    double residual = 0.0;  // max |<x - projected, z>| over the tangent basis
};

/// Metric (orthogonal) projection of x onto the tangent space at the base
/// point, with minimal-norm chart coordinates.
TangentProjection project_tangent(const TBFTensor& base, const DenseTensor& x);

/// Product norm on parameters: Frobenius norms of the coefficient tensors
/// plus spectral norms of the leaf maps.
double param_norm(const TreeParams& p);

}  // namespace ttb
