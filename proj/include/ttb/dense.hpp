#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttb/tree.hpp"

namespace ttb {

class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

/// Relative singular-value threshold used when the caller passes tol = 0.
inline constexpr double kRankFloor = 1e-12;
/// Default relative rank tolerance.
inline constexpr double kDefaultTol = 1e-10;

/// Dense order-d tensor, row-major storage (last mode fastest).
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(std::vector<int> dims);
    DenseTensor(std::vector<int> dims, std::vector<double> values);

    int order() const { return static_cast<int>(dims_.size()); }
    int dim(int mode) const { return dims_[mode]; }
    const std::vector<int>& dims() const { return dims_; }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    double& operator[](std::int64_t i) { return values_[i]; }
    double operator[](std::int64_t i) const { return values_[i]; }
    double& at(const std::vector<int>& idx) { return values_[offset(idx)]; }
    double at(const std::vector<int>& idx) const { return values_[offset(idx)]; }
    std::int64_t offset(const std::vector<int>& idx) const;

    const std::vector<double>& values() const { return values_; }
    Eigen::Map<const Eigen::VectorXd> vec() const {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }
    Eigen::Map<Eigen::VectorXd> vec() {
        return {values_.data(), static_cast<Eigen::Index>(values_.size())};
    }

    DenseTensor& operator+=(const DenseTensor& o);
    DenseTensor& operator-=(const DenseTensor& o);
    DenseTensor& operator*=(double s);
    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

private:
    std::vector<int> dims_;
    std::vector<double> values_;
};

/// Row-major strides (last mode has stride 1).
std::vector<std::int64_t> row_major_strides(const std::vector<int>& dims);

/// Matricization over tensor axes: rows indexed by `row_axes` (in the given
/// order, row-major), columns by the remaining axes in ascending order.
Eigen::MatrixXd matricize(const DenseTensor& v, const std::vector<int>& row_axes);

/// Matricization M_beta for mode sets: rows over modes beta, columns over the
/// complement in v's full mode range, both row-major in canonical mode order.
Eigen::MatrixXd matricize(const DenseTensor& v, const ModeSet& beta);

/// Inverse of matricize(v, beta): reassemble the tensor from its unfolding.
DenseTensor dematricize(const Eigen::MatrixXd& m, const std::vector<int>& dims,
                        const ModeSet& beta);

/// (id_keep (x) phi)(v): contract all modes outside `keep` against phi.
DenseTensor contract_functional(const DenseTensor& v, const ModeSet& keep,
                                const DenseTensor& phi);

double inner(const DenseTensor& u, const DenseTensor& v);
double frobenius_norm(const DenseTensor& v);

/// Apply a matrix to one mode: result dim(mode) = m.rows(), needs m.cols() == v.dim(mode).
DenseTensor mode_multiply(const DenseTensor& v, int mode, const Eigen::MatrixXd& m);

/// Outer product of per-mode-set vectors. Each factor covers a disjoint mode
/// set (indices into 0..d-1); the result covers their union, with dims taken
/// from `mode_dims`. Factor vectors are row-major over their own sorted modes.
DenseTensor outer_product(const std::vector<std::pair<ModeSet, Eigen::VectorXd>>& factors,
                          const std::vector<int>& mode_dims);

/// Orthonormal basis with a deterministic sign convention.
struct Frame {
    Eigen::MatrixXd basis;  // ambient_dim x rank, orthonormal columns
    int ambient_dim() const { return static_cast<int>(basis.rows()); }
    int rank() const { return static_cast<int>(basis.cols()); }
};

/// Orthonormal frame spanning the columns of m. Rank counts singular values
/// above max(tol, kRankFloor) * sigma_max; sign convention: first entry of
/// each basis vector with magnitude above half the column max is positive.
Frame column_space(const Eigen::MatrixXd& m, double tol = kDefaultTol);

/// Singular values of the alpha-unfolding (descending).
Eigen::VectorXd unfolding_singular_values(const DenseTensor& v, const ModeSet& alpha);

/// Orthonormal basis of the minimal subspace of v for the mode set alpha:
/// the column space of the alpha-unfolding.
Frame minimal_subspace(const DenseTensor& v, const ModeSet& alpha, double tol = kDefaultTol);

struct InjectiveNormResult {
    double value = 0.0;
    bool exact = false;  // true for d <= 2 (largest singular value)
};

/// Injective norm: sup of <v, x_1 (x) ... (x) x_d> over unit vectors. Exact
/// for d <= 2 via SVD; for d >= 3 a certified lower bound from multi-start
/// alternating rank-1 maximization.
InjectiveNormResult injective_norm(const DenseTensor& v, int max_iters = 200,
                                   std::uint64_t seed = 0);

/// Text format: "DENSE d n_1 ... n_d" header then row-major scalars.
void write_dense(std::ostream& out, const DenseTensor& v);
DenseTensor read_dense(std::istream& in);
void write_dense_file(const std::string& path, const DenseTensor& v);
DenseTensor read_dense_file(const std::string& path);

}  // namespace ttb
