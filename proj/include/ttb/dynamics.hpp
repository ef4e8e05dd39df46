#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "ttb/dense.hpp"
#include "ttb/geometry.hpp"
#include "ttb/tbf.hpp"

namespace ttb {

class RankDegeneracy : public NumericalError {
public:
    explicit RankDegeneracy(std::string msg) : NumericalError(std::move(msg)) {}
};

/// Linear operator in sum-of-products form: A = sum_t w_t A_1^(t) x ... x A_d^(t),
/// each factor acting on one mode.
struct SumOfProductsOperator {
    struct Term {
        double weight = 0.0;
        std::vector<Eigen::MatrixXd> factors;  // one square matrix per mode
    };
    std::vector<Term> terms;
    std::vector<int> mode_dims;

    void validate() const;
};

DenseTensor apply_operator(const SumOfProductsOperator& A, const DenseTensor& v);

void write_sop(std::ostream& os, const SumOfProductsOperator& A);
SumOfProductsOperator read_sop(std::istream& is);
void write_sop_file(const std::string& path, const SumOfProductsOperator& A);
SumOfProductsOperator read_sop_file(const std::string& path);

/// Rank-one state lambda * v_1 x ... x v_d with unit factors.
struct HartreeState {
    double lambda = 1.0;
    std::vector<Eigen::VectorXd> factors;

    DenseTensor to_dense() const;
};

/// Mean-field matrix for mode j at unit factors v:
/// sum_t w_t (prod_{k != j} <A_k^(t) v_k, v_k>) A_j^(t).
Eigen::MatrixXd mean_field(const SumOfProductsOperator& A,
                           const std::vector<Eigen::VectorXd>& factors, int j);

/// <A (x v), (x v)> at unit factors.
double rayleigh_quotient(const SumOfProductsOperator& A,
                         const std::vector<Eigen::VectorXd>& factors);

/// Gauge-fixed equations of motion on the rank-one manifold:
/// lambda' = <A x v, x v> lambda, v_j' = (I - v_j v_j^T) Abar_j v_j.
struct HartreeRhs {
    double lambda_dot = 0.0;
    std::vector<Eigen::VectorXd> factor_dots;
};
HartreeRhs hartree_rhs(const SumOfProductsOperator& A, const HartreeState& s);

enum class Scheme { Euler, RK4 };

struct HartreeSample {
    double t = 0.0;
    HartreeState state;
    double residual = 0.0;  // max_j |<v_j', v_j>| gauge defect at the sample
};

/// Fixed-step integration of the rank-one equations; factors are renormalized
/// each step with the norms absorbed into lambda.
std::vector<HartreeSample> integrate_hartree(const SumOfProductsOperator& A,
                                             const HartreeState& initial, double t_end,
                                             double dt, Scheme scheme = Scheme::RK4);

using VectorField = std::function<DenseTensor(double, const DenseTensor&)>;

struct TangentTrajectory {
    std::vector<double> times;
    std::vector<TBFTensor> states;      // orthonormal representative per sample
    std::vector<double> residuals;      // tangent-projection defect per sample
};

/// Fixed-step integration of x' = P_{T_x}(F(t, x)) on the fixed-rank manifold,
/// with the chart re-centered at the current point every step. Throws
/// RankDegeneracy when a transfer unfolding loses rank (relative singular
/// value below 1e-8) along the way.
TangentTrajectory integrate_tangent_projected(const VectorField& F, const TBFTensor& initial,
                                              double t_end, double dt,
                                              Scheme scheme = Scheme::RK4);

/// Trajectory text: one line per sample, `t lambda |v| residual`.
void write_trajectory(std::ostream& os, const std::vector<double>& times,
                      const std::vector<double>& lambdas, const std::vector<double>& norms,
                      const std::vector<double>& residuals);

}  // namespace ttb
