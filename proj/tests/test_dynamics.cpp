#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "ttb/dynamics.hpp"

using namespace ttb;

namespace {

Eigen::MatrixXd symmetric(int n, std::uint64_t seed, double scale = 0.4) {
    Eigen::MatrixXd m = oracles::random_matrix(n, n, seed);
    return scale * (m + m.transpose());
}

/// A = sum_j I x ... x A_j x ... x I (single-site, separable)
SumOfProductsOperator separable(const std::vector<Eigen::MatrixXd>& site) {
    SumOfProductsOperator A;
    for (const auto& m : site) A.mode_dims.push_back(static_cast<int>(m.rows()));
    for (std::size_t j = 0; j < site.size(); ++j) {
        SumOfProductsOperator::Term t;
        t.weight = 1.0;
        for (std::size_t k = 0; k < site.size(); ++k)
            t.factors.push_back(k == j ? site[k]
                                       : Eigen::MatrixXd::Identity(site[k].rows(),
                                                                   site[k].cols()));
        A.terms.push_back(std::move(t));
    }
    return A;
}

HartreeState random_state(const std::vector<int>& dims, std::uint64_t seed) {
    HartreeState s;
    s.lambda = 1.25;
    std::uint64_t k = seed;
    for (int n : dims)
        s.factors.push_back(oracles::random_matrix(n, 1, ++k).col(0).normalized());
    return s;
}

}  // namespace

TEST_CASE("apply_operator matches the dense operator matrix") {
    SumOfProductsOperator A;
    A.mode_dims = {3, 2, 2};
    for (int t = 0; t < 2; ++t) {
        SumOfProductsOperator::Term term;
        term.weight = t == 0 ? 1.5 : -0.7;
        term.factors = {oracles::random_matrix(3, 3, 200 + t),
                        oracles::random_matrix(2, 2, 210 + t),
                        oracles::random_matrix(2, 2, 220 + t)};
        A.terms.push_back(term);
    }
    DenseTensor v = oracles::random_dense({3, 2, 2}, 230);
    DenseTensor got = apply_operator(A, v);
    Eigen::VectorXd expect = oracles::sop_matrix(A) * v.vec();
    CHECK((got.vec() - expect).norm() < 1e-12 * expect.norm());
}

TEST_CASE("mean field and Rayleigh quotient against dense contractions") {
    std::vector<Eigen::MatrixXd> site{symmetric(3, 240), symmetric(3, 241), symmetric(3, 242)};
    SumOfProductsOperator A = separable(site);
    HartreeState s = random_state({3, 3, 3}, 243);
    const double rq = rayleigh_quotient(A, s.factors);
    Eigen::VectorXd u = s.to_dense().vec() / s.lambda;
    const double dense_rq = u.dot(oracles::sop_matrix(A) * u);
    CHECK(rq == doctest::Approx(dense_rq).epsilon(1e-12));
    // quadratic form of the mean field reproduces the full form at mode j
    for (int j = 0; j < 3; ++j) {
        Eigen::MatrixXd Abar = mean_field(A, s.factors, j);
        CHECK(s.factors[j].dot(Abar * s.factors[j]) == doctest::Approx(dense_rq).epsilon(1e-12));
    }
}

TEST_CASE("hartree_rhs is gauge-fixed: factor velocities orthogonal to factors") {
    std::vector<Eigen::MatrixXd> site{symmetric(4, 250), symmetric(4, 251), symmetric(4, 252)};
    SumOfProductsOperator A = separable(site);
    HartreeState s = random_state({4, 4, 4}, 253);
    HartreeRhs rhs = hartree_rhs(A, s);
    for (int j = 0; j < 3; ++j)
        CHECK(std::abs(s.factors[j].dot(rhs.factor_dots[j])) < 1e-12);
}

TEST_CASE("separable operators: mean-field flow equals the matrix exponential") {
    std::vector<Eigen::MatrixXd> site{symmetric(4, 260), symmetric(4, 261), symmetric(4, 262)};
    SumOfProductsOperator A = separable(site);
    HartreeState s0 = random_state({4, 4, 4}, 263);
    auto samples = integrate_hartree(A, s0, 1.0, 1e-3);
    Eigen::VectorXd exact =
        oracles::expm(oracles::sop_matrix(A)) * s0.to_dense().vec();
    const double err =
        (samples.back().state.to_dense().vec() - exact).norm() / exact.norm();
    CHECK(err < 1e-8);
    for (const auto& smp : samples) CHECK(smp.residual < 1e-10);
}

TEST_CASE("eigenvector initial data: closed-form exponential amplitude") {
    std::vector<Eigen::MatrixXd> site{symmetric(4, 270), symmetric(4, 271)};
    SumOfProductsOperator A = separable(site);
    HartreeState s0;
    s0.lambda = 0.8;
    double mu = 0.0;
    for (const auto& m : site) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        s0.factors.push_back(es.eigenvectors().col(1));
        mu += es.eigenvalues()(1);
    }
    auto samples = integrate_hartree(A, s0, 1.0, 1e-3);
    const double expect = 0.8 * std::exp(mu);
    CHECK(std::abs(samples.back().state.lambda - expect) / std::abs(expect) < 1e-8);
    // factors are stationary up to sign-free phase
    for (int j = 0; j < 2; ++j)
        CHECK((samples.back().state.factors[j] - s0.factors[j]).norm() < 1e-8);
}

TEST_CASE("euler scheme converges at first order") {
    std::vector<Eigen::MatrixXd> site{symmetric(3, 280), symmetric(3, 281)};
    SumOfProductsOperator A = separable(site);
    HartreeState s0 = random_state({3, 3}, 282);
    Eigen::VectorXd exact = oracles::expm(0.5 * oracles::sop_matrix(A)) * s0.to_dense().vec();
    auto err = [&](double dt) {
        auto samples = integrate_hartree(A, s0, 0.5, dt, Scheme::Euler);
        return (samples.back().state.to_dense().vec() - exact).norm();
    };
    const double ratio = err(2e-2) / err(1e-2);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("rank-one tangent-projected integration matches the mean-field system") {
    std::vector<Eigen::MatrixXd> site{symmetric(3, 290), symmetric(3, 291), symmetric(3, 292)};
    SumOfProductsOperator A = separable(site);
    HartreeState s0 = random_state({3, 3, 3}, 293);
    DimensionTree tree = DimensionTree::standard(TreeKind::Tucker, 3);
    TBFTensor x0 = from_dense(s0.to_dense(), tree, 0.0);
    VectorField F = [&A](double, const DenseTensor& v) { return apply_operator(A, v); };
    TangentTrajectory traj = integrate_tangent_projected(F, x0, 0.25, 1e-2);
    auto hs = integrate_hartree(A, s0, 0.25, 1e-2);
    const DenseTensor ref = hs.back().state.to_dense();
    CHECK(frobenius_norm(evaluate(traj.states.back()) - ref) / frobenius_norm(ref) < 1e-8);
    for (double r : traj.residuals) CHECK(r < 1e-10);
}

TEST_CASE("rank degeneracy is detected") {
    DimensionTree tree = DimensionTree::standard(TreeKind::Tucker, 3);
    // a tensor that is numerically rank one but formally rank two
    auto s = random_state({3, 3, 3}, 301);
    DenseTensor x = s.to_dense();
    DenseTensor bump = random_state({3, 3, 3}, 302).to_dense();
    bump *= 1e-10;
    x += bump;
    TBFTensor x0 = from_dense(x, tree, 0.0);
    REQUIRE(x0.rank(tree.leaf_ids()[0]) == 2);
    SumOfProductsOperator A = separable({symmetric(3, 303), symmetric(3, 304), symmetric(3, 305)});
    VectorField F = [&A](double, const DenseTensor& u) { return apply_operator(A, u); };
    CHECK_THROWS_AS(integrate_tangent_projected(F, x0, 0.1, 1e-2), RankDegeneracy);
}

TEST_CASE("operator text io round trip and validation") {
    std::vector<Eigen::MatrixXd> site{symmetric(3, 310), symmetric(2, 311)};
    SumOfProductsOperator A = separable(site);
    std::ostringstream os;
    write_sop(os, A);
    std::istringstream is(os.str());
    SumOfProductsOperator back = read_sop(is);
    CHECK(back.mode_dims == A.mode_dims);
    CHECK((oracles::sop_matrix(back) - oracles::sop_matrix(A)).norm() == 0.0);
    std::istringstream bad("SOP 2 1\n1.0\nMAT 2\n1 0 0 1\nMAT 3\n");
    CHECK_THROWS_AS(read_sop(bad), IoError);
    CHECK_THROWS_AS(read_sop_file("/nonexistent/op"), IoError);
}

TEST_CASE("step parameters are validated") {
    SumOfProductsOperator A = separable({symmetric(2, 320), symmetric(2, 321)});
    HartreeState s0 = random_state({2, 2}, 322);
    CHECK_THROWS_AS(integrate_hartree(A, s0, -1.0, 1e-2), DimensionError);
    CHECK_THROWS_AS(integrate_hartree(A, s0, 1.0, 0.0), DimensionError);
}
