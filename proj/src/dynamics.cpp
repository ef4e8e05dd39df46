#include "ttb/dynamics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ttb {

void SumOfProductsOperator::validate() const {
    const std::size_t d = mode_dims.size();
    if (d == 0) throw DimensionError("operator has no modes");
    for (const auto& term : terms) {
        if (term.factors.size() != d)
            throw DimensionError("operator term does not have one factor per mode");
        for (std::size_t j = 0; j < d; ++j)
            if (term.factors[j].rows() != mode_dims[j] || term.factors[j].cols() != mode_dims[j])
                throw DimensionError("operator factor is not square of the mode dimension");
    }
}

DenseTensor apply_operator(const SumOfProductsOperator& A, const DenseTensor& v) {
    A.validate();
    if (v.dims() != A.mode_dims) throw DimensionError("operator and tensor dimensions disagree");
    DenseTensor out(v.dims());
    for (const auto& term : A.terms) {
        DenseTensor w = v;
        for (std::size_t j = 0; j < term.factors.size(); ++j)
            w = mode_multiply(w, static_cast<int>(j), term.factors[j]);
        w *= term.weight;
        out += w;
    }
    return out;
}

void write_sop(std::ostream& os, const SumOfProductsOperator& A) {
    A.validate();
    os.precision(17);
    os << "SOP " << A.mode_dims.size() << ' ' << A.terms.size() << '\n';
    for (const auto& term : A.terms) {
        os << term.weight << '\n';
        for (const auto& M : term.factors) {
            os << "MAT " << M.rows() << '\n';
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                for (Eigen::Index j = 0; j < M.cols(); ++j)
                    os << M(i, j) << (j + 1 == M.cols() ? '\n' : ' ');
        }
    }
}

SumOfProductsOperator read_sop(std::istream& is) {
    std::string kw;
    int d = 0, T = 0;
    if (!(is >> kw >> d >> T) || kw != "SOP" || d < 1 || T < 0)
        throw IoError("expected 'SOP d T' header");
    SumOfProductsOperator A;
    A.mode_dims.assign(d, 0);
    for (int t = 0; t < T; ++t) {
        SumOfProductsOperator::Term term;
        if (!(is >> term.weight)) throw IoError("missing term weight");
        for (int j = 0; j < d; ++j) {
            int n = 0;
            if (!(is >> kw >> n) || kw != "MAT" || n < 1) throw IoError("expected 'MAT n'");
            if (A.mode_dims[j] == 0) A.mode_dims[j] = n;
            if (A.mode_dims[j] != n) throw IoError("inconsistent factor dimensions");
            Eigen::MatrixXd M(n, n);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    if (!(is >> M(i, k))) throw IoError("truncated MAT payload");
            term.factors.push_back(std::move(M));
        }
        A.terms.push_back(std::move(term));
    }
    if (T == 0) throw IoError("operator must have at least one term");
    A.validate();
    return A;
}

void write_sop_file(const std::string& path, const SumOfProductsOperator& A) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_sop(out, A);
}

SumOfProductsOperator read_sop_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_sop(in);
}

DenseTensor HartreeState::to_dense() const {
    std::vector<std::pair<ModeSet, Eigen::VectorXd>> parts;
    std::vector<int> dims;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        parts.emplace_back(ModeSet::singleton(static_cast<int>(j)), factors[j]);
        dims.push_back(static_cast<int>(factors[j].size()));
    }
    DenseTensor out = outer_product(parts, dims);
    out *= lambda;
    return out;
}

Eigen::MatrixXd mean_field(const SumOfProductsOperator& A,
                           const std::vector<Eigen::VectorXd>& factors, int j) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(A.mode_dims[j], A.mode_dims[j]);
    for (const auto& term : A.terms) {
        double coeff = term.weight;
        for (std::size_t k = 0; k < factors.size(); ++k)
            if (static_cast<int>(k) != j)
                coeff *= factors[k].dot(term.factors[k] * factors[k]);
        out += coeff * term.factors[j];
    }
    return out;
}

double rayleigh_quotient(const SumOfProductsOperator& A,
                         const std::vector<Eigen::VectorXd>& factors) {
    double total = 0.0;
    for (const auto& term : A.terms) {
        double coeff = term.weight;
        for (std::size_t k = 0; k < factors.size(); ++k)
            coeff *= factors[k].dot(term.factors[k] * factors[k]);
        total += coeff;
    }
    return total;
}

HartreeRhs hartree_rhs(const SumOfProductsOperator& A, const HartreeState& s) {
    A.validate();
    // 0-homogeneous extension: evaluate at normalized factors so that the
    // field restricted to the product of spheres is the gauge-fixed system
    std::vector<Eigen::VectorXd> unit(s.factors.size());
    for (std::size_t j = 0; j < s.factors.size(); ++j) {
        const double n = s.factors[j].norm();
        if (n == 0.0) throw NumericalError("zero factor in rank-one state");
        unit[j] = s.factors[j] / n;
    }
    HartreeRhs rhs;
    rhs.lambda_dot = rayleigh_quotient(A, unit) * s.lambda;
    rhs.factor_dots.resize(unit.size());
    for (std::size_t j = 0; j < unit.size(); ++j) {
        Eigen::VectorXd Av = mean_field(A, unit, static_cast<int>(j)) * unit[j];
        rhs.factor_dots[j] = Av - unit[j] * unit[j].dot(Av);
    }
    return rhs;
}

namespace {

HartreeState axpy(const HartreeState& s, double h, const HartreeRhs& k) {
    HartreeState out = s;
    out.lambda += h * k.lambda_dot;
    for (std::size_t j = 0; j < out.factors.size(); ++j) out.factors[j] += h * k.factor_dots[j];
    return out;
}

HartreeRhs combine_rk4(const HartreeRhs& k1, const HartreeRhs& k2, const HartreeRhs& k3,
                       const HartreeRhs& k4) {
    HartreeRhs out = k1;
    out.lambda_dot = (k1.lambda_dot + 2 * k2.lambda_dot + 2 * k3.lambda_dot + k4.lambda_dot) / 6;
    for (std::size_t j = 0; j < out.factor_dots.size(); ++j)
        out.factor_dots[j] = (k1.factor_dots[j] + 2 * k2.factor_dots[j] + 2 * k3.factor_dots[j] +
                              k4.factor_dots[j]) /
                             6;
    return out;
}

double gauge_defect(const HartreeState& s, const HartreeRhs& rhs) {
    double defect = 0.0;
    for (std::size_t j = 0; j < s.factors.size(); ++j) {
        const Eigen::VectorXd u = s.factors[j].normalized();
        defect = std::max(defect, std::abs(u.dot(rhs.factor_dots[j])));
    }
    return defect;
}

int step_count(double t_end, double dt) {
    if (!(t_end > 0.0) || !(dt > 0.0)) throw DimensionError("t_end and dt must be positive");
    return std::max(1, static_cast<int>(std::lround(t_end / dt)));
}

}  // namespace

std::vector<HartreeSample> integrate_hartree(const SumOfProductsOperator& A,
                                             const HartreeState& initial, double t_end,
                                             double dt, Scheme scheme) {
    A.validate();
    if (initial.factors.size() != A.mode_dims.size())
        throw DimensionError("state and operator mode counts disagree");
    const int n = step_count(t_end, dt);
    const double h = t_end / n;

    HartreeState s = initial;
    for (auto& v : s.factors) {
        const double norm = v.norm();
        if (norm == 0.0) throw NumericalError("zero factor in initial rank-one state");
        s.lambda *= norm;
        v /= norm;
    }
    std::vector<HartreeSample> samples;
    samples.push_back({0.0, s, gauge_defect(s, hartree_rhs(A, s))});
    for (int i = 0; i < n; ++i) {
        if (scheme == Scheme::Euler) {
            s = axpy(s, h, hartree_rhs(A, s));
        } else {
            HartreeRhs k1 = hartree_rhs(A, s);
            HartreeRhs k2 = hartree_rhs(A, axpy(s, h / 2, k1));
            HartreeRhs k3 = hartree_rhs(A, axpy(s, h / 2, k2));
            HartreeRhs k4 = hartree_rhs(A, axpy(s, h, k3));
            s = axpy(s, h, combine_rk4(k1, k2, k3, k4));
        }
        for (auto& v : s.factors) {
            const double norm = v.norm();
            s.lambda *= norm;
            v /= norm;
        }
        samples.push_back({(i + 1) * h, s, gauge_defect(s, hartree_rhs(A, s))});
    }
    return samples;
}

namespace {

/// Base-point chart coordinates of the base itself: zero leaf maps, the
/// base's own transfer coefficients.
ChartParams base_params(const TBFTensor& base) {
    ChartParams p = ChartParams::zeros_like(base);
    for (int id : base.tree.internal_ids()) p.C[id] = base.transfer[id];
    return p;
}

struct ChartSlope {
    TangentParams velocity;
    double residual = 0.0;
};

/// Pullback of the projected vector field into the chart at `base`:
/// least-squares solve of (D decode)(p) q = F against the decode derivative,
/// whose range is the tangent space at the decoded point.
ChartSlope chart_slope(const VectorField& F, double t, const TBFTensor& base,
                       const std::vector<Eigen::MatrixXd>& W,
                       const std::vector<TangentParams>& units, const ChartParams& p) {
    TBFTensor y = chart_decode(base, p);
    DenseTensor y_dense = evaluate(y);
    DenseTensor f = F(t, y_dense);
    if (f.dims() != y_dense.dims())
        throw DimensionError("vector field changed the tensor dimensions");

    Eigen::MatrixXd H(y_dense.size(), static_cast<Eigen::Index>(units.size()));
    std::vector<Eigen::MatrixXd> leaf_delta(base.tree.node_count());
    for (std::size_t k = 0; k < units.size(); ++k) {
        for (int id : base.tree.leaf_ids()) leaf_delta[id] = W[id] * units[k].leaf_L[id];
        H.col(static_cast<Eigen::Index>(k)) =
            evaluate_directional(y, leaf_delta, units[k].C).vec();
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? s(0) * kDefaultTol : 0.0;
    Eigen::VectorXd utf = svd.matrixU().transpose() * f.vec();
    Eigen::VectorXd q = Eigen::VectorXd::Zero(H.cols());
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) {
            q += (utf(i) / s(i)) * svd.matrixV().col(i);
            ++rank;
        }
    ChartSlope out;
    out.velocity = TangentParams::zeros_like(base);
    for (std::size_t k = 0; k < units.size(); ++k)
        out.velocity += q(static_cast<Eigen::Index>(k)) * units[k];
    Eigen::VectorXd defect =
        svd.matrixU().leftCols(rank).transpose() * (f.vec() - H * q);
    out.residual = rank > 0 ? defect.cwiseAbs().maxCoeff() : 0.0;
    return out;
}

void check_rank_health(const TBFTensor& x) {
    for (int id : x.tree.internal_ids()) {
        const DenseTensor& C = x.transfer[id];
        for (int axis = 0; axis < C.order(); ++axis) {
            Eigen::MatrixXd M = matricize(C, std::vector<int>{axis});
            if (std::min(M.rows(), M.cols()) == 0)
                throw RankDegeneracy("rank collapsed to zero at node " +
                                     x.tree.node(id).to_string());
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            const Eigen::VectorXd& s = svd.singularValues();
            if (s(s.size() - 1) < 1e-8 * s(0))
                throw RankDegeneracy("transfer unfolding at node " +
                                     x.tree.node(id).to_string() +
                                     " is numerically rank deficient");
        }
    }
}

}  // namespace

TangentTrajectory integrate_tangent_projected(const VectorField& F, const TBFTensor& initial,
                                              double t_end, double dt, Scheme scheme) {
    const int n = step_count(t_end, dt);
    const double h = t_end / n;

    TBFTensor x = initial.orthonormal ? initial : orthonormalize(initial);
    if (x.is_zero()) throw DimensionError("initial state must be nonzero");
    check_rank_health(x);

    TangentTrajectory traj;
    for (int i = 0; i <= n; ++i) {
        const double t = i * h;
        std::vector<Eigen::MatrixXd> W = leaf_complements(x);
        std::vector<TangentParams> units;
        tangent_generators(x, &units);  // enumeration order shared with chart_slope
        ChartParams p0 = base_params(x);

        ChartSlope k1 = chart_slope(F, t, x, W, units, p0);
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.residuals.push_back(k1.residual);
        if (i == n) break;

        ChartParams p_next = p0;
        if (scheme == Scheme::Euler) {
            p_next += h * k1.velocity;
        } else {
            ChartSlope k2 = chart_slope(F, t + h / 2, x, W, units, p0 + (h / 2) * k1.velocity);
            ChartSlope k3 = chart_slope(F, t + h / 2, x, W, units, p0 + (h / 2) * k2.velocity);
            ChartSlope k4 = chart_slope(F, t + h, x, W, units, p0 + h * k3.velocity);
            TangentParams combo = k1.velocity;
            combo += 2.0 * k2.velocity;
            combo += 2.0 * k3.velocity;
            combo += k4.velocity;
            combo *= h / 6.0;
            p_next += combo;
        }
        x = orthonormalize(chart_decode(x, p_next));
        check_rank_health(x);
    }
    return traj;
}

void write_trajectory(std::ostream& os, const std::vector<double>& times,
                      const std::vector<double>& lambdas, const std::vector<double>& norms,
                      const std::vector<double>& residuals) {
    os.precision(17);
    for (std::size_t i = 0; i < times.size(); ++i)
        os << times[i] << ' ' << lambdas[i] << ' ' << norms[i] << ' ' << residuals[i] << '\n';
}

}  // namespace ttb
