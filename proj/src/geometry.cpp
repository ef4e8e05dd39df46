#include "ttb/geometry.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace ttb {

namespace {

std::vector<ModeSet> child_blocks(const DimensionTree& tree, int id) {
    std::vector<ModeSet> blocks;
    for (int c : tree.children(id)) blocks.push_back(tree.node(c));
    return blocks;
}

DenseTensor pack_transfer(const Eigen::MatrixXd& cmat, const std::vector<int>& dims) {
    DenseTensor C(dims);
    std::int64_t pos = 0;
    for (Eigen::Index i = 0; i < cmat.rows(); ++i)
        for (Eigen::Index j = 0; j < cmat.cols(); ++j) C[pos++] = cmat(i, j);
    return C;
}

void require_valid_base(const TBFTensor& base) {
    if (base.is_zero()) throw DimensionError("the zero point has no chart or tangent space");
    if (!base.orthonormal) throw DimensionError("base point must be orthonormal");
}

}  // namespace

Eigen::VectorXd project_onto_along(const Eigen::VectorXd& x, const Eigen::MatrixXd& U,
                                   const Eigen::MatrixXd& W) {
    if (U.rows() != W.rows() || U.rows() != x.size())
        throw DimensionError("ambient dimensions disagree");
    if (U.cols() + W.cols() != U.rows())
        throw DimensionError("subspace dimensions must sum to the ambient dimension");
    Eigen::MatrixXd M(U.rows(), U.cols() + W.cols());
    M << U, W;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > kConditionLimit)
        throw NumericalError("the two subspaces are not complementary (ill-conditioned)");
    Eigen::VectorXd coeffs = svd.solve(x);
    return U * coeffs.head(U.cols());
}

Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& U) {
    const Eigen::Index n = U.rows(), r = U.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd W = Q.rightCols(n - r);
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double top = W.col(j).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(W(i, j)) > 0.5 * top) {
                if (W(i, j) < 0.0) W.col(j) = -W.col(j);
                break;
            }
    }
    return W;
}

Eigen::MatrixXd grassmann_chart(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                                const Eigen::MatrixXd& Uprime) {
    if (U.rows() != W.rows() || U.rows() != Uprime.rows())
        throw DimensionError("ambient dimensions disagree");
    if (U.cols() + W.cols() != U.rows() || Uprime.cols() != U.cols())
        throw DimensionError("chart requires dim U + dim W = ambient and dim U' = dim U");
    Eigen::MatrixXd M(U.rows(), U.rows());
    M << U, W;
    Eigen::MatrixXd coeffs = M.colPivHouseholderQr().solve(Uprime);
    Eigen::MatrixXd A = coeffs.topRows(U.cols());
    Eigen::MatrixXd B = coeffs.bottomRows(W.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const Eigen::VectorXd& s = svd.singularValues();
    if (A.cols() > 0 && (s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > kConditionLimit))
        throw ChartError(ChartError::Kind::CommonComplementFails,
                         "projection of U' onto U along W is singular");
    if (B.size() == 0 || B.cwiseAbs().maxCoeff() <= kChartSnapTol)
        return Eigen::MatrixXd::Zero(W.cols(), U.cols());
    return B * A.partialPivLu().inverse();
}

Eigen::MatrixXd graph_frame(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& L) {
    return U + W * L;
}

TreeParams TreeParams::zeros_like(const TBFTensor& base) {
    TreeParams p;
    p.leaf_L.resize(base.tree.node_count());
    p.C.resize(base.tree.node_count());
    for (int id : base.tree.leaf_ids()) {
        const Eigen::Index n = base.leaf_frame[id].rows(), r = base.leaf_frame[id].cols();
        p.leaf_L[id] = Eigen::MatrixXd::Zero(n - r, r);
    }
    for (int id : base.tree.internal_ids()) p.C[id] = DenseTensor(base.transfer[id].dims());
    return p;
}

TreeParams& TreeParams::operator+=(const TreeParams& o) {
    for (std::size_t i = 0; i < leaf_L.size(); ++i)
        if (o.leaf_L[i].size() > 0) leaf_L[i] += o.leaf_L[i];
    for (std::size_t i = 0; i < C.size(); ++i)
        if (o.C[i].size() > 0) C[i] += o.C[i];
    return *this;
}

TreeParams& TreeParams::operator*=(double s) {
    for (auto& L : leaf_L) L *= s;
    for (auto& c : C) c *= s;
    return *this;
}

std::vector<Eigen::MatrixXd> leaf_complements(const TBFTensor& base) {
    std::vector<Eigen::MatrixXd> W(base.tree.node_count());
    for (int id : base.tree.leaf_ids()) W[id] = orthogonal_complement(base.leaf_frame[id]);
    return W;
}

TBFTensor chart_decode(const TBFTensor& base, const ChartParams& p) {
    require_valid_base(base);
    TBFTensor y = base;
    std::vector<Eigen::MatrixXd> W = leaf_complements(base);
    for (int id : base.tree.leaf_ids())
        y.leaf_frame[id] = graph_frame(base.leaf_frame[id], W[id], p.leaf_L[id]);
    for (int id : base.tree.internal_ids()) y.transfer[id] = p.C[id];
    y.orthonormal = false;
    return y;
}

ChartParams chart_encode(const TBFTensor& base, const DenseTensor& w, double tol) {
    require_valid_base(base);
    if (w.dims() != base.mode_dims) throw DimensionError("mode dimensions disagree");
    TBRank rw = tb_rank(w, base.tree, tol);
    if (!(rw == base.ranks()))
        throw ChartError(ChartError::Kind::RankMismatch,
                         "w has a different tree-based rank than the base point");

    const DimensionTree& tree = base.tree;
    ChartParams p = ChartParams::zeros_like(base);
    std::vector<Eigen::MatrixXd> W = leaf_complements(base);
    std::vector<Eigen::MatrixXd> w_basis(tree.node_count());

    for (int id : tree.leaf_ids()) {
        Frame Uw = minimal_subspace(w, tree.node(id), tol);
        p.leaf_L[id] = grassmann_chart(base.leaf_frame[id], W[id], Uw.basis);
        w_basis[id] = graph_frame(base.leaf_frame[id], W[id], p.leaf_L[id]);
    }
    for (int id : tree.internal_ids()) {
        if (tree.is_root(id)) continue;
        Eigen::MatrixXd B = node_basis(base, id);
        Frame F = minimal_subspace(w, tree.node(id), tol);
        Eigen::MatrixXd coords = F.basis.transpose() * B;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(coords);
        const Eigen::VectorXd& s = svd.singularValues();
        if (s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > kConditionLimit)
            throw ChartError(ChartError::Kind::NotInNeighborhood,
                             "projected node basis at " + tree.node(id).to_string() +
                                 " is degenerate");
        w_basis[id] = F.basis * coords;
    }
    const double fit_tol = 100.0 * std::max(tol, kRankFloor);
    for (int id : tree.internal_ids()) {
        std::vector<Eigen::MatrixXd> child_bases;
        for (int c : tree.children(id)) child_bases.push_back(w_basis[c]);
        Eigen::MatrixXd P = product_basis(child_blocks(tree, id), child_bases, base.mode_dims);
        Eigen::MatrixXd targets =
            tree.is_root(id) ? Eigen::MatrixXd(w.vec()) : w_basis[id];
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(P);
        Eigen::MatrixXd cmat(targets.cols(), P.cols());
        for (Eigen::Index i = 0; i < targets.cols(); ++i) {
            Eigen::VectorXd c = qr.solve(targets.col(i));
            const double res = (P * c - targets.col(i)).norm();
            if (res > fit_tol * std::max(1.0, targets.col(i).norm()))
                throw ChartError(ChartError::Kind::NotInNeighborhood,
                                 "node " + tree.node(id).to_string() +
                                     " does not factor over its children");
            cmat.row(i) = c.transpose();
        }
        p.C[id] = pack_transfer(cmat, base.transfer[id].dims());
    }
    return p;
}

DenseTensor evaluate_directional(const TBFTensor& x,
                                 const std::vector<Eigen::MatrixXd>& leaf_delta,
                                 const std::vector<DenseTensor>& transfer_delta) {
    const DimensionTree& tree = x.tree;
    // pair (basis, directional derivative of basis) per node, leaves-to-root
    std::vector<Eigen::MatrixXd> B(tree.node_count()), dB(tree.node_count());
    std::vector<int> order = tree.preorder();
    std::reverse(order.begin(), order.end());
    for (int id : order) {
        if (tree.is_leaf(id)) {
            B[id] = x.leaf_frame[id];
            dB[id] = leaf_delta[id].size() > 0
                         ? leaf_delta[id]
                         : Eigen::MatrixXd::Zero(B[id].rows(), B[id].cols());
            continue;
        }
        std::vector<Eigen::MatrixXd> kids;
        for (int c : tree.children(id)) kids.push_back(B[c]);
        const auto blocks = child_blocks(tree, id);
        Eigen::MatrixXd P = product_basis(blocks, kids, x.mode_dims);
        Eigen::MatrixXd cmat = matricize(x.transfer[id], std::vector<int>{0});
        Eigen::MatrixXd dcmat =
            transfer_delta[id].size() > 0
                ? matricize(transfer_delta[id], std::vector<int>{0})
                : Eigen::MatrixXd::Zero(cmat.rows(), cmat.cols());
        dB[id] = P * dcmat.transpose();
        for (std::size_t ci = 0; ci < kids.size(); ++ci) {
            std::vector<Eigen::MatrixXd> mixed = kids;
            mixed[ci] = dB[tree.children(id)[ci]];
            dB[id] += product_basis(blocks, mixed, x.mode_dims) * cmat.transpose();
        }
        B[id] = P * cmat.transpose();
    }
    const int root = tree.root();
    std::vector<double> values(dB[root].data(), dB[root].data() + dB[root].rows());
    return DenseTensor(x.mode_dims, std::move(values));
}

DenseTensor tangent_assemble(const TBFTensor& base, const TangentParams& t) {
    require_valid_base(base);
    std::vector<Eigen::MatrixXd> W = leaf_complements(base);
    std::vector<Eigen::MatrixXd> leaf_delta(base.tree.node_count());
    for (int id : base.tree.leaf_ids()) leaf_delta[id] = W[id] * t.leaf_L[id];
    return evaluate_directional(base, leaf_delta, t.C);
}

Eigen::MatrixXd tangent_generators(const TBFTensor& base,
                                   std::vector<TangentParams>* params_out) {
    require_valid_base(base);
    const DimensionTree& tree = base.tree;
    std::vector<Eigen::MatrixXd> W = leaf_complements(base);
    const std::int64_t N = evaluate(base).size();

    std::vector<TangentParams> units;
    for (int id : tree.leaf_ids()) {
        const Eigen::Index n = base.leaf_frame[id].rows(), r = base.leaf_frame[id].cols();
        for (Eigen::Index i = 0; i < n - r; ++i)
            for (Eigen::Index j = 0; j < r; ++j) {
                TangentParams t = TangentParams::zeros_like(base);
                t.leaf_L[id](i, j) = 1.0;
                units.push_back(std::move(t));
            }
    }
    for (int id : tree.internal_ids())
        for (std::int64_t i = 0; i < base.transfer[id].size(); ++i) {
            TangentParams t = TangentParams::zeros_like(base);
            t.C[id][i] = 1.0;
            units.push_back(std::move(t));
        }

    Eigen::MatrixXd G(N, static_cast<Eigen::Index>(units.size()));
    for (std::size_t k = 0; k < units.size(); ++k)
        G.col(static_cast<Eigen::Index>(k)) = tangent_assemble(base, units[k]).vec();
    if (params_out) *params_out = std::move(units);
    return G;
}

std::vector<DenseTensor> tangent_basis(const TBFTensor& base, double tol) {
    Eigen::MatrixXd G = tangent_generators(base);
    Frame f = column_space(G, tol);
    std::vector<DenseTensor> out;
    out.reserve(f.rank());
    for (int j = 0; j < f.rank(); ++j) {
        Eigen::VectorXd col = f.basis.col(j);
        out.emplace_back(base.mode_dims, std::vector<double>(col.data(), col.data() + col.size()));
    }
    return out;
}

int tangent_dimension(const TBFTensor& base) {
    const DimensionTree& tree = base.tree;
    int dim = 0;
    for (int id : tree.internal_ids()) {
        int prod = base.rank(id);
        for (int c : tree.children(id)) prod *= base.rank(c);
        dim += prod;
        if (!tree.is_root(id)) dim -= base.rank(id) * base.rank(id);
    }
    for (int id : tree.leaf_ids()) {
        const int n = static_cast<int>(base.leaf_frame[id].rows());
        const int r = base.rank(id);
        dim += r * (n - r);
    }
    return dim;
}

TangentProjection project_tangent(const TBFTensor& base, const DenseTensor& x) {
    if (x.dims() != base.mode_dims) throw DimensionError("mode dimensions disagree");
    std::vector<TangentParams> units;
    Eigen::MatrixXd G = tangent_generators(base, &units);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? s(0) * kDefaultTol : 0.0;
    Eigen::VectorXd utx = svd.matrixU().transpose() * x.vec();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(G.cols());
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) {
            y += (utx(i) / s(i)) * svd.matrixV().col(i);
            ++rank;
        }
    TangentProjection out;
    Eigen::VectorXd proj = G * y;
    out.projected =
        DenseTensor(base.mode_dims, std::vector<double>(proj.data(), proj.data() + proj.size()));
    out.params = TangentParams::zeros_like(base);
    for (std::size_t k = 0; k < units.size(); ++k)
        out.params += y(static_cast<Eigen::Index>(k)) * units[k];
    Eigen::VectorXd defect =
        svd.matrixU().leftCols(rank).transpose() * (x.vec() - proj);
    out.residual = rank > 0 ? defect.cwiseAbs().maxCoeff() : 0.0;
    return out;
}

double param_norm(const TreeParams& p) {
    double total = 0.0;
    for (const auto& L : p.leaf_L)
        if (L.size() > 0) total += L.jacobiSvd().singularValues()(0);
    for (const auto& c : p.C) {
        if (c.size() > 0) total += c.vec().norm();
    }
    return total;
}

}  // namespace ttb
