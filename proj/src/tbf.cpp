#include "ttb/tbf.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace ttb {

namespace {

int count_rank(const Eigen::VectorXd& sigma, double tol) {
    if (sigma.size() == 0) return 0;
    const double cutoff = sigma(0) * std::max(tol, kRankFloor);
    int r = 0;
    while (r < sigma.size() && sigma(r) > cutoff) ++r;
    return r;
}

}  // namespace

Eigen::MatrixXd product_basis(const std::vector<ModeSet>& blocks,
                              const std::vector<Eigen::MatrixXd>& bases,
                              const std::vector<int>& mode_dims) {
    const int k = static_cast<int>(blocks.size());
    std::int64_t cols = 1;
    for (const auto& b : bases) cols *= b.cols();
    std::int64_t rows = 1;
    for (int i = 0; i < k; ++i)
        for (int m : blocks[i].indices()) rows *= mode_dims[m];
    Eigen::MatrixXd P(rows, cols);
    std::vector<int> idx(k, 0);
    for (std::int64_t c = 0; c < cols; ++c) {
        std::int64_t rem = c;
        for (int i = k - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % bases[i].cols());
            rem /= bases[i].cols();
        }
        std::vector<std::pair<ModeSet, Eigen::VectorXd>> factors;
        factors.reserve(k);
        for (int i = 0; i < k; ++i) factors.emplace_back(blocks[i], bases[i].col(idx[i]));
        P.col(c) = outer_product(factors, mode_dims).vec();
    }
    return P;
}

namespace {

std::vector<ModeSet> child_blocks(const DimensionTree& tree, int id) {
    std::vector<ModeSet> blocks;
    for (int c : tree.children(id)) blocks.push_back(tree.node(c));
    return blocks;
}

TBFTensor make_zero(const DimensionTree& tree, const std::vector<int>& mode_dims) {
    TBFTensor x;
    x.tree = tree;
    x.mode_dims = mode_dims;
    x.leaf_frame.resize(tree.node_count());
    x.transfer.resize(tree.node_count());
    for (int id : tree.leaf_ids())
        x.leaf_frame[id] = Eigen::MatrixXd(mode_dims[tree.node(id).min_index()], 0);
    for (int id : tree.internal_ids()) {
        std::vector<int> dims(tree.children(id).size() + 1, 0);
        x.transfer[id] = DenseTensor(dims);
    }
    x.orthonormal = true;
    return x;
}

/// Row-major copy of an (r_parent x prod r_children) coefficient matrix into
/// the transfer layout (parent index slowest).
DenseTensor pack_transfer(const Eigen::MatrixXd& cmat, const std::vector<int>& dims) {
    DenseTensor C(dims);
    std::int64_t pos = 0;
    for (Eigen::Index i = 0; i < cmat.rows(); ++i)
        for (Eigen::Index j = 0; j < cmat.cols(); ++j) C[pos++] = cmat(i, j);
    return C;
}

/// Build transfer tensors for the given (orthonormal) per-node frames by
/// projecting each node basis onto the product of its children's frames.
TBFTensor assemble_from_frames(const DenseTensor& v, const DimensionTree& tree,
                               const std::vector<Eigen::MatrixXd>& frames) {
    TBFTensor x;
    x.tree = tree;
    x.mode_dims = v.dims();
    x.leaf_frame.resize(tree.node_count());
    x.transfer.resize(tree.node_count());
    for (int id : tree.leaf_ids()) x.leaf_frame[id] = frames[id];
    for (int id : tree.internal_ids()) {
        std::vector<Eigen::MatrixXd> child_bases;
        for (int c : tree.children(id)) child_bases.push_back(frames[c]);
        Eigen::MatrixXd P = product_basis(child_blocks(tree, id), child_bases, v.dims());
        Eigen::MatrixXd cmat;
        if (tree.is_root(id))
            cmat = v.vec().transpose() * P;
        else
            cmat = frames[id].transpose() * P;
        std::vector<int> dims;
        dims.push_back(static_cast<int>(cmat.rows()));
        for (int c : tree.children(id))
            dims.push_back(static_cast<int>(frames[c].cols()));
        x.transfer[id] = pack_transfer(cmat, dims);
    }
    return x;
}

}  // namespace

int TBFTensor::rank(int id) const {
    if (tree.is_leaf(id)) return static_cast<int>(leaf_frame[id].cols());
    return transfer[id].order() > 0 ? transfer[id].dim(0) : 0;
}

TBRank TBFTensor::ranks() const {
    TBRank r;
    r.r.resize(tree.node_count());
    for (std::size_t id = 0; id < tree.node_count(); ++id) r.r[id] = rank(static_cast<int>(id));
    return r;
}

Eigen::MatrixXd node_basis(const TBFTensor& x, int node_id) {
    if (x.tree.is_leaf(node_id)) return x.leaf_frame[node_id];
    std::vector<Eigen::MatrixXd> child_bases;
    for (int c : x.tree.children(node_id)) child_bases.push_back(node_basis(x, c));
    Eigen::MatrixXd P = product_basis(child_blocks(x.tree, node_id), child_bases, x.mode_dims);
    Eigen::MatrixXd cmat = matricize(x.transfer[node_id], std::vector<int>{0});
    return P * cmat.transpose();
}

DenseTensor evaluate(const TBFTensor& x) {
    if (x.is_zero()) return DenseTensor(x.mode_dims);
    Eigen::MatrixXd B = node_basis(x, x.tree.root());
    std::vector<double> values(B.data(), B.data() + B.rows());
    return DenseTensor(x.mode_dims, std::move(values));
}

TBFTensor from_dense(const DenseTensor& v, const DimensionTree& tree, double tol,
                     const std::optional<TBRank>& rank_caps) {
    if (v.order() != tree.mode_count())
        throw DimensionError("dense order does not match the tree's mode count");
    if (rank_caps && rank_caps->r.size() != tree.node_count())
        throw DimensionError("rank cap tuple length does not match the tree");
    if (frobenius_norm(v) == 0.0) return make_zero(tree, v.dims());

    std::vector<Eigen::MatrixXd> frames(tree.node_count());
    bool truncated = false;
    for (int id : tree.preorder()) {
        if (tree.is_root(id)) continue;
        Frame f = minimal_subspace(v, tree.node(id), tol);
        int keep = f.rank();
        if (rank_caps) keep = std::min(keep, std::max(0, (*rank_caps)[id]));
        if (keep < f.rank()) truncated = true;
        if (keep == 0) return make_zero(tree, v.dims());
        frames[id] = f.basis.leftCols(keep);
    }
    TBFTensor x = assemble_from_frames(v, tree, frames);
    x.orthonormal = !truncated;
    return x;
}

TBRank tb_rank(const DenseTensor& v, const DimensionTree& tree, double tol) {
    if (v.order() != tree.mode_count())
        throw DimensionError("dense order does not match the tree's mode count");
    TBRank r;
    r.r.assign(tree.node_count(), 0);
    const bool nonzero = frobenius_norm(v) > 0.0;
    for (int id : tree.preorder()) {
        if (tree.is_root(id)) {
            r[id] = nonzero ? 1 : 0;
            continue;
        }
        r[id] = count_rank(unfolding_singular_values(v, tree.node(id)), tol);
    }
    return r;
}

AdmissibilityReport check_admissible(const TBRank& r, const DimensionTree& tree,
                                     const std::vector<int>& mode_dims) {
    AdmissibilityReport rep;
    auto fail = [&rep](std::string msg) {
        rep.admissible = false;
        rep.violations.push_back(std::move(msg));
    };
    if (r.r.size() != tree.node_count()) {
        fail("rank tuple length does not match the tree");
        return rep;
    }
    if (r[tree.root()] != 1)
        fail("root rank is " + std::to_string(r[tree.root()]) + ", must be 1");
    for (int id : tree.leaf_ids()) {
        int n = mode_dims[tree.node(id).min_index()];
        if (r[id] > n)
            fail("leaf " + tree.node(id).to_string() + ": rank " + std::to_string(r[id]) +
                 " exceeds mode dimension " + std::to_string(n));
        if (r[id] < 0) fail("leaf " + tree.node(id).to_string() + ": negative rank");
    }
    for (int id : tree.internal_ids()) {
        std::int64_t prod = 1;
        for (int c : tree.children(id)) prod *= std::max(0, r[c]);
        if (r[id] > prod)
            fail("node " + tree.node(id).to_string() + ": rank " + std::to_string(r[id]) +
                 " exceeds the product of its children's ranks " + std::to_string(prod));
        for (int c : tree.children(id)) {
            std::int64_t bound = r[id];
            for (int s : tree.children(id))
                if (s != c) bound *= std::max(0, r[s]);
            if (r[c] > bound)
                fail("node " + tree.node(c).to_string() + ": rank " + std::to_string(r[c]) +
                     " exceeds parent rank times sibling ranks " + std::to_string(bound));
        }
    }
    return rep;
}

FullRankReport check_full_rank(const TBFTensor& x, double tol) {
    FullRankReport rep;
    auto record = [&rep](int node, int axis, const Eigen::MatrixXd& m, double tol2) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        FullRankEntry e;
        e.node = node;
        e.axis = axis;
        e.rank = count_rank(svd.singularValues(), tol2);
        e.max_rank = static_cast<int>(std::min(m.rows(), m.cols()));
        e.full = (e.rank == e.max_rank);
        if (!e.full) rep.all_full = false;
        rep.entries.push_back(e);
    };
    for (int id : x.tree.leaf_ids()) record(id, 0, x.leaf_frame[id], tol);
    for (int id : x.tree.internal_ids()) {
        const DenseTensor& C = x.transfer[id];
        for (int axis = 0; axis < C.order(); ++axis)
            record(id, axis, matricize(C, std::vector<int>{axis}), tol);
    }
    return rep;
}

TBFTensor orthonormalize(const TBFTensor& x) {
    TBFTensor y = x;
    if (y.is_zero()) {
        y.orthonormal = true;
        return y;
    }
    std::vector<int> order = y.tree.preorder();
    std::reverse(order.begin(), order.end());  // children before parents
    for (int id : order) {
        if (y.tree.is_root(id)) continue;
        Eigen::MatrixXd A;
        if (y.tree.is_leaf(id))
            A = y.leaf_frame[id];
        else
            A = matricize(y.transfer[id], std::vector<int>{0}).transpose();
        const Eigen::Index r = A.cols();
        if (A.rows() < r)
            throw DimensionError("transfer rank exceeds its unfolding size; inadmissible input");
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
        Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), r);
        Eigen::MatrixXd R = Q.transpose() * A;
        for (Eigen::Index i = 0; i < r; ++i)
            if (R(i, i) < 0.0) {
                Q.col(i) = -Q.col(i);
                R.row(i) = -R.row(i);
            }
        if (y.tree.is_leaf(id)) {
            y.leaf_frame[id] = Q;
        } else {
            y.transfer[id] = pack_transfer(Q.transpose(), y.transfer[id].dims());
        }
        const int p = y.tree.parent(id);
        const auto& siblings = y.tree.children(p);
        const int axis =
            1 + static_cast<int>(std::find(siblings.begin(), siblings.end(), id) -
                                 siblings.begin());
        y.transfer[p] = mode_multiply(y.transfer[p], axis, R);
    }
    y.orthonormal = true;
    return y;
}

TruncationResult truncate(const DenseTensor& v, const DimensionTree& tree,
                          const TBRank& target) {
    if (v.order() != tree.mode_count())
        throw DimensionError("dense order does not match the tree's mode count");
    AdmissibilityReport adm = check_admissible(target, tree, v.dims());
    if (!adm.admissible) {
        std::string msg = "inadmissible target rank:";
        for (const auto& s : adm.violations) msg += "\n  " + s;
        throw DimensionError(msg);
    }
    TruncationResult result;
    if (frobenius_norm(v) == 0.0) {
        result.tensor = make_zero(tree, v.dims());
        return result;
    }
    std::vector<Eigen::MatrixXd> frames(tree.node_count());
    double discarded_sq = 0.0;
    bool any_zero = false;
    for (int id : tree.preorder()) {
        if (tree.is_root(id)) continue;
        Eigen::VectorXd sigma = unfolding_singular_values(v, tree.node(id));
        const int genuine = count_rank(sigma, 0.0);
        const int keep = std::min(target[id], genuine);
        Eigen::VectorXd dropped = sigma.tail(sigma.size() - keep);
        discarded_sq += dropped.squaredNorm();
        result.discarded.push_back(dropped);
        if (keep == 0) {
            any_zero = true;
            continue;
        }
        frames[id] = minimal_subspace(v, tree.node(id), 0.0).basis.leftCols(keep);
    }
    result.error_bound = std::sqrt(discarded_sq);
    if (any_zero) {
        result.tensor = make_zero(tree, v.dims());
        result.error_bound = frobenius_norm(v);
        return result;
    }
    result.tensor = assemble_from_frames(v, tree, frames);
    result.tensor.orthonormal = false;
    return result;
}

TruncationResult truncate(const TBFTensor& x, const TBRank& target) {
    return truncate(evaluate(x), x.tree, target);
}

NestednessReport nestedness_check(const DenseTensor& v, const DimensionTree& tree, double tol) {
    NestednessReport rep;
    rep.tol = tol;
    const double threshold = 100.0 * std::max(tol, kRankFloor);
    for (int id : tree.internal_ids()) {
        NestednessEntry e;
        e.node = id;
        Eigen::MatrixXd U = minimal_subspace(v, tree.node(id), tol).basis;
        std::vector<Eigen::MatrixXd> child_bases;
        for (int c : tree.children(id))
            child_bases.push_back(minimal_subspace(v, tree.node(c), tol).basis);
        Eigen::MatrixXd P = product_basis(child_blocks(tree, id), child_bases, v.dims());
        e.parent_dim = static_cast<int>(U.cols());
        e.product_dim = static_cast<int>(P.cols());
        e.inclusion_defect = (U - P * (P.transpose() * U)).norm();

        // Contractions of the node's basis vectors against functionals on the
        // complementary siblings must span each child's minimal subspace.
        e.contraction_spans_ok = true;
        const std::vector<int> node_modes = tree.node(id).indices();
        std::vector<int> node_dims;
        for (int m : node_modes) node_dims.push_back(v.dim(m));
        for (std::size_t ci = 0; ci < tree.children(id).size(); ++ci) {
            const int c = tree.children(id)[ci];
            const Eigen::MatrixXd& Uc = child_bases[ci];
            // local positions of the child's modes and of the complement
            std::vector<int> keep_local, comp_local, comp_dims;
            for (std::size_t p = 0; p < node_modes.size(); ++p) {
                if (tree.node(c).contains(node_modes[p]))
                    keep_local.push_back(static_cast<int>(p));
                else {
                    comp_local.push_back(static_cast<int>(p));
                    comp_dims.push_back(node_dims[p]);
                }
            }
            std::mt19937_64 rng(12345 + 1000 * static_cast<std::uint64_t>(id) + ci);
            std::normal_distribution<double> gauss(0.0, 1.0);
            const int n_phi = 3 * std::max<int>(1, static_cast<int>(Uc.cols()));
            Eigen::MatrixXd G(Uc.rows(), static_cast<Eigen::Index>(U.cols()) * n_phi);
            Eigen::Index col = 0;
            for (int t = 0; t < n_phi; ++t) {
                DenseTensor phi(comp_dims);
                for (std::int64_t i = 0; i < phi.size(); ++i) phi[i] = gauss(rng);
                for (Eigen::Index i = 0; i < U.cols(); ++i) {
                    DenseTensor ui(node_dims,
                                   std::vector<double>(U.col(i).data(),
                                                       U.col(i).data() + U.rows()));
                    G.col(col++) =
                        contract_functional(ui, ModeSet(keep_local), phi).vec();
                }
            }
            Frame span = column_space(G, tol);
            bool ok = span.rank() == Uc.cols();
            if (ok && Uc.cols() > 0) {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(span.basis.transpose() * Uc);
                ok = svd.singularValues().minCoeff() > 1.0 - 1e-8;
            }
            if (!ok) e.contraction_spans_ok = false;
        }
        if (e.inclusion_defect > threshold || !e.contraction_spans_ok) rep.ok = false;
        rep.entries.push_back(e);
    }
    return rep;
}

void write_tbf(std::ostream& out, const TBFTensor& x) {
    out << "TBF\n" << x.tree.serialize();
    out.precision(17);
    for (int id : x.tree.leaf_ids()) {
        const Eigen::MatrixXd& F = x.leaf_frame[id];
        out << "FRAME " << x.tree.node(id).to_string() << ' ' << F.rows() << ' ' << F.cols()
            << '\n';
        for (Eigen::Index i = 0; i < F.rows(); ++i)
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                out << F(i, j) << (j + 1 == F.cols() ? '\n' : ' ');
    }
    for (int id : x.tree.internal_ids()) {
        const DenseTensor& C = x.transfer[id];
        out << "TRANSFER " << x.tree.node(id).to_string();
        for (int j = 0; j < C.order(); ++j) out << ' ' << C.dim(j);
        out << '\n';
        for (std::int64_t i = 0; i < C.size(); ++i)
            out << C[i] << (i + 1 == C.size() ? '\n' : ' ');
        if (C.size() == 0) out << '\n';
    }
}

TBFTensor read_tbf(std::istream& in) {
    std::string kw;
    if (!(in >> kw) || kw != "TBF") throw IoError("expected TBF header");
    in >> std::ws;
    DimensionTree tree = DimensionTree::parse(in);
    TBFTensor x;
    x.tree = tree;
    x.mode_dims.assign(tree.mode_count(), 0);
    x.leaf_frame.resize(tree.node_count());
    x.transfer.resize(tree.node_count());
    std::vector<bool> seen(tree.node_count(), false);
    auto parse_modes = [&tree](const std::string& text) {
        std::vector<int> modes;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) modes.push_back(std::stoi(tok) - 1);
        int id = tree.find(ModeSet(modes));
        if (id < 0) throw IoError("block '" + text + "' names a node not in the tree");
        return id;
    };
    while (in >> kw) {
        if (kw == "FRAME") {
            std::string modes_text;
            Eigen::Index n = 0, r = 0;
            if (!(in >> modes_text >> n >> r) || n < 1 || r < 0)
                throw IoError("bad FRAME header");
            int id = parse_modes(modes_text);
            if (!x.tree.is_leaf(id)) throw IoError("FRAME block for a non-leaf node");
            Eigen::MatrixXd F(n, r);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < r; ++j)
                    if (!(in >> F(i, j))) throw IoError("truncated FRAME payload");
            x.leaf_frame[id] = F;
            x.mode_dims[x.tree.node(id).min_index()] = static_cast<int>(n);
            seen[id] = true;
        } else if (kw == "TRANSFER") {
            std::string modes_text;
            if (!(in >> modes_text)) throw IoError("bad TRANSFER header");
            int id = parse_modes(modes_text);
            if (x.tree.is_leaf(id)) throw IoError("TRANSFER block for a leaf node");
            std::vector<int> dims(x.tree.children(id).size() + 1);
            for (int& dim : dims)
                if (!(in >> dim) || dim < 0) throw IoError("bad TRANSFER dimensions");
            DenseTensor C(dims);
            for (std::int64_t i = 0; i < C.size(); ++i)
                if (!(in >> C[i])) throw IoError("truncated TRANSFER payload");
            x.transfer[id] = std::move(C);
            seen[id] = true;
        } else {
            throw IoError("unexpected token '" + kw + "' in TBF stream");
        }
    }
    for (std::size_t id = 0; id < tree.node_count(); ++id)
        if (!seen[id]) throw IoError("missing block for node " + tree.node(static_cast<int>(id)).to_string());
    // dimension consistency: transfer child axes vs child ranks
    for (int id : tree.internal_ids()) {
        const auto& kids = tree.children(id);
        for (std::size_t c = 0; c < kids.size(); ++c)
            if (x.transfer[id].dim(static_cast<int>(c) + 1) != x.rank(kids[c]))
                throw IoError("TRANSFER dimensions disagree with child ranks at node " +
                              tree.node(id).to_string());
    }
    if (!x.is_zero() && x.rank(tree.root()) != 1)
        throw IoError("root transfer must have leading dimension 1");
    // detect orthonormality so round-trips preserve the flag
    double defect = 0.0;
    for (int id : tree.leaf_ids()) {
        const Eigen::MatrixXd& F = x.leaf_frame[id];
        defect = std::max(defect, (F.transpose() * F -
                                   Eigen::MatrixXd::Identity(F.cols(), F.cols()))
                                      .norm());
    }
    for (int id : tree.internal_ids()) {
        if (tree.is_root(id)) continue;
        Eigen::MatrixXd cm = matricize(x.transfer[id], std::vector<int>{0});
        defect = std::max(defect, (cm * cm.transpose() -
                                   Eigen::MatrixXd::Identity(cm.rows(), cm.rows()))
                                      .norm());
    }
    x.orthonormal = defect <= 1e-10;
    return x;
}

void write_tbf_file(const std::string& path, const TBFTensor& x) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_tbf(out, x);
}

TBFTensor read_tbf_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_tbf(in);
}

}  // namespace ttb
