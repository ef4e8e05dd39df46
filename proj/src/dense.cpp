#include "ttb/dense.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace ttb {

namespace {

std::int64_t product(const std::vector<int>& dims) {
    std::int64_t p = 1;
    for (int n : dims) {
        if (n < 0) throw DimensionError("mode dimensions must be nonnegative");
        p *= n;
    }
    return p;
}

void check_same_dims(const DenseTensor& u, const DenseTensor& v) {
    if (u.dims() != v.dims()) throw DimensionError("tensor dimensions do not match");
}

}  // namespace

DenseTensor::DenseTensor(std::vector<int> dims)
    : dims_(std::move(dims)), values_(product(dims_), 0.0) {}

DenseTensor::DenseTensor(std::vector<int> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != product(dims_))
        throw DimensionError("value count does not match dimensions");
    for (double x : values_)
        if (!std::isfinite(x)) throw DimensionError("non-finite tensor entry");
}

std::int64_t DenseTensor::offset(const std::vector<int>& idx) const {
    std::int64_t off = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) off = off * dims_[k] + idx[k];
    return off;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& o) {
    check_same_dims(*this, o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& o) {
    check_same_dims(*this, o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
    for (double& x : values_) x *= s;
    return *this;
}

std::vector<std::int64_t> row_major_strides(const std::vector<int>& dims) {
    std::vector<std::int64_t> s(dims.size(), 1);
    for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
    return s;
}

Eigen::MatrixXd matricize(const DenseTensor& v, const std::vector<int>& row_axes) {
    const auto& dims = v.dims();
    std::vector<char> is_row(dims.size(), 0);
    for (int a : row_axes) {
        if (a < 0 || a >= v.order()) throw DimensionError("matricize: axis out of range");
        if (is_row[a]) throw DimensionError("matricize: duplicate axis");
        is_row[a] = 1;
    }
    std::vector<int> col_axes;
    for (int a = 0; a < v.order(); ++a)
        if (!is_row[a]) col_axes.push_back(a);

    std::int64_t rows = 1, cols = 1;
    for (int a : row_axes) rows *= dims[a];
    for (int a : col_axes) cols *= dims[a];

    const auto strides = row_major_strides(dims);
    Eigen::MatrixXd m(rows, cols);
    std::vector<int> idx(dims.size(), 0);
    for (std::int64_t r = 0; r < rows; ++r) {
        // decode r into the row axes (row-major over row_axes order)
        std::int64_t rr = r, base = 0;
        for (int k = static_cast<int>(row_axes.size()) - 1; k >= 0; --k) {
            int a = row_axes[k];
            base += strides[a] * (rr % dims[a]);
            rr /= dims[a];
        }
        for (std::int64_t c = 0; c < cols; ++c) {
            std::int64_t cc = c, off = base;
            for (int k = static_cast<int>(col_axes.size()) - 1; k >= 0; --k) {
                int a = col_axes[k];
                off += strides[a] * (cc % dims[a]);
                cc /= dims[a];
            }
            m(r, c) = v[off];
        }
    }
    return m;
}

Eigen::MatrixXd matricize(const DenseTensor& v, const ModeSet& beta) {
    if (!beta.is_subset_of(ModeSet::range(v.order())))
        throw DimensionError("matricize: mode set exceeds tensor order");
    return matricize(v, beta.indices());
}

DenseTensor dematricize(const Eigen::MatrixXd& m, const std::vector<int>& dims,
                        const ModeSet& beta) {
    DenseTensor v(dims);
    const auto& row_axes = beta.indices();
    std::vector<char> is_row(dims.size(), 0);
    for (int a : row_axes) is_row[a] = 1;
    std::vector<int> col_axes;
    for (std::size_t a = 0; a < dims.size(); ++a)
        if (!is_row[a]) col_axes.push_back(static_cast<int>(a));
    const auto strides = row_major_strides(dims);
    for (std::int64_t r = 0; r < m.rows(); ++r) {
        std::int64_t rr = r, base = 0;
        for (int k = static_cast<int>(row_axes.size()) - 1; k >= 0; --k) {
            int a = row_axes[k];
            base += strides[a] * (rr % dims[a]);
            rr /= dims[a];
        }
        for (std::int64_t c = 0; c < m.cols(); ++c) {
            std::int64_t cc = c, off = base;
            for (int k = static_cast<int>(col_axes.size()) - 1; k >= 0; --k) {
                int a = col_axes[k];
                off += strides[a] * (cc % dims[a]);
                cc /= dims[a];
            }
            v[off] = m(r, c);
        }
    }
    return v;
}

DenseTensor contract_functional(const DenseTensor& v, const ModeSet& keep,
                                const DenseTensor& phi) {
    const ModeSet all = ModeSet::range(v.order());
    if (!keep.is_subset_of(all)) throw DimensionError("contract_functional: bad mode set");
    const ModeSet rest = keep.complement_in(all);
    if (phi.order() != static_cast<int>(rest.size()))
        throw DimensionError("contract_functional: functional order mismatch");
    std::vector<int> keep_dims;
    for (std::size_t k = 0; k < rest.size(); ++k)
        if (phi.dim(static_cast<int>(k)) != v.dim(rest.indices()[k]))
            throw DimensionError("contract_functional: functional dimension mismatch");
    for (int j : keep.indices()) keep_dims.push_back(v.dim(j));

    DenseTensor out(keep_dims);
    const auto strides = row_major_strides(v.dims());
    const std::int64_t nk = out.size(), nr = phi.size();
    for (std::int64_t a = 0; a < nk; ++a) {
        std::int64_t aa = a, base = 0;
        for (int k = static_cast<int>(keep.size()) - 1; k >= 0; --k) {
            int mode = keep.indices()[k];
            base += strides[mode] * (aa % v.dim(mode));
            aa /= v.dim(mode);
        }
        double acc = 0.0;
        for (std::int64_t b = 0; b < nr; ++b) {
            std::int64_t bb = b, off = base;
            for (int k = static_cast<int>(rest.size()) - 1; k >= 0; --k) {
                int mode = rest.indices()[k];
                off += strides[mode] * (bb % v.dim(mode));
                bb /= v.dim(mode);
            }
            acc += v[off] * phi[b];
        }
        out[a] = acc;
    }
    return out;
}

double inner(const DenseTensor& u, const DenseTensor& v) {
    check_same_dims(u, v);
    return u.vec().dot(v.vec());
}

double frobenius_norm(const DenseTensor& v) {
    return v.vec().norm();
}

DenseTensor mode_multiply(const DenseTensor& v, int mode, const Eigen::MatrixXd& m) {
    if (mode < 0 || mode >= v.order()) throw DimensionError("mode_multiply: mode out of range");
    if (m.cols() != v.dim(mode)) throw DimensionError("mode_multiply: matrix size mismatch");
    Eigen::MatrixXd unf = matricize(v, std::vector<int>{mode});
    Eigen::MatrixXd out = m * unf;
    std::vector<int> dims = v.dims();
    dims[mode] = static_cast<int>(m.rows());
    return dematricize(out, dims, ModeSet::singleton(mode));
}

DenseTensor outer_product(const std::vector<std::pair<ModeSet, Eigen::VectorXd>>& factors,
                          const std::vector<int>& mode_dims) {
    std::vector<int> all_modes;
    for (const auto& [ms, vec] : factors) {
        std::int64_t sz = 1;
        for (int j : ms.indices()) sz *= mode_dims[j];
        if (sz != vec.size()) throw DimensionError("outer_product: factor size mismatch");
        all_modes.insert(all_modes.end(), ms.indices().begin(), ms.indices().end());
    }
    ModeSet target(all_modes);  // throws on overlap
    std::vector<int> out_dims;
    for (int j : target.indices()) out_dims.push_back(mode_dims[j]);
    DenseTensor out(out_dims);

    // per-factor strides w.r.t. the output multi-index
    const int n_out = static_cast<int>(target.size());
    std::vector<std::vector<std::int64_t>> fstrides(factors.size(),
                                                    std::vector<std::int64_t>(n_out, 0));
    for (std::size_t f = 0; f < factors.size(); ++f) {
        const auto& ms = factors[f].first;
        std::int64_t stride = 1;
        for (int k = static_cast<int>(ms.size()) - 1; k >= 0; --k) {
            int mode = ms.indices()[k];
            int pos = static_cast<int>(std::lower_bound(target.indices().begin(),
                                                        target.indices().end(), mode) -
                                       target.indices().begin());
            fstrides[f][pos] = stride;
            stride *= mode_dims[mode];
        }
    }

    std::vector<int> idx(n_out, 0);
    for (std::int64_t lin = 0; lin < out.size(); ++lin) {
        double prod = 1.0;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            std::int64_t off = 0;
            for (int k = 0; k < n_out; ++k) off += fstrides[f][k] * idx[k];
            prod *= factors[f].second[off];
        }
        out[lin] = prod;
        for (int k = n_out - 1; k >= 0; --k) {
            if (++idx[k] < out_dims[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

Frame column_space(const Eigen::MatrixXd& m, double tol) {
    if (tol < 0) throw DimensionError("column_space: negative tolerance");
    if (m.size() == 0) return Frame{Eigen::MatrixXd(m.rows(), 0)};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    if (smax > 0.0) {
        const double thresh = smax * std::max(tol, kRankFloor);
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > thresh) ++rank;
    }
    Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);
    // sign convention: make the leading significant entry of each column positive
    for (int c = 0; c < rank; ++c) {
        const double cmax = basis.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index r = 0; r < basis.rows(); ++r) {
            if (std::abs(basis(r, c)) > 0.5 * cmax) {
                if (basis(r, c) < 0) basis.col(c) = -basis.col(c);
                break;
            }
        }
    }
    return Frame{std::move(basis)};
}

Eigen::VectorXd unfolding_singular_values(const DenseTensor& v, const ModeSet& alpha) {
    Eigen::MatrixXd m = matricize(v, alpha);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

Frame minimal_subspace(const DenseTensor& v, const ModeSet& alpha, double tol) {
    return column_space(matricize(v, alpha), tol);
}

namespace {

// one sweep of alternating rank-1 maximization; returns <v, (x) x_j>
double als_sweep(const DenseTensor& v, std::vector<Eigen::VectorXd>& x) {
    const int d = v.order();
    double value = 0.0;
    for (int j = 0; j < d; ++j) {
        // contract v against all factors except mode j
        std::vector<int> rest_dims;
        ModeSet keep = ModeSet::singleton(j);
        ModeSet rest = keep.complement_in(ModeSet::range(d));
        std::vector<std::pair<ModeSet, Eigen::VectorXd>> parts;
        for (int k : rest.indices()) parts.push_back({ModeSet::singleton(k), x[k]});
        std::vector<int> mode_dims = v.dims();
        DenseTensor phi = outer_product(parts, mode_dims);
        DenseTensor y = contract_functional(v, keep, phi);
        double norm = y.vec().norm();
        if (norm == 0.0) return 0.0;
        x[j] = y.vec() / norm;
        value = norm;
    }
    return value;
}

}  // namespace

InjectiveNormResult injective_norm(const DenseTensor& v, int max_iters, std::uint64_t seed) {
    const int d = v.order();
    if (d <= 1) return {frobenius_norm(v), true};
    if (d == 2) {
        Eigen::MatrixXd m = matricize(v, ModeSet::singleton(0));
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        return {svd.singularValues()(0), true};
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double best = 0.0;
    const int restarts = 8;
    for (int s = 0; s < restarts; ++s) {
        std::vector<Eigen::VectorXd> x(d);
        for (int j = 0; j < d; ++j) {
            if (s == 0) {
                // deterministic start: leading left singular vector per mode
                x[j] = minimal_subspace(v, ModeSet::singleton(j), 0.0).basis.col(0);
            } else {
                x[j] = Eigen::VectorXd::NullaryExpr(v.dim(j), [&](Eigen::Index) {
                    return gauss(rng);
                });
                x[j].normalize();
            }
        }
        double value = 0.0, prev = -1.0;
        for (int it = 0; it < max_iters; ++it) {
            value = als_sweep(v, x);
            if (value - prev < 1e-14 * std::max(1.0, value)) break;
            prev = value;
        }
        best = std::max(best, value);
    }
    return {best, false};
}

void write_dense(std::ostream& out, const DenseTensor& v) {
    out << "DENSE " << v.order();
    for (int j = 0; j < v.order(); ++j) out << ' ' << v.dim(j);
    out << '\n';
    out.precision(17);
    for (std::int64_t i = 0; i < v.size(); ++i) out << v[i] << ((i + 1) % 8 ? ' ' : '\n');
    out << '\n';
}

DenseTensor read_dense(std::istream& in) {
    std::string kw;
    int d = 0;
    if (!(in >> kw >> d) || kw != "DENSE" || d < 1)
        throw IoError("expected 'DENSE d n_1 ... n_d' header");
    std::vector<int> dims(d);
    for (int j = 0; j < d; ++j)
        if (!(in >> dims[j]) || dims[j] < 1) throw IoError("bad mode dimension in DENSE header");
    std::int64_t n = 1;
    for (int x : dims) n *= x;
    std::vector<double> values(n);
    for (std::int64_t i = 0; i < n; ++i)
        if (!(in >> values[i])) throw IoError("truncated DENSE payload");
    return DenseTensor(std::move(dims), std::move(values));
}

void write_dense_file(const std::string& path, const DenseTensor& v) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_dense(out, v);
}

DenseTensor read_dense_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_dense(in);
}

}  // namespace ttb
