#include "glf/features.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "glf/errors.hpp"
#include "glf/rng.hpp"

namespace glf {

namespace {

std::atomic<long> g_build_count{0};

void warn_if_outside_box(const KernelSpec& spec, const Matrix& X) {
    const int d = spec.dim;
    bool outside = false;
    for (int k = 0; k < d && !outside; ++k) {
        double r = spec.bounding_box[k];
        if (spec.feature_kind() == FeatureKind::fourier) {
            if (X.col(k).maxCoeff() > 0.5 * r || X.col(k).minCoeff() < -0.5 * r) outside = true;
        } else {
            if (X.col(k).maxCoeff() > r || X.col(k).minCoeff() < 0.0) outside = true;
        }
    }
    if (outside)
        std::cerr << "glf: warning: data rows fall outside the declared bounding box; "
                     "the equivalence bounds assume the box\n";
}

// Upper-triangularize [Rhat; block] in place of Rhat, diagonal kept >= 0.
void qr_restack(Matrix& rhat, const Matrix& block) {
    const int m = static_cast<int>(rhat.cols());
    Matrix stacked(rhat.rows() + block.rows(), m);
    stacked.topRows(rhat.rows()) = rhat;
    stacked.bottomRows(block.rows()) = block;
    Eigen::HouseholderQR<Matrix> qr(stacked);
    Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (int i = 0; i < m; ++i)
        if (r(i, i) < 0.0) r.row(i) = -r.row(i);
    rhat = r;
}

}  // namespace

WeightDiagonal weight_diag(const QuadratureGrid& grid, const KernelSpec& spec,
                           const HyperParams& theta) {
    theta.validate(spec);
    const std::int64_t m = grid.total_size;
    const int nt = spec.theta0_size();
    WeightDiagonal wd;
    wd.h.resize(m);
    wd.dh.resize(nt, m);
    for (std::int64_t j = 0; j < m; ++j) {
        const double* eta = grid.node(j);
        double w = grid.base_weights[j];
        wd.h[j] = w * spectral_density(spec, theta.theta0, eta);
        wd.dh.col(j) = w * density_grad(spec, theta.theta0, eta);
    }
    return wd;
}

Vector FeatureModel::expand_to_columns(const Vector& per_node) const {
    if (cols_per_node() == 1) return per_node;
    Vector out(2 * per_node.size());
    for (Eigen::Index j = 0; j < per_node.size(); ++j) {
        out[2 * j] = per_node[j];
        out[2 * j + 1] = per_node[j];
    }
    return out;
}

Vector FeatureModel::col_sq_norms() const {
    if (path == GramPath::normal_eq) return gram.diagonal();
    return r_z.colwise().squaredNorm();
}

long FeatureModel::build_count() { return g_build_count.load(); }

void fill_feature_row(const KernelSpec& spec, const QuadratureGrid& grid, const double* x,
                      double* row) {
    const int d = grid.dim;
    const std::int64_t m = grid.total_size;
    if (spec.feature_kind() == FeatureKind::fourier) {
        for (std::int64_t j = 0; j < m; ++j) {
            const double* eta = grid.node(j);
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += x[k] * eta[k];
            row[2 * j] = std::cos(dot);
            row[2 * j + 1] = std::sin(dot);
        }
    } else {
        for (std::int64_t j = 0; j < m; ++j) {
            const double* eta = grid.node(j);
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += x[k] * eta[k];
            row[j] = std::exp(-dot);
        }
    }
}

Matrix feature_matrix(const KernelSpec& spec, const QuadratureGrid& grid, const Matrix& X,
                      bool parallel) {
    const std::int64_t n = X.rows();
    const int cols =
        static_cast<int>(grid.total_size) * (spec.feature_kind() == FeatureKind::fourier ? 2 : 1);
    Matrix Z(n, cols);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        Vector xi = X.row(i);
        Vector row(cols);
        fill_feature_row(spec, grid, xi.data(), row.data());
        Z.row(i) = row;
    }
    (void)parallel;
    return Z;
}

namespace {

FeatureModel build_impl(const Matrix& X, const Vector& y,
                        std::shared_ptr<const QuadratureGrid> grid, const KernelSpec& spec,
                        const FeatureBuildOptions& opts, bool parallel) {
    spec.validate();
    if (X.cols() != spec.dim) throw validation_error("build_feature_matrix: X dim mismatch");
    if (y.size() != X.rows()) throw validation_error("build_feature_matrix: y size mismatch");
    if (!grid || grid->dim != spec.dim)
        throw validation_error("build_feature_matrix: grid dim mismatch");
    if ((spec.feature_kind() == FeatureKind::exponential_decay) !=
        (grid->domain == DomainKind::positive_box))
        throw validation_error("build_feature_matrix: grid domain does not match feature kind");
    warn_if_outside_box(spec, X);

    const std::int64_t n = X.rows();
    const int per = (spec.feature_kind() == FeatureKind::fourier) ? 2 : 1;
    const int cols = per * static_cast<int>(grid->total_size);
    const int block = std::max(1, opts.block_rows);
    const std::int64_t nblocks = (n + block - 1) / block;

    FeatureModel fm;
    fm.spec = spec;
    fm.grid = std::move(grid);
    fm.path = opts.path;
    fm.n = n;
    fm.cols = cols;
    fm.zy = Vector::Zero(cols);
    fm.yty = y.squaredNorm();
    fm.y = y;
    fm.has_z = opts.keep_z;
    if (opts.keep_z) fm.Z.resize(n, cols);

    auto fill_block = [&](std::int64_t b, Matrix& zb) {
        std::int64_t lo = b * block;
        std::int64_t rows = std::min<std::int64_t>(block, n - lo);
        zb.resize(rows, cols);
        for (std::int64_t i = 0; i < rows; ++i) {
            Vector xi = X.row(lo + i);
            Vector row(cols);
            fill_feature_row(spec, *fm.grid, xi.data(), row.data());
            zb.row(i) = row;
        }
        if (opts.keep_z) fm.Z.middleRows(lo, rows) = zb;
    };

    if (opts.path == GramPath::normal_eq) {
        fm.gram = Matrix::Zero(cols, cols);
        // Blocks are accumulated in index order regardless of which thread
        // computed them, so the parallel build reproduces the serial one.
        const std::int64_t round_width = 16;
        std::vector<Matrix> zbs(static_cast<std::size_t>(std::min(nblocks, round_width)));
        for (std::int64_t start = 0; start < nblocks; start += round_width) {
            std::int64_t count = std::min(round_width, nblocks - start);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
            for (std::int64_t t = 0; t < count; ++t) fill_block(start + t, zbs[t]);
            for (std::int64_t t = 0; t < count; ++t) {
                std::int64_t lo = (start + t) * block;
                std::int64_t rows = zbs[t].rows();
                fm.gram.selfadjointView<Eigen::Lower>().rankUpdate(zbs[t].transpose(), 1.0);
                fm.zy.noalias() += zbs[t].transpose() * y.segment(lo, rows);
            }
        }
        fm.gram.triangularView<Eigen::StrictlyUpper>() =
            fm.gram.transpose().triangularView<Eigen::StrictlyUpper>();
    } else {
        // Streaming QR of [Z y]: maintain the (cols+1)-square R factor; its
        // top-left block is R_Z and the final column holds Q_Z^T y.
        const int m = cols + 1;
        Matrix rhat = Matrix::Zero(m, m);
        Matrix zb;
        for (std::int64_t b = 0; b < nblocks; ++b) {
            fill_block(b, zb);
            std::int64_t lo = b * block;
            Matrix aug(zb.rows(), m);
            aug.leftCols(cols) = zb;
            aug.col(cols) = y.segment(lo, zb.rows());
            qr_restack(rhat, aug);
        }
        fm.r_z = rhat.topLeftCorner(cols, cols);
        fm.qty = rhat.topRightCorner(cols, 1);
        fm.zy = fm.r_z.transpose() * fm.qty;
    }
    (void)parallel;
    g_build_count.fetch_add(1);
    return fm;
}

}  // namespace

FeatureModel build_feature_matrix(const Matrix& X, const Vector& y,
                                  std::shared_ptr<const QuadratureGrid> grid,
                                  const KernelSpec& spec, const FeatureBuildOptions& opts) {
    return build_impl(X, y, std::move(grid), spec, opts, opts.parallel);
}

FeatureModel build_feature_matrix_serial(const Matrix& X, const Vector& y,
                                         std::shared_ptr<const QuadratureGrid> grid,
                                         const KernelSpec& spec,
                                         const FeatureBuildOptions& opts) {
    return build_impl(X, y, std::move(grid), spec, opts, false);
}

double approx_kernel_eval(const KernelSpec& spec, const QuadratureGrid& grid,
                          const HyperParams& theta, const double* x, const double* xp) {
    theta.validate(spec);
    const int d = grid.dim;
    const std::int64_t m = grid.total_size;
    double acc = 0.0;
    if (spec.feature_kind() == FeatureKind::fourier) {
        for (std::int64_t j = 0; j < m; ++j) {
            const double* eta = grid.node(j);
            double h = grid.base_weights[j] * spectral_density(spec, theta.theta0, eta);
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += (x[k] - xp[k]) * eta[k];
            acc += h * std::cos(dot);
        }
    } else {
        for (std::int64_t j = 0; j < m; ++j) {
            const double* eta = grid.node(j);
            double h = grid.base_weights[j] * spectral_density(spec, theta.theta0, eta);
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += (x[k] + xp[k]) * eta[k];
            acc += h * std::exp(-dot);
        }
    }
    bool same = true;
    for (int k = 0; k < d; ++k)
        if (x[k] != xp[k]) { same = false; break; }
    return theta.sf2 * acc + (same ? theta.sn2 : 0.0);
}

double approx_kernel_eval(const KernelSpec& spec, const QuadratureGrid& grid,
                          const HyperParams& theta, const Vector& x, const Vector& xp) {
    return approx_kernel_eval(spec, grid, theta, x.data(), xp.data());
}

Vector rff_lengthscales(const KernelSpec& spec, const Vector& theta0) {
    Vector L(spec.dim);
    for (int k = 0; k < spec.dim; ++k) L[k] = theta0[spec.anisotropic ? k : 0];
    return L;
}

RffModel rff_build(const KernelSpec& spec, int s, std::uint64_t seed) {
    spec.validate();
    if (s < 1) throw validation_error("rff_build: s must be >= 1");
    if (spec.family == KernelFamily::reciprocal_semigroup)
        throw validation_error("rff_build: semigroup kernels are not of the rescaling form");
    RffModel model;
    model.spec = spec;
    model.seed = seed;
    model.s = s;
    model.omega.resize(spec.dim, s);
    Rng rng(seed);
    for (int j = 0; j < s; ++j) {
        for (int k = 0; k < spec.dim; ++k) {
            double v = 0.0;
            switch (spec.family) {
                case KernelFamily::gaussian: v = rng.normal(); break;
                case KernelFamily::matern: v = rng.student_t(2.0 * spec.nu); break;
                case KernelFamily::laplacian: v = rng.cauchy(); break;
                case KernelFamily::cauchy: v = rng.laplace(); break;
                default: break;
            }
            model.omega(k, j) = v;
        }
    }
    return model;
}

Eigen::MatrixXcd rff_feature_matrix(const RffModel& model, const Matrix& X, const Vector& L) {
    if (X.cols() != model.spec.dim) throw validation_error("rff_feature_matrix: dim mismatch");
    if (L.size() != model.spec.dim) throw validation_error("rff_feature_matrix: L size mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(model.s));
    Matrix phase = X * L.cwiseInverse().asDiagonal() * model.omega;  // n x s
    Eigen::MatrixXcd Z(X.rows(), model.s);
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (int j = 0; j < model.s; ++j)
            Z(i, j) = std::complex<double>(std::cos(phase(i, j)), -std::sin(phase(i, j))) * scale;
    return Z;
}

Eigen::MatrixXcd rff_grad(const RffModel& model, const Matrix& X, const Vector& L, int k) {
    if (k < 0 || k >= model.spec.dim) throw validation_error("rff_grad: bad dimension index");
    Eigen::MatrixXcd Z = rff_feature_matrix(model, X, L);
    const std::complex<double> iu(0.0, 1.0);
    const double invL2 = 1.0 / (L[k] * L[k]);
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (int j = 0; j < model.s; ++j)
            Z(i, j) *= iu * X(i, k) * invL2 * model.omega(k, j);
    return Z;
}

double rff_eval(const RffModel& model, const HyperParams& theta, const Vector& x,
                const Vector& xp) {
    theta.validate(model.spec);
    Vector L = rff_lengthscales(model.spec, theta.theta0);
    double acc = 0.0;
    for (int j = 0; j < model.s; ++j) {
        double dot = 0.0;
        for (int k = 0; k < model.spec.dim; ++k)
            dot += (x[k] - xp[k]) / L[k] * model.omega(k, j);
        acc += std::cos(dot);
    }
    double same = (x == xp) ? theta.sn2 : 0.0;
    return theta.sf2 * acc / model.s + same;
}

namespace {

void write_vec(std::ostream& os, const char* tag, const Vector& v) {
    os << tag << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << '\n';
}

Vector read_vec(std::istream& is, const std::string& tag) {
    std::string t;
    Eigen::Index sz = 0;
    is >> t >> sz;
    if (t != tag) throw validation_error("feature model load: expected " + tag);
    Vector v(sz);
    for (Eigen::Index i = 0; i < sz; ++i) is >> v[i];
    return v;
}

}  // namespace

void FeatureModel::save(const std::string& file) const {
    std::ofstream os(file);
    if (!os) throw validation_error("cannot open for write: " + file);
    os.precision(17);
    os << "glf-feature-model 1\n";
    os << "family " << family_name(spec.family) << '\n';
    os << "dim " << spec.dim << " anisotropic " << (spec.anisotropic ? 1 : 0) << " nu "
       << spec.nu << '\n';
    os << "bounding_box";
    for (double r : spec.bounding_box) os << ' ' << r;
    os << '\n';
    os << "grid_domain " << (grid->domain == DomainKind::positive_box ? 1 : 0) << '\n';
    os << "grid_U";
    for (double u : grid->U) os << ' ' << u;
    os << '\n';
    os << "grid_s";
    for (int sk : grid->s) os << ' ' << sk;
    os << '\n';
    os << "path " << (path == GramPath::qr ? "qr" : "normal") << '\n';
    os << "n " << n << " cols " << cols << '\n';
    os << "yty " << yty << '\n';
    write_vec(os, "zy", zy);
    write_vec(os, "y", y);
    if (path == GramPath::normal_eq) {
        os << "gram\n";
        for (int i = 0; i < cols; ++i)
            for (int j = 0; j <= i; ++j) os << gram(i, j) << '\n';
    } else {
        os << "rz\n";
        for (int i = 0; i < cols; ++i)
            for (int j = i; j < cols; ++j) os << r_z(i, j) << '\n';
        write_vec(os, "qty", qty);
    }
}

FeatureModel FeatureModel::load(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw validation_error("cannot open for read: " + file);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "glf-feature-model" || version != 1)
        throw validation_error("unrecognized feature model file: " + file);
    std::string tag, fam, pathname;
    KernelSpec spec;
    is >> tag >> fam;
    spec.family = parse_family(fam);
    int aniso = 0;
    is >> tag >> spec.dim >> tag >> aniso >> tag >> spec.nu;
    spec.anisotropic = aniso != 0;
    spec.bounding_box.resize(spec.dim);
    is >> tag;
    for (double& r : spec.bounding_box) is >> r;
    int dom = 0;
    is >> tag >> dom;
    std::vector<double> U(spec.dim);
    is >> tag;
    for (double& u : U) is >> u;
    std::vector<int> s(spec.dim);
    is >> tag;
    for (int& sk : s) is >> sk;
    auto grid = std::make_shared<QuadratureGrid>(
        tensor_grid(U, s, dom ? DomainKind::positive_box : DomainKind::symmetric_box));

    FeatureModel fm;
    fm.spec = spec;
    fm.grid = std::move(grid);
    is >> tag >> pathname;
    fm.path = (pathname == "qr") ? GramPath::qr : GramPath::normal_eq;
    is >> tag >> fm.n >> tag >> fm.cols;
    is >> tag >> fm.yty;
    fm.zy = read_vec(is, "zy");
    fm.y = read_vec(is, "y");
    is >> tag;
    if (fm.path == GramPath::normal_eq) {
        if (tag != "gram") throw validation_error("feature model load: expected gram");
        fm.gram.setZero(fm.cols, fm.cols);
        for (int i = 0; i < fm.cols; ++i)
            for (int j = 0; j <= i; ++j) {
                is >> fm.gram(i, j);
                fm.gram(j, i) = fm.gram(i, j);
            }
    } else {
        if (tag != "rz") throw validation_error("feature model load: expected rz");
        fm.r_z.setZero(fm.cols, fm.cols);
        for (int i = 0; i < fm.cols; ++i)
            for (int j = i; j < fm.cols; ++j) is >> fm.r_z(i, j);
        fm.qty = read_vec(is, "qty");
    }
    if (!is) throw validation_error("feature model load: truncated file " + file);
    return fm;
}

}  // namespace glf
