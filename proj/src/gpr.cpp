#include "glf/gpr.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "glf/errors.hpp"

namespace glf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kHFloor = 1e-300;

// Shared per-(features, theta) solve state for training and the likelihood.
struct InnerState {
    Vector hc;      // clamped column weights
    Vector t;       // (sigma_f^2 Z^T Z + sigma_n^2 W^{-1})^{-1} Z^T y == W w
    Vector w;
    double logdet_K = 0.0;  // log det of the full kernel matrix
    double yKy = 0.0;       // y^T alpha
    double trF = 0.0;
    Vector diag_gram;       // diag(Z^T Z)
    Vector diag_gramF;      // diag(Z^T Z F)
    double alpha_sq = 0.0;  // ||alpha||^2
};

Vector clamped_col_weights(const FeatureModel& fm, const WeightDiagonal& wd) {
    Vector hc = fm.expand_to_columns(wd.h);
    int clamped = 0;
    for (Eigen::Index j = 0; j < hc.size(); ++j) {
        if (hc[j] < kHFloor) {
            hc[j] = kHFloor;
            ++clamped;
        }
    }
    static bool warned = false;  // once per process; learning retriggers per step
    if (clamped > 0 && !warned) {
        warned = true;
        std::cerr << "glf: warning: " << clamped
                  << " weight(s) below 1e-300 clamped; those features are inactive\n";
    }
    return hc;
}

std::string smallest_weight_nodes(const Vector& hc, int count = 3) {
    std::vector<Eigen::Index> idx(hc.size());
    for (Eigen::Index i = 0; i < hc.size(); ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + std::min<std::size_t>(count, idx.size()),
                      idx.end(), [&](auto a, auto b) { return hc[a] < hc[b]; });
    std::ostringstream os;
    for (int i = 0; i < count && i < static_cast<int>(idx.size()); ++i)
        os << (i ? ", " : "") << "col " << idx[i] << " (h=" << hc[idx[i]] << ")";
    return os.str();
}

InnerState solve_inner(const FeatureModel& fm, const HyperParams& theta, const Vector& y,
                       bool with_gradient) {
    theta.validate(fm.spec);
    if (y.size() != fm.n) throw validation_error("gpr: y size mismatch");
    const bool rebound =
        fm.y.size() == fm.n && (y - fm.y).lpNorm<Eigen::Infinity>() != 0.0;
    if (rebound && !fm.has_z)
        throw validation_error(
            "gpr: targets differ from the ones the feature model was built against "
            "(rebuild, or build with keep_z)");
    if (rebound && fm.path == GramPath::qr)
        throw validation_error("gpr: the QR path caches Q^T y; rebuild for new targets");

    WeightDiagonal wd = weight_diag(*fm.grid, fm.spec, theta);
    InnerState st;
    st.hc = clamped_col_weights(fm, wd);
    const int c = fm.cols;
    const double sf2 = theta.sf2, sn2 = theta.sn2;
    if (!(sn2 > 0.0)) throw validation_error("gpr: sigma_n^2 must be positive");

    const Vector zy = rebound ? Vector(fm.Z.transpose() * y) : fm.zy;
    const double yty = rebound ? y.squaredNorm() : fm.yty;

    if (sf2 == 0.0) {  // ridge-only limit
        st.w = zy / sn2;
        st.t = st.hc.cwiseProduct(zy) / sn2;
        st.logdet_K = fm.n * std::log(sn2);
        st.yKy = yty / sn2;
        st.trF = 0.0;
        if (with_gradient) {
            st.diag_gram = fm.col_sq_norms();
            st.diag_gramF = Vector::Zero(c);
            st.alpha_sq = yty / (sn2 * sn2);
        }
        return st;
    }

    double sum_log_hc = st.hc.array().log().sum();
    if (fm.path == GramPath::normal_eq) {
        Matrix A = sf2 * fm.gram;
        A.diagonal() += sn2 * st.hc.cwiseInverse();
        Eigen::LLT<Matrix> llt(A);
        if (llt.info() != Eigen::Success)
            throw conditioning_error("gpr: inner system not positive definite; smallest weights: " +
                                     smallest_weight_nodes(st.hc));
        st.t = llt.solve(zy);
        st.w = st.t.cwiseQuotient(st.hc);
        double logdet_A = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        st.logdet_K = (fm.n - c) * std::log(sn2) + sum_log_hc + logdet_A;
        st.yKy = (yty - sf2 * zy.dot(st.t)) / sn2;
        if (with_gradient) {
            Matrix AinvG = llt.solve(fm.gram);
            st.trF = sf2 * AinvG.trace();
            st.diag_gram = fm.gram.diagonal();
            st.diag_gramF.resize(c);
            for (int j = 0; j < c; ++j)
                st.diag_gramF[j] = sf2 * fm.gram.row(j).dot(AinvG.col(j));
            double tGt = st.t.dot(fm.gram * st.t);
            st.alpha_sq = (yty - 2.0 * sf2 * zy.dot(st.t) + sf2 * sf2 * tGt) / (sn2 * sn2);
        }
    } else {
        // stacked QR: A = [R_Z; (sigma_n/sigma_f) W^{-1/2}], re-factored per theta
        Matrix stack(2 * c, c);
        stack.topRows(c) = fm.r_z;
        stack.bottomRows(c).setZero();
        double ratio = std::sqrt(sn2 / sf2);
        for (int j = 0; j < c; ++j) stack(c + j, j) = ratio / std::sqrt(st.hc[j]);
        Eigen::HouseholderQR<Matrix> qr(stack);
        Matrix RA = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
        Vector ra_diag = RA.diagonal();
        for (int j = 0; j < c; ++j) {
            if (ra_diag[j] == 0.0)
                throw conditioning_error("gpr: stacked QR factor singular; smallest weights: " +
                                         smallest_weight_nodes(st.hc));
        }
        Matrix Q = qr.householderQ() * Matrix::Identity(2 * c, c);
        Matrix Q1 = Q.topRows(c);
        // t = sigma_f^{-2} R_A^{-1} Q1^T qty
        Vector q1qty = Q1.transpose() * fm.qty;
        st.t = RA.triangularView<Eigen::Upper>().solve(q1qty) / sf2;
        st.w = st.t.cwiseQuotient(st.hc);
        // det: A_stack^T A_stack = sigma_f^{-2} (sigma_f^2 Z^T Z + sigma_n^2 W^{-1})
        double logdet_A = c * std::log(sf2) + 2.0 * ra_diag.array().abs().log().sum();
        st.logdet_K = (fm.n - c) * std::log(sn2) + sum_log_hc + logdet_A;
        Vector zy_qr = fm.r_z.transpose() * fm.qty;
        st.yKy = (yty - sf2 * zy_qr.dot(st.t)) / sn2;
        if (with_gradient) {
            st.trF = Q1.squaredNorm();
            st.diag_gram = fm.r_z.colwise().squaredNorm();
            Matrix q1rz = Q1.transpose() * fm.r_z;
            st.diag_gramF = q1rz.colwise().squaredNorm();
            double tGt = (fm.r_z * st.t).squaredNorm();
            st.alpha_sq = (yty - 2.0 * sf2 * zy_qr.dot(st.t) + sf2 * sf2 * tGt) / (sn2 * sn2);
        }
    }
    return st;
}

}  // namespace

GprModel train(const FeatureModel& fm, const HyperParams& theta, const Vector& y) {
    InnerState st = solve_inner(fm, theta, y, false);
    GprModel model;
    model.spec = fm.spec;
    model.grid = fm.grid;
    model.theta = theta;
    model.path = fm.path;
    model.w = st.w;
    model.t = st.t;
    if (fm.has_z) {
        model.alpha = (y - theta.sf2 * (fm.Z * st.t)) / theta.sn2;
        model.has_alpha = true;
    }
    return model;
}

Vector predict(const GprModel& model, const Matrix& Xt, bool parallel) {
    if (Xt.cols() != model.spec.dim) throw validation_error("predict: dimension mismatch");
    if (!Xt.allFinite()) throw validation_error("predict: non-finite test inputs");
    const std::int64_t t = Xt.rows();
    const int cols = static_cast<int>(model.t.size());
    Vector out(t);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::int64_t i = 0; i < t; ++i) {
        Vector xi = Xt.row(i);
        Vector row(cols);
        fill_feature_row(model.spec, *model.grid, xi.data(), row.data());
        out[i] = model.theta.sf2 * row.dot(model.t);
    }
    (void)parallel;
    return out;
}

double log_marginal_likelihood(const FeatureModel& fm, const HyperParams& theta,
                               const Vector& y) {
    InnerState st = solve_inner(fm, theta, y, false);
    return -0.5 * st.yKy - 0.5 * st.logdet_K - 0.5 * fm.n * kLog2Pi;
}

LikelihoodReport likelihood_gradient(const FeatureModel& fm, const HyperParams& theta,
                                     const Vector& y) {
    InnerState st = solve_inner(fm, theta, y, true);
    const int nt = fm.spec.theta0_size();
    const double sf2 = theta.sf2, sn2 = theta.sn2;

    LikelihoodReport rep;
    rep.value = -0.5 * st.yKy - 0.5 * st.logdet_K - 0.5 * fm.n * kLog2Pi;
    rep.trace_terms.resize(nt + 2);
    rep.quadratic_terms.resize(nt + 2);

    WeightDiagonal wd = weight_diag(*fm.grid, fm.spec, theta);
    for (int i = 0; i < nt; ++i) {
        Vector dhc = fm.expand_to_columns(wd.dh.row(i));
        double tr_wg = dhc.dot(st.diag_gram);
        double tr_wgf = dhc.dot(st.diag_gramF);
        rep.trace_terms[i] = sf2 / sn2 * (tr_wg - tr_wgf);
        rep.quadratic_terms[i] = sf2 * dhc.dot(st.w.cwiseAbs2());
    }
    rep.trace_terms[nt] = (sf2 > 0.0) ? st.trF / sf2 : st.hc.dot(st.diag_gram) / sn2;
    rep.quadratic_terms[nt] = st.w.dot(st.t);  // w^T W w
    rep.trace_terms[nt + 1] = (fm.n - st.trF) / sn2;
    rep.quadratic_terms[nt + 1] = st.alpha_sq;

    rep.grad = -0.5 * rep.trace_terms + 0.5 * rep.quadratic_terms;
    return rep;
}

Matrix dense_kernel_matrix(const KernelSpec& spec, const HyperParams& theta, const Matrix& X,
                           bool parallel) {
    const std::int64_t n = X.rows();
    Matrix K(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        Vector xi = X.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            Vector xj = X.row(j);
            K(i, j) = eval_kernel(spec, theta, xi.data(), xj.data());
        }
    }
    (void)parallel;
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose().triangularView<Eigen::StrictlyUpper>();
    return K;
}

Matrix dense_cross_kernel(const KernelSpec& spec, const HyperParams& theta, const Matrix& Xt,
                          const Matrix& X, bool parallel) {
    // cross covariances carry no noise term, even at coincident points
    HyperParams noridge = theta;
    noridge.sn2 = 0.0;
    Matrix K(Xt.rows(), X.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::int64_t i = 0; i < Xt.rows(); ++i) {
        Vector xi = Xt.row(i);
        for (std::int64_t j = 0; j < X.rows(); ++j) {
            Vector xj = X.row(j);
            K(i, j) = eval_kernel(spec, noridge, xi.data(), xj.data());
        }
    }
    (void)parallel;
    return K;
}

namespace {

// LLT with the documented jitter policy: start at 1e-12 trace/n, escalate
// tenfold at most 3 times.
Eigen::LLT<Matrix> robust_llt(Matrix K) {
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() == Eigen::Success) return llt;
    double jitter = 1e-12 * K.trace() / K.rows();
    for (int attempt = 0; attempt < 3; ++attempt) {
        Matrix Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) {
            std::cerr << "glf: warning: kernel matrix needed jitter " << jitter << "\n";
            return llt;
        }
        jitter *= 10.0;
    }
    throw conditioning_error("exact_gpr: kernel matrix not positive definite after jitter");
}

}  // namespace

double exact_log_marginal_likelihood(const KernelSpec& spec, const HyperParams& theta,
                                     const Matrix& X, const Vector& y) {
    if (X.rows() > 5000) throw validation_error("exact gpr limited to n <= 5000");
    Matrix K = dense_kernel_matrix(spec, theta, X);
    auto llt = robust_llt(std::move(K));
    Vector alpha = llt.solve(y);
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * X.rows() * kLog2Pi;
}

LikelihoodReport exact_likelihood_gradient(const KernelSpec& spec, const HyperParams& theta,
                                           const Matrix& X, const Vector& y) {
    if (X.rows() > 5000) throw validation_error("exact gpr limited to n <= 5000");
    const std::int64_t n = X.rows();
    const int nt = spec.theta0_size();
    Matrix K = dense_kernel_matrix(spec, theta, X);
    auto llt = robust_llt(K);
    Vector alpha = llt.solve(y);
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    Matrix Kinv = llt.solve(Matrix::Identity(n, n));

    LikelihoodReport rep;
    rep.value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * n * kLog2Pi;
    rep.trace_terms.resize(nt + 2);
    rep.quadratic_terms.resize(nt + 2);

    // theta0 derivative matrices, assembled rowwise
    std::vector<Matrix> dK(nt, Matrix(n, n));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
        Vector xi = X.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            Vector xj = X.row(j);
            Vector g = kernel_grad_theta0(spec, theta, xi.data(), xj.data());
            for (int q = 0; q < nt; ++q) {
                dK[q](i, j) = g[q];
                dK[q](j, i) = g[q];
            }
        }
    }
    for (int q = 0; q < nt; ++q) {
        rep.trace_terms[q] = Kinv.cwiseProduct(dK[q]).sum();
        rep.quadratic_terms[q] = alpha.dot(dK[q] * alpha);
    }
    Matrix dK_sf = (K - theta.sn2 * Matrix::Identity(n, n)) / theta.sf2;
    rep.trace_terms[nt] = Kinv.cwiseProduct(dK_sf).sum();
    rep.quadratic_terms[nt] = alpha.dot(dK_sf * alpha);
    rep.trace_terms[nt + 1] = Kinv.trace();
    rep.quadratic_terms[nt + 1] = alpha.squaredNorm();

    rep.grad = -0.5 * rep.trace_terms + 0.5 * rep.quadratic_terms;
    return rep;
}

ExactGpr exact_gpr(const KernelSpec& spec, const HyperParams& theta, const Matrix& X,
                   const Vector& y, const Matrix& Xt) {
    if (X.rows() > 5000) throw validation_error("exact gpr limited to n <= 5000");
    ExactGpr out;
    LikelihoodReport rep = exact_likelihood_gradient(spec, theta, X, y);
    Matrix K = dense_kernel_matrix(spec, theta, X);
    auto llt = robust_llt(std::move(K));
    out.alpha = llt.solve(y);
    out.loglik = rep.value;
    out.grad = rep.grad;
    if (Xt.rows() > 0) out.predictions = dense_cross_kernel(spec, theta, Xt, X) * out.alpha;
    return out;
}

void GprModel::save(const std::string& file) const {
    std::ofstream os(file);
    if (!os) throw validation_error("cannot open for write: " + file);
    os.precision(17);
    os << "glf-gpr-model 1\n";
    os << "family " << family_name(spec.family) << '\n';
    os << "dim " << spec.dim << " anisotropic " << (spec.anisotropic ? 1 : 0) << " nu " << spec.nu
       << '\n';
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
    os << "theta0 " << theta.theta0.size();
    for (Eigen::Index i = 0; i < theta.theta0.size(); ++i) os << ' ' << theta.theta0[i];
    os << '\n';
    os << "sf2 " << theta.sf2 << " sn2 " << theta.sn2 << '\n';
    os << "t " << t.size() << '\n';
    for (Eigen::Index i = 0; i < t.size(); ++i) os << t[i] << '\n';
    os << "w " << w.size() << '\n';
    for (Eigen::Index i = 0; i < w.size(); ++i) os << w[i] << '\n';
}

GprModel GprModel::load(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw validation_error("cannot open for read: " + file);
    std::string magic, tag, fam;
    int version = 0;
    is >> magic >> version;
    if (magic != "glf-gpr-model" || version != 1)
        throw validation_error("unrecognized model file: " + file);
    GprModel m;
    is >> tag >> fam;
    m.spec.family = parse_family(fam);
    int aniso = 0;
    is >> tag >> m.spec.dim >> tag >> aniso >> tag >> m.spec.nu;
    m.spec.anisotropic = aniso != 0;
    m.spec.bounding_box.resize(m.spec.dim);
    is >> tag;
    for (double& r : m.spec.bounding_box) is >> r;
    int dom = 0;
    is >> tag >> dom;
    std::vector<double> U(m.spec.dim);
    is >> tag;
    for (double& u : U) is >> u;
    std::vector<int> s(m.spec.dim);
    is >> tag;
    for (int& sk : s) is >> sk;
    m.grid = std::make_shared<QuadratureGrid>(
        tensor_grid(U, s, dom ? DomainKind::positive_box : DomainKind::symmetric_box));
    Eigen::Index sz = 0;
    is >> tag >> sz;
    m.theta.theta0.resize(sz);
    for (Eigen::Index i = 0; i < sz; ++i) is >> m.theta.theta0[i];
    is >> tag >> m.theta.sf2 >> tag >> m.theta.sn2;
    is >> tag >> sz;
    m.t.resize(sz);
    for (Eigen::Index i = 0; i < sz; ++i) is >> m.t[i];
    is >> tag >> sz;
    m.w.resize(sz);
    for (Eigen::Index i = 0; i < sz; ++i) is >> m.w[i];
    if (!is) throw validation_error("model load: truncated file " + file);
    return m;
}

}  // namespace glf
