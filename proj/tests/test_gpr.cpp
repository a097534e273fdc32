#include <doctest.h>

#include <chrono>
#include <cmath>

#include "glf/bounds.hpp"
#include "glf/errors.hpp"
#include "glf/gpr.hpp"
#include "glf/rng.hpp"

using namespace glf;

namespace {

KernelSpec gauss1d(double R = 2.0) { return KernelSpec::make(KernelFamily::gaussian, 1, {R}); }

HyperParams theta1(double ell, double sf2, double sn2) {
    HyperParams t;
    t.theta0 = Vector::Constant(1, ell);
    t.sf2 = sf2;
    t.sn2 = sn2;
    return t;
}

struct Setup {
    KernelSpec spec;
    std::shared_ptr<QuadratureGrid> grid;
    Matrix X;
    Vector y;
    FeatureModel fm;
};

Setup make_setup(int n, int s_nodes, std::uint64_t seed, double U = 6.0, bool keep_z = true,
                 GramPath path = GramPath::normal_eq) {
    Setup st{gauss1d(), nullptr, {}, {}, {}};
    st.grid = std::make_shared<QuadratureGrid>(
        tensor_grid({U}, {s_nodes}, DomainKind::symmetric_box));
    Rng rng(seed);
    st.X.resize(n, 1);
    st.y.resize(n);
    for (int i = 0; i < n; ++i) {
        st.X(i, 0) = rng.uniform(-1.0, 1.0);
        st.y[i] = std::sin(3.0 * st.X(i, 0)) + 0.3 * rng.normal();
    }
    FeatureBuildOptions opts;
    opts.keep_z = keep_z;
    opts.path = path;
    st.fm = build_feature_matrix(st.X, st.y, st.grid, st.spec, opts);
    return st;
}

// dense approximate-kernel matrix from the retained features
Matrix dense_Ktilde(const FeatureModel& fm, const HyperParams& t) {
    WeightDiagonal wd = weight_diag(*fm.grid, fm.spec, t);
    Vector hc = fm.expand_to_columns(wd.h);
    Matrix K = t.sf2 * fm.Z * hc.asDiagonal() * fm.Z.transpose();
    K.diagonal().array() += t.sn2;
    return K;
}

}  // namespace

TEST_CASE("scalar training identities") {
    // single point at x=0, single node at eta=0: Z = [1, 0], h = c
    KernelSpec spec = gauss1d();
    auto grid = std::make_shared<QuadratureGrid>(tensor_grid({2.0}, {1}, DomainKind::symmetric_box));
    Matrix X = Matrix::Zero(1, 1);
    Vector y = Vector::Constant(1, 0.7);
    FeatureBuildOptions opts;
    opts.keep_z = true;
    FeatureModel fm = build_feature_matrix(X, y, grid, spec, opts);
    HyperParams t = theta1(1.0, 1.5, 0.4);
    double c = weight_diag(*grid, spec, t).h[0];
    GprModel model = train(fm, t, y);
    double alpha_expect = y[0] / (t.sf2 * c + t.sn2);
    CHECK(model.w[0] == doctest::Approx(alpha_expect).epsilon(1e-14));
    CHECK(model.alpha[0] == doctest::Approx(alpha_expect).epsilon(1e-14));
    // sin column of the eta=0 node carries nothing
    CHECK(model.w[1] == 0.0);
}

TEST_CASE("ridge-only limit sf2 = 0") {
    Setup st = make_setup(30, 6, 2);
    HyperParams t = theta1(0.8, 0.0, 0.5);
    GprModel model = train(st.fm, t, st.y);
    CHECK((model.w - st.fm.zy / 0.5).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((model.alpha - st.y / 0.5).cwiseAbs().maxCoeff() <= 1e-14);
    // likelihood reduces to the pure-noise value
    double l0 = log_marginal_likelihood(st.fm, t, st.y);
    double expect = -st.y.squaredNorm() / (2.0 * 0.5) - 0.5 * 30 * std::log(0.5) -
                    0.5 * 30 * std::log(2.0 * 3.141592653589793);
    CHECK(l0 == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("training agrees with the dense solve") {
    Setup st = make_setup(50, 10, 3);
    HyperParams t = theta1(0.6, 1.2, 0.2);
    GprModel model = train(st.fm, t, st.y);
    Matrix K = dense_Ktilde(st.fm, t);
    Vector alpha_dense = K.llt().solve(st.y);
    CHECK((model.alpha - alpha_dense).norm() <= 1e-9 * alpha_dense.norm());
    // Woodbury end to end
    CHECK((K * model.alpha - st.y).norm() <= 1e-8 * st.y.norm());
    // w = Z^* alpha
    Vector w_direct = st.fm.Z.transpose() * alpha_dense;
    CHECK((model.w - w_direct).norm() <= 1e-9 * w_direct.norm());
}

TEST_CASE("prediction") {
    Setup st = make_setup(50, 10, 4);
    HyperParams t = theta1(0.6, 1.2, 0.2);
    GprModel model = train(st.fm, t, st.y);
    Rng rng(5);
    Matrix Xt(7, 1);
    for (int i = 0; i < 7; ++i) Xt(i, 0) = rng.uniform(-1.0, 1.0);

    SUBCASE("dense cross-kernel oracle") {
        Vector pred = predict(model, Xt);
        WeightDiagonal wd = weight_diag(*st.grid, st.spec, t);
        Vector hc = st.fm.expand_to_columns(wd.h);
        Matrix Zt = feature_matrix(st.spec, *st.grid, Xt);
        Matrix K = dense_Ktilde(st.fm, t);
        Vector alpha_dense = K.llt().solve(st.y);
        Vector oracle = t.sf2 * Zt * hc.asDiagonal() * (st.fm.Z.transpose() * alpha_dense);
        CHECK((pred - oracle).norm() <= 1e-9 * oracle.norm());
    }
    SUBCASE("duplicate rows predict identically, bitwise") {
        Matrix Xd(4, 1);
        Xd << 0.3, 0.3, -0.4, 0.3;
        Vector pred = predict(model, Xd);
        CHECK(pred[0] == pred[1]);
        CHECK(pred[1] == pred[3]);
    }
    SUBCASE("huge ridge pulls predictions to the prior mean") {
        HyperParams big = theta1(0.6, 1.2, 1e8);
        GprModel m2 = train(st.fm, big, st.y);
        Vector pred = predict(m2, Xt);
        CHECK(pred.cwiseAbs().maxCoeff() <= 1e-6);
    }
    SUBCASE("dimension mismatch") {
        Matrix bad(3, 2);
        bad.setZero();
        CHECK_THROWS_AS(predict(model, bad), validation_error);
    }
}

TEST_CASE("log marginal likelihood against the dense oracle") {
    Setup st = make_setup(20, 6, 6);
    HyperParams t = theta1(0.7, 0.9, 0.3);
    double value = log_marginal_likelihood(st.fm, t, st.y);
    Matrix K = dense_Ktilde(st.fm, t);
    Eigen::LLT<Matrix> llt(K);
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double dense = -0.5 * st.y.dot(llt.solve(st.y)) - 0.5 * logdet -
                   0.5 * 20 * std::log(2.0 * 3.141592653589793);
    CHECK(value == doctest::Approx(dense).epsilon(1e-11));

    // exchangeability: permuting the data leaves the likelihood unchanged
    std::vector<int> perm = {7, 3, 19, 0, 11, 15, 2, 9, 4, 18, 1, 13, 6, 17, 5, 10, 8, 16, 12, 14};
    Matrix Xp(20, 1);
    Vector yp(20);
    for (int i = 0; i < 20; ++i) {
        Xp.row(i) = st.X.row(perm[i]);
        yp[i] = st.y[perm[i]];
    }
    FeatureModel fmp = build_feature_matrix(Xp, yp, st.grid, st.spec);
    CHECK(log_marginal_likelihood(fmp, t, yp) == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("likelihood gradient: finite differences and the dense oracle") {
    for (auto fam : {KernelFamily::gaussian, KernelFamily::matern}) {
        KernelSpec spec = KernelSpec::make(fam, 1, {2.0}, false, 2.5);
        auto grid = std::make_shared<QuadratureGrid>(
            tensor_grid({6.0}, {8}, DomainKind::symmetric_box));
        Rng rng(fam == KernelFamily::gaussian ? 7 : 8);
        const int n = 40;
        Matrix X(n, 1);
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.uniform(-1.0, 1.0);
            y[i] = std::sin(3.0 * X(i, 0)) + 0.3 * rng.normal();
        }
        FeatureBuildOptions opts;
        opts.keep_z = true;
        FeatureModel fm = build_feature_matrix(X, y, grid, spec, opts);

        for (int trial = 0; trial < 5; ++trial) {
            HyperParams t = theta1(0.4 + 0.4 * rng.uniform(), 0.5 + rng.uniform(),
                                   0.1 + 0.4 * rng.uniform());
            LikelihoodReport rep = likelihood_gradient(fm, t, y);
            CAPTURE(family_name(fam));
            CHECK(rep.value == doctest::Approx(log_marginal_likelihood(fm, t, y)).epsilon(1e-13));

            // central finite differences, relative step 1e-5
            Vector flat(3);
            flat << t.theta0[0], t.sf2, t.sn2;
            for (int i = 0; i < 3; ++i) {
                double h = 1e-5 * flat[i];
                HyperParams tp = t, tm = t;
                if (i == 0) { tp.theta0[0] += h; tm.theta0[0] -= h; }
                if (i == 1) { tp.sf2 += h; tm.sf2 -= h; }
                if (i == 2) { tp.sn2 += h; tm.sn2 -= h; }
                double fd = (log_marginal_likelihood(fm, tp, y) -
                             log_marginal_likelihood(fm, tm, y)) /
                            (2 * h);
                CHECK(rep.grad[i] == doctest::Approx(fd).epsilon(1e-5));
            }

            // dense oracle for the trace and quadratic pieces
            WeightDiagonal wd = weight_diag(*grid, spec, t);
            Vector hc = fm.expand_to_columns(wd.h);
            Matrix K = dense_Ktilde(fm, t);
            Eigen::LLT<Matrix> llt(K);
            Matrix Kinv = llt.solve(Matrix::Identity(n, n));
            Vector alpha = llt.solve(y);
            Vector dhc = fm.expand_to_columns(wd.dh.row(0));
            Matrix dK_theta = t.sf2 * fm.Z * dhc.asDiagonal() * fm.Z.transpose();
            Matrix dK_sf = fm.Z * hc.asDiagonal() * fm.Z.transpose();
            double tr0 = Kinv.cwiseProduct(dK_theta).sum();
            double tr1 = Kinv.cwiseProduct(dK_sf).sum();
            double tr2 = Kinv.trace();
            CHECK(rep.trace_terms[0] == doctest::Approx(tr0).epsilon(1e-8));
            CHECK(rep.trace_terms[1] == doctest::Approx(tr1).epsilon(1e-8));
            CHECK(rep.trace_terms[2] == doctest::Approx(tr2).epsilon(1e-8));
            CHECK(rep.quadratic_terms[0] ==
                  doctest::Approx(alpha.dot(dK_theta * alpha)).epsilon(1e-8));
            CHECK(rep.quadratic_terms[1] ==
                  doctest::Approx(alpha.dot(dK_sf * alpha)).epsilon(1e-8));
            CHECK(rep.quadratic_terms[2] == doctest::Approx(alpha.squaredNorm()).epsilon(1e-8));

            // trace identity: sf2 * trace_sf + sn2 * trace_sn = n
            CHECK(t.sf2 * rep.trace_terms[1] + t.sn2 * rep.trace_terms[2] ==
                  doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
        }
    }
}

TEST_CASE("normal-equations and QR paths agree on stressed weights") {
    // U large enough that the gaussian weights span many orders of magnitude
    const int n = 200, s_nodes = 40;
    KernelSpec spec = gauss1d();
    auto grid = std::make_shared<QuadratureGrid>(
        tensor_grid({6.5}, {s_nodes}, DomainKind::symmetric_box));
    Rng rng(12);
    Matrix X(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        y[i] = std::sin(5.0 * X(i, 0)) + 0.2 * rng.normal();
    }
    FeatureBuildOptions nopts, qopts;
    qopts.path = GramPath::qr;
    FeatureModel fn = build_feature_matrix(X, y, grid, spec, nopts);
    FeatureModel fq = build_feature_matrix(X, y, grid, spec, qopts);

    HyperParams t = theta1(1.0, 1.0, 0.05);
    WeightDiagonal wd = weight_diag(*grid, spec, t);
    double ratio = wd.h.maxCoeff() / wd.h.minCoeff();
    CHECK(ratio >= 1e7);  // the stress premise: weights span many decades

    GprModel mn = train(fn, t, y);
    GprModel mq = train(fq, t, y);
    CHECK((mn.w - mq.w).norm() <= 1e-8 * mn.w.norm());
    double ln = log_marginal_likelihood(fn, t, y);
    double lq = log_marginal_likelihood(fq, t, y);
    CHECK(lq == doctest::Approx(ln).epsilon(1e-8));
    LikelihoodReport gn = likelihood_gradient(fn, t, y);
    LikelihoodReport gq = likelihood_gradient(fq, t, y);
    CHECK((gn.grad - gq.grad).norm() <= 1e-8 * gn.grad.norm());
}

TEST_CASE("rebinding targets") {
    Setup st = make_setup(25, 5, 31);
    HyperParams t = theta1(0.7, 1.0, 0.3);
    Vector y2 = st.y.array() + 1.0;
    // keep_z allows new targets on the normal path
    GprModel m2 = train(st.fm, t, y2);
    Matrix K = dense_Ktilde(st.fm, t);
    CHECK((K * m2.alpha - y2).norm() <= 1e-8 * y2.norm());
    // without Z the rebind is rejected
    FeatureModel slim = build_feature_matrix(st.X, st.y, st.grid, st.spec);
    CHECK_THROWS_AS(train(slim, t, y2), validation_error);
}

TEST_CASE("exact gpr") {
    SUBCASE("n = 1 scalars") {
        KernelSpec spec = gauss1d();
        HyperParams t = theta1(1.0, 1.5, 0.4);
        Matrix X = Matrix::Zero(1, 1);
        Vector y = Vector::Constant(1, 0.7);
        ExactGpr eg = exact_gpr(spec, t, X, y, X);
        CHECK(eg.alpha[0] == doctest::Approx(0.7 / 1.9).epsilon(1e-14));
        CHECK(eg.predictions[0] == doctest::Approx(1.5 * 0.7 / 1.9).epsilon(1e-14));
    }
    SUBCASE("gradient matches finite differences") {
        KernelSpec spec = gauss1d();
        Rng rng(9);
        const int n = 25;
        Matrix X(n, 1);
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.uniform(-1.0, 1.0);
            y[i] = std::sin(2.0 * X(i, 0)) + 0.3 * rng.normal();
        }
        HyperParams t = theta1(0.5, 1.1, 0.2);
        LikelihoodReport rep = exact_likelihood_gradient(spec, t, X, y);
        Vector flat(3);
        flat << t.theta0[0], t.sf2, t.sn2;
        for (int i = 0; i < 3; ++i) {
            double h = 1e-5 * flat[i];
            HyperParams tp = t, tm = t;
            if (i == 0) { tp.theta0[0] += h; tm.theta0[0] -= h; }
            if (i == 1) { tp.sf2 += h; tm.sf2 -= h; }
            if (i == 2) { tp.sn2 += h; tm.sn2 -= h; }
            double fd = (exact_log_marginal_likelihood(spec, tp, X, y) -
                         exact_log_marginal_likelihood(spec, tm, X, y)) /
                        (2 * h);
            CHECK(rep.grad[i] == doctest::Approx(fd).epsilon(2e-5));
        }
    }
    SUBCASE("likelihood prefers the generative noise level") {
        KernelSpec spec = gauss1d();
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed);
            const int n = 60;
            Matrix X(n, 1);
            Vector y(n);
            HyperParams gen = theta1(0.5, 1.0, 0.25);
            for (int i = 0; i < n; ++i) {
                X(i, 0) = rng.uniform(-1.0, 1.0);
                y[i] = std::sin(4.0 * X(i, 0)) + 0.5 * rng.normal();
            }
            HyperParams off = gen;
            off.sn2 = 25.0;
            CHECK(exact_log_marginal_likelihood(spec, gen, X, y) >
                  exact_log_marginal_likelihood(spec, off, X, y));
        }
    }
    SUBCASE("size guard") {
        KernelSpec spec = gauss1d();
        Matrix X = Matrix::Zero(5001, 1);
        Vector y = Vector::Zero(5001);
        CHECK_THROWS_AS(exact_log_marginal_likelihood(spec, theta1(1, 1, 1), X, y),
                        validation_error);
    }
}

TEST_CASE("glf approximates the exact gpr on planned parameters") {
    // end-to-end: alpha and likelihood computed through the features are close
    // to the dense exact-kernel versions once (U, s) come from the plan
    KernelSpec spec = gauss1d();
    HyperDomain dom;
    dom.theta0_lo = Vector::Constant(1, 0.5);
    dom.theta0_hi = Vector::Constant(1, 2.0);
    dom.sf2_lo = 0.5;
    dom.sf2_hi = 1.0;
    dom.sn2_lo = 0.1;
    dom.sn2_hi = 1.0;
    const int n = 60;
    BoundPlan bp = plan(spec, dom, n);
    auto grid = std::make_shared<QuadratureGrid>(
        tensor_grid(bp.U, bp.s, DomainKind::symmetric_box));
    Rng rng(44);
    Matrix X(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        y[i] = std::sin(3.0 * X(i, 0)) + 0.3 * rng.normal();
    }
    FeatureModel fm = build_feature_matrix(X, y, grid, spec);
    HyperParams t = dom.corner();
    double lk = log_marginal_likelihood(fm, t, y);
    double le = exact_log_marginal_likelihood(spec, t, X, y);
    CHECK(lk == doctest::Approx(le).epsilon(2e-2));
}

TEST_CASE("training cost scales within the O(n s^2) envelope") {
    // coarse wall-clock check; generous slack over the ~2.5x / ~5x targets
    KernelSpec spec = gauss1d();
    auto time_train = [&](int n, int s_nodes) {
        auto grid = std::make_shared<QuadratureGrid>(
            tensor_grid({6.0}, {s_nodes}, DomainKind::symmetric_box));
        Rng rng(1);
        Matrix X(n, 1);
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.uniform(-1.0, 1.0);
            y[i] = rng.normal();
        }
        HyperParams t = theta1(0.8, 1.0, 0.2);
        double best = 1e300;
        for (int rep = 0; rep < 3; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            FeatureModel fm = build_feature_matrix(X, y, grid, spec);
            train(fm, t, y);
            best = std::min(
                best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                          .count());
        }
        return best;
    };
    double t_n = time_train(2000, 50), t_2n = time_train(4000, 50);
    double t_s = time_train(2000, 100);
    CHECK(t_2n / t_n <= 3.0);
    CHECK(t_s / t_n <= 6.0);
}

TEST_CASE("gpr model serialization round trip") {
    Setup st = make_setup(30, 6, 77);
    HyperParams t = theta1(0.8, 1.1, 0.2);
    GprModel model = train(st.fm, t, st.y);
    model.save("gpr_roundtrip.txt");
    GprModel back = GprModel::load("gpr_roundtrip.txt");
    Matrix Xt(5, 1);
    Xt << -0.9, -0.3, 0.0, 0.4, 0.8;
    CHECK((predict(back, Xt) - predict(model, Xt)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("semigroup features run the full gpr path") {
    KernelSpec spec = KernelSpec::make(KernelFamily::reciprocal_semigroup, 1, {3.0});
    HyperDomain dom;
    dom.theta0_lo = Vector::Constant(1, 1.0);
    dom.theta0_hi = Vector::Constant(1, 4.0);
    dom.sf2_lo = 0.5;
    dom.sf2_hi = 1.0;
    dom.sn2_lo = 0.25;
    dom.sn2_hi = 1.0;
    const int n = 40;
    BoundPlan bp = plan(spec, dom, n);
    auto grid = std::make_shared<QuadratureGrid>(tensor_grid(bp.U, bp.s, DomainKind::positive_box));
    Rng rng(51);
    Matrix X(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(0.0, 3.0);
        y[i] = 1.0 / (1.0 + X(i, 0)) + 0.2 * rng.normal();
    }
    FeatureBuildOptions opts;
    opts.keep_z = true;
    FeatureModel fm = build_feature_matrix(X, y, grid, spec, opts);
    CHECK(fm.cols == bp.s_total);  // one real column per node

    HyperParams t = dom.corner();
    GprModel model = train(fm, t, y);
    Matrix K = dense_Ktilde(fm, t);
    CHECK((K * model.alpha - y).norm() <= 1e-8 * y.norm());

    // kernel-level agreement under the planned budget
    double budget = 1.0 / (t.sf2 * n);
    for (int it = 0; it < 30; ++it) {
        Vector a = Vector::Constant(1, rng.uniform(0.0, 3.0));
        Vector b = Vector::Constant(1, rng.uniform(0.0, 3.0));
        CHECK(std::abs(approx_kernel_eval(spec, *grid, t, a, b) - eval_kernel(spec, t, a, b)) <=
              budget);
    }

    // gradient vs finite differences through the semigroup density
    LikelihoodReport rep = likelihood_gradient(fm, t, y);
    for (int i = 0; i < 3; ++i) {
        double h = 1e-5 * (i == 0 ? t.theta0[0] : (i == 1 ? t.sf2 : t.sn2));
        HyperParams tp = t, tm = t;
        (i == 0 ? tp.theta0[0] : (i == 1 ? tp.sf2 : tp.sn2)) += h;
        (i == 0 ? tm.theta0[0] : (i == 1 ? tm.sf2 : tm.sn2)) -= h;
        double fd =
            (log_marginal_likelihood(fm, tp, y) - log_marginal_likelihood(fm, tm, y)) / (2 * h);
        CHECK(rep.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("anisotropic gradients flow through the likelihood") {
    KernelSpec spec = KernelSpec::make(KernelFamily::matern, 2, {2.0, 2.0}, true, 2.5);
    auto grid = std::make_shared<QuadratureGrid>(
        tensor_grid({5.0, 4.0}, {7, 6}, DomainKind::symmetric_box));
    Rng rng(61);
    const int n = 35;
    Matrix X(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.uniform(-1.0, 1.0);
        X(i, 1) = rng.uniform(-1.0, 1.0);
        y[i] = std::sin(2.0 * X(i, 0)) * std::cos(3.0 * X(i, 1)) + 0.2 * rng.normal();
    }
    FeatureModel fm = build_feature_matrix(X, y, grid, spec);
    HyperParams t;
    t.theta0 = Vector::Constant(2, 0.0);
    t.theta0 << 0.6, 1.1;
    t.sf2 = 0.9;
    t.sn2 = 0.2;
    LikelihoodReport rep = likelihood_gradient(fm, t, y);
    REQUIRE(rep.grad.size() == 4);
    for (int i = 0; i < 2; ++i) {
        double h = 1e-5 * t.theta0[i];
        HyperParams tp = t, tm = t;
        tp.theta0[i] += h;
        tm.theta0[i] -= h;
        double fd =
            (log_marginal_likelihood(fm, tp, y) - log_marginal_likelihood(fm, tm, y)) / (2 * h);
        CHECK(rep.grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("more feature columns than data rows") {
    // rank-deficient gram; the ridge keeps both paths well posed
    Setup st = make_setup(20, 15, 91);  // 30 columns, 20 rows
    HyperParams t = theta1(0.7, 1.0, 0.3);
    GprModel mn = train(st.fm, t, st.y);
    Matrix K = dense_Ktilde(st.fm, t);
    CHECK((K * mn.alpha - st.y).norm() <= 1e-8 * st.y.norm());

    FeatureBuildOptions qopts;
    qopts.path = GramPath::qr;
    FeatureModel fq = build_feature_matrix(st.X, st.y, st.grid, st.spec, qopts);
    GprModel mq = train(fq, t, st.y);
    CHECK((mn.w - mq.w).norm() <= 1e-8 * mn.w.norm());
    CHECK(log_marginal_likelihood(fq, t, st.y) ==
          doctest::Approx(log_marginal_likelihood(st.fm, t, st.y)).epsilon(1e-9));
}
