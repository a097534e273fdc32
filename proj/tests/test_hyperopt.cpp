#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glf/bounds.hpp"
#include "glf/dataset.hpp"
#include "glf/errors.hpp"
#include "glf/hyperopt.hpp"

using namespace glf;

namespace {

HyperDomain box1(double e0, double e1, double f0, double f1, double n0, double n1) {
    HyperDomain d;
    d.theta0_lo = Vector::Constant(1, e0);
    d.theta0_hi = Vector::Constant(1, e1);
    d.sf2_lo = f0;
    d.sf2_hi = f1;
    d.sn2_lo = n0;
    d.sn2_hi = n1;
    return d;
}

struct GlfSetup {
    KernelSpec spec;
    HyperDomain dom;
    Dataset ds;
    std::shared_ptr<QuadratureGrid> grid;
    FeatureModel fm;
};

GlfSetup glf_setup(std::int64_t n, std::uint64_t seed) {
    GlfSetup s{KernelSpec::make(KernelFamily::gaussian, 1, {2.0}),
               box1(0.1, 2.0, 0.05, 2.0, 0.05, 2.0),
               synth_1d(n, seed),
               nullptr,
               {}};
    BoundPlan bp = plan(s.spec, s.dom, n);
    s.grid = std::make_shared<QuadratureGrid>(tensor_grid(bp.U, bp.s, DomainKind::symmetric_box));
    s.fm = build_feature_matrix(s.ds.X, s.ds.y, s.grid, s.spec);
    return s;
}

}  // namespace

TEST_CASE("optimizer solves a concave surrogate") {
    // maximize -(log theta - c)^2 over a box containing e^c
    const double c = 0.4;
    BoxObjective f = [c](const Vector& theta, Vector* grad) {
        double u = std::log(theta[0]);
        if (grad) (*grad)[0] = -2.0 * (u - c) / theta[0];
        return -(u - c) * (u - c);
    };
    Vector lo = Vector::Constant(1, std::exp(c - 2.0));
    Vector hi = Vector::Constant(1, std::exp(c + 2.0));
    Vector start = lo;
    auto [theta, trace] = maximize_log_box(f, lo, hi, start);
    CHECK(theta[0] == doctest::Approx(std::exp(c)).epsilon(1e-6));
    CHECK(trace.termination == "converged");
    // accepted iterates never decrease
    for (std::size_t i = 1; i < trace.iterates.size(); ++i)
        CHECK(trace.iterates[i].value >= trace.iterates[i - 1].value);
}

TEST_CASE("optimizer respects the box") {
    // optimum of -(log theta)^2 sits at 1, outside the box
    BoxObjective f = [](const Vector& theta, Vector* grad) {
        double u = std::log(theta[0]);
        if (grad) (*grad)[0] = -2.0 * u / theta[0];
        return -u * u;
    };
    Vector lo = Vector::Constant(1, 2.0), hi = Vector::Constant(1, 5.0);
    auto [theta, trace] = maximize_log_box(f, lo, hi, Vector::Constant(1, 4.0));
    CHECK(theta[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(trace.termination == "converged");
}

TEST_CASE("optimizer is deterministic") {
    GlfSetup s = glf_setup(120, 3);
    OptOptions opts;
    opts.max_iters = 40;
    LearnResult a = learn_glf(s.fm, s.dom, s.ds.y, opts);
    LearnResult b = learn_glf(s.fm, s.dom, s.ds.y, opts);
    REQUIRE(a.trace.iterates.size() == b.trace.iterates.size());
    for (std::size_t i = 0; i < a.trace.iterates.size(); ++i) {
        CHECK(a.trace.iterates[i].value == b.trace.iterates[i].value);
        CHECK((a.trace.iterates[i].theta - b.trace.iterates[i].theta).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("non-finite objective at the start is diagnosed") {
    BoxObjective f = [](const Vector&, Vector* grad) {
        if (grad) (*grad)[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    };
    Vector one = Vector::Constant(1, 1.0);
    CHECK_THROWS_AS(maximize_log_box(f, 0.5 * one, 2.0 * one, one), numeric_error);
}

TEST_CASE("glf backend computes the gram exactly once") {
    GlfSetup s = glf_setup(200, 5);
    OptOptions opts;
    opts.max_iters = 60;
    LearnResult lr = learn_glf(s.fm, s.dom, s.ds.y, opts);
    CHECK(lr.gram_builds_during_learn == 0);
    CHECK(lr.trace.iterates.back().value >= lr.trace.iterates.front().value);
    // the result lies in the box
    CHECK(lr.theta.theta0[0] >= s.dom.theta0_lo[0]);
    CHECK(lr.theta.theta0[0] <= s.dom.theta0_hi[0]);
    CHECK(lr.theta.sf2 >= s.dom.sf2_lo);
    CHECK(lr.theta.sf2 <= s.dom.sf2_hi);
    CHECK(lr.theta.sn2 >= s.dom.sn2_lo);
    CHECK(lr.theta.sn2 <= s.dom.sn2_hi);
}

TEST_CASE("rff objective gradient matches finite differences") {
    KernelSpec spec = KernelSpec::make(KernelFamily::gaussian, 2, {2.0, 2.0}, true);
    Dataset ds = synth_2d(64, 7);
    RffModel model = rff_build(spec, 40, 11);
    BoxObjective f = rff_objective(model, ds.X, ds.y, nullptr);
    Vector flat(4);
    flat << 0.4, 0.7, 1.1, 0.3;  // [L1, L2, sf2, sn2]
    Vector grad(4);
    double v0 = f(flat, &grad);
    CHECK(std::isfinite(v0));
    for (int i = 0; i < 4; ++i) {
        double h = 1e-6 * flat[i];
        Vector fp = flat, fmv = flat;
        fp[i] += h;
        fmv[i] -= h;
        double fd = (f(fp, nullptr) - f(fmv, nullptr)) / (2 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("rff backend rebuilds features every evaluation") {
    KernelSpec spec = KernelSpec::make(KernelFamily::gaussian, 1, {2.0});
    Dataset ds = synth_1d(150, 9);
    RffModel model = rff_build(spec, 32, 5);
    OptOptions opts;
    opts.max_iters = 25;
    LearnResult lr = learn_rff(model, ds.X, ds.y, box1(0.1, 2.0, 0.05, 2.0, 0.05, 2.0), opts);
    CHECK(lr.feature_rebuilds == lr.trace.grad_evals + lr.trace.value_evals);
    CHECK(lr.feature_rebuilds >= static_cast<long>(lr.trace.iterates.size()) - 1);
}

TEST_CASE("exact backend recovers the generative noise level") {
    KernelSpec spec = KernelSpec::make(KernelFamily::gaussian, 1, {2.0});
    Dataset ds = synth_1d(300, 0);
    OptOptions opts;
    opts.max_iters = 150;
    LearnResult lr = learn_exact(spec, ds.X, ds.y, box1(0.02, 2.0, 0.05, 4.0, 0.01, 4.0), opts);
    // generative noise variance is 0.25
    CHECK(lr.theta.sn2 >= 0.125);
    CHECK(lr.theta.sn2 <= 0.5);
}

TEST_CASE("glf and exact likelihood profiles agree on planned parameters") {
    // plan certifies the corner; the profile sweeps lengthscales the planned
    // grid resolves
    KernelSpec spec = KernelSpec::make(KernelFamily::gaussian, 1, {2.0});
    HyperDomain dom = box1(0.3, 1.0, 0.05, 2.0, 0.05, 2.0);
    Dataset ds = synth_1d(200, 1);
    BoundPlan bp = plan(spec, dom, 200);
    auto grid = std::make_shared<QuadratureGrid>(tensor_grid(bp.U, bp.s, DomainKind::symmetric_box));
    FeatureModel fm = build_feature_matrix(ds.X, ds.y, grid, spec);
    HyperParams at = dom.corner();
    at.theta0[0] = 0.5;
    at.sf2 = 1.0;
    at.sn2 = 0.25;
    Vector grid_values(5);
    grid_values << 0.3, 0.4, 0.55, 0.75, 1.0;
    Vector prof_glf = profile_likelihood(glf_objective(fm, ds.y), spec, at, 0, grid_values);
    Vector prof_exact =
        profile_likelihood(exact_objective(spec, ds.X, ds.y), spec, at, 0, grid_values);
    for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(prof_glf[i] - prof_exact[i]) <= 2.0 * std::abs(prof_exact[i]) * 1e-2);
    }
    // a coordinate the objective ignores profiles flat
    BoxObjective ignore_sf2 = [](const Vector& th, Vector* g) {
        if (g) {
            g->setZero();
            (*g)[0] = -2.0 * std::log(th[0]) / th[0];
        }
        return -std::log(th[0]) * std::log(th[0]);
    };
    Vector sweep(3);
    sweep << 0.5, 1.0, 2.0;
    Vector prof = profile_likelihood(ignore_sf2, spec, at, 1, sweep);
    CHECK(prof[0] == prof[1]);
    CHECK(prof[1] == prof[2]);
}

TEST_CASE("trace CSV shape") {
    GlfSetup s = glf_setup(80, 2);
    OptOptions opts;
    opts.max_iters = 10;
    LearnResult lr = learn_glf(s.fm, s.dom, s.ds.y, opts);
    std::ostringstream os;
    trace_to_csv(lr.trace, os);
    std::string text = os.str();
    CHECK(text.find("iter,value,pg_norm,theta0,theta1,theta2") == 0);
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == lr.trace.iterates.size() + 1);
}
