#include "glf/hyperopt.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "glf/errors.hpp"

namespace glf {

Backend parse_backend(const std::string& name) {
    if (name == "glf") return Backend::glf;
    if (name == "rff") return Backend::rff;
    if (name == "exact") return Backend::exact;
    throw validation_error("unknown backend: " + name);
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::glf: return "glf";
        case Backend::rff: return "rff";
        case Backend::exact: return "exact";
    }
    return "?";
}

Vector pack_theta(const HyperParams& theta) {
    Vector flat(theta.theta0.size() + 2);
    flat.head(theta.theta0.size()) = theta.theta0;
    flat[theta.theta0.size()] = theta.sf2;
    flat[theta.theta0.size() + 1] = theta.sn2;
    return flat;
}

HyperParams unpack_theta(const KernelSpec& spec, const Vector& flat) {
    const int nt = spec.theta0_size();
    if (flat.size() != nt + 2) throw validation_error("unpack_theta: size mismatch");
    HyperParams theta;
    theta.theta0 = flat.head(nt);
    theta.sf2 = flat[nt];
    theta.sn2 = flat[nt + 1];
    return theta;
}

namespace {

Vector projected_gradient(const Vector& u, const Vector& g, const Vector& lo, const Vector& hi) {
    Vector pg = g;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u[i] <= lo[i] + 1e-14 && g[i] < 0.0) pg[i] = 0.0;
        if (u[i] >= hi[i] - 1e-14 && g[i] > 0.0) pg[i] = 0.0;
    }
    return pg;
}

Vector clamp(const Vector& u, const Vector& lo, const Vector& hi) {
    return u.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

std::pair<Vector, OptTrace> maximize_log_box(const BoxObjective& f, const Vector& lo,
                                             const Vector& hi, const Vector& start,
                                             const OptOptions& opts) {
    const Eigen::Index m = start.size();
    if (lo.size() != m || hi.size() != m)
        throw validation_error("maximize_log_box: bound size mismatch");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(lo[i] > 0.0 && lo[i] <= hi[i]))
            throw validation_error("maximize_log_box: need 0 < lo <= hi");
    }
    auto t0 = std::chrono::steady_clock::now();
    OptTrace trace;

    Vector ulo = lo.array().log();
    Vector uhi = hi.array().log();
    Vector u = clamp(start.array().log(), ulo, uhi);

    auto eval = [&](const Vector& uu, Vector* gu) {
        Vector theta = uu.array().exp();
        if (gu) {
            Vector gt(m);
            double v = f(theta, &gt);
            ++trace.grad_evals;
            *gu = gt.cwiseProduct(theta);  // d/d log(theta)
            return v;
        }
        ++trace.value_evals;
        return f(theta, nullptr);
    };

    Vector g(m);
    double value = eval(u, &g);
    if (!std::isfinite(value))
        throw numeric_error("hyperparameter learning: objective not finite at the initial point");

    Vector pg = projected_gradient(u, g, ulo, uhi);
    trace.iterates.push_back({Vector(u.array().exp()), value, pg.norm()});

    Vector u_prev = u, g_prev = g;
    bool have_prev = false;
    std::string reason = "max_iters";

    for (int it = 0; it < opts.max_iters; ++it) {
        if (pg.norm() <= opts.tol * (1.0 + std::abs(value))) {
            reason = "converged";
            break;
        }
        double step;
        if (have_prev) {
            Vector s = u - u_prev;
            Vector dg = g - g_prev;
            double sy = std::abs(s.dot(dg));
            step = (sy > 1e-300) ? s.squaredNorm() / sy : 1.0;
            step = std::min(std::max(step, 1e-10), 1e6);
        } else {
            step = 1.0 / (1.0 + pg.lpNorm<Eigen::Infinity>());
        }

        bool accepted = false;
        Vector u_new;
        double v_new = value;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            u_new = clamp(u + step * pg, ulo, uhi);
            Vector du = u_new - u;
            if (du.norm() == 0.0) break;  // stuck on the boundary
            v_new = eval(u_new, nullptr);
            if (std::isfinite(v_new) && v_new >= value + opts.armijo_c * g.dot(du)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            reason = "line_search_failure";
            break;
        }
        u_prev = u;
        g_prev = g;
        have_prev = true;
        u = u_new;
        value = eval(u, &g);
        pg = projected_gradient(u, g, ulo, uhi);
        trace.iterates.push_back({Vector(u.array().exp()), value, pg.norm()});
    }
    if (reason == "max_iters" && pg.norm() <= opts.tol * (1.0 + std::abs(value)))
        reason = "converged";
    trace.termination = reason;
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {Vector(u.array().exp()), trace};
}

BoxObjective glf_objective(const FeatureModel& fm, const Vector& y) {
    return [&fm, y](const Vector& flat, Vector* grad) {
        HyperParams theta = unpack_theta(fm.spec, flat);
        if (!grad) return log_marginal_likelihood(fm, theta, y);
        LikelihoodReport rep = likelihood_gradient(fm, theta, y);
        *grad = rep.grad;
        return rep.value;
    };
}

BoxObjective exact_objective(const KernelSpec& spec, const Matrix& X, const Vector& y) {
    return [&spec, &X, y](const Vector& flat, Vector* grad) {
        HyperParams theta = unpack_theta(spec, flat);
        if (!grad) return exact_log_marginal_likelihood(spec, theta, X, y);
        LikelihoodReport rep = exact_likelihood_gradient(spec, theta, X, y);
        *grad = rep.grad;
        return rep.value;
    };
}

namespace {

// Real (cos, sin) encoding of the complex RFF features: K = sf2 Z Z^T + sn2 I
// with 2s columns scaled by 1/sqrt(s). Rebuilt on every evaluation since the
// frequencies rescale with the lengthscales.
struct RffEval {
    Matrix Z;       // n x 2s
    Matrix dphase;  // n x s workspace, phases
};

void rff_real_features(const RffModel& model, const Matrix& X, const Vector& L, Matrix& Z,
                       Matrix& phase) {
    const int s = model.s;
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    phase = X * L.cwiseInverse().asDiagonal() * model.omega;  // n x s
    Z.resize(X.rows(), 2 * s);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < s; ++j) {
            Z(i, 2 * j) = std::cos(phase(i, j)) * scale;
            Z(i, 2 * j + 1) = std::sin(phase(i, j)) * scale;
        }
    }
}

}  // namespace

BoxObjective rff_objective(const RffModel& model, const Matrix& X, const Vector& y,
                           long* rebuild_counter) {
    const double yty = y.squaredNorm();
    return [&model, &X, y, yty, rebuild_counter](const Vector& flat, Vector* grad) {
        const KernelSpec& spec = model.spec;
        HyperParams theta = unpack_theta(spec, flat);
        const int nt = spec.theta0_size();
        const double sf2 = theta.sf2, sn2 = theta.sn2;
        const std::int64_t n = X.rows();
        const int s = model.s;
        const int c = 2 * s;
        Vector L = rff_lengthscales(spec, theta.theta0);

        Matrix Z, phase;
        rff_real_features(model, X, L, Z, phase);
        if (rebuild_counter) ++(*rebuild_counter);

        Matrix G = Matrix::Zero(c, c);
        G.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0);
        G.triangularView<Eigen::StrictlyUpper>() = G.transpose().triangularView<Eigen::StrictlyUpper>();
        Vector zy = Z.transpose() * y;

        Matrix A = sf2 * G;
        A.diagonal().array() += sn2;
        Eigen::LLT<Matrix> llt(A);
        if (llt.info() != Eigen::Success)
            throw conditioning_error("rff objective: inner system not positive definite");
        Vector t = llt.solve(zy);
        double yKy = (yty - sf2 * zy.dot(t)) / sn2;
        double logdet = (n - c) * std::log(sn2) +
                        2.0 * llt.matrixLLT().diagonal().array().log().sum();
        double value = -0.5 * yKy - 0.5 * logdet -
                       0.5 * n * 1.8378770664093454835606594728112;
        if (!grad) return value;

        Matrix AinvG = llt.solve(G);
        double trF = sf2 * AinvG.trace();
        Vector za = (zy - sf2 * (G * t)) / sn2;  // Z^T alpha
        Vector alpha = (y - sf2 * (Z * t)) / sn2;

        Vector gvec(nt + 2);
        // lengthscale components
        for (int q = 0; q < nt; ++q) {
            double tr_total = 0.0, quad_total = 0.0;
            for (int k = 0; k < spec.dim; ++k) {
                if (spec.anisotropic && k != q) continue;
                // dZ columns for dimension k
                Matrix dZ(n, c);
                const double invL2 = 1.0 / (L[k] * L[k]);
                for (Eigen::Index i = 0; i < n; ++i) {
                    double xk = X(i, k) * invL2;
                    for (int j = 0; j < s; ++j) {
                        double w = xk * model.omega(k, j);
                        dZ(i, 2 * j) = Z(i, 2 * j + 1) * w;    // d cos = sin * w
                        dZ(i, 2 * j + 1) = -Z(i, 2 * j) * w;   // d sin = -cos * w
                    }
                }
                Matrix M = Z.transpose() * dZ;
                double tr = (M.trace() - sf2 * AinvG.cwiseProduct(M).sum()) / sn2;
                tr_total += 2.0 * sf2 * tr;
                quad_total += 2.0 * sf2 * za.dot(dZ.transpose() * alpha);
            }
            gvec[q] = -0.5 * tr_total + 0.5 * quad_total;
        }
        gvec[nt] = -0.5 * (trF / sf2) + 0.5 * za.squaredNorm();
        gvec[nt + 1] = -0.5 * ((n - trF) / sn2) + 0.5 * alpha.squaredNorm();
        *grad = gvec;
        return value;
    };
}

namespace {

LearnResult run_learn(const BoxObjective& f, const KernelSpec& spec, const HyperDomain& domain,
                      const OptOptions& opts) {
    domain.validate(spec);
    const int nt = spec.theta0_size();
    Vector lo(nt + 2), hi(nt + 2);
    lo.head(nt) = domain.theta0_lo;
    hi.head(nt) = domain.theta0_hi;
    lo[nt] = domain.sf2_lo;
    hi[nt] = domain.sf2_hi;
    lo[nt + 1] = domain.sn2_lo;
    hi[nt + 1] = domain.sn2_hi;
    Vector start = pack_theta(domain.corner());
    auto [flat, trace] = maximize_log_box(f, lo, hi, start, opts);
    LearnResult res;
    res.theta = unpack_theta(spec, flat);
    res.trace = std::move(trace);
    return res;
}

}  // namespace

LearnResult learn_glf(const FeatureModel& fm, const HyperDomain& domain, const Vector& y,
                      const OptOptions& opts) {
    long builds_before = FeatureModel::build_count();
    LearnResult res = run_learn(glf_objective(fm, y), fm.spec, domain, opts);
    res.gram_builds_during_learn = FeatureModel::build_count() - builds_before;
    return res;
}

LearnResult learn_rff(const RffModel& model, const Matrix& X, const Vector& y,
                      const HyperDomain& domain, const OptOptions& opts) {
    long rebuilds = 0;
    LearnResult res = run_learn(rff_objective(model, X, y, &rebuilds), model.spec, domain, opts);
    res.feature_rebuilds = rebuilds;
    return res;
}

LearnResult learn_exact(const KernelSpec& spec, const Matrix& X, const Vector& y,
                        const HyperDomain& domain, const OptOptions& opts) {
    return run_learn(exact_objective(spec, X, y), spec, domain, opts);
}

Vector profile_likelihood(const BoxObjective& f, const KernelSpec& spec, const HyperParams& at,
                          int coordinate, const Vector& grid_values) {
    Vector flat = pack_theta(at);
    if (coordinate < 0 || coordinate >= flat.size())
        throw validation_error("profile_likelihood: bad coordinate");
    Vector out(grid_values.size());
    for (Eigen::Index i = 0; i < grid_values.size(); ++i) {
        Vector probe = flat;
        probe[coordinate] = grid_values[i];
        out[i] = f(probe, nullptr);
    }
    (void)spec;
    return out;
}

void trace_to_csv(const OptTrace& trace, std::ostream& os) {
    os.precision(17);
    os << "iter,value,pg_norm";
    if (!trace.iterates.empty())
        for (Eigen::Index i = 0; i < trace.iterates[0].theta.size(); ++i) os << ",theta" << i;
    os << "\n";
    for (std::size_t it = 0; it < trace.iterates.size(); ++it) {
        const OptIterate& p = trace.iterates[it];
        os << it << ',' << p.value << ',' << p.pg_norm;
        for (Eigen::Index i = 0; i < p.theta.size(); ++i) os << ',' << p.theta[i];
        os << "\n";
    }
}

}  // namespace glf
