// Command-line harness: synthetic data, bound planning, training, prediction,
// hyperparameter learning, equivalence audits and benchmarks.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "glf/bounds.hpp"
#include "glf/dataset.hpp"
#include "glf/diagnostics.hpp"
#include "glf/errors.hpp"
#include "glf/experiment.hpp"
#include "glf/features.hpp"
#include "glf/gpr.hpp"
#include "glf/hyperopt.hpp"
#include "glf/rng.hpp"

namespace {

using namespace glf;

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct CommonArgs {
    std::string config;
    std::string kernel;
    double nu = -1.0;
    std::int64_t n = -1;
    std::int64_t s = -1;
    std::int64_t seed = -1;
    std::string out;
    std::string data;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config file (key = value lines)");
    cmd->add_option("--kernel", args.kernel, "kernel family override");
    cmd->add_option("--nu", args.nu, "matern smoothness override");
    cmd->add_option("--n", args.n, "dataset size override");
    cmd->add_option("--s", args.s, "per-dimension quadrature size override");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out", args.out, "output path");
    cmd->add_option("--data", args.data, "dataset override (synth1d|synth2d|csv path)");
}

ExperimentConfig make_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config.empty()) cfg = ExperimentConfig::parse_file(args.config);
    if (!args.kernel.empty()) cfg.kernel = args.kernel;
    if (args.nu > 0) cfg.nu = args.nu;
    if (args.n > 0) cfg.n = args.n;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (!args.data.empty()) cfg.data = args.data;
    if (args.s > 0) cfg.s_sweep = {std::to_string(args.s)};
    if (!args.out.empty()) cfg.out_dir = args.out;
    cfg.validate();
    return cfg;
}

std::shared_ptr<QuadratureGrid> grid_for(const KernelSpec& spec, const BoundPlan& bp,
                                         std::int64_t s_override) {
    std::vector<int> s = bp.s;
    if (s_override > 0) s.assign(spec.dim, static_cast<int>(s_override));
    else if (bp.exceeds_cap)
        throw capacity_error("planned s exceeds cap; pass --s to override");
    return std::make_shared<QuadratureGrid>(
        tensor_grid(bp.U, s,
                    spec.feature_kind() == FeatureKind::exponential_decay
                        ? DomainKind::positive_box
                        : DomainKind::symmetric_box));
}

int cmd_synth(const CommonArgs& args, const std::string& which) {
    std::int64_t n = args.n > 0 ? args.n : (which == "2d" ? 4096 : 800);
    std::uint64_t seed = args.seed >= 0 ? args.seed : 0;
    Dataset ds = which == "2d" ? synth_2d(n, seed) : synth_1d(n, seed);
    std::string out = args.out.empty() ? ("synth" + which + ".csv") : args.out;
    write_csv(out, ds.X, ds.y);
    std::cout << "wrote " << out << " (" << ds.n() << " rows, " << ds.dim() << " feature(s))\n";
    return 0;
}

int cmd_bounds(const CommonArgs& args) {
    ExperimentConfig cfg = make_config(args);
    Dataset ds = load_experiment_data(cfg);
    KernelSpec spec = cfg.spec_for(ds);
    BoundPlan bp = plan(spec, cfg.domain(), ds.n(), cfg.s_cap);
    std::cout << bp.report(spec);
    std::cout << "per_term_tolerance = " << 1.0 / (2.0 * cfg.domain().sf2_hi * ds.n()) << "\n";
    for (std::size_t k = 0; k < bp.U.size(); ++k) {
        std::cout << "U" << k << " = " << bp.U[k] << "\n"
                  << "beta" << k << " = " << bp.pe.beta[k] << "\n"
                  << "rho" << k << " = " << bp.pe.rho[k] << "\n"
                  << "s" << k << " = " << bp.s[k] << "\n";
    }
    std::cout << "M_R = " << bp.pe.M_R << "\nM_Ubeta = " << bp.pe.M_Ubeta
              << "\nC_Ubeta = " << bp.pe.C_Ubeta << "\ns_total = " << bp.s_total << "\n";
    return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& features_in,
            const std::string& features_out) {
    ExperimentConfig cfg = make_config(args);
    Dataset ds = load_experiment_data(cfg);
    KernelSpec spec = cfg.spec_for(ds);
    HyperDomain dom = cfg.domain();

    Vector y = ds.y;
    double shift = cfg.center_y ? y.mean() : 0.0;
    y.array() -= shift;
    FeatureModel fm;
    if (!features_in.empty()) {
        fm = FeatureModel::load(features_in);
        if (fm.n != ds.n())
            throw validation_error("fit: feature dump was built for a different dataset size");
    } else {
        BoundPlan bp = plan(spec, dom, ds.n(), cfg.s_cap);
        auto grid = grid_for(spec, bp, args.s);
        fm = build_feature_matrix(ds.X, y, grid, spec);
    }
    if (!features_out.empty()) {
        fm.save(features_out);
        std::cout << "feature model written to " << features_out << "\n";
    }
    OptOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    LearnResult lr = learn_glf(fm, dom, y, opts);
    GprModel model = train(fm, lr.theta, y);
    std::string out = args.out.empty() ? "model.txt" : args.out;
    model.save(out);
    std::cout << "learned theta0 =";
    for (Eigen::Index i = 0; i < lr.theta.theta0.size(); ++i)
        std::cout << ' ' << lr.theta.theta0[i];
    std::cout << "\nsf2 = " << lr.theta.sf2 << "\nsn2 = " << lr.theta.sn2
              << "\ntermination = " << lr.trace.termination << "\nmodel written to " << out
              << "\n";
    if (cfg.center_y) std::cout << "y_shift = " << shift << "\n";
    return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& model_path) {
    GprModel model = GprModel::load(model_path);
    if (args.data.empty()) throw validation_error("predict: --data csv required");
    Dataset ds = ingest_csv(args.data, model.spec.dim, 0.0, 0);
    Vector pred = predict(model, ds.X);
    std::string out = args.out.empty() ? "predictions.csv" : args.out;
    std::ofstream os(out);
    os.precision(17);
    for (int k = 0; k < model.spec.dim; ++k) os << 'x' << (k + 1) << ',';
    os << "pred\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        for (int k = 0; k < model.spec.dim; ++k) os << ds.X(i, k) << ',';
        os << pred[i] << '\n';
    }
    std::cout << "wrote " << out << " (" << pred.size() << " predictions)\n";
    return 0;
}

int cmd_learn(const CommonArgs& args, const std::string& backend_name_arg,
              const std::string& trace_path, const std::string& profile_prefix) {
    ExperimentConfig cfg = make_config(args);
    Dataset ds = load_experiment_data(cfg);
    KernelSpec spec = cfg.spec_for(ds);
    HyperDomain dom = cfg.domain();
    Backend backend = parse_backend(backend_name_arg);
    OptOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;

    Vector y = ds.y;
    if (cfg.center_y) y.array() -= y.mean();

    LearnResult lr;
    BoxObjective objective;
    std::unique_ptr<FeatureModel> fm;
    std::unique_ptr<RffModel> rff;
    if (backend == Backend::glf) {
        BoundPlan bp = plan(spec, dom, ds.n(), cfg.s_cap);
        auto grid = grid_for(spec, bp, args.s);
        fm = std::make_unique<FeatureModel>(build_feature_matrix(ds.X, y, grid, spec));
        lr = learn_glf(*fm, dom, y, opts);
        objective = glf_objective(*fm, y);
    } else if (backend == Backend::rff) {
        std::int64_t s = args.s > 0 ? args.s : 256;
        rff = std::make_unique<RffModel>(rff_build(spec, static_cast<int>(s), cfg.rff_seed));
        lr = learn_rff(*rff, ds.X, y, dom, opts);
        objective = rff_objective(*rff, ds.X, y);
    } else {
        lr = learn_exact(spec, ds.X, y, dom, opts);
        objective = exact_objective(spec, ds.X, y);
    }

    std::cout << "backend = " << backend_name(backend) << "\ntheta0 =";
    for (Eigen::Index i = 0; i < lr.theta.theta0.size(); ++i)
        std::cout << ' ' << lr.theta.theta0[i];
    std::cout << "\nsf2 = " << lr.theta.sf2 << "\nsn2 = " << lr.theta.sn2 << "\nloglik = "
              << lr.trace.iterates.back().value << "\niterations = "
              << lr.trace.iterates.size() - 1 << "\ntermination = " << lr.trace.termination
              << "\n";
    if (!trace_path.empty()) {
        std::ofstream os(trace_path);
        trace_to_csv(lr.trace, os);
        std::cout << "trace written to " << trace_path << "\n";
    }
    if (!profile_prefix.empty()) {
        // one likelihood section per hyperparameter, swept log-uniformly
        // across its box while the others sit at the learned point
        const int nt = spec.theta0_size();
        Vector lo(nt + 2), hi(nt + 2);
        lo.head(nt) = dom.theta0_lo;
        hi.head(nt) = dom.theta0_hi;
        lo[nt] = dom.sf2_lo;
        hi[nt] = dom.sf2_hi;
        lo[nt + 1] = dom.sn2_lo;
        hi[nt + 1] = dom.sn2_hi;
        const int points = 25;
        for (int coord = 0; coord < nt + 2; ++coord) {
            Vector grid_values(points);
            for (int i = 0; i < points; ++i) {
                double t = static_cast<double>(i) / (points - 1);
                grid_values[i] =
                    std::exp(std::log(lo[coord]) + t * (std::log(hi[coord]) - std::log(lo[coord])));
            }
            Vector prof = profile_likelihood(objective, spec, lr.theta, coord, grid_values);
            std::string name = coord < nt ? "theta0_" + std::to_string(coord)
                                          : (coord == nt ? "sf2" : "sn2");
            std::string file = profile_prefix + "." + name + ".csv";
            std::ofstream os(file);
            os.precision(17);
            os << name << ",loglik\n";
            for (int i = 0; i < points; ++i) os << grid_values[i] << ',' << prof[i] << '\n';
            std::cout << "profile written to " << file << "\n";
        }
    }
    return 0;
}

int cmd_audit(const CommonArgs& args, std::int64_t n_audit) {
    ExperimentConfig cfg = make_config(args);
    Dataset ds = load_experiment_data(cfg);
    KernelSpec spec = cfg.spec_for(ds);
    HyperDomain dom = cfg.domain();
    BoundPlan bp = plan(spec, dom, ds.n(), cfg.s_cap);
    std::cout << bp.report(spec);

    std::int64_t m = std::min<std::int64_t>(n_audit > 0 ? n_audit : 200, ds.n());
    Matrix X(m, spec.dim);
    std::int64_t stride = std::max<std::int64_t>(1, ds.n() / m);
    for (std::int64_t i = 0; i < m; ++i) X.row(i) = ds.X.row(std::min(i * stride, ds.n() - 1));

    auto grid = grid_for(spec, bp, args.s);
    HyperParams corner = dom.corner();
    Matrix K = dense_kernel_matrix(spec, corner, X);
    Matrix Kt(m, m);
    for (std::int64_t i = 0; i < m; ++i) {
        Vector xi = X.row(i);
        for (std::int64_t j = 0; j <= i; ++j) {
            Vector xj = X.row(j);
            Kt(i, j) = approx_kernel_eval(spec, *grid, corner, xi, xj);
            Kt(j, i) = Kt(i, j);
        }
    }
    // The audit certifies at the planned n even when fewer rows are checked.
    EquivalenceReport rep = spectral_equivalence_check(K, Kt);
    std::cout << rep.summary();
    return 0;
}

int cmd_bench(const CommonArgs& args, bool builds_only, int dim) {
    if (builds_only) {
        std::int64_t n = args.n > 0 ? args.n : 4000;
        std::int64_t s = args.s > 0 ? args.s : 32;
        std::uint64_t seed = args.seed >= 0 ? args.seed : 0;
        Rng rng(seed);
        Matrix X(n, dim);
        for (std::int64_t i = 0; i < n; ++i)
            for (int k = 0; k < dim; ++k) X(i, k) = rng.uniform(-1.0, 1.0);
        Vector y(n);
        for (std::int64_t i = 0; i < n; ++i) y[i] = rng.normal();
        KernelSpec spec = KernelSpec::make(KernelFamily::gaussian, dim,
                                           std::vector<double>(dim, 2.0));
        auto grid = std::make_shared<QuadratureGrid>(
            tensor_grid(std::vector<double>(dim, 8.0),
                        std::vector<int>(dim, static_cast<int>(s)),
                        DomainKind::symmetric_box));
        FeatureBuildOptions opts;
        double t0 = now_s();
        FeatureModel serial = build_feature_matrix_serial(X, y, grid, spec, opts);
        double t_serial = now_s() - t0;
        t0 = now_s();
        FeatureModel par = build_feature_matrix(X, y, grid, spec, opts);
        double t_par = now_s() - t0;
        double diff = (serial.gram - par.gram).cwiseAbs().maxCoeff() /
                      std::max(1.0, serial.gram.cwiseAbs().maxCoeff());
        std::cout << "feature build benchmark: n = " << n << ", s = " << s << ", d = " << dim
                  << ", cols = " << serial.cols << "\n"
                  << "serial   " << t_serial << " s\n"
                  << "parallel " << t_par << " s  (speedup " << t_serial / std::max(t_par, 1e-12)
                  << "x)\n"
                  << "max relative gram difference = " << diff << "\n";
        return 0;
    }
    ExperimentConfig cfg = make_config(args);
    run_experiment(cfg);
    std::cout << "experiment written to " << cfg.out_dir << "/ (report.csv, timings.csv, bounds.txt)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauss-Legendre feature Gaussian process regression"};
    app.require_subcommand(1);

    CommonArgs synth_args, bounds_args, fit_args, predict_args, learn_args, audit_args,
        bench_args;
    std::string synth_which = "1d";
    std::string predict_model;
    std::string fit_features_in, fit_features_out;
    std::string learn_backend = "glf";
    std::string learn_trace;
    std::string learn_profiles;
    std::int64_t audit_n = 200;
    bool bench_builds = false;
    int bench_dim = 1;

    CLI::App* c_synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    add_common(c_synth, synth_args);
    c_synth->add_option("--which", synth_which, "1d or 2d")->check(CLI::IsMember({"1d", "2d"}));

    CLI::App* c_bounds = app.add_subcommand("bounds", "print the truncation/size plan");
    add_common(c_bounds, bounds_args);

    CLI::App* c_fit = app.add_subcommand("fit", "learn hyperparameters and train a model");
    add_common(c_fit, fit_args);
    c_fit->add_option("--features", fit_features_in, "reuse a saved feature model");
    c_fit->add_option("--save-features", fit_features_out, "save the feature model for reuse");

    CLI::App* c_predict = app.add_subcommand("predict", "predict with a trained model dump");
    add_common(c_predict, predict_args);
    c_predict->add_option("--model", predict_model, "model file from fit")->required();

    CLI::App* c_learn = app.add_subcommand("learn", "hyperparameter learning only");
    add_common(c_learn, learn_args);
    c_learn->add_option("--backend", learn_backend, "glf|rff|exact");
    c_learn->add_option("--trace", learn_trace, "write the optimizer trace CSV here");
    c_learn->add_option("--profiles", learn_profiles,
                        "prefix for per-hyperparameter likelihood section CSVs");

    CLI::App* c_audit = app.add_subcommand("audit", "spectral equivalence certification");
    add_common(c_audit, audit_args);
    c_audit->add_option("--n-audit", audit_n, "matrix order for the eigenvalue check");

    CLI::App* c_bench = app.add_subcommand("bench", "experiment sweep or build benchmark");
    add_common(c_bench, bench_args);
    c_bench->add_flag("--builds", bench_builds, "compare serial vs parallel feature builds");
    c_bench->add_option("--dim", bench_dim, "dimension for --builds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_synth->parsed()) return cmd_synth(synth_args, synth_which);
        if (c_bounds->parsed()) return cmd_bounds(bounds_args);
        if (c_fit->parsed()) return cmd_fit(fit_args, fit_features_in, fit_features_out);
        if (c_predict->parsed()) return cmd_predict(predict_args, predict_model);
        if (c_learn->parsed()) return cmd_learn(learn_args, learn_backend, learn_trace, learn_profiles);
        if (c_audit->parsed()) return cmd_audit(audit_args, audit_n);
        if (c_bench->parsed()) return cmd_bench(bench_args, bench_builds, bench_dim);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
