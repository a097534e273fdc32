#include "glf/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "glf/errors.hpp"
#include "glf/features.hpp"
#include "glf/gpr.hpp"
#include "glf/rng.hpp"

namespace glf {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t a = item.find_first_not_of(" \t");
        std::size_t b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const std::string& item : split_list(s)) out.push_back(std::stod(item));
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw validation_error("config: bad boolean '" + v + "'");
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw validation_error("config: expected 'key = value' at line " +
                                       std::to_string(lineno));
            continue;
        }
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t\r");
            std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw validation_error("config: empty key or value at line " + std::to_string(lineno));
        try {
            if (key == "kernel") cfg.kernel = val;
            else if (key == "nu") cfg.nu = std::stod(val);
            else if (key == "dim") cfg.dim = std::stoi(val);
            else if (key == "anisotropic") cfg.anisotropic = parse_bool(val);
            else if (key == "data") cfg.data = val;
            else if (key == "n") cfg.n = std::stoll(val);
            else if (key == "test_n") cfg.test_n = std::stoll(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "split_fraction") cfg.split_fraction = std::stod(val);
            else if (key == "log_y") cfg.log_y = parse_bool(val);
            else if (key == "center_y") cfg.center_y = parse_bool(val);
            else if (key == "theta0_lo") cfg.theta0_lo = parse_doubles(val);
            else if (key == "theta0_hi") cfg.theta0_hi = parse_doubles(val);
            else if (key == "sf2_lo") cfg.sf2_lo = std::stod(val);
            else if (key == "sf2_hi") cfg.sf2_hi = std::stod(val);
            else if (key == "sn2_lo") cfg.sn2_lo = std::stod(val);
            else if (key == "sn2_hi") cfg.sn2_hi = std::stod(val);
            else if (key == "backends") cfg.backends = split_list(val);
            else if (key == "s_sweep") cfg.s_sweep = split_list(val);
            else if (key == "s_cap") cfg.s_cap = std::stoll(val);
            else if (key == "rff_seed") cfg.rff_seed = std::stoull(val);
            else if (key == "max_iters") cfg.max_iters = std::stoi(val);
            else if (key == "tol") cfg.tol = std::stod(val);
            else if (key == "bounding_box") cfg.bounding_box = parse_doubles(val);
            else if (key == "out_dir") cfg.out_dir = val;
            else
                throw validation_error("config: unknown key '" + key + "'");
        } catch (const validation_error&) {
            throw;
        } catch (const std::exception&) {
            throw validation_error("config: bad value for '" + key + "' at line " +
                                   std::to_string(lineno));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw validation_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

void ExperimentConfig::validate() const {
    parse_family(kernel);
    if (dim < 1) throw validation_error("config: dim must be >= 1");
    if (n < 2) throw validation_error("config: n must be >= 2");
    if (!(sf2_lo > 0 && sf2_lo <= sf2_hi && sn2_lo > 0 && sn2_lo <= sn2_hi))
        throw validation_error("config: variance bounds must satisfy 0 < lo <= hi");
    const std::size_t nt = anisotropic ? static_cast<std::size_t>(dim) : 1;
    if (theta0_lo.size() != nt || theta0_hi.size() != nt)
        throw validation_error("config: theta0 bounds must have " + std::to_string(nt) +
                               " value(s)");
    for (std::size_t i = 0; i < nt; ++i)
        if (!(theta0_lo[i] > 0 && theta0_lo[i] <= theta0_hi[i]))
            throw validation_error("config: theta0 bounds must satisfy 0 < lo <= hi");
    for (const std::string& b : backends) parse_backend(b);
    if (s_sweep.empty()) throw validation_error("config: s_sweep must be nonempty");
    for (const std::string& s : s_sweep) {
        if (s == "planned") continue;
        int v = std::stoi(s);
        if (v < 1) throw validation_error("config: s_sweep entries must be >= 1 or 'planned'");
    }
    if (!bounding_box.empty() && static_cast<int>(bounding_box.size()) != dim)
        throw validation_error("config: bounding_box must have dim entries");
}

Dataset load_experiment_data(const ExperimentConfig& cfg) {
    if (cfg.data == "synth1d") {
        if (cfg.dim != 1) throw validation_error("config: synth1d requires dim = 1");
        Dataset ds = synth_1d(cfg.n, cfg.seed);
        // random test locations, fresh noise
        Rng rng(cfg.seed + 2);
        ds.Xt.resize(cfg.test_n, 1);
        ds.yt.resize(cfg.test_n);
        for (std::int64_t i = 0; i < cfg.test_n; ++i) {
            double x = rng.uniform(-1.0, 1.0);
            ds.Xt(i, 0) = x;
            ds.yt[i] = wiggly_1d(x) + 0.5 * rng.normal();
        }
        return ds;
    }
    if (cfg.data == "synth2d") {
        if (cfg.dim != 2) throw validation_error("config: synth2d requires dim = 2");
        Dataset ds = synth_2d(cfg.n, cfg.seed);
        Rng rng(cfg.seed + 2);
        ds.Xt.resize(cfg.test_n, 2);
        ds.yt.resize(cfg.test_n);
        for (std::int64_t i = 0; i < cfg.test_n; ++i) {
            double x1 = rng.uniform(-1.0, 1.0), x2 = rng.uniform(-1.0, 1.0);
            ds.Xt(i, 0) = x1;
            ds.Xt(i, 1) = x2;
            ds.yt[i] = wiggly_2d(x1, x2) + 0.3 * rng.normal();
        }
        return ds;
    }
    return ingest_csv(cfg.data, cfg.dim, cfg.split_fraction, cfg.seed, cfg.log_y);
}

KernelSpec ExperimentConfig::spec_for(const Dataset& ds) const {
    KernelSpec spec;
    spec.family = parse_family(kernel);
    spec.dim = dim;
    spec.anisotropic = anisotropic;
    spec.nu = nu;
    if (!bounding_box.empty()) {
        spec.bounding_box = bounding_box;
    } else {
        spec.bounding_box.resize(dim);
        for (int k = 0; k < dim; ++k) {
            double hi = ds.X.col(k).maxCoeff();
            double lo = ds.X.col(k).minCoeff();
            if (spec.family == KernelFamily::reciprocal_semigroup)
                spec.bounding_box[k] = std::max(hi, 1e-12);
            else
                spec.bounding_box[k] = 2.0 * std::max(std::abs(hi), std::abs(lo));
        }
    }
    spec.validate();
    return spec;
}

HyperDomain ExperimentConfig::domain() const {
    HyperDomain dom;
    const int nt = anisotropic ? dim : 1;
    dom.theta0_lo = Eigen::Map<const Vector>(theta0_lo.data(), nt);
    dom.theta0_hi = Eigen::Map<const Vector>(theta0_hi.data(), nt);
    dom.sf2_lo = sf2_lo;
    dom.sf2_hi = sf2_hi;
    dom.sn2_lo = sn2_lo;
    dom.sn2_hi = sn2_hi;
    return dom;
}

namespace {

double mse(const Vector& pred, const Vector& truth) {
    return (pred - truth).squaredNorm() / static_cast<double>(truth.size());
}

SweepCell run_glf_cell(const ExperimentConfig& cfg, const Dataset& ds, const KernelSpec& spec,
                       const HyperDomain& dom, const std::vector<double>& U,
                       const std::vector<int>& s_dims, const std::string& label) {
    SweepCell cell;
    cell.backend = "glf";
    cell.s_per_dim = s_dims[0];
    cell.s_total = 1;
    for (int sk : s_dims) cell.s_total *= sk;

    double y_shift = cfg.center_y ? ds.y.mean() : 0.0;
    Vector y = ds.y.array() - y_shift;

    double t0 = now_seconds();
    auto grid = std::make_shared<QuadratureGrid>(
        tensor_grid(U, s_dims,
                    spec.feature_kind() == FeatureKind::exponential_decay
                        ? DomainKind::positive_box
                        : DomainKind::symmetric_box));
    FeatureModel fm = build_feature_matrix(ds.X, y, grid, spec);
    cell.build_seconds = now_seconds() - t0;

    OptOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    t0 = now_seconds();
    LearnResult lr = learn_glf(fm, dom, y, opts);
    cell.learn_seconds = now_seconds() - t0;
    cell.theta = lr.theta;
    cell.iterations = static_cast<int>(lr.trace.iterates.size()) - 1;
    cell.termination = lr.trace.termination;

    GprModel model = train(fm, lr.theta, y);
    Vector pred = predict(model, ds.Xt).array() + y_shift;
    cell.mse = mse(pred, ds.yt);
    (void)label;
    return cell;
}

SweepCell run_rff_cell(const ExperimentConfig& cfg, const Dataset& ds, const KernelSpec& spec,
                       const HyperDomain& dom, std::int64_t s_total) {
    SweepCell cell;
    cell.backend = "rff";
    cell.s_per_dim = static_cast<int>(s_total);
    cell.s_total = s_total;

    double y_shift = cfg.center_y ? ds.y.mean() : 0.0;
    Vector y = ds.y.array() - y_shift;

    double t0 = now_seconds();
    RffModel rff = rff_build(spec, static_cast<int>(s_total), cfg.rff_seed);
    cell.build_seconds = now_seconds() - t0;

    OptOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    t0 = now_seconds();
    LearnResult lr = learn_rff(rff, ds.X, y, dom, opts);
    cell.learn_seconds = now_seconds() - t0;
    cell.theta = lr.theta;
    cell.iterations = static_cast<int>(lr.trace.iterates.size()) - 1;
    cell.termination = lr.trace.termination;

    // train and predict with the learned hyperparameters (real encoding)
    Vector L = rff_lengthscales(spec, lr.theta.theta0);
    const int s = rff.s, c = 2 * s;
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    auto real_features = [&](const Matrix& P) {
        Matrix phase = P * L.cwiseInverse().asDiagonal() * rff.omega;
        Matrix Z(P.rows(), c);
        for (Eigen::Index i = 0; i < P.rows(); ++i)
            for (int j = 0; j < s; ++j) {
                Z(i, 2 * j) = std::cos(phase(i, j)) * scale;
                Z(i, 2 * j + 1) = std::sin(phase(i, j)) * scale;
            }
        return Z;
    };
    Matrix Z = real_features(ds.X);
    Matrix A = lr.theta.sf2 * (Z.transpose() * Z);
    A.diagonal().array() += lr.theta.sn2;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw conditioning_error("rff training: inner system not positive definite");
    Vector t = llt.solve(Z.transpose() * y);
    Vector alpha = (y - lr.theta.sf2 * (Z * t)) / lr.theta.sn2;
    Vector za = Z.transpose() * alpha;
    Vector pred = (lr.theta.sf2 * (real_features(ds.Xt) * za)).array() + y_shift;
    cell.mse = mse(pred, ds.yt);
    return cell;
}

SweepCell run_exact_cell(const ExperimentConfig& cfg, const Dataset& ds, const KernelSpec& spec,
                         const HyperDomain& dom) {
    if (ds.n() > 5000)
        throw validation_error("exact backend refused for n > 5000");
    SweepCell cell;
    cell.backend = "exact";

    double y_shift = cfg.center_y ? ds.y.mean() : 0.0;
    Vector y = ds.y.array() - y_shift;

    OptOptions opts;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    double t0 = now_seconds();
    LearnResult lr = learn_exact(spec, ds.X, y, dom, opts);
    cell.learn_seconds = now_seconds() - t0;
    cell.theta = lr.theta;
    cell.iterations = static_cast<int>(lr.trace.iterates.size()) - 1;
    cell.termination = lr.trace.termination;

    ExactGpr eg = exact_gpr(spec, lr.theta, ds.X, y, ds.Xt);
    Vector pred = eg.predictions.array() + y_shift;
    cell.mse = mse(pred, ds.yt);
    return cell;
}

}  // namespace

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const Dataset& ds,
                                 const KernelSpec& spec, const BoundPlan& plan) {
    if (!ds.has_test()) throw validation_error("run_sweep: dataset has no test split");
    HyperDomain dom = cfg.domain();
    std::vector<SweepCell> cells;
    for (const std::string& bname : cfg.backends) {
        Backend b = parse_backend(bname);
        if (b == Backend::exact) {
            cells.push_back(run_exact_cell(cfg, ds, spec, dom));
            continue;
        }
        for (const std::string& sval : cfg.s_sweep) {
            std::vector<int> s_dims;
            if (sval == "planned") {
                if (plan.exceeds_cap)
                    throw capacity_error(
                        "planned s exceeds the configured cap; pass explicit s values");
                s_dims = plan.s;
            } else {
                s_dims.assign(spec.dim, std::stoi(sval));
            }
            if (b == Backend::glf) {
                cells.push_back(run_glf_cell(cfg, ds, spec, dom, plan.U, s_dims, sval));
            } else {
                std::int64_t st = 1;
                for (int sk : s_dims) st *= sk;
                cells.push_back(run_rff_cell(cfg, ds, spec, dom, st));
            }
        }
    }
    return cells;
}

void write_report_csv(const std::vector<SweepCell>& cells, std::ostream& os) {
    os.precision(17);
    os << "backend,s_per_dim,s_total,mse";
    if (!cells.empty()) {
        for (Eigen::Index i = 0; i < cells[0].theta.theta0.size(); ++i) os << ",theta0_" << i;
        os << ",sf2,sn2,iterations,termination";
    }
    os << "\n";
    for (const SweepCell& c : cells) {
        os << c.backend << ',' << c.s_per_dim << ',' << c.s_total << ',' << c.mse;
        for (Eigen::Index i = 0; i < c.theta.theta0.size(); ++i) os << ',' << c.theta.theta0[i];
        os << ',' << c.theta.sf2 << ',' << c.theta.sn2 << ',' << c.iterations << ','
           << c.termination << "\n";
    }
}

void write_timings_csv(const std::vector<SweepCell>& cells, std::ostream& os) {
    os.precision(6);
    os << "backend,s_per_dim,s_total,build_seconds,learn_seconds\n";
    for (const SweepCell& c : cells)
        os << c.backend << ',' << c.s_per_dim << ',' << c.s_total << ',' << c.build_seconds << ','
           << c.learn_seconds << "\n";
}

void run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Dataset ds = load_experiment_data(cfg);
    KernelSpec spec = cfg.spec_for(ds);
    HyperDomain dom = cfg.domain();
    BoundPlan bp = plan(spec, dom, ds.n(), cfg.s_cap);

    std::vector<SweepCell> cells = run_sweep(cfg, ds, spec, bp);

    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream os(cfg.out_dir + "/bounds.txt");
        os << bp.report(spec);
    }
    {
        std::ofstream os(cfg.out_dir + "/report.csv");
        write_report_csv(cells, os);
    }
    {
        std::ofstream os(cfg.out_dir + "/timings.csv");
        write_timings_csv(cells, os);
    }
}

}  // namespace glf
