#include "glf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "glf/errors.hpp"
#include "glf/rng.hpp"

namespace glf {

double wiggly_1d(double x) { return std::sin(2.0 * x) + std::sin(6.0 * std::exp(x)); }

Dataset synth_1d(std::int64_t n, std::uint64_t seed) {
    if (n < 2) throw validation_error("synth_1d: n must be >= 2");
    Dataset ds;
    ds.X.resize(n, 1);
    ds.y.resize(n);
    Rng rng(seed);
    for (std::int64_t i = 0; i < n; ++i) {
        double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        ds.X(i, 0) = x;
        ds.y[i] = wiggly_1d(x) + 0.5 * rng.normal();
    }
    std::ostringstream tag;
    tag << "synth1d(n=" << n << ",seed=" << seed << ")";
    ds.provenance = tag.str();
    return ds;
}

double wiggly_2d(double x1, double x2) {
    return (std::sin(x1) + std::sin(10.0 * std::exp(x1))) *
           (std::sin(x2) + std::sin(10.0 * std::exp(x2)));
}

Dataset synth_2d(std::int64_t n, std::uint64_t seed) {
    std::int64_t side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (side < 2 || side * side != n)
        throw validation_error("synth_2d: n must be a perfect square >= 4");
    Dataset ds;
    ds.X.resize(n, 2);
    ds.y.resize(n);
    Rng rng(seed);
    std::int64_t row = 0;
    for (std::int64_t i = 0; i < side; ++i) {
        double x1 = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(side - 1);
        for (std::int64_t j = 0; j < side; ++j, ++row) {
            double x2 = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(side - 1);
            ds.X(row, 0) = x1;
            ds.X(row, 1) = x2;
            ds.y[row] = wiggly_2d(x1, x2) + 0.3 * rng.normal();
        }
    }
    std::ostringstream tag;
    tag << "synth2d(n=" << n << ",seed=" << seed << ")";
    ds.provenance = tag.str();
    return ds;
}

Dataset ingest_csv(const std::string& path, int d, double split_fraction, std::uint64_t seed,
                   bool log_y) {
    if (d < 1) throw validation_error("ingest_csv: d must be >= 1");
    if (!(split_fraction >= 0.0 && split_fraction < 1.0))
        throw validation_error("ingest_csv: split_fraction must be in [0,1)");
    std::ifstream is(path);
    if (!is) throw validation_error("ingest_csv: cannot open " + path);

    std::string line;
    if (!std::getline(is, line)) throw validation_error("ingest_csv: empty file " + path);
    {
        std::ostringstream expect;
        for (int k = 0; k < d; ++k) expect << 'x' << (k + 1) << ',';
        expect << 'y';
        // tolerate trailing carriage returns from other platforms
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line != expect.str())
            throw validation_error("ingest_csv: expected header '" + expect.str() + "', got '" +
                                   line + "'");
    }

    std::vector<std::vector<double>> rows;
    std::int64_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                vals.push_back(v);
            } catch (const std::exception&) {
                throw validation_error("ingest_csv: bad value '" + cell + "' at line " +
                                       std::to_string(lineno));
            }
        }
        if (static_cast<int>(vals.size()) != d + 1)
            throw validation_error("ingest_csv: expected " + std::to_string(d + 1) +
                                   " columns at line " + std::to_string(lineno));
        for (double v : vals)
            if (!std::isfinite(v))
                throw validation_error("ingest_csv: non-finite value at line " +
                                       std::to_string(lineno));
        rows.push_back(std::move(vals));
    }
    const std::int64_t n = static_cast<std::int64_t>(rows.size());
    if (n < 1) throw validation_error("ingest_csv: no data rows in " + path);

    std::vector<std::int64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (split_fraction > 0.0) {
        Rng rng(seed);
        for (std::int64_t i = n - 1; i > 0; --i) {
            std::int64_t j = static_cast<std::int64_t>(rng.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }
    }
    const std::int64_t n_train =
        static_cast<std::int64_t>(std::floor((1.0 - split_fraction) * static_cast<double>(n)));
    const std::int64_t n_test = n - n_train;
    if (n_train < 1) throw validation_error("ingest_csv: split leaves no training rows");

    Dataset ds;
    ds.X.resize(n_train, d);
    ds.y.resize(n_train);
    ds.Xt.resize(n_test, d);
    ds.yt.resize(n_test);
    for (std::int64_t i = 0; i < n; ++i) {
        const std::vector<double>& r = rows[order[i]];
        double yv = r[d];
        if (log_y) {
            if (!(yv > 0.0))
                throw validation_error("ingest_csv: log transform needs positive y values");
            yv = std::log(yv);
        }
        if (i < n_train) {
            for (int k = 0; k < d; ++k) ds.X(i, k) = r[k];
            ds.y[i] = yv;
        } else {
            for (int k = 0; k < d; ++k) ds.Xt(i - n_train, k) = r[k];
            ds.yt[i - n_train] = yv;
        }
    }
    ds.provenance = path;
    return ds;
}

void write_csv(const std::string& path, const Matrix& X, const Vector& y) {
    if (X.rows() != y.size()) throw validation_error("write_csv: size mismatch");
    std::ofstream os(path);
    if (!os) throw validation_error("write_csv: cannot open " + path);
    os.precision(17);
    for (int k = 0; k < X.cols(); ++k) os << 'x' << (k + 1) << ',';
    os << "y\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (int k = 0; k < X.cols(); ++k) os << X(i, k) << ',';
        os << y[i] << '\n';
    }
}

}  // namespace glf
