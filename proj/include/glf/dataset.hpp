#ifndef GLF_DATASET_HPP
#define GLF_DATASET_HPP

#include <cstdint>
#include <string>

#include "glf/linalg.hpp"

namespace glf {

struct Dataset {
    Matrix X;   // n x d
    Vector y;   // n
    Matrix Xt;  // optional held-out split
    Vector yt;
    std::string provenance;

    std::int64_t n() const { return X.rows(); }
    int dim() const { return static_cast<int>(X.cols()); }
    bool has_test() const { return Xt.rows() > 0; }
};

// f1*(x) = sin(2x) + sin(6 e^x), sampled equidistantly on [-1,1] with
// N(0, 0.5^2) noise. Deterministic per seed.
double wiggly_1d(double x);
Dataset synth_1d(std::int64_t n, std::uint64_t seed);

// f2*(x1,x2) = (sin(x1) + sin(10 e^{x1}))(sin(x2) + sin(10 e^{x2})) on a
// uniform grid over [-1,1]^2 (n must be a perfect square), noise N(0, 0.3^2).
double wiggly_2d(double x1, double x2);
Dataset synth_2d(std::int64_t n, std::uint64_t seed);

// CSV with header x1,...,xd,y. Deterministic shuffle split; the train size is
// floor((1 - split_fraction) n) and the remainder is the test set. Optional
// log transform of y. Malformed rows are reported with their line number.
Dataset ingest_csv(const std::string& path, int d, double split_fraction, std::uint64_t seed,
                   bool log_y = false);

void write_csv(const std::string& path, const Matrix& X, const Vector& y);

}  // namespace glf

#endif
