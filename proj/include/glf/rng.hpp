#ifndef GLF_RNG_HPP
#define GLF_RNG_HPP

#include <cmath>
#include <cstdint>

namespace glf {

// Deterministic, platform-independent random stream. std::mt19937 is seeded
// identically everywhere, but the std distribution objects are not required
// to produce the same sequences across standard libraries, so we generate
// variates ourselves from raw 64-bit draws (splitmix64 core).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1], safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one spare kept per generator.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Laplace(0,1) by CDF inversion.
    double laplace() {
        double u = uniform() - 0.5;
        double a = 1.0 - 2.0 * std::abs(u);
        if (a <= 0.0) a = 0x1.0p-53;
        return (u >= 0.0 ? -1.0 : 1.0) * std::log(a);
    }

    // Standard Cauchy.
    double cauchy() {
        double u = uniform();
        return std::tan(3.1415926535897932384626433832795 * (u - 0.5));
    }

    // Gamma(shape,1), Marsaglia-Tsang, boosted for shape < 1.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform_pos();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Student-t with dof degrees of freedom.
    double student_t(double dof) {
        double z = normal();
        double g = gamma(0.5 * dof);  // chi^2_dof = 2*Gamma(dof/2)
        return z * std::sqrt(0.5 * dof / g);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace glf

#endif
