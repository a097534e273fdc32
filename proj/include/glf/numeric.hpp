#ifndef GLF_NUMERIC_HPP
#define GLF_NUMERIC_HPP

#include <functional>

namespace glf {

struct QuadratureControl {
    double rel_tol = 1e-12;
    double abs_tol = 1e-300;
    int max_depth = 60;
};

// Adaptive Gauss-Kronrod (G7,K15) integration of f over [a,b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureControl& ctl = {});

// Integral of f over [a, +inf), via the rational map t -> a + t/(1-t).
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        const QuadratureControl& ctl = {});

// Modified Bessel function of the second kind, real order nu >= 0, x > 0.
// Half-integer orders use the closed forms; otherwise Temme's series for
// small x and a Cody-style continued fraction for large x, with upward
// recurrence in the order.
double bessel_k(double nu, double x);

}  // namespace glf

#endif
