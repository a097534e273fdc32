#ifndef GLF_LINALG_HPP
#define GLF_LINALG_HPP

#include <Eigen/Dense>

namespace glf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;

}  // namespace glf

#endif
