#pragma once

#include <Eigen/Dense>
#include <string>

#include "rduniband/types.hpp"

namespace rdu {

// Second-order compact kernels on [-1, 1]. On the half line every one of
// these is a polynomial in u, so all moment functionals below have exact
// closed forms.
enum class Kernel { uniform, triangular, epanechnikov, biweight, triweight };

Kernel kernel_from_string(const std::string& name);
const char* to_string(Kernel k);

// K(u); zero outside [-1, 1]. The uniform kernel is 1/2 on the closed support.
double eval_kernel(Kernel k, double u);

// One-sided monomial moments over [0,1] (plus) or [-1,0] (minus):
//   kernel_moment:    int u^j K(u) du
//   kernel_sq_moment: int u^j K(u)^2 du
double kernel_moment(Kernel k, int j, Side side);
double kernel_sq_moment(Kernel k, int j, Side side);

// Gamma_p: (p+1)x(p+1), (i,j) entry = int u^{i+j} K(u) du, one-sided.
Eigen::MatrixXd gamma_matrix(Kernel k, int p, Side side);

// Lambda_{p,q}: (p+1)-vector, entry j = int u^{q+j} K(u) du, one-sided.
Eigen::VectorXd lambda_vector(Kernel k, int p, int q, Side side);

// Psi_p for a pair of bandwidth ratios (c_k, c_l) against the baseline:
//   (j,m) entry = int (u/c_k)^j (u/c_l)^m K(u/c_k) K(u/c_l) du
// integrated over the one-sided overlap of the two windows. With
// c_k = c_l = 1 this is the usual Psi_p with entries int u^{j+m} K(u)^2 du.
Eigen::MatrixXd psi_matrix(Kernel k, int p, Side side, double c_k = 1.0,
                           double c_l = 1.0);

}  // namespace rdu
