#pragma once

#include "mmsur/ndiff.hpp"
#include "mmsur/rng.hpp"

namespace mmsur::dist {

using nd::Var;

// log multivariate gamma function, x > (k-1)/2
double mlgamma(int k, double x);

// ---- log densities ---------------------------------------------------------
// All return a rank-0 Var (densities summed over elements where applicable)
// and include every normalizing constant.

// independent Gaussians, elementwise with the usual broadcasting
Var normal_logpdf(Var x, Var mean, Var scale);
Var std_normal_logpdf(Var x);

// shape-rate Gamma, elementwise over x > 0
Var gamma_logpdf(Var x, double shape, double rate);

// Wishart over SPD k x k matrices
Var wishart_logpdf(Var x, double dof, Var scale);

// MatrixNormal over n x p matrices: row covariance U (n x n), column
// covariance V (p x p). Equals the Gaussian logpdf of vec(X) with Kronecker
// covariance V (x) U.
Var matrix_normal_logpdf(Var x, Var mean, Var row_cov, Var col_cov);

// multivariate Student-t over rank-1 x
Var mvt_logpdf(Var x, double dof, Var loc, Var shape_matrix);

// rows of E iid N(0, Sigma) expressed through the precision Omega = Sigma^{-1}
Var gaussian_rows_logpdf_prec(Var residuals, Var precision);

// ---- samplers ---------------------------------------------------------------
// Pathwise-differentiable where the distribution admits it; Gamma (and the
// samplers built on it) get d(sample)/d(params) via implicit
// reparameterization, so gradients reach backward() in every case.

Var normal_sample(Var mean, Var scale, RandomStream& rng);

// rank-0 shape and rate
Var gamma_sample(Var shape, Var rate, RandomStream& rng);

// Bartlett decomposition; dof may be a constant or a rank-0 Var
Var wishart_sample(double dof, Var scale, RandomStream& rng);
Var wishart_sample(Var dof, Var scale, RandomStream& rng);

Var matrix_normal_sample(Var mean, Var row_cov, Var col_cov, RandomStream& rng);

// location + L z sqrt(dof/g) mixture construction
Var mvt_sample(double dof, Var loc, Var shape_matrix, RandomStream& rng);

}  // namespace mmsur::dist
