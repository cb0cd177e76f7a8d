#include "mmsur/dist.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "mmsur/errors.hpp"

namespace mmsur::dist {

using nd::Array;
using nd::Tape;

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kLog2 = 0.6931471805599453094;

void check_spd_support(const Array& x, const char* what) {
  try {
    nd::cholesky_value(x);
  } catch (const Error&) {
    throw SupportError(std::string(what) + ": value outside support (not SPD)");
  }
}
}  // namespace

double mlgamma(int k, double x) {
  if (x <= 0.5 * (k - 1))
    throw SupportError("mlgamma: x must exceed (k-1)/2");
  double s = 0.25 * k * (k - 1) * kLogPi;
  for (int j = 1; j <= k; ++j) s += std::lgamma(x + 0.5 * (1 - j));
  return s;
}

Var normal_logpdf(Var x, Var mean, Var scale) {
  for (std::size_t i = 0; i < scale.value().size(); ++i)
    if (!(scale.value()[i] > 0.0))
      throw SupportError("normal_logpdf: scale must be positive");
  // z carries the broadcast output shape, so log(scale) re-broadcasts
  // against it and every element picks up its own -log(sigma) term
  Var z = div(sub(x, mean), scale);
  Var per = sub(mul_const(square(z), -0.5), nd::log(scale)) + (-0.5 * kLog2Pi);
  return nd::sum(per);
}

Var std_normal_logpdf(Var x) {
  return nd::sum(mul_const(square(x), -0.5) + (-0.5 * kLog2Pi));
}

Var gamma_logpdf(Var x, double shape, double rate) {
  const Array& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i)
    if (!(xv[i] > 0.0)) throw SupportError("gamma_logpdf: x must be positive");
  const double norm = shape * std::log(rate) - std::lgamma(shape);
  Var per = add_const(
      sub(mul_const(nd::log(x), shape - 1.0), mul_const(x, rate)), norm);
  return nd::sum(per);
}

Var wishart_logpdf(Var x, double dof, Var scale) {
  const std::size_t k = x.value().rows();
  if (!(dof > static_cast<double>(k) - 1.0))
    throw SupportError("wishart_logpdf: dof must exceed k-1");
  check_spd_support(x.value(), "wishart_logpdf");
  // tr(V^{-1} X)
  Var trace = nd::sum(nd::diag_part(nd::solve(scale, x)));
  Var out = mul_const(nd::logdet(x), 0.5 * (dof - k - 1.0));
  out = sub(out, mul_const(trace, 0.5));
  out = sub(out, mul_const(nd::logdet(scale), 0.5 * dof));
  const double c = -0.5 * dof * k * kLog2 - mlgamma(static_cast<int>(k), 0.5 * dof);
  return add_const(out, c);
}

Var matrix_normal_logpdf(Var x, Var mean, Var row_cov, Var col_cov) {
  const std::size_t n = x.value().rows(), p = x.value().cols();
  Var e = sub(x, mean);
  Var a = nd::solve(row_cov, e);                       // U^{-1} E
  Var c = nd::matmul(nd::transpose(e), a);             // E^T U^{-1} E
  Var trace = nd::sum(nd::diag_part(nd::solve(col_cov, c)));
  Var out = mul_const(trace, -0.5);
  out = sub(out, mul_const(nd::logdet(row_cov), 0.5 * p));
  out = sub(out, mul_const(nd::logdet(col_cov), 0.5 * n));
  return add_const(out, -0.5 * n * p * kLog2Pi);
}

Var mvt_logpdf(Var x, double dof, Var loc, Var shape_matrix) {
  if (!(dof > 0.0)) throw SupportError("mvt_logpdf: dof must be positive");
  const std::size_t d = x.value().size();
  Var e = nd::reshape(sub(x, loc), {d, 1});
  Var q = nd::sum(mul(e, nd::solve(shape_matrix, e)));
  Var out = mul_const(nd::log(add_const(mul_const(q, 1.0 / dof), 1.0)),
                      -0.5 * (dof + d));
  out = sub(out, mul_const(nd::logdet(shape_matrix), 0.5));
  const double c = std::lgamma(0.5 * (dof + d)) - std::lgamma(0.5 * dof) -
                   0.5 * d * (std::log(dof) + kLogPi);
  return add_const(out, c);
}

Var gaussian_rows_logpdf_prec(Var residuals, Var precision) {
  const std::size_t n = residuals.value().rows(), k = residuals.value().cols();
  Var ss = nd::matmul(nd::transpose(residuals), residuals);  // k x k
  Var trace = nd::sum(mul(precision, ss));
  Var out = mul_const(nd::logdet(precision), 0.5 * n);
  out = sub(out, mul_const(trace, 0.5));
  return add_const(out, -0.5 * n * k * kLog2Pi);
}

// ---- samplers ---------------------------------------------------------------

Var normal_sample(Var mean, Var scale, RandomStream& rng) {
  if (!mean.value().same_shape(scale.value()))
    throw DimensionError("normal_sample: mean/scale shape mismatch");
  Array eps = Array::zeros(mean.value().shape());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  Var e = mean.tape->constant(std::move(eps));
  return add(mean, mul(scale, e));
}

Var gamma_sample(Var shape, Var rate, RandomStream& rng) {
  const double a = shape.value().as_scalar();
  const double b = rate.value().as_scalar();
  if (!(a > 0.0) || !(b > 0.0))
    throw SupportError("gamma_sample: parameters must be positive");
  Tape& t = *shape.tape;
  const double x = rng.gamma(a, b);
  // implicit reparameterization: differentiate the CDF F(x; a, b) = P(a, bx)
  const double z = b * x;
  const double pdf_z = boost::math::gamma_p_derivative(a, z);  // dP/dz
  const double h = 1e-6 * std::max(1.0, a);
  const double dF_da =
      (boost::math::gamma_p(a + h, z) - boost::math::gamma_p(a - h, z)) /
      (2.0 * h);
  const double dx_da = pdf_z > 0.0 ? -dF_da / (b * pdf_z) : 0.0;
  const double dx_db = -x / b;
  return t.emit(Array::scalar(x), shape.requires_grad() || rate.requires_grad(),
                {{shape.id,
                  [dx_da](const Array& g) { return Array::scalar(g[0] * dx_da); }},
                 {rate.id, [dx_db](const Array& g) {
                    return Array::scalar(g[0] * dx_db);
                  }}});
}

namespace {
Var bartlett(Var dof_var, double dof, bool dof_is_var, Var scale,
             RandomStream& rng) {
  const std::size_t k = scale.value().rows();
  if (!(dof > static_cast<double>(k) - 1.0))
    throw SupportError("wishart_sample: dof must exceed k-1");
  Tape& t = *scale.tape;
  Array lower = Array::zeros({k, k});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < i; ++j) lower(i, j) = rng.normal();
  Var chol_v = nd::cholesky(scale);
  Var a;
  if (dof_is_var) {
    // chi-square diagonal entries through the differentiable gamma sampler
    std::vector<Var> diag;
    Var half = t.constant(Array::scalar(0.5));
    for (std::size_t i = 0; i < k; ++i) {
      Var sh = mul_const(add_const(dof_var, -static_cast<double>(i)), 0.5);
      diag.push_back(nd::sqrt(gamma_sample(sh, half, rng)));
    }
    // assemble the diagonal vector
    Var dvec = nd::reshape(diag[0], {1});
    for (std::size_t i = 1; i < k; ++i)
      dvec = nd::reshape(nd::concat_cols(nd::reshape(dvec, {1, i}),
                                         nd::reshape(diag[i], {1, 1})),
                         {i + 1});
    a = nd::set_diag(t.constant(std::move(lower)), dvec);
  } else {
    for (std::size_t i = 0; i < k; ++i)
      lower(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    a = t.constant(std::move(lower));
  }
  Var la = nd::matmul(chol_v, a);
  return nd::matmul(la, nd::transpose(la));
}
}  // namespace

Var wishart_sample(double dof, Var scale, RandomStream& rng) {
  return bartlett(Var{}, dof, false, scale, rng);
}

Var wishart_sample(Var dof, Var scale, RandomStream& rng) {
  return bartlett(dof, dof.value().as_scalar(), true, scale, rng);
}

Var matrix_normal_sample(Var mean, Var row_cov, Var col_cov, RandomStream& rng) {
  const std::size_t n = mean.value().rows(), p = mean.value().cols();
  Array eps = Array::zeros({n, p});
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  Tape& t = *mean.tape;
  Var e = t.constant(std::move(eps));
  Var lu = nd::cholesky(row_cov);
  Var lv = nd::cholesky(col_cov);
  return add(mean, nd::matmul(nd::matmul(lu, e), nd::transpose(lv)));
}

Var mvt_sample(double dof, Var loc, Var shape_matrix, RandomStream& rng) {
  if (!(dof > 0.0)) throw SupportError("mvt_sample: dof must be positive");
  const std::size_t d = loc.value().size();
  Tape& t = *loc.tape;
  Array z = Array::zeros({d, 1});
  for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
  Var zc = t.constant(std::move(z));
  Var g = gamma_sample(t.constant(Array::scalar(0.5 * dof)),
                       t.constant(Array::scalar(0.5)), rng);
  Var factor = nd::sqrt(div(t.constant(Array::scalar(dof)), g));
  Var lz = nd::reshape(nd::matmul(nd::cholesky(shape_matrix), zc), {d});
  return add(loc, mul(lz, factor));
}

}  // namespace mmsur::dist
