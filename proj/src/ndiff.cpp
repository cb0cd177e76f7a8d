#include "mmsur/ndiff.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <utility>

namespace mmsur::nd {

const Array& Var::value() const { return tape->value(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }

Var Tape::constant(Array value) {
  nodes_.push_back(Node{std::move(value), false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Array value) {
  nodes_.push_back(Node{std::move(value), true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::emit(Array value, bool requires_grad, std::vector<Edge> edges) {
  if (!requires_grad) edges.clear();
  nodes_.push_back(Node{std::move(value), requires_grad, std::move(edges)});
  return Var{this, nodes_.size() - 1};
}

bool Gradients::has(Var v) const {
  return v.id < g_.size() && g_[v.id].has_value();
}

Array Gradients::wrt(Var v) const {
  if (has(v)) return *g_[v.id];
  return Array::zeros(v.value().shape());
}

Gradients backward(Var loss) {
  if (loss.value().size() != 1)
    throw ContractError("backward requires a scalar loss");
  Tape& tape = *loss.tape;
  Gradients out;
  out.g_.resize(tape.nodes_.size());
  out.g_[loss.id] = Array::filled(loss.value().shape(), 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!out.g_[i].has_value()) continue;
    const auto& node = tape.nodes_[i];
    if (!node.requires_grad) continue;
    const Array& g = *out.g_[i];
    for (const auto& edge : node.edges) {
      if (!tape.nodes_[edge.parent].requires_grad) continue;
      Array contrib = edge.vjp(g);
      auto& slot = out.g_[edge.parent];
      if (!slot.has_value()) {
        slot = std::move(contrib);
      } else {
        slot->flat() += contrib.flat();
      }
    }
  }
  return out;
}

// ---- broadcasting helpers --------------------------------------------------

namespace {

enum class Bcast { Same, AScalar, BScalar, ARow, BRow };

Bcast classify(const Array& a, const Array& b) {
  if (a.same_shape(b)) return Bcast::Same;
  if (b.size() == 1) return Bcast::BScalar;
  if (a.size() == 1) return Bcast::AScalar;
  auto is_row_of = [](const Array& v, const Array& m) {
    if (m.rank() != 2) return false;
    if (v.rank() == 1 && v.dim() == m.cols()) return true;
    if (v.rank() == 2 && v.rows() == 1 && v.cols() == m.cols()) return true;
    return false;
  };
  if (is_row_of(b, a)) return Bcast::BRow;
  if (is_row_of(a, b)) return Bcast::ARow;
  throw DimensionError("shapes not broadcastable");
}

// Map flat output index to operand index under the given broadcast role.
struct Indexer {
  bool scalar = false;
  std::size_t row_mod = 0;  // nonzero: operand is a row vector of this length
  std::size_t operator()(std::size_t i) const {
    if (scalar) return 0;
    if (row_mod) return i % row_mod;
    return i;
  }
};

struct BinaryPlan {
  Array out_like;  // zeros of the output shape
  Indexer ia, ib;
};

BinaryPlan plan_binary(const Array& a, const Array& b) {
  BinaryPlan p;
  switch (classify(a, b)) {
    case Bcast::Same:
      p.out_like = Array::zeros(a.shape());
      break;
    case Bcast::BScalar:
      p.out_like = Array::zeros(a.shape());
      p.ib.scalar = true;
      break;
    case Bcast::AScalar:
      p.out_like = Array::zeros(b.shape());
      p.ia.scalar = true;
      break;
    case Bcast::BRow:
      p.out_like = Array::zeros(a.shape());
      p.ib.row_mod = a.cols();
      break;
    case Bcast::ARow:
      p.out_like = Array::zeros(b.shape());
      p.ia.row_mod = b.cols();
      break;
  }
  return p;
}

// Sum `g` (of output shape) down to the shape of `like`.
Array reduce_to(const Array& g, const Array& like) {
  if (g.same_shape(like)) return g;
  if (like.size() == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i];
    return Array::filled(like.shape(), s);
  }
  // row-vector case: sum over rows
  Array out = Array::zeros(like.shape());
  const std::size_t k = out.size();
  for (std::size_t i = 0; i < g.size(); ++i) out[i % k] += g[i];
  return out;
}

template <typename F>
Var elementwise_binary(Var a, Var b, F f, const Array* da, const Array* db) {
  // da/db: partials of output w.r.t. each operand, broadcast to output shape;
  // nullptr means the partial is identically +1.
  Tape& t = *a.tape;
  const Array av = a.value(), bv = b.value();
  bool rg = a.requires_grad() || b.requires_grad();
  std::vector<Tape::Edge> edges;
  if (rg) {
    if (da) {
      Array d = *da;
      edges.push_back({a.id, [d, av](const Array& g) {
                         Array full = d;
                         for (std::size_t i = 0; i < full.size(); ++i) full[i] *= g[i];
                         return reduce_to(full, av);
                       }});
    } else {
      edges.push_back({a.id, [av](const Array& g) { return reduce_to(g, av); }});
    }
    if (db) {
      Array d = *db;
      edges.push_back({b.id, [d, bv](const Array& g) {
                         Array full = d;
                         for (std::size_t i = 0; i < full.size(); ++i) full[i] *= g[i];
                         return reduce_to(full, bv);
                       }});
    } else {
      edges.push_back({b.id, [bv](const Array& g) { return reduce_to(g, bv); }});
    }
  }
  return t.emit(std::move(f()), rg, std::move(edges));
}

}  // namespace

Var add(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  BinaryPlan p = plan_binary(av, bv);
  auto f = [&] {
    Array out = p.out_like;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[p.ia(i)] + bv[p.ib(i)];
    return out;
  };
  return elementwise_binary(a, b, f, nullptr, nullptr);
}

Var sub(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  BinaryPlan p = plan_binary(av, bv);
  Array db = p.out_like;
  for (std::size_t i = 0; i < db.size(); ++i) db[i] = -1.0;
  auto f = [&] {
    Array out = p.out_like;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[p.ia(i)] - bv[p.ib(i)];
    return out;
  };
  return elementwise_binary(a, b, f, nullptr, &db);
}

Var mul(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  BinaryPlan p = plan_binary(av, bv);
  Array da = p.out_like, db = p.out_like;
  for (std::size_t i = 0; i < da.size(); ++i) {
    da[i] = bv[p.ib(i)];
    db[i] = av[p.ia(i)];
  }
  auto f = [&] {
    Array out = p.out_like;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[p.ia(i)] * bv[p.ib(i)];
    return out;
  };
  return elementwise_binary(a, b, f, &da, &db);
}

Var div(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  BinaryPlan p = plan_binary(av, bv);
  Array da = p.out_like, db = p.out_like;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double x = av[p.ia(i)], y = bv[p.ib(i)];
    da[i] = 1.0 / y;
    db[i] = -x / (y * y);
  }
  auto f = [&] {
    Array out = p.out_like;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[p.ia(i)] / bv[p.ib(i)];
    return out;
  };
  return elementwise_binary(a, b, f, &da, &db);
}

Var neg(Var a) {
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i];
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [](const Array& g) {
                          Array h = g;
                          for (std::size_t i = 0; i < h.size(); ++i) h[i] = -h[i];
                          return h;
                        }}});
}

Var add_const(Var a, double c) {
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c;
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [](const Array& g) { return g; }}});
}

Var mul_const(Var a, double c) {
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [c](const Array& g) {
                          Array h = g;
                          for (std::size_t i = 0; i < h.size(); ++i) h[i] *= c;
                          return h;
                        }}});
}

Var matmul(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    throw DimensionError("matmul: inner dimensions disagree");
  Array out = Array::zeros({av.rows(), bv.cols()});
  out.mat() = av.mat() * bv.mat();
  return a.tape->emit(
      std::move(out), a.requires_grad() || b.requires_grad(),
      {{a.id,
        [bv](const Array& g) {
          Array h = Array::zeros({g.rows(), bv.rows()});
          h.mat() = g.mat() * bv.mat().transpose();
          return h;
        }},
       {b.id, [av](const Array& g) {
          Array h = Array::zeros({av.cols(), g.cols()});
          h.mat() = av.mat().transpose() * g.mat();
          return h;
        }}});
}

Var transpose(Var a) {
  return a.tape->emit(a.value().transposed(), a.requires_grad(),
                      {{a.id, [](const Array& g) { return g.transposed(); }}});
}

namespace {
template <typename FwdF, typename BwdF>
Var unary(Var a, FwdF fv, BwdF dv) {
  // dv receives (x, y) and returns dy/dx
  const Array x = a.value();
  Array y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = fv(x[i]);
  Array d = x;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = dv(x[i], y[i]);
  return a.tape->emit(std::move(y), a.requires_grad(),
                      {{a.id, [d](const Array& g) {
                          Array h = g;
                          for (std::size_t i = 0; i < h.size(); ++i) h[i] *= d[i];
                          return h;
                        }}});
}
}  // namespace

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a) {
  return unary(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var lgamma(Var a) {
  return unary(
      a, [](double x) { return std::lgamma(x); },
      [](double x, double) { return boost::math::digamma(x); });
}

Var square(Var a) { return mul(a, a); }

Var sum(Var a) {
  double s = 0.0;
  const Array& v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i];
  return a.tape->emit(Array::scalar(s), a.requires_grad(),
                      {{a.id, [shape = v.shape()](const Array& g) {
                          return Array::filled(shape, g[0]);
                        }}});
}

Var diag_part(Var a) {
  const Array& v = a.value();
  if (v.rank() != 2 || v.rows() != v.cols())
    throw DimensionError("diag_part requires a square matrix");
  const std::size_t k = v.rows();
  Array out = Array::zeros({k});
  for (std::size_t i = 0; i < k; ++i) out[i] = v(i, i);
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [k](const Array& g) {
                          Array h = Array::zeros({k, k});
                          for (std::size_t i = 0; i < k; ++i) h(i, i) = g[i];
                          return h;
                        }}});
}

Var set_diag(Var m, Var v) {
  const Array& mv = m.value();
  const Array& vv = v.value();
  if (mv.rank() != 2 || mv.rows() != mv.cols() || vv.size() != mv.rows())
    throw DimensionError("set_diag shape mismatch");
  const std::size_t k = mv.rows();
  Array out = mv;
  for (std::size_t i = 0; i < k; ++i) out(i, i) = vv[i];
  return m.tape->emit(std::move(out), m.requires_grad() || v.requires_grad(),
                      {{m.id,
                        [k](const Array& g) {
                          Array h = g;
                          for (std::size_t i = 0; i < k; ++i) h(i, i) = 0.0;
                          return h;
                        }},
                       {v.id, [k, shape = vv.shape()](const Array& g) {
                          Array h = Array::zeros(shape);
                          for (std::size_t i = 0; i < k; ++i) h[i] = g(i, i);
                          return h;
                        }}});
}

Var reshape(Var a, std::vector<std::size_t> shape) {
  auto orig = a.value().shape();
  return a.tape->emit(a.value().reshaped(std::move(shape)), a.requires_grad(),
                      {{a.id, [orig](const Array& g) { return g.reshaped(orig); }}});
}

// ---- Cholesky and SPD solve ------------------------------------------------

namespace {

Array symmetrized(const Array& a) {
  if (a.rank() != 2 || a.rows() != a.cols())
    throw DimensionError("expected a square matrix");
  const std::size_t k = a.rows();
  double asym = 0.0;
  Array s = Array::zeros({k, k});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      s(i, j) = 0.5 * (a(i, j) + a(j, i));
      asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    }
  const double frob = a.flat().norm();
  if (asym > 1e-10 * std::max(frob, 1.0))
    throw ContractError("matrix is not symmetric within tolerance");
  return s;
}

Array cholesky_impl(const Array& a) {
  const Array s = symmetrized(a);
  const std::size_t k = s.rows();
  Array L = Array::zeros({k, k});
  for (std::size_t j = 0; j < k; ++j) {
    double d = s(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= L(j, p) * L(j, p);
    if (!(d > 0.0))
      throw NotPositiveDefiniteError(
          "cholesky: non-positive pivot at index " + std::to_string(j), j);
    L(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = s(i, j);
      for (std::size_t p = 0; p < j; ++p) v -= L(i, p) * L(j, p);
      L(i, j) = v / L(j, j);
    }
  }
  return L;
}

// lower triangle with halved diagonal, upper zeroed
EigenRowMat phi(const EigenRowMat& x) {
  EigenRowMat p = x.template triangularView<Eigen::Lower>();
  p.diagonal() *= 0.5;
  return p;
}

Array chol_vjp(const Array& L, const Array& upstream) {
  const auto Lm = L.mat();
  EigenRowMat Lb = upstream.mat().template triangularView<Eigen::Lower>();
  EigenRowMat P = phi(Lm.transpose() * Lb);
  // M = L^{-T} P L^{-1}
  EigenRowMat X = Lm.transpose().template triangularView<Eigen::Upper>().solve(P);
  EigenRowMat M = Lm.transpose()
                      .template triangularView<Eigen::Upper>()
                      .solve(X.transpose())
                      .transpose();
  EigenRowMat A = 0.5 * (M + M.transpose());
  return Array::from_eigen(A);
}

}  // namespace

Array cholesky_value(const Array& a) { return cholesky_impl(a); }

Array solve_value(const Array& a, const Array& b) {
  Array L = cholesky_impl(a);
  Array x = b;
  auto Lm = L.mat();
  Lm.template triangularView<Eigen::Lower>().solveInPlace(x.mat());
  Lm.transpose().template triangularView<Eigen::Upper>().solveInPlace(x.mat());
  return x;
}

Var cholesky(Var a) {
  Array L = cholesky_impl(a.value());
  Array Lcopy = L;
  return a.tape->emit(std::move(L), a.requires_grad(),
                      {{a.id, [Lcopy](const Array& g) { return chol_vjp(Lcopy, g); }}});
}

Var solve(Var a, Var b) {
  const Array& bv = b.value();
  if (bv.rank() != 2 || bv.rows() != a.value().rows())
    throw DimensionError("solve: rhs shape mismatch");
  Array L = cholesky_impl(a.value());
  Array x = bv;
  {
    auto Lm = L.mat();
    Lm.template triangularView<Eigen::Lower>().solveInPlace(x.mat());
    Lm.transpose().template triangularView<Eigen::Upper>().solveInPlace(x.mat());
  }
  Array xcopy = x;
  auto spd_solve = [](const Array& L_, const Array& rhs) {
    Array y = rhs;
    auto Lm = L_.mat();
    Lm.template triangularView<Eigen::Lower>().solveInPlace(y.mat());
    Lm.transpose().template triangularView<Eigen::Upper>().solveInPlace(y.mat());
    return y;
  };
  return a.tape->emit(
      std::move(x), a.requires_grad() || b.requires_grad(),
      {{a.id,
        [L, xcopy, spd_solve](const Array& g) {
          Array bbar = spd_solve(L, g);
          Array h = Array::zeros({L.rows(), L.rows()});
          h.mat() = -bbar.mat() * xcopy.mat().transpose();
          Array sym = Array::zeros(h.shape());
          sym.mat() = 0.5 * (h.mat() + h.mat().transpose());
          return sym;
        }},
       {b.id, [L, spd_solve](const Array& g) { return spd_solve(L, g); }}});
}

Var logdet(Var a) {
  return mul_const(sum(log(diag_part(cholesky(a)))), 2.0);
}

Var take_rows(Var a, std::vector<std::size_t> rows) {
  const Array& v = a.value();
  if (v.rank() != 2) throw DimensionError("take_rows requires rank 2");
  const std::size_t c = v.cols(), n = v.rows();
  Array out = Array::zeros({rows.size(), c});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) throw DimensionError("take_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out(r, j) = v(rows[r], j);
  }
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [rows, n, c](const Array& g) {
                          Array h = Array::zeros({n, c});
                          for (std::size_t r = 0; r < rows.size(); ++r)
                            for (std::size_t j = 0; j < c; ++j)
                              h(rows[r], j) += g(r, j);
                          return h;
                        }}});
}

Var scatter_rows(Var v, std::vector<std::size_t> rows, std::size_t n_rows) {
  const Array& val = v.value();
  if (val.rank() != 2 || val.rows() != rows.size())
    throw DimensionError("scatter_rows shape mismatch");
  const std::size_t c = val.cols();
  Array out = Array::zeros({n_rows, c});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n_rows) throw DimensionError("scatter_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out(rows[r], j) = val(r, j);
  }
  return v.tape->emit(std::move(out), v.requires_grad(),
                      {{v.id, [rows, c](const Array& g) {
                          Array h = Array::zeros({rows.size(), c});
                          for (std::size_t r = 0; r < rows.size(); ++r)
                            for (std::size_t j = 0; j < c; ++j)
                              h(r, j) = g(rows[r], j);
                          return h;
                        }}});
}

Var slice_cols(Var a, std::size_t col0, std::size_t ncols) {
  const Array& v = a.value();
  if (v.rank() != 2 || col0 + ncols > v.cols())
    throw DimensionError("slice_cols out of range");
  const std::size_t n = v.rows(), c = v.cols();
  Array out = Array::zeros({n, ncols});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < ncols; ++j) out(i, j) = v(i, col0 + j);
  return a.tape->emit(std::move(out), a.requires_grad(),
                      {{a.id, [n, c, col0, ncols](const Array& g) {
                          Array h = Array::zeros({n, c});
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < ncols; ++j)
                              h(i, col0 + j) = g(i, j);
                          return h;
                        }}});
}

Var concat_cols(Var a, Var b) {
  const Array &av = a.value(), &bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows())
    throw DimensionError("concat_cols: row counts disagree");
  const std::size_t n = av.rows(), ca = av.cols(), cb = bv.cols();
  Array out = Array::zeros({n, ca + cb});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out(i, j) = av(i, j);
    for (std::size_t j = 0; j < cb; ++j) out(i, ca + j) = bv(i, j);
  }
  return a.tape->emit(std::move(out), a.requires_grad() || b.requires_grad(),
                      {{a.id,
                        [n, ca](const Array& g) {
                          Array h = Array::zeros({n, ca});
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < ca; ++j) h(i, j) = g(i, j);
                          return h;
                        }},
                       {b.id, [n, ca, cb](const Array& g) {
                          Array h = Array::zeros({n, cb});
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j < cb; ++j) h(i, j) = g(i, ca + j);
                          return h;
                        }}});
}

Var dot(Var a, Var b) { return sum(mul(a, b)); }

}  // namespace mmsur::nd
