#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "mmsur/array.hpp"

namespace mmsur::nd {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
  const Array& value() const;
  bool requires_grad() const;
};

// Reverse-mode tape. Nodes are appended in topological order; the backward
// pass walks ids in reverse, visiting each node exactly once. A tape is
// single-owner: build and differentiate on one thread, then discard.
class Tape {
 public:
  struct Edge {
    std::size_t parent;
    std::function<Array(const Array& upstream)> vjp;
  };

  Var constant(Array value);
  Var leaf(Array value);  // requires_grad = true

  Var emit(Array value, bool requires_grad, std::vector<Edge> edges);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    bool requires_grad;
    std::vector<Edge> edges;
  };
  std::vector<Node> nodes_;
  friend class Gradients;
  friend Gradients backward(Var loss);
};

class Gradients {
 public:
  bool has(Var v) const;
  // d loss / d v; zeros of v's shape when no gradient reached v.
  Array wrt(Var v) const;

 private:
  friend Gradients backward(Var loss);
  std::vector<std::optional<Array>> g_;
};

// Reverse pass from a scalar loss. Throws ContractError on non-scalar loss.
Gradients backward(Var loss);

// ---- primitive operations ------------------------------------------------
// Binary elementwise ops broadcast: identical shapes, a size-1 operand, or a
// rank-1 / 1xk row vector against an nxk matrix.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var add_const(Var a, double c);
Var mul_const(Var a, double c);

Var matmul(Var a, Var b);
Var transpose(Var a);

Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var lgamma(Var a);
Var square(Var a);

Var sum(Var a);  // all elements -> scalar

Var diag_part(Var a);          // k x k -> k
Var set_diag(Var m, Var v);    // replace diagonal of m with v
Var reshape(Var a, std::vector<std::size_t> shape);

// A is symmetrized internally as (A + A^T)/2 before factorization; the
// asymmetry must stay below 1e-10 * ||A||_F.
Var cholesky(Var a);
// X = A^{-1} B for SPD A (same symmetrization contract as cholesky).
Var solve(Var a, Var b);
// 2 * sum(log(diag(chol(A)))); composite of the primitives above.
Var logdet(Var a);

Var take_rows(Var a, std::vector<std::size_t> rows);
Var scatter_rows(Var v, std::vector<std::size_t> rows, std::size_t n_rows);
Var slice_cols(Var a, std::size_t col0, std::size_t ncols);
Var concat_cols(Var a, Var b);

Var dot(Var a, Var b);  // sum(a*b)

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator+(Var a, double c) { return add_const(a, c); }
inline Var operator+(double c, Var a) { return add_const(a, c); }
inline Var operator-(Var a, double c) { return add_const(a, -c); }
inline Var operator-(double c, Var a) { return add_const(neg(a), c); }
inline Var operator*(Var a, double c) { return mul_const(a, c); }
inline Var operator*(double c, Var a) { return mul_const(a, c); }
inline Var operator/(Var a, double c) { return mul_const(a, 1.0 / c); }

// Plain-value Cholesky with the same contract as the node op. Exposed for
// non-differentiated code paths.
Array cholesky_value(const Array& a);
Array solve_value(const Array& a, const Array& b);

}  // namespace mmsur::nd
