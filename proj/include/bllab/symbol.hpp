#pragma once

#include <map>
#include <vector>

#include "bllab/common.hpp"

namespace bllab {

using MultiIndex = std::vector<int>;
using CPoint = std::vector<cplx>;
using RPoint = std::vector<double>;

int total_degree(const MultiIndex& alpha);

/// Constant-coefficient polynomial symbol P(xi) = sum_alpha a_alpha xi^alpha.
/// Terms are kept in a sorted map; immutable once built.
class Symbol {
 public:
  using TermMap = std::map<MultiIndex, cplx>;

  Symbol(int dimension, int order, TermMap terms = {});

  static Symbol constant(int dimension, cplx c);
  static Symbol laplacian(int dimension);
  /// (xi . xi)^m
  static Symbol polyharmonic(int dimension, int m);

  int dimension() const { return dim_; }
  int order() const { return order_; }
  const TermMap& terms() const { return terms_; }
  cplx coefficient(const MultiIndex& alpha) const;

  bool is_real(double tol = 0.0) const;
  bool is_zero(double tol = 0.0) const;
  /// Principal part positive on a fan of unit directions.
  bool is_elliptic(int samples = 64) const;

 private:
  int dim_;
  int order_;
  TermMap terms_;
};

cplx evaluate(const Symbol& sym, const CPoint& zeta);
cplx evaluate(const Symbol& sym, const RPoint& xi);

Symbol derivative(const Symbol& sym, const MultiIndex& alpha);

/// sqrt(sum over |alpha| <= order of |P^(alpha)(xi)|^2).
double tilde_norm(const Symbol& sym, const RPoint& xi);

/// L(xi) = P(xi + zeta) - P(zeta), built from the Taylor expansion at zeta.
Symbol shifted_symbol(const Symbol& sym, const CPoint& zeta);

bool approx_equal(const Symbol& a, const Symbol& b, double tol = 1e-12);

/// All multi-indices of the given dimension with total degree <= max_degree.
std::vector<MultiIndex> multi_indices_up_to(int dimension, int max_degree);

}  // namespace bllab
