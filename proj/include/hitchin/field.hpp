#pragma once

#include <functional>
#include <vector>

#include "hitchin/grid.hpp"

namespace hitchin {

/// Form type of a matrix-valued field. One-forms store the dz (resp. dz-bar)
/// coefficient, `two` stores the dz^dz-bar coefficient and `area` the dx^dy
/// coefficient. dz^dz-bar = -2i dx^dy.
enum class FormDegree { zero, one_zero, zero_one, two, area };

const char* to_string(FormDegree d);

/// 2x2 complex matrix per grid node.
class MatrixField {
 public:
  MatrixField(GridRef grid, FormDegree degree);
  MatrixField(GridRef grid, FormDegree degree, std::vector<Mat2> values);

  /// Sample `f(z)` at every node.
  static MatrixField sample(GridRef grid, FormDegree degree, const std::function<Mat2(Complex)>& f);
  static MatrixField constant(GridRef grid, FormDegree degree, const Mat2& m);

  const GridRef& grid() const { return grid_; }
  FormDegree degree() const { return degree_; }
  std::size_t size() const { return values_.size(); }
  const Mat2& operator[](std::size_t i) const { return values_[i]; }
  Mat2& operator[](std::size_t i) { return values_[i]; }
  const std::vector<Mat2>& values() const { return values_; }

  MatrixField with_degree(FormDegree d) const;

  MatrixField& operator+=(const MatrixField& o);
  MatrixField& operator-=(const MatrixField& o);
  MatrixField& operator*=(Complex s);

  /// Entrywise complex conjugate (not the adjoint).
  MatrixField conj() const;
  /// Pointwise conjugate transpose; the form type is kept.
  MatrixField adjoint() const;
  /// Pointwise f(value).
  MatrixField map(const std::function<Mat2(const Mat2&)>& f) const;

 private:
  GridRef grid_;
  FormDegree degree_;
  std::vector<Mat2> values_;
};

MatrixField operator+(MatrixField a, const MatrixField& b);
MatrixField operator-(MatrixField a, const MatrixField& b);
MatrixField operator*(Complex s, MatrixField a);
/// Pointwise matrix product; degree taken from `a`.
MatrixField pointwise_product(const MatrixField& a, const MatrixField& b);
/// Pointwise commutator [a, b]; degree taken from `a`.
MatrixField pointwise_commutator(const MatrixField& a, const MatrixField& b);

void require_same_grid(const MatrixField& a, const MatrixField& b, const char* where);

/// Largest pointwise Frobenius norm of a - b (grids must agree).
double max_difference(const MatrixField& a, const MatrixField& b);

}  // namespace hitchin
