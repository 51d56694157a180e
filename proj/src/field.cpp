#include "hitchin/field.hpp"

#include <algorithm>
#include <sstream>

namespace hitchin {

const char* to_string(FormDegree d) {
  switch (d) {
    case FormDegree::zero: return "0";
    case FormDegree::one_zero: return "(1,0)";
    case FormDegree::zero_one: return "(0,1)";
    case FormDegree::two: return "2";
    case FormDegree::area: return "2(area)";
  }
  return "?";
}

MatrixField::MatrixField(GridRef grid, FormDegree degree)
    : grid_(std::move(grid)), degree_(degree), values_(node_count(grid_), Mat2::Zero()) {}

MatrixField::MatrixField(GridRef grid, FormDegree degree, std::vector<Mat2> values)
    : grid_(std::move(grid)), degree_(degree), values_(std::move(values)) {
  if (values_.size() != node_count(grid_)) {
    std::ostringstream os;
    os << "MatrixField: " << values_.size() << " values for " << node_count(grid_) << " nodes";
    throw ContractError(os.str());
  }
}

MatrixField MatrixField::sample(GridRef grid, FormDegree degree, const std::function<Mat2(Complex)>& f) {
  MatrixField out(grid, degree);
  for (std::size_t i = 0; i < out.size(); ++i) out.values_[i] = f(node_point(grid, i));
  return out;
}

MatrixField MatrixField::constant(GridRef grid, FormDegree degree, const Mat2& m) {
  MatrixField out(std::move(grid), degree);
  std::fill(out.values_.begin(), out.values_.end(), m);
  return out;
}

MatrixField MatrixField::with_degree(FormDegree d) const {
  MatrixField out = *this;
  out.degree_ = d;
  return out;
}

MatrixField& MatrixField::operator+=(const MatrixField& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

MatrixField& MatrixField::operator-=(const MatrixField& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

MatrixField& MatrixField::operator*=(Complex s) {
  for (auto& v : values_) v *= s;
  return *this;
}

MatrixField MatrixField::conj() const {
  return map([](const Mat2& m) -> Mat2 { return m.conjugate(); });
}

MatrixField MatrixField::adjoint() const {
  return map([](const Mat2& m) -> Mat2 { return m.adjoint(); });
}

MatrixField MatrixField::map(const std::function<Mat2(const Mat2&)>& f) const {
  MatrixField out = *this;
  for (auto& v : out.values_) v = f(v);
  return out;
}

MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
MatrixField operator*(Complex s, MatrixField a) { return a *= s; }

MatrixField pointwise_product(const MatrixField& a, const MatrixField& b) {
  require_same_grid(a, b, "pointwise_product");
  MatrixField out(a.grid(), a.degree());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

MatrixField pointwise_commutator(const MatrixField& a, const MatrixField& b) {
  require_same_grid(a, b, "pointwise_commutator");
  MatrixField out(a.grid(), a.degree());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = commutator(a[i], b[i]);
  return out;
}

void require_same_grid(const MatrixField& a, const MatrixField& b, const char* where) {
  if (!same_grid(a.grid(), b.grid())) throw ContractError(std::string(where) + ": fields live on different grids");
}

double max_difference(const MatrixField& a, const MatrixField& b) {
  require_same_grid(a, b, "max_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

}  // namespace hitchin
