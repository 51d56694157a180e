#pragma once

#include "hitchin/field.hpp"

namespace hitchin {

/// Sup and L2 norms of a field, measured pointwise in the Frobenius norm against
/// the Euclidean area element. For `FormDegree::two` fields the dz^dz-bar
/// coefficient is converted to the dx^dy coefficient (factor |-2i| = 2) first;
/// this is the only place that conversion happens for norms.
struct Norms {
  double sup = 0.0;
  double l2 = 0.0;
};

/// Closed radial interval [lo, hi] used to restrict norms on polar grids.
struct RadialInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// dz-derivative. Degree zero -> (1,0); (0,1) coefficient b -> dz^dz-bar
/// coefficient of d(b dz-bar), i.e. +d_z b.
MatrixField d_z(const MatrixField& field);

/// dz-bar-derivative. Degree zero -> (0,1); (1,0) coefficient a -> dz^dz-bar
/// coefficient of dbar(a dz) = d_zbar a dz-bar^dz, i.e. -d_zbar a.
MatrixField d_zbar(const MatrixField& field);

/// Raw Wirtinger derivatives of the node values, ignoring form bookkeeping.
std::vector<Mat2> partial_z(const MatrixField& field);
std::vector<Mat2> partial_zbar(const MatrixField& field);

Norms norms(const MatrixField& field, RadialInterval region);
Norms norms(const MatrixField& field);

/// Area quadrature weights of the grid (trapezoidal in r, periodic in theta / x / y).
std::vector<double> area_weights(const GridRef& grid);

/// Largest pointwise Frobenius norm of a - b over the nodes of a polar annulus.
double max_difference(const MatrixField& a, const MatrixField& b, RadialInterval region);

/// Flat indices of the polar nodes with lo <= r <= hi.
std::vector<std::size_t> nodes_in(const PolarGrid& grid, RadialInterval region);

}  // namespace hitchin
