#ifndef MPCFORGE_POLY_HPP
#define MPCFORGE_POLY_HPP

#include <utility>
#include <vector>

#include "mpcforge/domain.hpp"

namespace mpcforge {

// Dense polynomial over a prime field, constant term first. Used by Shamir
// sharing and the batched triple check.
struct Polynomial {
  std::vector<Elem> coeffs;
  Domain dom;

  unsigned degree() const { return coeffs.empty() ? 0 : unsigned(coeffs.size()) - 1; }
};

Polynomial make_poly(std::vector<Elem> coeffs);

// Horner evaluation.
Elem poly_eval(const Polynomial& f, const Elem& z);

// Unique interpolating polynomial of degree < points.size(); points must have
// pairwise distinct x coordinates.
Polynomial poly_interpolate(const std::vector<std::pair<Elem, Elem>>& points);

// Lagrange coefficients for recombining values f(x_i) into f(at).
std::vector<Elem> lagrange_coeffs(const std::vector<Elem>& xs, const Elem& at);

}  // namespace mpcforge

#endif
