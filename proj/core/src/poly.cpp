#include "mpcforge/poly.hpp"

namespace mpcforge {

Polynomial make_poly(std::vector<Elem> coeffs) {
  if (coeffs.empty()) fail(Errc::ParamError, "polynomial needs at least one coefficient");
  Domain d = coeffs.front().dom;
  if (d.kind != DomainKind::PrimeField) fail(Errc::ParamError, "polynomials live in prime fields");
  for (const auto& c : coeffs)
    if (!(c.dom == d)) fail(Errc::DomainMismatch, "mixed coefficient domains");
  return Polynomial{std::move(coeffs), d};
}

Elem poly_eval(const Polynomial& f, const Elem& z) {
  if (!(z.dom == f.dom)) fail(Errc::DomainMismatch, "evaluation point domain");
  Elem acc = zero(f.dom);
  for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) acc = add(mul(acc, z), *it);
  return acc;
}

std::vector<Elem> lagrange_coeffs(const std::vector<Elem>& xs, const Elem& at) {
  std::vector<Elem> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Elem num = one(at.dom);
    Elem den = one(at.dom);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      num = mul(num, sub(at, xs[j]));
      den = mul(den, sub(xs[i], xs[j]));
    }
    out.push_back(mul(num, inv(den)));
  }
  return out;
}

Polynomial poly_interpolate(const std::vector<std::pair<Elem, Elem>>& points) {
  if (points.empty()) fail(Errc::ParamError, "no points");
  Domain d = points.front().first.dom;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].first == points[j].first)
        fail(Errc::DuplicatePoint, "repeated interpolation point");
    }
  }

  // Sum of Lagrange basis polynomials, expanded to coefficient form.
  std::vector<Elem> acc(points.size(), zero(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    // basis_i(x) = prod_{j != i} (x - x_j) / (x_i - x_j)
    std::vector<Elem> basis{one(d)};
    Elem den = one(d);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      // multiply basis by (x - x_j)
      std::vector<Elem> next(basis.size() + 1, zero(d));
      for (std::size_t c = 0; c < basis.size(); ++c) {
        next[c + 1] = add(next[c + 1], basis[c]);
        next[c] = sub(next[c], mul(basis[c], points[j].first));
      }
      basis = std::move(next);
      den = mul(den, sub(points[i].first, points[j].first));
    }
    Elem scale = mul(points[i].second, inv(den));
    for (std::size_t c = 0; c < basis.size(); ++c) acc[c] = add(acc[c], mul(basis[c], scale));
  }
  return Polynomial{std::move(acc), d};
}

}  // namespace mpcforge
