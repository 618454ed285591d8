#include "pinnburn/spline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace pinnburn {

std::size_t SplineBlock::n_coefficients() const {
  std::size_t n = 0;
  for (const auto& t : terms) n += t.n_coefficients();
  return n;
}

void SplineBlock::validate() const {
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const auto& t = terms[j];
    if (t.knots.size() < 2) throw SplineError("spline term " + std::to_string(j) + " needs at least 2 knots");
    if (t.radial.size() != t.knots.size())
      throw SplineError("spline term " + std::to_string(j) + " has mismatched knot/coefficient counts");
    for (std::size_t k = 1; k < t.knots.size(); ++k)
      if (!(t.knots[k] > t.knots[k - 1]))
        throw SplineError("spline term " + std::to_string(j) + " knots are not strictly increasing");
    if (!std::isfinite(t.linear) ||
        !std::all_of(t.radial.begin(), t.radial.end(), [](double v) { return std::isfinite(v); }))
      throw SplineError("spline term " + std::to_string(j) + " has non-finite coefficients");
  }
}

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw SplineError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> place_knots(std::span<const double> values, int k) {
  if (k < 2) throw SplineError("a spline needs at least 2 knots");
  std::set<double> distinct(values.begin(), values.end());
  if (distinct.size() < static_cast<std::size_t>(k))
    throw SplineError("sample has fewer than " + std::to_string(k) + " distinct values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  const double n1 = static_cast<double>(sorted.size()) - 1.0;
  for (int i = 1; i <= k; ++i) {
    const double h = n1 * static_cast<double>(i) / static_cast<double>(k + 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    knots.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
  }
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1])) throw SplineError("tied knots: fewer than K distinct quantiles");
  return knots;
}

SplineTerm make_term(std::vector<double> knots) {
  SplineTerm t;
  t.radial.assign(knots.size(), 0.0);
  t.knots = std::move(knots);
  return t;
}

double eval_spline(const SplineBlock& block, std::size_t j, double x) {
  const auto& t = block.terms.at(j);
  double v = t.linear * x;
  for (std::size_t k = 0; k < t.knots.size(); ++k) {
    const double r = std::abs(x - t.knots[k]);
    v += t.radial[k] * r * r * r;
  }
  return v;
}

void spline_basis(const SplineTerm& term, double x, std::span<double> out) {
  out[0] = x;
  for (std::size_t k = 0; k < term.knots.size(); ++k) {
    const double r = std::abs(x - term.knots[k]);
    out[k + 1] = r * r * r;
  }
}

std::function<double(double)> center_at_median(const SplineBlock& block, std::size_t j, double median) {
  if (!std::isfinite(median)) throw SplineError("median must be finite");
  const double offset = eval_spline(block, j, median);
  return [block, j, offset](double x) { return eval_spline(block, j, x) - offset; };
}

void pack_coefficients(const SplineBlock& block, std::span<double> out) {
  std::size_t i = 0;
  for (const auto& t : block.terms) {
    out[i++] = t.linear;
    for (double g : t.radial) out[i++] = g;
  }
}

void unpack_coefficients(SplineBlock& block, std::span<const double> in) {
  std::size_t i = 0;
  for (auto& t : block.terms) {
    t.linear = in[i++];
    for (double& g : t.radial) g = in[i++];
  }
}

}  // namespace pinnburn
