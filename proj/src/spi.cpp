#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "pinnburn/grid_data.hpp"

namespace pinnburn {

namespace {

struct GammaFit {
  bool ok = false;
  bool degenerate = false;  // all positive sums identical
  double shape = 0.0;
  double scale = 0.0;
};

// Maximum likelihood on strictly positive values. Newton on log(shape) for
// log(a) - digamma(a) = log(mean) - mean(log x), started from method of moments.
GammaFit fit_gamma(const std::vector<double>& positive) {
  GammaFit fit;
  const double n = static_cast<double>(positive.size());
  double sum = 0.0, sum_log = 0.0;
  for (double x : positive) {
    sum += x;
    sum_log += std::log(x);
  }
  const double mean = sum / n;
  const double s = std::log(mean) - sum_log / n;
  if (!(s > 1e-12)) {
    fit.ok = true;
    fit.degenerate = true;
    return fit;
  }
  double var = 0.0;
  for (double x : positive) var += (x - mean) * (x - mean);
  var /= n;
  double shape = var > 0.0 ? mean * mean / var : 1.0;
  double log_a = std::log(shape);
  for (int it = 0; it < 100; ++it) {
    const double a = std::exp(log_a);
    const double f = std::log(a) - boost::math::digamma(a) - s;
    const double df = 1.0 - a * boost::math::trigamma(a);  // d f / d log a
    double step = f / df;
    if (!std::isfinite(step)) return fit;
    step = std::clamp(step, -2.0, 2.0);
    log_a -= step;
    if (std::abs(step) < 1e-8) {
      fit.ok = true;
      fit.shape = std::exp(log_a);
      fit.scale = mean / fit.shape;
      return fit;
    }
  }
  return fit;
}

}  // namespace

SpiResult compute_spi(std::span<const double> precip, std::size_t n_sites, std::size_t n_times, int start_month,
                      int window) {
  if (window < 1) throw std::invalid_argument("SPI window must be >= 1");
  if (precip.size() != n_sites * n_times) throw std::invalid_argument("precipitation field has wrong size");
  if (start_month < 1 || start_month > 12) throw std::invalid_argument("start_month must be in 1..12");
  const auto w = static_cast<std::size_t>(window);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SpiResult result;
  result.values.assign(precip.size(), nan);
  const boost::math::normal_distribution<double> std_normal;
  constexpr double kProbEps = 1e-15;

  for (std::size_t s = 0; s < n_sites; ++s) {
    std::vector<double> sums(n_times, nan);
    for (std::size_t t = w - 1; t < n_times; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w; ++k) acc += precip[(t - k) * n_sites + s];
      sums[t] = acc;
    }
    for (int m = 0; m < 12; ++m) {
      std::vector<std::size_t> members;
      for (std::size_t t = w - 1; t < n_times; ++t)
        if ((static_cast<int>(t) + start_month - 1) % 12 == m && std::isfinite(sums[t])) members.push_back(t);
      if (members.empty()) continue;
      if (members.size() < 20)
        throw std::invalid_argument("SPI needs at least 20 values per (site, calendar month) group; site " +
                                    std::to_string(s) + " month " + std::to_string(m + 1) + " has " +
                                    std::to_string(members.size()));
      std::vector<double> positive;
      std::size_t zeros = 0;
      for (auto t : members) {
        if (sums[t] > 0.0)
          positive.push_back(sums[t]);
        else
          ++zeros;
      }
      if (positive.empty()) continue;  // all-zero group: SPI undefined
      const double q = static_cast<double>(zeros) / static_cast<double>(members.size());
      const GammaFit fit = fit_gamma(positive);
      if (!fit.ok) {
        std::ostringstream os;
        os << "gamma fit did not converge for site " << s << ", calendar month " << (m + 1) << "; SPI left missing";
        result.warnings.push_back(os.str());
        continue;
      }
      for (auto t : members) {
        double prob;
        if (sums[t] <= 0.0) {
          prob = q;
        } else if (fit.degenerate) {
          prob = q + (1.0 - q) * 0.5;
        } else {
          prob = q + (1.0 - q) * boost::math::gamma_p(fit.shape, sums[t] / fit.scale);
        }
        prob = std::clamp(prob, kProbEps, 1.0 - kProbEps);
        result.values[t * n_sites + s] = boost::math::quantile(std_normal, prob);
      }
    }
  }
  return result;
}

}  // namespace pinnburn
