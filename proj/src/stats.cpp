#include <churnstore/common.hpp>
#include <churnstore/stats.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace churnstore {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  const std::size_t k = std::min(values.size() - 1, idx == 0 ? 0 : idx - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::InvalidParams, "total variation of vectors of different length");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return sum / 2.0;
}

std::vector<double> survival_curve(std::span<const Lifetime> lifetimes) {
  std::uint32_t longest = 0;
  for (const auto& l : lifetimes) longest = std::max(longest, l.epochs);
  std::vector<double> s(longest + 1, 1.0);
  double current = 1.0;
  for (std::uint32_t j = 0; j < longest; ++j) {
    std::uint64_t at_risk = 0, deaths = 0;
    for (const auto& l : lifetimes) {
      if (l.epochs >= j) ++at_risk;
      if (l.died && l.epochs == j) ++deaths;
    }
    if (at_risk) current *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
    s[j + 1] = current;
  }
  return s;
}

GeometricFit geometric_fit(std::span<const Lifetime> lifetimes, double min_expected) {
  GeometricFit fit;
  std::uint32_t longest = 0;
  for (const auto& l : lifetimes) {
    // A committee that died in epoch j was at risk in epochs 0..j.
    fit.exposure += l.epochs + (l.died ? 1 : 0);
    fit.deaths += l.died;
    longest = std::max(longest, l.epochs);
  }
  if (fit.exposure == 0) return fit;
  fit.p = static_cast<double>(fit.deaths) / static_cast<double>(fit.exposure);
  if (fit.deaths == 0 || fit.p >= 1.0) return fit;

  struct Cell {
    double observed = 0, expected = 0, variance = 0;
  };
  std::vector<Cell> cells;
  Cell open;
  for (std::uint32_t j = 0; j <= longest; ++j) {
    std::uint64_t at_risk = 0, deaths = 0;
    for (const auto& l : lifetimes) {
      if (l.epochs > j || (l.epochs == j && l.died)) ++at_risk;
      if (l.died && l.epochs == j) ++deaths;
    }
    open.observed += static_cast<double>(deaths);
    open.expected += static_cast<double>(at_risk) * fit.p;
    open.variance += static_cast<double>(at_risk) * fit.p * (1.0 - fit.p);
    if (open.expected >= min_expected) {
      cells.push_back(open);
      open = {};
    }
  }
  if (open.expected > 0) {
    if (cells.empty()) {
      cells.push_back(open);
    } else {
      cells.back().observed += open.observed;
      cells.back().expected += open.expected;
      cells.back().variance += open.variance;
    }
  }
  if (cells.size() < 2) return fit;
  for (const auto& c : cells) fit.chi2 += (c.observed - c.expected) * (c.observed - c.expected) / c.variance;
  fit.dof = static_cast<int>(cells.size()) - 1;
  fit.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(fit.dof), fit.chi2));
  fit.testable = true;
  return fit;
}

}  // namespace churnstore
