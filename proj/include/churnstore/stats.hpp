#ifndef CHURNSTORE_STATS_HPP
#define CHURNSTORE_STATS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace churnstore {

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

/// Half the L1 distance between two probability vectors of equal length.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Lifetime of one committee in maintenance epochs: `epochs` survived, and
/// whether it died (false means still alive at the horizon).
struct Lifetime {
  std::uint32_t epochs = 0;
  bool died = false;
};

/// Constant-hazard test of a right-censored lifetime sample. The geometric
/// MLE is p = deaths / exposure; per epoch j the deaths among the n_j at risk
/// are compared with n_j·p by Pearson's statistic, sparse tail epochs pooled
/// until each cell expects at least `min_expected` deaths.
struct GeometricFit {
  double p = 0.0;
  std::uint64_t deaths = 0;
  std::uint64_t exposure = 0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool testable = false;  // enough deaths for at least two cells
};
GeometricFit geometric_fit(std::span<const Lifetime> lifetimes, double min_expected = 5.0);

/// Kaplan-Meier survival S(j) for j = 0..max epochs.
std::vector<double> survival_curve(std::span<const Lifetime> lifetimes);

}  // namespace churnstore

#endif  // CHURNSTORE_STATS_HPP
