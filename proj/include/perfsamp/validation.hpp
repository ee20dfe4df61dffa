#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace perfsamp {

struct ErlangB {
  std::vector<double> pmf;  // occupancy 0..C
  double blocking = 0.0;
};

/// Truncated Poisson law of an M/G/C/C station with offered load a.
ErlangB erlang_b_distribution(int capacity, double offered_load);

/// Blocking probability only, by B_k = a B_{k-1} / (k + a B_{k-1}).
double erlang_b(int capacity, double offered_load);

struct ProductFormState {
  std::vector<int> counts;  // per route
  double probability = 0.0;
};

/// Enumerates pi(n) proportional to prod_l a_l^{n_l} / n_l! over
/// { n : sum_l n_l P_l(j) <= C_j for all j }. incidence[l][j] is P_l(j).
/// Throws StateSpaceTooLarge beyond max_states.
std::vector<ProductFormState> product_form_distribution(
    const std::vector<std::vector<int>>& incidence, const std::vector<int>& capacities,
    const std::vector<double>& loads, std::size_t max_states = 1'000'000);

/// Poisson pmf on 0..k_max-1 with the remaining tail mass folded into the last entry.
std::vector<double> poisson_pmf_with_tail(double mean, int k_max);

struct GofBin {
  std::string label;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofReport {
  std::string test;
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::vector<GofBin> bins;
  std::string pooling_note;
};

/// Pearson chi-square against a pmf. The last pmf entry is treated as the
/// upper tail, so observed categories beyond it are counted there. Adjacent
/// bins are pooled left to right until every bin expects at least 5.
GofReport chi_square_test(const std::vector<double>& observed, const std::vector<double>& pmf);

/// Upper tail of the chi-square law.
double chi_square_sf(double statistic, int dof);

/// P(K > lambda) for the limiting Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct KsReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// One-sample Kolmogorov-Smirnov test. Sorts a copy of the sample.
KsReport ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Half the L1 distance between two pmfs on a common index set.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// Empirical pmf of non-negative integer observations, padded to `size`.
std::vector<double> empirical_pmf(const std::vector<int>& values, std::size_t size);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  double lower() const noexcept { return mean - half_width; }
  double upper() const noexcept { return mean + half_width; }
  bool overlaps(const MeanCi& other) const noexcept {
    return lower() <= other.upper() && other.lower() <= upper();
  }
};

/// Student-t confidence interval for the mean of i.i.d. observations.
MeanCi mean_confidence_interval(const std::vector<double>& values, double level = 0.95);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace perfsamp
