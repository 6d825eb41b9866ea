#include <algorithm>
#include <cmath>
#include <numeric>

#include "smogan/error.hpp"
#include "smogan/harness.hpp"

namespace smogan {

namespace {

struct Ranked {
  std::vector<double> ranks;  // mid-ranks of |d|
  std::vector<bool> positive;
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
  double w_plus = 0.0;
  double w_minus = 0.0;
};

Ranked rank_nonzero(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  Ranked r;
  const auto n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
  r.ranks.assign(n, 0.0);
  r.positive.assign(n, false);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) r.ranks[k] = mid;
    for (std::size_t k = i; k <= j; ++k) r.positive[k] = d[order[k]] > 0.0;
    i = j + 1;
  }
  for (std::size_t k = 0; k < n; ++k) (r.positive[k] ? r.w_plus : r.w_minus) += r.ranks[k];
  return r;
}

WilcoxonResult empty_result() {
  WilcoxonResult w;
  w.empty = true;
  w.p_value = 1.0;
  return w;
}

}  // namespace

WilcoxonResult wilcoxon_exact(const std::vector<double>& diffs) {
  const Ranked r = rank_nonzero(diffs);
  const auto n = r.ranks.size();
  if (n == 0) return empty_result();
  if (n > 30) throw Error(Errc::BadConfig, "exact signed-rank enumeration limited to 30 values");

  WilcoxonResult w;
  w.n_used = n;
  w.w_plus = r.w_plus;
  w.w_minus = r.w_minus;
  const double observed = std::min(r.w_plus, r.w_minus);
  const double tol = 1e-9 * (1.0 + observed);
  const std::uint64_t patterns = std::uint64_t{1} << n;
  std::uint64_t at_most = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double t_plus = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (std::uint64_t{1} << k)) t_plus += r.ranks[k];
    if (t_plus <= observed + tol) ++at_most;
  }
  w.p_value = std::min(1.0, 2.0 * static_cast<double>(at_most) / static_cast<double>(patterns));
  w.exact = true;
  return w;
}

WilcoxonResult wilcoxon_normal(const std::vector<double>& diffs) {
  const Ranked r = rank_nonzero(diffs);
  const auto n = r.ranks.size();
  if (n == 0) return empty_result();
  const double dn = static_cast<double>(n);
  WilcoxonResult w;
  w.n_used = n;
  w.w_plus = r.w_plus;
  w.w_minus = r.w_minus;
  w.exact = false;
  const double mean = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - r.tie_term / 48.0;
  if (!(var > 0.0)) {
    w.p_value = 1.0;
    return w;
  }
  const double observed = std::min(r.w_plus, r.w_minus);
  const double z = std::max(0.0, std::abs(observed - mean) - 0.5) / std::sqrt(var);
  w.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return w;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
  std::size_t nonzero = 0;
  for (double d : diffs) nonzero += d != 0.0;
  return nonzero <= kExactWilcoxonMax ? wilcoxon_exact(diffs) : wilcoxon_normal(diffs);
}

}  // namespace smogan
