#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "bt/distributions.hpp"
#include "bt/rng.hpp"
#include "bt/tournament.hpp"

namespace bt {

/// Stream-id layout: replicate r draws from Stream(seed, r); auxiliary draws
/// (fixed-environment sampling, bootstrap resampling) use ids above 2^62 so
/// they never collide with replicates.
inline constexpr std::uint64_t kEnvironmentStream = std::uint64_t(1) << 62;
inline constexpr std::uint64_t kBootstrapStream = (std::uint64_t(1) << 62) + 1;

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Whether each replicate redraws the environment (annealed) or every
/// replicate shares one strength draw (quenched).
enum class EnvironmentMode { resample, fixed };

inline const char* to_string(EnvironmentMode m) {
  return m == EnvironmentMode::resample ? "resample" : "fixed";
}

struct Estimate {
  double value = 0;
  std::size_t replicates = 0;
  double ci_low = 0;
  double ci_high = 1;
  std::uint64_t seed = 0;
};

/// Wilson score interval; z = 1.96 for 95%, z = 3 for the 99.7% oracle gate.
inline std::pair<double, double> wilson_interval(double p_hat, std::size_t n, double z) {
  const double nn = double(n);
  const double denom = 1.0 + z * z / nn;
  const double center = (p_hat + z * z / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline Estimate wilson_estimate(std::uint64_t successes, std::size_t n, std::uint64_t seed,
                                double z = 1.96) {
  if (n == 0) throw std::invalid_argument("wilson_estimate: no replicates");
  const double p_hat = double(successes) / double(n);
  const auto [lo, hi] = wilson_interval(p_hat, n, z);
  return {p_hat, n, lo, hi, seed};
}

/// Cutoff scale of Theorem-3 type: sqrt((2 - alpha)/theta_u * log(N)/N).
inline double epsilon_n(double alpha, double theta_u, std::size_t n_players) {
  if (!(alpha >= 0.0 && alpha < 2.0)) throw std::domain_error("epsilon_n: alpha must lie in [0,2)");
  if (!(theta_u > 0.0)) throw std::domain_error("epsilon_n: theta_u must be > 0");
  if (n_players < 2) throw std::invalid_argument("epsilon_n: need N >= 2");
  const double nn = double(n_players);
  return std::sqrt((2.0 - alpha) / theta_u * std::log(nn) / nn);
}

namespace detail {

// Static replicate partition; partial accumulators merged in worker order, so
// any worker count yields the same result for integer-count accumulators.
template <typename Acc, typename Fn>
Acc run_replicates(std::size_t replicates, unsigned workers, Fn&& per_replicate) {
  workers = std::max<std::size_t>(1, std::min<std::size_t>(resolve_workers(workers), replicates));
  std::vector<Acc> parts(workers);
  if (workers == 1) {
    for (std::size_t r = 0; r < replicates; ++r) per_replicate(r, parts[0]);
  } else {
    const std::size_t chunk = (replicates + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t lo = std::size_t(w) * chunk;
        const std::size_t hi = std::min(replicates, lo + chunk);
        for (std::size_t r = lo; r < hi; ++r) per_replicate(r, parts[w]);
      });
    }
    for (auto& t : pool) t.join();
    for (unsigned w = 1; w < workers; ++w) parts[0].merge(parts[w]);
  }
  return std::move(parts[0]);
}

struct PairCount {
  std::uint64_t first = 0, second = 0;
  void merge(const PairCount& o) {
    first += o.first;
    second += o.second;
  }
};

inline void check_replicates(std::size_t replicates) {
  if (replicates < 100)
    throw std::invalid_argument("estimator needs at least 100 replicates");
}

}  // namespace detail

struct BestWinsResult {
  Estimate strict;   // P(S_N > max_{i<N} S_i)
  Estimate co_win;   // P(N in winner set)
};

/// Annealed Theorem-1 estimator: the environment is redrawn every replicate.
inline BestWinsResult estimate_prob_best_wins(const StrengthModel& model, int n_players,
                                              std::size_t replicates, std::uint64_t seed,
                                              unsigned workers = 0) {
  detail::check_replicates(replicates);
  if (n_players < 2) throw std::invalid_argument("estimate_prob_best_wins: need N >= 2");
  auto counts = detail::run_replicates<detail::PairCount>(
      replicates, workers, [&](std::size_t r, detail::PairCount& acc) {
        Stream rng(seed, r);
        auto outcome = play(order_statistics(sample(model, n_players, rng)), rng);
        const auto& s = outcome.scores;
        const int best = *std::max_element(s.begin(), s.end());
        const int top = s[n_players - 1];
        if (top == best) {
          ++acc.second;
          if (std::count(s.begin(), s.end(), best) == 1) ++acc.first;
        }
      });
  return {wilson_estimate(counts.first, replicates, seed),
          wilson_estimate(counts.second, replicates, seed)};
}

namespace detail {

struct RankAcc {
  std::vector<int> ranks;  // appended in replicate order within each worker
  std::uint64_t strict_best = 0;
  void merge(const RankAcc& o) {
    ranks.insert(ranks.end(), o.ranks.begin(), o.ranks.end());
    strict_best += o.strict_best;
  }
};

inline double median_of_sorted(std::span<const double> v) {
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return median_of_sorted(v);
}

}  // namespace detail

struct RankSummary {
  std::vector<std::uint64_t> histogram;  // [r-1] counts of rank r from the top
  std::vector<int> ranks;                // rank per replicate
  double mean = 0;
  double median = 0;
  Estimate median_est;                   // bootstrap percentile interval
  std::uint64_t strict_best = 0;         // replicates where the best player wins outright
  EnvironmentMode mode = EnvironmentMode::resample;
};

/// Rank-from-top of the best-ranked winner (rank 1 = strongest player); ties
/// among equal strengths already favor the larger index because winners()
/// keeps every argmax and we take the largest.
inline RankSummary winner_rank_distribution(const StrengthModel& model, int n_players,
                                            std::size_t replicates, std::uint64_t seed,
                                            unsigned workers = 0,
                                            EnvironmentMode mode = EnvironmentMode::resample) {
  detail::check_replicates(replicates);
  if (!model.alpha())
    throw std::invalid_argument("winner_rank_distribution requires alpha metadata on the model");
  std::vector<double> fixed_env;
  if (mode == EnvironmentMode::fixed) {
    Stream env_rng(seed, kEnvironmentStream);
    fixed_env = order_statistics(sample(model, n_players, env_rng));
  }
  auto acc = detail::run_replicates<detail::RankAcc>(
      replicates, workers, [&](std::size_t r, detail::RankAcc& a) {
        Stream rng(seed, r);
        auto strengths = mode == EnvironmentMode::fixed
                             ? fixed_env
                             : order_statistics(sample(model, n_players, rng));
        auto outcome = play(std::move(strengths), rng);
        a.ranks.push_back(n_players - outcome.winner_set.back());
        if (outcome.winner_set.size() == 1 && outcome.winner_set.front() == n_players - 1)
          ++a.strict_best;
      });

  RankSummary summary;
  summary.mode = mode;
  summary.strict_best = acc.strict_best;
  summary.ranks = std::move(acc.ranks);
  summary.histogram.assign(n_players, 0);
  double total = 0;
  std::vector<double> as_double(summary.ranks.size());
  for (std::size_t i = 0; i < summary.ranks.size(); ++i) {
    ++summary.histogram[summary.ranks[i] - 1];
    total += summary.ranks[i];
    as_double[i] = summary.ranks[i];
  }
  summary.mean = total / double(replicates);
  summary.median = detail::median_of(as_double);

  // Percentile bootstrap for the median, 1000 resamples.
  constexpr int kResamples = 1000;
  Stream boot(seed, kBootstrapStream);
  std::vector<double> medians(kResamples);
  std::vector<double> work(summary.ranks.size());
  for (int b = 0; b < kResamples; ++b) {
    for (auto& x : work) x = summary.ranks[boot.next_u64() % summary.ranks.size()];
    medians[b] = detail::median_of(work);
  }
  std::sort(medians.begin(), medians.end());
  auto pick = [&](double q) {
    const auto idx = std::clamp<long long>(std::llround(q * (kResamples - 1)), 0, kResamples - 1);
    return medians[std::size_t(idx)];
  };
  summary.median_est = {summary.median, replicates, pick(0.025), pick(0.975), seed};
  return summary;
}

/// Least-squares slope of log(median) against log(N); needs >= 3 grid points.
inline double rank_exponent_fit(std::span<const double> n_values,
                                std::span<const double> medians) {
  if (n_values.size() != medians.size() || n_values.size() < 3)
    throw std::invalid_argument("rank_exponent_fit: need >= 3 (N, median) points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    const double x = std::log(n_values[i]), y = std::log(medians[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct TopKResult {
  Estimate strict;   // P(max of top k > max of the rest)
  Estimate co_win;   // P(max of top k = overall max)
};

inline TopKResult estimate_prob_top_k_wins(const StrengthModel& model, int n_players, int k,
                                           std::size_t replicates, std::uint64_t seed,
                                           unsigned workers = 0,
                                           EnvironmentMode mode = EnvironmentMode::resample) {
  detail::check_replicates(replicates);
  if (k < 1 || k > n_players) throw std::invalid_argument("estimate_prob_top_k_wins: k out of range");
  std::vector<double> fixed_env;
  if (mode == EnvironmentMode::fixed) {
    Stream env_rng(seed, kEnvironmentStream);
    fixed_env = order_statistics(sample(model, n_players, env_rng));
  }
  auto counts = detail::run_replicates<detail::PairCount>(
      replicates, workers, [&](std::size_t r, detail::PairCount& acc) {
        Stream rng(seed, r);
        auto strengths = mode == EnvironmentMode::fixed
                             ? fixed_env
                             : order_statistics(sample(model, n_players, rng));
        auto outcome = play(std::move(strengths), rng);
        const auto& s = outcome.scores;
        const int top = *std::max_element(s.end() - k, s.end());
        const int rest = k == n_players ? -1 : *std::max_element(s.begin(), s.end() - k);
        if (top > rest) ++acc.first;
        if (top >= rest) ++acc.second;  // top == overall max
      });
  return {wilson_estimate(counts.first, replicates, seed),
          wilson_estimate(counts.second, replicates, seed)};
}

struct CutoffPoint {
  double c = 0;
  double v_tagged = 0;
  Estimate win_prob;         // strict win: S_{N+1} > max_i (S_i + X_{i,N+1})
  Estimate sufficient_prob;  // S_{N+1} > 1 + max_i S_i
  Estimate loss_prob;        // S_{N+1} < max_i S_i
};

namespace detail {

struct TaggedCounts {
  std::uint64_t strict = 0, sufficient = 0, loss = 0;
  void merge(const TaggedCounts& o) {
    strict += o.strict;
    sufficient += o.sufficient;
    loss += o.loss;
  }
};

}  // namespace detail

/// Theorem-3 sweep: v_tagged = 1 + c * epsilon_N per point. Replicate r keeps
/// the same stream across sweep points (common random numbers), which makes
/// the per-replicate strict-win indicator non-decreasing in c.
inline std::vector<CutoffPoint> cutoff_sweep(const StrengthModel& model, int n_players,
                                             std::span<const double> c_values,
                                             std::size_t replicates, std::uint64_t seed,
                                             unsigned workers = 0,
                                             EnvironmentMode mode = EnvironmentMode::resample) {
  detail::check_replicates(replicates);
  if (!model.alpha() || model.support_max() != 1.0)
    throw std::invalid_argument("cutoff_sweep requires alpha metadata and support_max = 1");
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    if (!(c_values[i] > 0)) throw std::invalid_argument("cutoff_sweep: c values must be > 0");
    if (i > 0 && c_values[i] <= c_values[i - 1])
      throw std::invalid_argument("cutoff_sweep: c values must be ascending");
  }
  const double eps = epsilon_n(*model.alpha(), moments(model).theta_u, n_players);
  std::vector<double> fixed_env;
  if (mode == EnvironmentMode::fixed) {
    Stream env_rng(seed, kEnvironmentStream);
    fixed_env = order_statistics(sample(model, n_players, env_rng));
  }
  std::vector<CutoffPoint> points;
  points.reserve(c_values.size());
  for (double c : c_values) {
    const double v_tagged = 1.0 + c * eps;
    auto counts = detail::run_replicates<detail::TaggedCounts>(
        replicates, workers, [&](std::size_t r, detail::TaggedCounts& acc) {
          Stream rng(seed, r);
          auto strengths = mode == EnvironmentMode::fixed
                               ? fixed_env
                               : order_statistics(sample(model, n_players, rng));
          auto outcome = play_with_tagged(std::move(strengths), v_tagged, rng);
          const bool strict = outcome.tagged_strict_win();
          const bool sufficient = outcome.tagged_sufficient_win();
          const bool loss = outcome.tagged_sure_loss();
          if (sufficient && !strict) throw std::logic_error("cutoff_sweep: event nesting broken");
          if (loss && strict) throw std::logic_error("cutoff_sweep: event nesting broken");
          if (strict) ++acc.strict;
          if (sufficient) ++acc.sufficient;
          if (loss) ++acc.loss;
        });
    points.push_back({c, v_tagged, wilson_estimate(counts.strict, replicates, seed),
                      wilson_estimate(counts.sufficient, replicates, seed),
                      wilson_estimate(counts.loss, replicates, seed)});
  }
  return points;
}

/// Deterministic lower score bound for the strongest player at deviation u:
/// sum_{i<N} V_N/(V_N + V_i) - sqrt(N*u).
inline double hoeffding_score_bound(std::span<const double> ascending_strengths, double u) {
  if (!(u > 0)) throw std::domain_error("hoeffding_score_bound: u must be > 0");
  if (ascending_strengths.size() < 2)
    throw std::invalid_argument("hoeffding_score_bound: need at least 2 players");
  const double v_n = ascending_strengths.back();
  double expected = 0;
  for (std::size_t i = 0; i + 1 < ascending_strengths.size(); ++i)
    expected += v_n / (v_n + ascending_strengths[i]);
  return expected - std::sqrt(double(ascending_strengths.size()) * u);
}

struct DeviationBound {
  double probability = 0;  // e^{-u}
  double radius = 0;       // sqrt(n*u/2)
};

/// Bounded-difference tail: P(|Z - EZ| >= sqrt(n*u/2)) <= e^{-u} per side,
/// with n the number of independent blocks (rounds).
inline DeviationBound bounded_difference_tail(std::size_t n_blocks, double u) {
  if (!(u > 0)) throw std::domain_error("bounded_difference_tail: u must be > 0");
  return {std::exp(-u), std::sqrt(double(n_blocks) * u / 2.0)};
}

struct MgfBounds {
  double exact = 0;
  double lower = 0;
  double upper = 0;
};

/// Centered Bernoulli MGF and the sandwich from the appendix lemma. The
/// returned bounds are the lemma's displayed expressions; the lower one is
/// not a valid bound for p > 1/2 (the acceptance suite demonstrates this),
/// so no ordering is enforced here.
inline MgfBounds bernoulli_mgf_bounds(double a, double p) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("bernoulli_mgf_bounds: a must lie in [0,1]");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("bernoulli_mgf_bounds: p must lie in [0,1]");
  MgfBounds b;
  b.exact = p * std::exp(a * (1.0 - p)) + (1.0 - p) * std::exp(-a * p);
  b.lower = 1.0 + a * a / 2.0 * p * (1.0 - p);
  const double e2 = std::exp(2.0);
  b.upper = std::exp(p * (1.0 - p) * a * a * (0.5 + 4.0 * e2 * a / 3.0));
  return b;
}

/// Quenched Monte Carlo mirror of enumerate_exact for oracle-closure checks:
/// event counts over replicates at a fixed strength vector.
struct EventCounts {
  std::size_t replicates = 0;
  std::vector<std::uint64_t> unique_win;    // per player
  std::vector<std::uint64_t> co_win;        // per player
  std::vector<std::uint64_t> top_k_strict;  // per k
  std::vector<std::uint64_t> top_k_cowin;   // per k
  std::vector<std::uint64_t> winner_rank;   // [r-1]
  std::uint64_t tagged_strict = 0, tagged_sufficient = 0, tagged_loss = 0;
  bool has_tagged = false;
};

namespace detail {

struct EventAcc {
  std::vector<std::uint64_t> unique_win, co_win, top_strict, top_cowin, rank;
  std::uint64_t tag_strict = 0, tag_sufficient = 0, tag_loss = 0;
  void init(int n) {
    unique_win.assign(n, 0);
    co_win.assign(n, 0);
    top_strict.assign(n, 0);
    top_cowin.assign(n, 0);
    rank.assign(n, 0);
  }
  void merge(const EventAcc& o) {
    if (o.unique_win.empty()) return;
    if (unique_win.empty()) init(int(o.unique_win.size()));
    for (std::size_t i = 0; i < o.unique_win.size(); ++i) {
      unique_win[i] += o.unique_win[i];
      co_win[i] += o.co_win[i];
      top_strict[i] += o.top_strict[i];
      top_cowin[i] += o.top_cowin[i];
      rank[i] += o.rank[i];
    }
    tag_strict += o.tag_strict;
    tag_sufficient += o.tag_sufficient;
    tag_loss += o.tag_loss;
  }
};

}  // namespace detail

inline EventCounts monte_carlo_events(std::vector<double> strengths,
                                      std::optional<double> v_tagged, std::size_t replicates,
                                      std::uint64_t seed, unsigned workers = 0) {
  detail::check_replicates(replicates);
  detail::check_strengths(strengths);
  const int n = int(strengths.size());
  auto acc = detail::run_replicates<detail::EventAcc>(
      replicates, workers, [&](std::size_t r, detail::EventAcc& a) {
        if (a.unique_win.empty()) a.init(n);
        Stream rng(seed, r);
        auto outcome = v_tagged ? play_with_tagged(strengths, *v_tagged, rng)
                                : play(strengths, rng);
        const auto& s = outcome.scores;
        const int best = outcome.max_score();
        const int best_idx = outcome.winner_set.back();
        if (outcome.winner_set.size() == 1) ++a.unique_win[best_idx];
        for (int i : outcome.winner_set) ++a.co_win[i];
        ++a.rank[n - 1 - best_idx];
        int suffix = -1;
        std::vector<int> prefix(n + 1, -1);
        for (int t = 1; t <= n; ++t) prefix[t] = std::max(prefix[t - 1], s[t - 1]);
        for (int k = 1; k <= n; ++k) {
          suffix = std::max(suffix, s[n - k]);
          if (suffix > prefix[n - k]) ++a.top_strict[k - 1];
          if (suffix == best) ++a.top_cowin[k - 1];
        }
        if (v_tagged) {
          if (outcome.tagged_strict_win()) ++a.tag_strict;
          if (outcome.tagged_sufficient_win()) ++a.tag_sufficient;
          if (outcome.tagged_sure_loss()) ++a.tag_loss;
        }
      });
  EventCounts out;
  out.replicates = replicates;
  out.unique_win = std::move(acc.unique_win);
  out.co_win = std::move(acc.co_win);
  out.top_k_strict = std::move(acc.top_strict);
  out.top_k_cowin = std::move(acc.top_cowin);
  out.winner_rank = std::move(acc.rank);
  out.tagged_strict = acc.tag_strict;
  out.tagged_sufficient = acc.tag_sufficient;
  out.tagged_loss = acc.tag_loss;
  out.has_tagged = v_tagged.has_value();
  return out;
}

}  // namespace bt
