#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bt/rng.hpp"

namespace bt {

/// P(i beats j) = v_i / (v_i + v_j).
inline double match_prob(double v_i, double v_j) {
  if (!(v_i > 0) || !(v_j > 0)) throw std::domain_error("match_prob: strengths must be > 0");
  return v_i / (v_i + v_j);
}

/// All indices attaining the maximum score (0-based).
inline std::vector<int> winners(std::span<const int> total_scores) {
  if (total_scores.empty()) throw std::invalid_argument("winners: empty score vector");
  const int best = *std::max_element(total_scores.begin(), total_scores.end());
  std::vector<int> w;
  for (int i = 0; i < int(total_scores.size()); ++i)
    if (total_scores[i] == best) w.push_back(i);
  return w;
}

struct TaggedRecord {
  double v_tagged = 0;
  int s_tagged = 0;                      // wins of the tagged player over all N opponents
  std::vector<std::uint8_t> beat_flags;  // X_{i,N+1}: 1 if player i beat the tagged player
};

/// Result of one played tournament. Players are 0-based positions in the
/// ascending strength vector, so index N-1 is the strongest; scores exclude
/// matches against the tagged player (those live in `tagged`).
struct TournamentOutcome {
  std::vector<double> strengths;  // ascending
  std::vector<int> scores;        // S_i, wins among the N base players
  std::vector<int> winner_set;    // argmax of scores, 0-based
  std::optional<TaggedRecord> tagged;

  int max_score() const { return scores.empty() ? 0 : *std::max_element(scores.begin(), scores.end()); }

  /// Tagged score beats every total S_i + X_{i,N+1}.
  bool tagged_strict_win() const {
    int best = -1;
    for (std::size_t i = 0; i < scores.size(); ++i)
      best = std::max(best, scores[i] + int(tagged->beat_flags[i]));
    return tagged->s_tagged > best;
  }

  /// S_{N+1} > 1 + max_i S_i, which forces a strict win.
  bool tagged_sufficient_win() const { return tagged->s_tagged > 1 + max_score(); }

  /// S_{N+1} < max_i S_i, which forbids a win.
  bool tagged_sure_loss() const { return tagged->s_tagged < max_score(); }
};

namespace detail {

inline void check_strengths(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("tournament: need at least 2 players");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) throw std::invalid_argument("tournament: strengths must be > 0");
    if (i > 0 && v[i] < v[i - 1])
      throw std::invalid_argument("tournament: strengths must be ascending (order-statistic labeling)");
  }
}

// Lexicographic i<j traversal; scores accumulated in place, X never stored.
inline void play_matches(std::span<const double> v, Stream& rng, std::vector<int>& scores) {
  const int n = int(v.size());
  scores.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const double vi = v[i];
    for (int j = i + 1; j < n; ++j) {
      if (rng.next_double() < vi / (vi + v[j]))
        ++scores[i];
      else
        ++scores[j];
    }
  }
}

}  // namespace detail

/// Play one tournament among ascending strengths; every pair meets once.
inline TournamentOutcome play(std::vector<double> strengths, Stream& rng) {
  detail::check_strengths(strengths);
  TournamentOutcome out;
  detail::play_matches(strengths, rng, out.scores);
  out.winner_set = winners(out.scores);
  out.strengths = std::move(strengths);
  return out;
}

/// Play one tournament plus N matches against a tagged player of strength
/// v_tagged. Base scores keep excluding the tagged matches; the tagged draws
/// happen after the base matches, in player order.
inline TournamentOutcome play_with_tagged(std::vector<double> strengths, double v_tagged,
                                          Stream& rng) {
  detail::check_strengths(strengths);
  if (!(v_tagged > 0)) throw std::invalid_argument("tournament: tagged strength must be > 0");
  TournamentOutcome out;
  detail::play_matches(strengths, rng, out.scores);
  out.winner_set = winners(out.scores);
  TaggedRecord rec;
  rec.v_tagged = v_tagged;
  rec.beat_flags.resize(strengths.size());
  int tagged_wins = 0;
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    const bool i_beats_tagged = rng.next_double() < strengths[i] / (strengths[i] + v_tagged);
    rec.beat_flags[i] = i_beats_tagged ? 1 : 0;
    if (!i_beats_tagged) ++tagged_wins;
  }
  rec.s_tagged = tagged_wins;
  out.tagged = std::move(rec);
  out.strengths = std::move(strengths);
  return out;
}

/// Exact event probabilities by enumerating all 2^M outcome vectors.
struct ExactResults {
  int n = 0;
  std::vector<double> unique_win;        // [i] = P(S_i > S_j for all j != i)
  std::vector<double> co_win;            // [i] = P(i in winner_set)
  std::vector<double> winner_set_size;   // [k-1] = P(|winner_set| = k)
  std::vector<std::vector<double>> score_cdf;  // [i][a] = P(S_i <= a), a = 0..n-1
  std::vector<double> max_score_cdf;           // [a] = P(max_i S_i <= a)
  std::vector<double> top_k_strict;      // [k-1] = P(max of top k by strength > max of rest)
  std::vector<double> top_k_cowin;       // [k-1] = P(max of top k = overall max)
  std::vector<double> winner_rank;       // [r-1] = P(best-ranked winner is r-th from top)
  struct TaggedEvents {
    double strict_win = 0, sufficient_win = 0, sure_loss = 0;
  };
  std::optional<TaggedEvents> tagged;
};

/// Budget-guarded exhaustive enumeration: M = N(N-1)/2 base matches plus N
/// tagged matches when v_tagged is given, M <= 28. Base-score statistics are
/// marginals, so they are unchanged by the presence of the tagged player.
inline ExactResults enumerate_exact(std::span<const double> strengths,
                                    std::optional<double> v_tagged = std::nullopt) {
  detail::check_strengths(strengths);
  if (v_tagged && !(*v_tagged > 0))
    throw std::invalid_argument("enumerate_exact: tagged strength must be > 0");
  const int n = int(strengths.size());
  const int m_base = n * (n - 1) / 2;
  const int m = m_base + (v_tagged ? n : 0);
  if (m > 28) throw std::invalid_argument("enumerate_exact: more than 28 matches");

  // Bit b of an outcome mask: 1 means the first-listed player wins.
  std::vector<double> p_win(m);
  {
    int b = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) p_win[b++] = match_prob(strengths[i], strengths[j]);
    if (v_tagged)
      for (int i = 0; i < n; ++i) p_win[b++] = match_prob(strengths[i], *v_tagged);
  }

  ExactResults res;
  res.n = n;
  res.unique_win.assign(n, 0);
  res.co_win.assign(n, 0);
  res.winner_set_size.assign(n, 0);
  res.score_cdf.assign(n, std::vector<double>(n, 0));
  res.max_score_cdf.assign(n, 0);
  res.top_k_strict.assign(n, 0);
  res.top_k_cowin.assign(n, 0);
  res.winner_rank.assign(n, 0);
  std::vector<long double> unique_win(n, 0), co_win(n, 0), set_size(n, 0), max_cdf(n, 0),
      top_strict(n, 0), top_cowin(n, 0), rank_acc(n, 0);
  std::vector<std::vector<long double>> cdf(n, std::vector<long double>(n, 0));
  long double tag_strict = 0, tag_sufficient = 0, tag_loss = 0;

  std::vector<int> scores(n);
  std::vector<int> suffix_max(n + 1, -1), prefix_max(n + 1, -1);
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask) {
    long double prob = 1.0L;
    for (int b = 0; b < m; ++b)
      prob *= (mask >> b) & 1 ? (long double)p_win[b] : (long double)(1.0 - p_win[b]);
    std::fill(scores.begin(), scores.end(), 0);
    int b = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++b) {
        if ((mask >> b) & 1)
          ++scores[i];
        else
          ++scores[j];
      }

    int best = -1, best_idx = -1, count = 0;
    for (int i = 0; i < n; ++i) {
      if (scores[i] > best) {
        best = scores[i];
        best_idx = i;
        count = 1;
      } else if (scores[i] == best) {
        best_idx = i;  // later index = stronger player
        ++count;
      }
    }
    if (count == 1) unique_win[best_idx] += prob;
    for (int i = 0; i < n; ++i)
      if (scores[i] == best) co_win[i] += prob;
    set_size[count - 1] += prob;
    rank_acc[n - 1 - best_idx] += prob;  // rank r from top has index n-r
    for (int i = 0; i < n; ++i)
      for (int a = scores[i]; a < n; ++a) cdf[i][a] += prob;
    for (int a = best; a < n; ++a) max_cdf[a] += prob;

    // Top k by strength are the last k indices; their max is a suffix
    // maximum and the complement's max a prefix maximum (-1 when empty).
    for (int k = 1; k <= n; ++k) suffix_max[k] = std::max(suffix_max[k - 1], scores[n - k]);
    for (int t = 1; t <= n; ++t) prefix_max[t] = std::max(prefix_max[t - 1], scores[t - 1]);
    for (int k = 1; k <= n; ++k) {
      if (suffix_max[k] > prefix_max[n - k]) top_strict[k - 1] += prob;
      if (suffix_max[k] == best) top_cowin[k - 1] += prob;
    }

    if (v_tagged) {
      int tagged_wins = 0, best_total = -1;
      for (int i = 0; i < n; ++i) {
        const int beat = int((mask >> (m_base + i)) & 1);
        tagged_wins += 1 - beat;
        best_total = std::max(best_total, scores[i] + beat);
      }
      if (tagged_wins > best_total) tag_strict += prob;
      if (tagged_wins > 1 + best) tag_sufficient += prob;
      if (tagged_wins < best) tag_loss += prob;
    }
  }

  for (int i = 0; i < n; ++i) {
    res.unique_win[i] = double(unique_win[i]);
    res.co_win[i] = double(co_win[i]);
    res.winner_set_size[i] = double(set_size[i]);
    res.max_score_cdf[i] = double(max_cdf[i]);
    res.top_k_strict[i] = double(top_strict[i]);
    res.top_k_cowin[i] = double(top_cowin[i]);
    res.winner_rank[i] = double(rank_acc[i]);
    for (int a = 0; a < n; ++a) res.score_cdf[i][a] = double(cdf[i][a]);
  }
  if (v_tagged)
    res.tagged = ExactResults::TaggedEvents{double(tag_strict), double(tag_sufficient),
                                            double(tag_loss)};
  return res;
}

}  // namespace bt
