#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bt {

/// Round-robin pairing table. Player indices are 1-based to match the
/// permutation formulas the schedule is built from. Even N plays N-1 rounds;
/// odd N plays N rounds with one bye per round (ghost-player construction).
struct Schedule {
  int n_players = 0;
  std::vector<std::vector<std::pair<int, int>>> rounds;  // pairs (a, b), a < b
  std::vector<std::optional<int>> byes;                  // one entry per round
};

namespace detail {

inline void check_even_player(int n, int i) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("sigma is only defined for even N >= 2");
  if (i < 1 || i > n) throw std::out_of_range("player index out of range");
}

}  // namespace detail

/// sigma^power(i) for the cycle sigma = (1)(2 3 ... N): sigma(1) = 1,
/// sigma(i) = i+1 for 1 < i < N, sigma(N) = 2. Negative powers invert.
inline int sigma_apply(int n, long long power, int i) {
  detail::check_even_player(n, i);
  if (i == 1) return 1;
  const long long cycle = n - 1;
  long long pos = (i - 2 + power) % cycle;
  if (pos < 0) pos += cycle;
  return int(pos) + 2;
}

/// Opponent of player i in round k: A(k,i) = sigma^{-(k-1)}(N+1 - sigma^{k-1}(i)).
/// For each round A(k,.) is a fixed-point-free involution; for each player
/// A(.,i) enumerates every opponent exactly once.
inline int opponent(int n, int k, int i) {
  detail::check_even_player(n, i);
  if (k < 1 || k > n - 1) throw std::out_of_range("round index out of range");
  return sigma_apply(n, -(k - 1), n + 1 - sigma_apply(n, k - 1, i));
}

/// Full schedule. Odd N runs the even construction on N+1 players and turns
/// every match against the ghost N+1 into a bye; byes count neither as a win
/// nor a loss. Pairs are emitted smaller-index first, rounds in order.
inline Schedule build_schedule(int n) {
  if (n < 2) throw std::invalid_argument("build_schedule: need at least 2 players");
  const bool odd = n % 2 != 0;
  const int m = odd ? n + 1 : n;
  Schedule s;
  s.n_players = n;
  s.rounds.resize(m - 1);
  s.byes.resize(m - 1);
  for (int k = 1; k <= m - 1; ++k) {
    auto& round = s.rounds[k - 1];
    for (int i = 1; i <= m; ++i) {
      const int j = opponent(m, k, i);
      if (i >= j) continue;
      if (odd && j == m) {
        s.byes[k - 1] = i;
      } else {
        round.emplace_back(i, j);
      }
    }
  }
  return s;
}

}  // namespace bt
