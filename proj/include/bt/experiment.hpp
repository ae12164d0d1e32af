#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bt/analysis.hpp"
#include "bt/config.hpp"
#include "bt/scheduler.hpp"
#include "bt/tournament.hpp"
#include "bt/version.hpp"

namespace bt {

/// Round-trip-safe decimal rendering (17 significant digits).
inline std::string fmt_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> cells) { rows.push_back(std::move(cells)); }
};

namespace detail {

inline std::string cell_csv(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return fmt_real(*d);
  return std::get<std::string>(c);
}

inline nlohmann::json cell_json(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return nullptr;
  if (const auto* i = std::get_if<long long>(&c)) return *i;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::get<std::string>(c);
}

inline void write_table(const Table& t, const std::filesystem::path& path, OutputFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  if (format == OutputFormat::csv) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      out << (i ? "," : "") << t.columns[i];
    out << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << cell_csv(row[i]);
      out << "\n";
    }
  } else {
    for (const auto& row : t.rows) {
      nlohmann::ordered_json obj;
      for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
      out << obj.dump() << "\n";
    }
  }
  if (!out.flush()) throw std::ios_base::failure("write failed for " + path.string());
}

inline bool ci_overlap(const Estimate& a, const Estimate& b) {
  return a.ci_high >= b.ci_low && b.ci_high >= a.ci_low;
}

/// Consecutive estimates may only decrease when their intervals overlap.
inline bool nondecreasing_within_ci(std::span<const Estimate> es) {
  for (std::size_t i = 1; i < es.size(); ++i)
    if (es[i].value < es[i - 1].value && !ci_overlap(es[i], es[i - 1])) return false;
  return true;
}

}  // namespace detail

struct RunResult {
  int exit_code = 0;  // 0 = verdicts pass, 1 = verdict failure, 2 = I/O failure
  std::vector<std::string> files;
  std::vector<std::pair<std::string, bool>> verdicts;
  nlohmann::ordered_json extras;
};

namespace detail {

struct SimRow {
  long long rep = 0;
  int max_score = 0, rank = 0, count = 0;
  int strict = -1, sufficient = -1, loss = -1;  // -1 when no tagged player
};

struct SimAcc {
  std::vector<SimRow> rows;
  void merge(const SimAcc& o) { rows.insert(rows.end(), o.rows.begin(), o.rows.end()); }
};

inline Table run_simulate(const ExperimentSpec& spec) {
  const int n = spec.n_grid.front();
  const auto& model = *spec.model;
  auto acc = run_replicates<SimAcc>(
      spec.replicates, spec.workers, [&](std::size_t r, SimAcc& a) {
        Stream rng(spec.seed, r);
        auto strengths = order_statistics(sample(model, n, rng));
        SimRow row;
        row.rep = (long long)(r);
        if (spec.tagged_strength) {
          auto outcome = play_with_tagged(std::move(strengths), *spec.tagged_strength, rng);
          std::vector<int> totals(n);
          for (int i = 0; i < n; ++i) totals[i] = outcome.scores[i] + outcome.tagged->beat_flags[i];
          const auto ws = winners(totals);
          row.max_score = totals[ws.back()];
          row.rank = n - ws.back();
          row.count = int(ws.size());
          row.strict = outcome.tagged_strict_win();
          row.sufficient = outcome.tagged_sufficient_win();
          row.loss = outcome.tagged_sure_loss();
        } else {
          auto outcome = play(std::move(strengths), rng);
          row.max_score = outcome.max_score();
          row.rank = n - outcome.winner_set.back();
          row.count = int(outcome.winner_set.size());
        }
        a.rows.push_back(row);
      });
  Table t;
  t.columns = {"replicate_id", "max_score", "winner_rank_from_top", "winner_count",
               "tagged_strict_win", "tagged_sufficient_win", "tagged_sure_loss"};
  for (const auto& r : acc.rows) {
    std::vector<Cell> cells{r.rep, (long long)r.max_score, (long long)r.rank, (long long)r.count};
    if (r.strict < 0) {
      cells.insert(cells.end(), {Cell{}, Cell{}, Cell{}});
    } else {
      cells.insert(cells.end(),
                   {(long long)r.strict, (long long)r.sufficient, (long long)r.loss});
    }
    t.add_row(std::move(cells));
  }
  return t;
}

inline Table run_schedule(const ExperimentSpec& spec) {
  const auto schedule = build_schedule(spec.n_grid.front());
  Table t;
  t.columns = {"round", "player_a", "player_b"};
  for (std::size_t k = 0; k < schedule.rounds.size(); ++k) {
    for (const auto& [a, b] : schedule.rounds[k])
      t.add_row({(long long)(k + 1), (long long)a, (long long)b});
    if (schedule.byes[k]) t.add_row({(long long)(k + 1), (long long)*schedule.byes[k], Cell{}});
  }
  return t;
}

inline void push_estimate(std::vector<Cell>& cells, const Estimate& e) {
  cells.push_back(e.value);
  cells.push_back(e.ci_low);
  cells.push_back(e.ci_high);
}

}  // namespace detail

/// Execute one experiment: results file(s) plus a JSON manifest in out_dir.
/// Exit code 0 iff every verdict passes; I/O trouble maps to 2.
inline RunResult run(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  Table table;
  std::string stem = to_string(spec.kind);
  nlohmann::ordered_json oracle_doc;

  switch (spec.kind) {
    case ExperimentKind::simulate:
      table = detail::run_simulate(spec);
      break;

    case ExperimentKind::schedule:
      table = detail::run_schedule(spec);
      break;

    case ExperimentKind::theorem1: {
      table.columns = {"n", "replicates", "strict_value", "strict_ci_low", "strict_ci_high",
                       "cowin_value", "cowin_ci_low", "cowin_ci_high", "seed"};
      std::vector<Estimate> stricts;
      for (int n : spec.n_grid) {
        auto r = estimate_prob_best_wins(*spec.model, n, spec.replicates, spec.seed, spec.workers);
        std::vector<Cell> cells{(long long)n, (long long)spec.replicates};
        detail::push_estimate(cells, r.strict);
        detail::push_estimate(cells, r.co_win);
        cells.push_back((long long)spec.seed);
        table.add_row(std::move(cells));
        stricts.push_back(r.strict);
      }
      result.verdicts.emplace_back("trend_nondecreasing_within_ci",
                                   detail::nondecreasing_within_ci(stricts));
      if (stricts.size() >= 2) {
        const double gain = stricts.back().value - stricts.front().value;
        result.extras["strict_gain"] = gain;
        result.verdicts.emplace_back("strict_gain_ge_0.05", gain >= 0.05);
      }
      break;
    }

    case ExperimentKind::theorem2: {
      table.columns = {"n",           "replicates",    "median_rank",  "median_ci_low",
                       "median_ci_high", "mean_rank",  "strict_best_value",
                       "strict_best_ci_low", "strict_best_ci_high", "seed"};
      std::vector<double> n_values, medians;
      Estimate last_best{};
      for (int n : spec.n_grid) {
        auto summary = winner_rank_distribution(*spec.model, n, spec.replicates, spec.seed,
                                                spec.workers, spec.environment);
        auto best = wilson_estimate(summary.strict_best, spec.replicates, spec.seed);
        std::vector<Cell> cells{(long long)n, (long long)spec.replicates, summary.median,
                                summary.median_est.ci_low, summary.median_est.ci_high,
                                summary.mean};
        detail::push_estimate(cells, best);
        cells.push_back((long long)spec.seed);
        table.add_row(std::move(cells));
        n_values.push_back(n);
        medians.push_back(summary.median);
        last_best = best;
      }
      const double alpha = *spec.model->alpha();
      const double predicted = 1.0 - alpha / 2.0;
      result.extras["predicted_exponent"] = predicted;
      if (n_values.size() >= 3) {
        const double exponent = rank_exponent_fit(n_values, medians);
        result.extras["fitted_exponent"] = exponent;
        result.verdicts.emplace_back("exponent_within_0.2_of_predicted",
                                     std::abs(exponent - predicted) <= 0.2);
      }
      result.extras["strict_best_at_max_n"] = last_best.value;
      result.verdicts.emplace_back("strict_best_at_max_n_le_0.1", last_best.value <= 0.1);
      break;
    }

    case ExperimentKind::theorem3: {
      table.columns = {"c",
                       "v_tagged",
                       "win_value",
                       "win_ci_low",
                       "win_ci_high",
                       "sufficient_value",
                       "sufficient_ci_low",
                       "sufficient_ci_high",
                       "loss_value",
                       "loss_ci_low",
                       "loss_ci_high",
                       "seed"};
      const auto points = cutoff_sweep(*spec.model, spec.n_grid.front(), spec.c_values,
                                       spec.replicates, spec.seed, spec.workers,
                                       spec.environment);
      std::vector<Estimate> wins;
      bool nesting = true;
      for (const auto& p : points) {
        std::vector<Cell> cells{p.c, p.v_tagged};
        detail::push_estimate(cells, p.win_prob);
        detail::push_estimate(cells, p.sufficient_prob);
        detail::push_estimate(cells, p.loss_prob);
        cells.push_back((long long)spec.seed);
        table.add_row(std::move(cells));
        wins.push_back(p.win_prob);
        nesting = nesting && p.sufficient_prob.value <= p.win_prob.value &&
                  p.win_prob.value <= 1.0 - p.loss_prob.value;
      }
      result.verdicts.emplace_back("event_nesting", nesting);
      result.verdicts.emplace_back("win_nondecreasing_in_c",
                                   detail::nondecreasing_within_ci(wins));
      if (wins.size() >= 2) {
        const double sep = wins.back().value - wins.front().value;
        result.extras["win_separation"] = sep;
        result.verdicts.emplace_back("win_separation_ge_0.5", sep >= 0.5);
      }
      break;
    }

    case ExperimentKind::bounds: {
      // Appendix-lemma sandwich scan on the unit square.
      long long lower_violations = 0, upper_violations = 0;
      double worst_lower_gap = 0;
      double worst_a = 0, worst_p = 0;
      for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) {
          const double a = double(i) / 199.0, p = double(j) / 199.0;
          const auto b = bernoulli_mgf_bounds(a, p);
          if (b.lower > b.exact) {
            ++lower_violations;
            if (b.lower - b.exact > worst_lower_gap) {
              worst_lower_gap = b.lower - b.exact;
              worst_a = a;
              worst_p = p;
            }
          }
          if (b.exact > b.upper) ++upper_violations;
        }
      }
      result.extras["sandwich_lower_violations"] = lower_violations;
      result.extras["sandwich_upper_violations"] = upper_violations;
      if (lower_violations > 0) {
        result.extras["sandwich_worst_gap"] = worst_lower_gap;
        result.extras["sandwich_worst_at"] = {worst_a, worst_p};
      }
      result.verdicts.emplace_back("mgf_sandwich_zero_violations",
                                   lower_violations == 0 && upper_violations == 0);

      // Quenched concentration tails at one environment draw.
      const int n = spec.n_grid.front();
      Stream env_rng(spec.seed, kEnvironmentStream);
      const auto strengths = order_statistics(sample(*spec.model, n, env_rng));
      struct ZAcc {
        std::vector<std::pair<int, int>> zs;  // (max score, score of best player)
        void merge(const ZAcc& o) { zs.insert(zs.end(), o.zs.begin(), o.zs.end()); }
      };
      auto acc = detail::run_replicates<ZAcc>(
          spec.replicates, spec.workers, [&](std::size_t r, ZAcc& a) {
            Stream rng(spec.seed, r);
            auto outcome = play(strengths, rng);
            a.zs.emplace_back(outcome.max_score(), outcome.scores[n - 1]);
          });
      double z_mean = 0;
      for (const auto& [z, sn] : acc.zs) z_mean += z;
      z_mean /= double(acc.zs.size());
      const std::size_t rounds = n % 2 == 0 ? n - 1 : n;

      table.columns = {"u",          "bound",      "radius",     "upper_tail_freq",
                       "lower_tail_freq", "hoeffding_freq", "threshold"};
      bool tails_ok = true;
      for (double u : spec.u_values) {
        const auto dev = bounded_difference_tail(rounds, u);
        const double s_bound = hoeffding_score_bound(strengths, u);
        long long up = 0, down = 0, hoeff = 0;
        for (const auto& [z, sn] : acc.zs) {
          if (z >= z_mean + dev.radius) ++up;
          if (z <= z_mean - dev.radius) ++down;
          if (sn < s_bound) ++hoeff;
        }
        const double m = double(acc.zs.size());
        const double threshold = dev.probability + 3.0 * std::sqrt(dev.probability / m);
        tails_ok = tails_ok && up / m <= threshold && down / m <= threshold &&
                   hoeff / m <= threshold;
        table.add_row({u, dev.probability, dev.radius, up / m, down / m, hoeff / m, threshold});
      }
      result.verdicts.emplace_back("tail_frequencies_within_bounds", tails_ok);
      break;
    }

    case ExperimentKind::oracle: {
      const int n = spec.n_grid.front();
      Stream env_rng(spec.seed, kEnvironmentStream);
      const auto strengths = order_statistics(sample(*spec.model, n, env_rng));
      const auto exact = enumerate_exact(strengths, spec.tagged_strength);
      oracle_doc["n"] = n;
      oracle_doc["strengths"] = strengths;
      oracle_doc["unique_win"] = exact.unique_win;
      oracle_doc["co_win"] = exact.co_win;
      oracle_doc["winner_set_size"] = exact.winner_set_size;
      oracle_doc["winner_rank"] = exact.winner_rank;
      oracle_doc["max_score_cdf"] = exact.max_score_cdf;
      oracle_doc["top_k_strict"] = exact.top_k_strict;
      oracle_doc["top_k_cowin"] = exact.top_k_cowin;
      if (exact.tagged) {
        oracle_doc["tagged"] = {{"v_tagged", *spec.tagged_strength},
                                {"strict_win", exact.tagged->strict_win},
                                {"sufficient_win", exact.tagged->sufficient_win},
                                {"sure_loss", exact.tagged->sure_loss}};
      }
      break;
    }
  }

  // Emission: results file(s) first, manifest last. Any I/O failure wins over
  // verdict failures in the exit code.
  try {
    std::filesystem::create_directories(out_dir);
    if (spec.kind == ExperimentKind::oracle) {
      const auto path = out_dir / (stem + ".json");
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::ios_base::failure("cannot open " + path.string());
      out << oracle_doc.dump(2) << "\n";
      if (!out.flush()) throw std::ios_base::failure("write failed for " + path.string());
      result.files.push_back(path.filename().string());
    } else {
      const auto ext = spec.format == OutputFormat::csv ? ".csv" : ".jsonl";
      const auto path = out_dir / (stem + ext);
      detail::write_table(table, path, spec.format);
      result.files.push_back(path.filename().string());
    }

    nlohmann::ordered_json manifest;
    manifest["experiment"] = to_string(spec.kind);
    manifest["library_version"] = kVersion;
    manifest["spec"] = spec.echo;
    manifest["results_files"] = result.files;
    nlohmann::ordered_json verdicts;
    for (const auto& [name, pass] : result.verdicts) verdicts[name] = pass;
    manifest["verdicts"] = verdicts;
    if (!result.extras.is_null()) manifest["extras"] = result.extras;
    manifest["workers_used"] = resolve_workers(spec.workers);
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto mpath = out_dir / "manifest.json";
    std::ofstream mout(mpath, std::ios::binary | std::ios::trunc);
    if (!mout) throw std::ios_base::failure("cannot open " + mpath.string());
    mout << manifest.dump(2) << "\n";
    if (!mout.flush()) throw std::ios_base::failure("write failed for " + mpath.string());
  } catch (const std::exception&) {
    result.exit_code = 2;
    return result;
  }

  for (const auto& [name, pass] : result.verdicts)
    if (!pass) result.exit_code = 1;
  return result;
}

}  // namespace bt
