// SPDX-License-Identifier: Apache-2.0

#ifndef DROBAS_SWEEP_HPP
#define DROBAS_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "drobas/bdro.hpp"
#include "drobas/conjugate_models.hpp"
#include "drobas/csv.hpp"
#include "drobas/dual_solver.hpp"
#include "drobas/newsvendor.hpp"
#include "drobas/random.hpp"

namespace drobas {

enum class Method { DroBas, Bdro };

inline std::string_view to_string(Method method) {
  return method == Method::DroBas ? "dro-bas" : "bdro";
}

inline Method parse_method(std::string_view name) {
  if (name == "dro-bas") return Method::DroBas;
  if (name == "bdro") return Method::Bdro;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected dro-bas or bdro)");
}

enum class CellStatus { Ok, Infeasible, Error };

inline std::string_view to_string(CellStatus status) {
  switch (status) {
    case CellStatus::Ok:
      return "ok";
    case CellStatus::Infeasible:
      return "infeasible";
    case CellStatus::Error:
      return "error";
  }
  return "error";
}

inline CellStatus parse_status(std::string_view name) {
  if (name == "ok") return CellStatus::Ok;
  if (name == "infeasible") return CellStatus::Infeasible;
  if (name == "error") return CellStatus::Error;
  throw std::invalid_argument("unknown status '" + std::string(name) + "'");
}

/// One (method, seed, epsilon, N) solve with its out-of-sample statistics.
struct SweepRow {
  Method method = Method::DroBas;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::size_t budget = 0;
  double x_star = std::nan("");
  double oos_mean = std::nan("");
  double oos_var = std::nan("");
  double solve_seconds = 0.0;
  CellStatus status = CellStatus::Error;
};

struct AggregateRow {
  Method method = Method::DroBas;
  double epsilon = 0.0;
  std::size_t budget = 0;
  double m = 0.0;
  double v = 0.0;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  out.back() = hi;
  return out;
}

/// N_theta = N_xi = sqrt(N) for BDRO at total budget N.
inline std::size_t bdro_side(std::size_t budget) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(budget))));
  if (side * side != budget) {
    throw std::invalid_argument("BDRO budget " + std::to_string(budget) +
                                " is not a perfect square (N_theta = N_xi is required)");
  }
  return side;
}

struct BenchConfig {
  ModelSpec model = ModelSpec::normal_gamma();
  Hyper prior = NormalGammaHyper{0.0, 1.0, 1.0, 1.0};
  double holding_cost = 1.0;
  double backorder_cost = 2.0;
  Interval x_bounds{0.0, 50.0};
  std::size_t n_train = 20;
  std::size_t m_test = 50;
  std::size_t seeds = 200;  // replicates j = 1..seeds
  std::uint64_t root_seed = 0;
  std::vector<double> epsilon_grid = linspace(0.05, 3.0, 21);
  std::vector<std::size_t> budgets{25, 100, 900};
  std::vector<Method> methods{Method::DroBas, Method::Bdro};
  std::size_t workers = 1;
  SolverTolerances tol;
  bool record_timing = true;

  void validate() const {
    validate_hyper();
    newsvendor_oracle(holding_cost, backorder_cost);
    if (!std::isfinite(x_bounds.lo) || !std::isfinite(x_bounds.hi) ||
        !(x_bounds.lo <= x_bounds.hi)) {
      throw std::invalid_argument("decision bounds must be finite with lo <= hi");
    }
    if (n_train < 1 || m_test < 1 || seeds < 1 || workers < 1) {
      throw std::invalid_argument("n-train, m-test, seeds and workers must all be >= 1");
    }
    if (epsilon_grid.empty() || budgets.empty() || methods.empty()) {
      throw std::invalid_argument("epsilon grid, budgets and methods must be non-empty");
    }
    if (!std::is_sorted(epsilon_grid.begin(), epsilon_grid.end())) {
      throw std::invalid_argument("epsilon grid must be sorted ascending");
    }
    for (const double eps : epsilon_grid) {
      if (!(eps >= 0.0) || !std::isfinite(eps)) {
        throw std::invalid_argument("epsilon values must be finite and >= 0");
      }
    }
    for (const auto n : budgets) {
      if (n < 1) throw std::invalid_argument("budgets must be >= 1");
      if (std::find(methods.begin(), methods.end(), Method::Bdro) != methods.end()) {
        bdro_side(n);
      }
    }
  }

 private:
  void validate_hyper() const { drobas::validate(model, prior); }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<AggregateRow> aggregates;
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t infeasible = 0;
  std::size_t failures = 0;
  std::vector<std::string> errors;
};

/// m(eps) and v(eps) for one (method, eps, N) group from per-seed means and
/// variances: mean of variances plus the (J - 1)-normalized variance of means.
inline std::pair<double, double> aggregate_seeds(std::span<const double> means,
                                                 std::span<const double> variances) {
  if (means.size() != variances.size()) {
    throw std::invalid_argument("aggregate: mean and variance counts differ");
  }
  if (means.size() < 2) {
    throw std::invalid_argument("aggregate: at least two seeds are needed for the variance term");
  }
  const auto j = static_cast<double>(means.size());
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / j;
  const double within = std::accumulate(variances.begin(), variances.end(), 0.0) / j;
  double between = 0.0;
  for (const double mj : means) between += (mj - m) * (mj - m);
  return {m, within + between / (j - 1.0)};
}

/// Groups ok rows by (method, N, eps) and aggregates each group. Groups with
/// fewer than two seeds throw unless `skip_small_groups` is set.
inline std::vector<AggregateRow> aggregate(std::span<const SweepRow> rows,
                                           bool skip_small_groups = false) {
  using Key = std::tuple<int, std::size_t, double>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& row : rows) {
    if (row.status != CellStatus::Ok) continue;
    auto& g = groups[{static_cast<int>(row.method), row.budget, row.epsilon}];
    g.first.push_back(row.oos_mean);
    g.second.push_back(row.oos_var);
  }
  std::vector<AggregateRow> out;
  for (const auto& [key, g] : groups) {
    if (g.first.size() < 2 && skip_small_groups) continue;
    const auto [m, v] = aggregate_seeds(g.first, g.second);
    out.push_back({static_cast<Method>(std::get<0>(key)), std::get<2>(key), std::get<1>(key), m, v});
  }
  return out;
}

struct MeanVariance {
  double m = 0.0;
  double v = 0.0;
};

/// a is no worse in both coordinates and strictly better in one.
inline bool dominates(const MeanVariance& a, const MeanVariance& b) {
  return a.m <= b.m && a.v <= b.v && (a.m < b.m || a.v < b.v);
}

inline bool strictly_dominates(const MeanVariance& a, const MeanVariance& b) {
  return a.m < b.m && a.v < b.v;
}

/// Indices of the non-dominated points, ordered by m (stable for ties).
inline std::vector<std::size_t> pareto_front_indices(std::span<const MeanVariance> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].m < points[b].m || (points[a].m == points[b].m && points[a].v < points[b].v);
  });
  std::vector<std::size_t> front;
  for (const auto idx : order) {
    const auto& p = points[idx];
    if (front.empty()) {
      front.push_back(idx);
      continue;
    }
    const auto& last = points[front.back()];
    // Sorted by (m, v): p is dominated iff the last kept point is no worse
    // in v and not identical to p.
    if (p.v < last.v || (p.v == last.v && p.m == last.m)) front.push_back(idx);
  }
  std::stable_sort(front.begin(), front.end(),
                   [&](std::size_t a, std::size_t b) { return points[a].m < points[b].m; });
  return front;
}

inline std::vector<MeanVariance> pareto_front(std::span<const MeanVariance> points) {
  std::vector<MeanVariance> out;
  for (const auto idx : pareto_front_indices(points)) out.push_back(points[idx]);
  return out;
}

// CSV schemas. Column names and order are part of the output contract.

inline constexpr std::string_view results_header =
    "method,seed,epsilon,N,x_star,oos_mean,oos_var,solve_seconds,status";
inline constexpr std::string_view aggregate_header = "method,epsilon,N,m,v";

inline void write_results_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << results_header << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.seed << ',' << csv::format(r.epsilon) << ',' << r.budget
        << ',' << csv::format(r.x_star) << ',' << csv::format(r.oos_mean) << ','
        << csv::format(r.oos_var) << ',' << csv::format(r.solve_seconds) << ','
        << to_string(r.status) << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
  out << aggregate_header << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << csv::format(r.epsilon) << ',' << r.budget << ','
        << csv::format(r.m) << ',' << csv::format(r.v) << '\n';
  }
}

namespace detail {

inline std::vector<std::vector<std::string>> read_table(std::istream& in,
                                                        std::string_view expected_header) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("csv: empty input, expected header '" +
                                std::string(expected_header) + "'");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw std::invalid_argument("csv: header mismatch, expected '" + std::string(expected_header) +
                                "', got '" + line + "'");
  }
  const auto columns = csv::split(expected_header).size();
  std::vector<std::vector<std::string>> table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (fields.size() != columns) {
      throw std::invalid_argument("csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(columns));
    }
    table.emplace_back(fields.begin(), fields.end());
  }
  return table;
}

}  // namespace detail

inline std::vector<SweepRow> read_results_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  for (const auto& f : detail::read_table(in, results_header)) {
    SweepRow r;
    r.method = parse_method(f[0]);
    r.seed = csv::parse_uint(f[1]);
    r.epsilon = csv::parse_double(f[2]);
    r.budget = csv::parse_uint(f[3]);
    r.x_star = csv::parse_double(f[4]);
    r.oos_mean = csv::parse_double(f[5]);
    r.oos_var = csv::parse_double(f[6]);
    r.solve_seconds = csv::parse_double(f[7]);
    r.status = parse_status(f[8]);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  std::vector<AggregateRow> rows;
  for (const auto& f : detail::read_table(in, aggregate_header)) {
    rows.push_back({parse_method(f[0]), csv::parse_double(f[1]), csv::parse_uint(f[2]),
                    csv::parse_double(f[3]), csv::parse_double(f[4])});
  }
  return rows;
}

namespace detail {

using RowKey = std::tuple<int, std::size_t, std::uint64_t, double>;

inline RowKey row_key(const SweepRow& r) {
  return {static_cast<int>(r.method), r.budget, r.seed, r.epsilon};
}

struct SweepUnit {
  Method method;
  std::uint64_t seed;
  std::size_t budget;
  std::vector<double> epsilons;  // still to compute
};

struct UnitOutcome {
  std::vector<SweepRow> rows;
  std::vector<std::string> errors;
};

inline UnitOutcome run_unit(const BenchConfig& config, const DgpSpec& dgp, const SweepUnit& unit) {
  UnitOutcome outcome;
  const auto fail_all = [&](const std::string& message) {
    for (const double eps : unit.epsilons) {
      SweepRow row{unit.method, unit.seed, eps, unit.budget};
      row.status = CellStatus::Error;
      outcome.rows.push_back(row);
    }
    outcome.errors.push_back(std::string(to_string(unit.method)) + " seed " +
                             std::to_string(unit.seed) + " N " + std::to_string(unit.budget) +
                             ": " + message);
  };
  try {
    const auto oracle = newsvendor_oracle(config.holding_cost, config.backorder_cost);
    const auto data = generate_data(dgp, config.n_train, config.m_test, config.root_seed, unit.seed);
    const auto post = update_posterior(config.model, config.prior, data.train);
    const double g = gap(config.model, post);
    auto rng = make_stream(config.root_seed, Stream::Model,
                           {unit.seed, unit.budget, static_cast<std::uint64_t>(unit.method)});

    std::vector<double> center_samples;
    BdroInstance instance;
    if (unit.method == Method::DroBas) {
      center_samples = sample_center(theta_bar(config.model, post), unit.budget, rng);
    } else {
      const auto side = bdro_side(unit.budget);
      instance = make_bdro_instance(config.model, post, side, side, 0.0, config.x_bounds, rng);
    }

    for (const double eps : unit.epsilons) {
      SweepRow row{unit.method, unit.seed, eps, unit.budget};
      try {
        double x = 0.0;
        double seconds = 0.0;
        if (unit.method == Method::DroBas) {
          if (eps < g) {
            row.status = CellStatus::Infeasible;
            outcome.rows.push_back(row);
            continue;
          }
          const auto sol =
              solve_dro_bas(oracle, center_samples, AmbiguitySpec{eps, g}, config.x_bounds, config.tol);
          x = sol.x_star;
          seconds = sol.wall_time;
        } else {
          instance.epsilon = eps;
          const auto sol = solve_bdro(instance, oracle, config.tol);
          x = sol.x_star;
          seconds = sol.wall_time;
        }
        const auto oos = out_of_sample(oracle, x, data.test);
        row.x_star = x;
        row.oos_mean = oos.mean;
        row.oos_var = oos.variance;
        row.solve_seconds = config.record_timing ? seconds : 0.0;
        row.status = CellStatus::Ok;
      } catch (const std::exception& e) {
        row.status = CellStatus::Error;
        outcome.errors.push_back(std::string(to_string(unit.method)) + " seed " +
                                 std::to_string(unit.seed) + " eps " + csv::format(eps) + " N " +
                                 std::to_string(unit.budget) + ": " + e.what());
      }
      outcome.rows.push_back(row);
    }
  } catch (const std::exception& e) {
    outcome.rows.clear();
    fail_all(e.what());
  }
  return outcome;
}

}  // namespace detail

/// Runs every (method, seed, eps, N) cell not already present in `completed`.
///
/// Each (method, seed, N) unit fits the posterior on its seed's training data
/// and draws one set of model samples shared across the epsilon grid. Both
/// methods see identical train/test data for a given seed. Units run on a
/// bounded pool of `config.workers` threads; the output is sorted and does not
/// depend on scheduling. Rows with status `error` in `completed` are retried.
///
/// `on_unit`, when set, receives each unit's rows as soon as the unit
/// finishes (serialized, in completion order) so callers can checkpoint.
inline SweepResult run_sweep(const BenchConfig& config, const DgpSpec& dgp,
                             std::span<const SweepRow> completed = {},
                             const std::function<void(std::span<const SweepRow>)>& on_unit = {}) {
  config.validate();
  dgp.validate();

  std::map<detail::RowKey, SweepRow> done;
  for (const auto& row : completed) {
    if (row.status != CellStatus::Error) done.emplace(detail::row_key(row), row);
  }

  std::vector<detail::SweepUnit> units;
  SweepResult result;
  for (const auto method : config.methods) {
    for (const auto budget : config.budgets) {
      for (std::uint64_t j = 1; j <= config.seeds; ++j) {
        detail::SweepUnit unit{method, j, budget, {}};
        for (const double eps : config.epsilon_grid) {
          const SweepRow probe{method, j, eps, budget};
          if (done.count(detail::row_key(probe)) != 0) {
            ++result.reused;
          } else {
            unit.epsilons.push_back(eps);
          }
        }
        if (!unit.epsilons.empty()) units.push_back(std::move(unit));
      }
    }
  }

  std::vector<detail::UnitOutcome> outcomes(units.size());
  std::atomic<std::size_t> next{0};
  std::mutex report;
  const auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      outcomes[i] = detail::run_unit(config, dgp, units[i]);
      if (on_unit) {
        const std::lock_guard lock{report};
        on_unit(outcomes[i].rows);
      }
    }
  };
  const std::size_t thread_count = std::min(config.workers, units.size());
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
  }

  for (auto& outcome : outcomes) {
    for (const auto& row : outcome.rows) {
      ++result.computed;
      done.insert_or_assign(detail::row_key(row), row);
    }
    for (auto& message : outcome.errors) result.errors.push_back(std::move(message));
  }
  // Keep rows from `completed` that fall outside this configuration's grid.
  result.rows.reserve(done.size());
  for (const auto& [key, row] : done) {
    result.rows.push_back(row);
    if (row.status == CellStatus::Infeasible) ++result.infeasible;
    if (row.status == CellStatus::Error) ++result.failures;
  }
  result.aggregates = aggregate(result.rows, true);
  return result;
}

}  // namespace drobas

#endif
