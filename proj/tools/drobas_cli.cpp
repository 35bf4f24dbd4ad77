// SPDX-License-Identifier: Apache-2.0
//
// drobas: single solves, seed sweeps, aggregation and self-checks for the
// Bayesian-ambiguity-set newsvendor.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "drobas/bdro.hpp"
#include "drobas/conjugate_models.hpp"
#include "drobas/csv.hpp"
#include "drobas/dual_solver.hpp"
#include "drobas/newsvendor.hpp"
#include "drobas/sweep.hpp"
#include "drobas/verify.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace drobas;

enum ExitCode : int { Ok = 0, Validation = 2, Runtime = 3, CheckFailure = 4 };

/// Fills options not given on the command line from a flat JSON object,
/// e.g. {"seeds": 50, "budget": [25, 100], "no-timing": true}.
void apply_json_config(CLI::App* sub, const std::string& path) {
  std::ifstream in{path};
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config file '" + path + "' must hold a JSON object");
  const auto scalar = [&](const std::string& key, const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw std::invalid_argument("config key '" + key + "': expected a string, number, boolean or array");
  };
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw std::invalid_argument("config file '" + path + "': unknown option '" + key + "' for '" +
                                  sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;  // the command line wins
    std::vector<std::string> inputs;
    if (value.is_array()) {
      for (const auto& v : value) inputs.push_back(scalar(key, v));
    } else {
      inputs.push_back(scalar(key, value));
    }
    try {
      opt->add_result(inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
}

struct ModelOptions {
  std::string family = "normal-gamma";
  std::optional<double> known_variance;
  std::vector<double> prior;
};

struct DgpOptions {
  std::string kind = "gaussian";
  double mu = 25.0;
  double sigma2 = 100.0;
  double trunc_lo = 0.0;
  double trunc_hi = HUGE_VAL;
};

struct CostOptions {
  double h = 1.0;
  double b = 2.0;
  double x_min = 0.0;
  double x_max = 50.0;
};

void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--model", m.family, "Conjugate model")
      ->check(CLI::IsMember({"gauss-known-var", "normal-gamma", "exp-gamma"}))
      ->capture_default_str();
  sub->add_option("--known-variance", m.known_variance,
                  "Likelihood variance for gauss-known-var (default: the DGP variance)");
  sub->add_option("--prior", m.prior,
                  "Prior hyperparameters: mu0,var0 | mu0,kappa0,alpha0,beta0 | alpha0,beta0")
      ->delimiter(',');
}

void add_dgp_options(CLI::App* sub, DgpOptions& d) {
  sub->add_option("--dgp", d.kind, "True demand distribution")
      ->check(CLI::IsMember({"gaussian", "truncated-normal"}))
      ->capture_default_str();
  sub->add_option("--mu", d.mu, "DGP mean (before truncation)")->capture_default_str();
  sub->add_option("--sigma2", d.sigma2, "DGP variance (before truncation)")->capture_default_str();
  sub->add_option("--trunc-lo", d.trunc_lo, "Truncation lower bound")->capture_default_str();
  sub->add_option("--trunc-hi", d.trunc_hi, "Truncation upper bound")->capture_default_str();
}

void add_cost_options(CLI::App* sub, CostOptions& c) {
  sub->add_option("--h", c.h, "Holding cost per unit")->capture_default_str();
  sub->add_option("--b", c.b, "Backorder cost per unit")->capture_default_str();
  sub->add_option("--x-min", c.x_min, "Lower bound on the order quantity")->capture_default_str();
  sub->add_option("--x-max", c.x_max, "Upper bound on the order quantity")->capture_default_str();
}

DgpSpec make_dgp(const DgpOptions& d) {
  auto dgp = parse_dgp_kind(d.kind) == DgpKind::Gaussian
                 ? DgpSpec::gaussian(d.mu, d.sigma2)
                 : DgpSpec::truncated_normal(d.mu, d.sigma2, Interval{d.trunc_lo, d.trunc_hi});
  dgp.validate();
  return dgp;
}

ModelSpec make_model(const ModelOptions& m, const DgpOptions& d) {
  switch (parse_family(m.family)) {
    case Family::GaussKnownVar:
      return ModelSpec::gauss_known_variance(m.known_variance.value_or(d.sigma2));
    case Family::NormalGamma:
      return ModelSpec::normal_gamma();
    case Family::ExpGamma:
      return ModelSpec::exp_gamma();
  }
  throw std::logic_error("unreachable");
}

Hyper make_prior(const ModelSpec& spec, const std::vector<double>& p) {
  const auto need = [&](std::size_t count) {
    if (!p.empty() && p.size() != count) {
      throw std::invalid_argument("--prior for " + std::string(to_string(spec.family())) + " takes " +
                                  std::to_string(count) + " values, got " + std::to_string(p.size()));
    }
    return p.empty();
  };
  Hyper prior;
  switch (spec.family()) {
    case Family::GaussKnownVar:
      prior = need(2) ? GaussianHyper{0.0, 100.0} : GaussianHyper{p[0], p[1]};
      break;
    case Family::NormalGamma:
      prior = need(4) ? NormalGammaHyper{0.0, 1.0, 1.0, 1.0} : NormalGammaHyper{p[0], p[1], p[2], p[3]};
      break;
    case Family::ExpGamma:
      prior = need(2) ? GammaHyper{1.0, 1.0} : GammaHyper{p[0], p[1]};
      break;
  }
  validate(spec, prior);
  return prior;
}

/// The DGP as a member of the model family, when it is one.
std::optional<Params> matching_truth(const ModelSpec& spec, const DgpSpec& dgp) {
  if (dgp.kind != DgpKind::Gaussian) return std::nullopt;
  if (spec.family() == Family::NormalGamma) return GaussianParams{dgp.mu_star, dgp.sigma2_star};
  if (spec.family() == Family::GaussKnownVar && spec.known_variance() == dgp.sigma2_star) {
    return GaussianParams{dgp.mu_star, dgp.sigma2_star};
  }
  return std::nullopt;
}

std::string describe(const Hyper& h) {
  std::ostringstream out;
  out << std::setprecision(10);
  if (const auto* g = std::get_if<GaussianHyper>(&h)) {
    out << "mean=" << g->mean << " variance=" << g->variance;
  } else if (const auto* ng = std::get_if<NormalGammaHyper>(&h)) {
    out << "mu=" << ng->mu << " kappa=" << ng->kappa << " alpha=" << ng->alpha << " beta=" << ng->beta;
  } else {
    const auto& eg = std::get<GammaHyper>(h);
    out << "alpha=" << eg.alpha << " beta=" << eg.beta;
  }
  return out.str();
}

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in{path};
  if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& ch : line) {
      if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    }
    std::istringstream fields{line};
    std::string token;
    while (fields >> token) {
      try {
        values.push_back(csv::parse_double(token));
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": not a number: '" + token + "'");
      }
    }
  }
  if (values.empty()) throw std::invalid_argument("data file '" + path + "' holds no observations");
  return values;
}

void print_field(const std::string& name, const std::string& value) {
  std::cout << "  " << std::left << std::setw(16) << name << value << '\n';
}

void print_field(const std::string& name, double value) { print_field(name, csv::format(value)); }

// ---------------------------------------------------------------- solve

struct SolveOptions {
  ModelOptions model;
  DgpOptions dgp;
  CostOptions cost;
  std::string data_path;
  std::string epsilon = "0.5";
  std::string method = "dro-bas";
  std::size_t n_train = 20;
  std::size_t m_test = 50;
  std::size_t budget = 900;
  std::optional<std::size_t> n_theta;
  std::optional<std::size_t> n_xi;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 1;
  std::string record_path;
};

int cmd_solve(const SolveOptions& o) {
  const auto dgp = make_dgp(o.dgp);
  const auto spec = make_model(o.model, o.dgp);
  const auto prior = make_prior(spec, o.model.prior);
  const auto oracle = newsvendor_oracle(o.cost.h, o.cost.b);
  const Interval bounds{o.cost.x_min, o.cost.x_max};

  std::vector<double> train;
  std::optional<Dataset> generated;
  if (o.data_path.empty()) {
    generated = generate_data(dgp, o.n_train, o.m_test, o.seed, o.replicate);
    train = generated->train;
  } else {
    train = read_numbers(o.data_path);
  }
  const auto post = update_posterior(spec, prior, train);
  const double g = gap(spec, post);

  std::optional<double> eps_star;
  std::string eps_star_source;
  if (!o.data_path.empty() || !matching_truth(spec, dgp)) {
    if (train.size() >= 2 || spec.family() == Family::ExpGamma) {
      eps_star = epsilon_star_plugin(spec, post, train);
      eps_star_source = "plug-in from data";
    }
  } else {
    eps_star = epsilon_star(spec, post, *matching_truth(spec, dgp));
    eps_star_source = "true DGP";
  }

  double eps = 0.0;
  Provenance provenance = Provenance::UserSet;
  if (o.epsilon == "eps-min") {
    eps = g;
    provenance = Provenance::EpsMin;
  } else if (o.epsilon == "eps-star") {
    if (!eps_star) throw std::invalid_argument("eps-star is unavailable: need at least two observations");
    eps = *eps_star;
    provenance = Provenance::EpsStar;
  } else {
    eps = csv::parse_double(o.epsilon);
  }

  const bool run_dro = o.method != "bdro";
  const bool run_bdro = o.method != "dro-bas";
  if (run_dro && eps < g) {
    std::cerr << "error: epsilon = " << csv::format(eps) << " is below epsilon_min = " << csv::format(g)
              << ".\n  The expected KL divergence from the posterior never falls below the gap G, so"
                 " no distribution\n  satisfies the constraint and the ambiguity set is empty."
                 " Choose epsilon >= epsilon_min.\n";
    return Validation;
  }

  std::cout << "posterior\n";
  print_field("model", std::string(to_string(spec.family())));
  print_field("observations", std::to_string(post.n));
  print_field("hyper", describe(post.hyper));
  print_field("epsilon", csv::format(eps) + " (" + std::string(to_string(provenance)) + ")");
  print_field("epsilon_min", g);
  if (eps_star) print_field("epsilon_star", csv::format(*eps_star) + " (" + eps_star_source + ")");

  json record{{"model", to_string(spec.family())},
              {"epsilon", eps},
              {"epsilon_provenance", to_string(provenance)},
              {"epsilon_min", g},
              {"seed", o.seed}};
  if (eps_star) record["epsilon_star"] = *eps_star;

  const auto report_oos = [&](double x, json& rec) {
    if (!generated) return;
    const auto oos = out_of_sample(oracle, x, generated->test);
    print_field("oos_mean", oos.mean);
    print_field("oos_var", oos.variance);
    rec["oos_mean"] = oos.mean;
    rec["oos_var"] = oos.variance;
  };

  if (run_dro) {
    auto rng = make_stream(o.seed, Stream::Model, {o.replicate, o.budget, 0});
    const auto samples = sample_center(theta_bar(spec, post), o.budget, rng);
    const auto sol = solve_dro_bas(oracle, samples, AmbiguitySpec{eps, g, provenance}, bounds);
    std::cout << "dro-bas (N = " << o.budget << ")\n";
    print_field("x_star", sol.x_star);
    print_field("gamma_star", sol.gamma_star);
    print_field("value", sol.value);
    print_field("iterations", std::to_string(sol.iterations));
    print_field("tolerances", csv::format(sol.inner_tolerance) + " (log gamma), " +
                                  csv::format(sol.outer_tolerance) + " (x)");
    print_field("wall_time_s", sol.wall_time);
    json rec{{"x_star", sol.x_star}, {"value", sol.value},        {"iterations", sol.iterations},
             {"budget", o.budget},   {"wall_time", sol.wall_time}};
    rec["gamma_star"] = std::isinf(sol.gamma_star) ? json("inf") : json(sol.gamma_star);
    report_oos(sol.x_star, rec);
    record["dro-bas"] = rec;
  }
  if (run_bdro) {
    const std::size_t side = (o.n_theta && o.n_xi) ? 0 : bdro_side(o.budget);
    const std::size_t n_theta = o.n_theta.value_or(side);
    const std::size_t n_xi = o.n_xi.value_or(side);
    auto rng = make_stream(o.seed, Stream::Model, {o.replicate, n_theta * n_xi, 1});
    const auto inst = make_bdro_instance(spec, post, n_theta, n_xi, eps, bounds, rng);
    const auto sol = solve_bdro(inst, oracle);
    double mean_gamma = 0.0;
    for (const double gi : sol.gammas) mean_gamma += gi;
    mean_gamma /= static_cast<double>(sol.gammas.size());
    std::cout << "bdro (N_theta = " << n_theta << ", N_xi = " << n_xi << ")\n";
    print_field("x_star", sol.x_star);
    print_field("mean_gamma", mean_gamma);
    print_field("value", sol.value);
    print_field("iterations", std::to_string(sol.iterations));
    print_field("wall_time_s", sol.wall_time);
    json gammas = json::array();
    for (const double gi : sol.gammas) gammas.push_back(std::isinf(gi) ? json("inf") : json(gi));
    json rec{{"x_star", sol.x_star}, {"value", sol.value}, {"gammas", gammas},
             {"n_theta", n_theta},   {"n_xi", n_xi},       {"wall_time", sol.wall_time}};
    report_oos(sol.x_star, rec);
    record["bdro"] = rec;
  }

  if (!o.record_path.empty()) {
    std::ofstream out{o.record_path};
    if (!out) throw std::runtime_error("cannot write '" + o.record_path + "'");
    out << record.dump(2) << '\n';
  }
  return Ok;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  ModelOptions model;
  DgpOptions dgp;
  CostOptions cost;
  std::vector<double> epsilon_grid;
  double eps_lo = 0.05;
  double eps_hi = 3.0;
  std::size_t eps_count = 21;
  std::size_t n_train = 20;
  std::size_t m_test = 50;
  std::vector<std::size_t> budgets{25, 100, 900};
  std::size_t seeds = 200;
  std::uint64_t seed = 0;
  std::string method = "both";
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::string out_dir = "sweep-out";
  bool no_timing = false;
};

/// Settings that change cell values; a resumed sweep must match them.
json sweep_manifest(const BenchConfig& c, const DgpSpec& dgp) {
  json j{{"model", to_string(c.model.family())},
         {"prior", describe(c.prior)},
         {"dgp", to_string(dgp.kind)},
         {"mu_star", dgp.mu_star},
         {"sigma2_star", dgp.sigma2_star},
         {"h", c.holding_cost},
         {"b", c.backorder_cost},
         {"x_bounds", {c.x_bounds.lo, c.x_bounds.hi}},
         {"n_train", c.n_train},
         {"m_test", c.m_test},
         {"seed", c.root_seed},
         {"tolerances", {c.tol.inner, c.tol.outer}},
         {"timing", c.record_timing}};
  if (c.model.family() == Family::GaussKnownVar) j["known_variance"] = c.model.known_variance();
  if (dgp.truncation) j["truncation"] = {csv::format(dgp.truncation->lo), csv::format(dgp.truncation->hi)};
  return j;
}

/// Rows from an earlier (possibly interrupted) run; a torn last line is dropped.
std::vector<SweepRow> read_checkpoint(const fs::path& path) {
  std::ifstream in{path, std::ios::binary};
  std::string text{std::istreambuf_iterator<char>(in), {}};
  if (const auto cut = text.rfind('\n'); cut != std::string::npos) {
    text.erase(cut + 1);
  } else {
    text.clear();
  }
  if (text.empty()) return {};
  std::istringstream stream{text};
  return read_results_csv(stream);
}

void write_file_atomically(const fs::path& path, const std::string& content) {
  const auto tmp = fs::path{path}.concat(".tmp");
  {
    std::ofstream out{tmp, std::ios::binary};
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

int cmd_sweep(const SweepOptions& o) {
  BenchConfig config;
  const auto dgp = make_dgp(o.dgp);
  config.model = make_model(o.model, o.dgp);
  config.prior = make_prior(config.model, o.model.prior);
  config.holding_cost = o.cost.h;
  config.backorder_cost = o.cost.b;
  config.x_bounds = {o.cost.x_min, o.cost.x_max};
  config.n_train = o.n_train;
  config.m_test = o.m_test;
  config.seeds = o.seeds;
  config.root_seed = o.seed;
  config.epsilon_grid = o.epsilon_grid.empty() ? linspace(o.eps_lo, o.eps_hi, o.eps_count) : o.epsilon_grid;
  config.budgets = o.budgets;
  config.methods.clear();
  if (o.method != "bdro") config.methods.push_back(Method::DroBas);
  if (o.method != "dro-bas") config.methods.push_back(Method::Bdro);
  config.workers = o.workers;
  config.record_timing = !o.no_timing;
  config.validate();

  const fs::path dir{o.out_dir};
  fs::create_directories(dir);
  const auto results_path = dir / "results.csv";
  const auto aggregate_path = dir / "aggregate.csv";
  const auto manifest_path = dir / "manifest.json";
  const auto manifest = sweep_manifest(config, dgp);

  std::vector<SweepRow> completed;
  if (fs::exists(results_path)) {
    if (!fs::exists(manifest_path)) {
      throw std::invalid_argument("'" + results_path.string() +
                                  "' exists without manifest.json; refusing to mix runs (use a fresh --out)");
    }
    std::ifstream mf{manifest_path};
    json previous;
    try {
      mf >> previous;
    } catch (const json::exception&) {
      throw std::invalid_argument("cannot parse '" + manifest_path.string() + "'");
    }
    if (previous != manifest) {
      throw std::invalid_argument("'" + o.out_dir +
                                  "' holds results from a different configuration (see manifest.json); "
                                  "use a fresh --out");
    }
    completed = read_checkpoint(results_path);
  }
  write_file_atomically(manifest_path, manifest.dump(2) + "\n");

  // Checkpoint: rewrite the known rows, then append units as they finish.
  {
    std::ostringstream text;
    write_results_csv(text, completed);
    write_file_atomically(results_path, text.str());
  }
  std::ofstream checkpoint{results_path, std::ios::app | std::ios::binary};
  const auto on_unit = [&](std::span<const SweepRow> rows) {
    for (const auto& r : rows) {
      checkpoint << to_string(r.method) << ',' << r.seed << ',' << csv::format(r.epsilon) << ','
                 << r.budget << ',' << csv::format(r.x_star) << ',' << csv::format(r.oos_mean) << ','
                 << csv::format(r.oos_var) << ',' << csv::format(r.solve_seconds) << ','
                 << to_string(r.status) << '\n';
    }
    checkpoint.flush();
  };

  const auto result = run_sweep(config, dgp, completed, on_unit);
  checkpoint.close();

  std::ostringstream results_text;
  write_results_csv(results_text, result.rows);
  write_file_atomically(results_path, results_text.str());
  std::ostringstream aggregate_text;
  write_aggregate_csv(aggregate_text, result.aggregates);
  write_file_atomically(aggregate_path, aggregate_text.str());

  std::cout << "sweep\n";
  print_field("cells", std::to_string(result.rows.size()));
  print_field("computed", std::to_string(result.computed));
  print_field("reused", std::to_string(result.reused));
  print_field("infeasible", std::to_string(result.infeasible));
  print_field("failed", std::to_string(result.failures));
  print_field("results", results_path.string());
  print_field("aggregate", aggregate_path.string());
  for (const auto& e : result.errors) std::cerr << "cell error: " << e << '\n';
  return result.failures == 0 ? Ok : Runtime;
}

// ---------------------------------------------------------------- aggregate

int cmd_aggregate(const std::string& in_path, const std::string& out_path) {
  std::ifstream in{in_path};
  if (!in) throw std::runtime_error("cannot open '" + in_path + "'");
  const auto rows = read_results_csv(in);
  const auto agg = aggregate(rows, true);
  std::ostringstream text;
  write_aggregate_csv(text, agg);
  write_file_atomically(out_path, text.str());
  std::cout << "aggregate\n";
  print_field("rows", std::to_string(rows.size()));
  print_field("groups", std::to_string(agg.size()));
  print_field("output", out_path);
  return Ok;
}

// ---------------------------------------------------------------- verify

int cmd_verify(bool quick, std::uint64_t seed, bool flip_gap) {
  verify::Options opts;
  if (quick) opts.budget = verify::Budget::quick();
  opts.seed = seed;
  opts.flip_exp_gamma_gap = flip_gap;
  bool all = true;
  for (const auto& check : verify::run_all(opts)) {
    all = all && check.passed;
    std::cout << (check.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(52) << check.name
              << csv::format(check.statistic) << (check.passed ? " <= " : " > ")
              << csv::format(check.threshold) << "  [" << check.detail << "]\n";
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all ? Ok : CheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust newsvendor with Bayesian ambiguity sets"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  app.set_version_flag("--version", "drobas 0.1.0");

  std::string config_path;
  const auto configure = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file of option values; command-line flags take precedence");
  };

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance and report x*, gamma*, epsilon_min, epsilon*");
  configure(solve_cmd);
  add_model_options(solve_cmd, solve.model);
  add_dgp_options(solve_cmd, solve.dgp);
  add_cost_options(solve_cmd, solve.cost);
  solve_cmd->add_option("--data", solve.data_path, "Training observations (numbers separated by whitespace/commas)");
  solve_cmd->add_option("--epsilon", solve.epsilon, "Radius: a number, eps-min or eps-star")->capture_default_str();
  solve_cmd->add_option("--method", solve.method)->check(CLI::IsMember({"dro-bas", "bdro", "both"}))->capture_default_str();
  solve_cmd->add_option("--n-train", solve.n_train, "Training size for generated data")->check(CLI::PositiveNumber)->capture_default_str();
  solve_cmd->add_option("--m-test", solve.m_test, "Test size for generated data")->check(CLI::PositiveNumber)->capture_default_str();
  solve_cmd->add_option("--budget", solve.budget, "Model samples N")->check(CLI::PositiveNumber)->capture_default_str();
  solve_cmd->add_option("--n-theta", solve.n_theta, "BDRO posterior draws (default sqrt N)")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--n-xi", solve.n_xi, "BDRO samples per draw (default sqrt N)")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", solve.seed, "Root seed")->capture_default_str();
  solve_cmd->add_option("--replicate", solve.replicate, "Replicate index j for generated data")->capture_default_str();
  solve_cmd->add_option("--record", solve.record_path, "Write a JSON record of the solve to this file");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Seed sweep over (method, epsilon, N); resumable");
  configure(sweep_cmd);
  add_model_options(sweep_cmd, sweep.model);
  add_dgp_options(sweep_cmd, sweep.dgp);
  add_cost_options(sweep_cmd, sweep.cost);
  sweep_cmd->add_option("--epsilon-grid", sweep.epsilon_grid, "Explicit epsilon values (ascending)")->delimiter(',');
  sweep_cmd->add_option("--eps-lo", sweep.eps_lo, "Smallest grid epsilon")->capture_default_str();
  sweep_cmd->add_option("--eps-hi", sweep.eps_hi, "Largest grid epsilon")->capture_default_str();
  sweep_cmd->add_option("--eps-count", sweep.eps_count, "Grid points")->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--n-train", sweep.n_train)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--m-test", sweep.m_test)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--budget", sweep.budgets, "Model-sample budgets N")->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Replicates J")->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "Root seed")->capture_default_str();
  sweep_cmd->add_option("--method", sweep.method)->check(CLI::IsMember({"dro-bas", "bdro", "both"}))->capture_default_str();
  sweep_cmd->add_option("--workers", sweep.workers)->check(CLI::PositiveNumber)->capture_default_str();
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_flag("--no-timing", sweep.no_timing, "Write solve_seconds as 0 for byte-reproducible output");

  std::string agg_in;
  std::string agg_out = "aggregate.csv";
  auto* agg_cmd = app.add_subcommand("aggregate", "Recompute the aggregate CSV from a results CSV");
  agg_cmd->add_option("--in", agg_in, "Results CSV")->required();
  agg_cmd->add_option("--out", agg_out, "Aggregate CSV to write")->capture_default_str();

  bool quick = false;
  bool flip_gap = false;
  std::uint64_t verify_seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Run identity, decomposition and solver self-checks");
  verify_cmd->add_flag("--quick", quick, "Reduced budgets and wider tolerances");
  verify_cmd->add_option("--seed", verify_seed)->capture_default_str();
  verify_cmd->add_flag("--flip-exp-gamma-gap", flip_gap, "Fault injection: negate the exp-gamma gap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Validation;
  }

  try {
    if (!config_path.empty()) apply_json_config(app.get_subcommands().front(), config_path);
    if (*solve_cmd) return cmd_solve(solve);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*agg_cmd) return cmd_aggregate(agg_in, agg_out);
    if (*verify_cmd) return cmd_verify(quick, verify_seed, flip_gap);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Validation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Runtime;
  }
  return Validation;
}
