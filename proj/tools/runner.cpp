#include "runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include "exactdiff/engine.hpp"
#include "json.hpp"

namespace exactdiff::cli {

namespace {

using json = nlohmann::json;

// Shortest decimal that round-trips to the same double (diff-stable goldens).
std::string fmt17(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

struct ExperimentCell {
  ExactSampler::Algorithm algorithm;
  std::string algorithm_name;
  std::string model_name;
  double kappa = 0, omega = 0, tau = 0, delta = 0, nu = 0, rho = 0, toy_c = 0;
  double y0 = 0, T = 0;
  std::optional<double> yT;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t cell_index = 0;
  bool positive_min = false;
  std::optional<double> phi_floor, rate_bound;
  std::uint64_t max_logical_per_path = 200000000ULL;
};

struct CellResult {
  bool capped = false;
  RunCounters counters;
  double wall_seconds = 0.0;
};

ExactSampler::Algorithm parse_algorithm(const std::string& name) {
  if (name == "ea1") return ExactSampler::Algorithm::EA1;
  if (name == "ea2") return ExactSampler::Algorithm::EA2;
  if (name == "bessel-ea1") return ExactSampler::Algorithm::BesselEA1;
  if (name == "ea3") return ExactSampler::Algorithm::EA3;
  throw ConfigError("config: unknown algorithm '" + name + "'");
}

UnitDiffusionSpec build_spec(const ExperimentCell& cell) {
  if (cell.model_name == "growth") {
    const GrowthModelParams p(cell.kappa, cell.omega, cell.tau);
    GrowthSpecOptions opt;
    opt.phi_floor = cell.phi_floor;
    opt.rate_bound = cell.rate_bound;
    if (cell.algorithm == ExactSampler::Algorithm::BesselEA1) {
      return make_growth_bessel_spec(p, cell.delta > 0 ? cell.delta : 4.0, opt);
    }
    UnitDiffusionSpec spec = make_growth_brownian_spec(p, opt);
    return spec;
  }
  if (cell.model_name == "wide-sense-bessel") return make_wide_sense_bessel_spec(cell.nu, cell.rho);
  if (cell.model_name == "sine") return make_sine_drift_spec();
  if (cell.model_name == "zero") return make_zero_drift_spec();
  if (cell.model_name == "two-boundary-toy") return make_two_boundary_toy_spec(cell.toy_c);
  throw ConfigError("config: unknown model '" + cell.model_name + "'");
}

ExactSampler build_sampler(const ExperimentCell& cell) {
  UnitDiffusionSpec spec = build_spec(cell);
  EngineOptions opt;
  opt.fixed_endpoint = cell.yT;
  opt.positive_min = cell.positive_min;
  opt.max_logical_per_path = cell.max_logical_per_path;
  return ExactSampler(cell.algorithm, std::move(spec), cell.y0, cell.T, std::move(opt));
}

CellResult run_cell(const ExperimentCell& cell) {
  CellResult result;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const ExactSampler sampler = build_sampler(cell);
    for (std::uint64_t r = 0; r < cell.n_paths; ++r) {
      RngStream rng(cell.seed, cell.cell_index * 1000003ULL + r);
      sampler.run(rng, &result.counters);
    }
  } catch (const ResourceCapError&) {
    result.capped = true;  // reported as an incomplete ("--") row
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<ExperimentCell> build_cells(const Config& cfg, const CommonArgs& args) {
  ExperimentCell base;
  base.algorithm_name = cfg.get_string("experiment", "algorithm");
  base.algorithm = parse_algorithm(base.algorithm_name);
  base.model_name = cfg.get_string("model", "model");
  base.T = cfg.get_number("experiment", "T");
  base.n_paths = static_cast<std::uint64_t>(cfg.get_number("experiment", "n_paths"));
  base.seed = args.seed_override
                  ? *args.seed_override
                  : static_cast<std::uint64_t>(cfg.get_number("experiment", "seed", 1.0));
  if (cfg.has("experiment", "yT")) base.yT = cfg.get_number("experiment", "yT");
  base.positive_min = cfg.get_bool("experiment", "positive_min", false);
  base.max_logical_per_path = static_cast<std::uint64_t>(
      cfg.get_number("experiment", "max_variates_per_path", 200000000.0));
  base.omega = cfg.get_number("model", "omega", 3.0);
  base.tau = cfg.get_number("model", "tau", 1.0);
  base.delta = cfg.get_number("model", "delta", 4.0);
  base.nu = cfg.get_number("model", "nu", 1.0);
  base.rho = cfg.get_number("model", "rho", 0.0);
  base.toy_c = cfg.get_number("model", "c", 2.0);
  if (cfg.has("model", "phi_floor")) base.phi_floor = cfg.get_number("model", "phi_floor");
  if (cfg.has("model", "rate_bound")) base.rate_bound = cfg.get_number("model", "rate_bound");

  const auto kappas = cfg.get_number_or_list("model", "kappa", 1.0);
  const auto y0s = cfg.get_number_or_list("experiment", "y0");
  std::vector<ExperimentCell> cells;
  std::uint64_t index = 0;
  for (const double kappa : kappas) {
    for (const double y0 : y0s) {
      ExperimentCell cell = base;
      cell.kappa = kappa;
      cell.y0 = y0;
      cell.cell_index = index++;
      cells.push_back(cell);
    }
  }
  return cells;
}

void run_pool(std::vector<ExperimentCell>& cells, std::vector<CellResult>& results, int jobs) {
  results.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(cells[i]);
    }
  };
  const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

std::string csv_row(const ExperimentCell& cell, const CellResult& res) {
  std::string row = cell.algorithm_name + "," + cell.model_name + "," + fmt17(cell.kappa) + "," +
                    fmt17(cell.omega) + "," + fmt17(cell.tau) + "," + fmt17(cell.y0) + "," +
                    (cell.yT ? fmt17(*cell.yT) : std::string("free")) + "," + fmt17(cell.T) + "," +
                    std::to_string(cell.n_paths);
  if (res.capped) {
    row += ",--,--,--,--,--,--";
    return row;
  }
  const double n = static_cast<double>(cell.n_paths);
  row += ",ok";
  row += "," + fmt17(res.counters.attempts / n);
  row += "," + fmt17(res.counters.poisson_points / n);
  row += "," + fmt17(res.counters.skeleton_points / n);
  row += "," + fmt17(res.counters.logical_draws / n);
  row += "," + fmt17(res.counters.raw_uniforms / n);
  return row;
}

json json_row(const ExperimentCell& cell, const CellResult& res) {
  json j;
  j["algorithm"] = cell.algorithm_name;
  j["model"] = cell.model_name;
  j["kappa"] = cell.kappa;
  j["omega"] = cell.omega;
  j["tau"] = cell.tau;
  j["y0"] = cell.y0;
  if (cell.yT) {
    j["yT"] = *cell.yT;
  } else {
    j["yT"] = nullptr;
  }
  j["T"] = cell.T;
  j["n_paths"] = cell.n_paths;
  j["rng_seed"] = cell.seed;
  if (res.capped) {
    j["status"] = "--";
    return j;
  }
  const double n = static_cast<double>(cell.n_paths);
  j["status"] = "ok";
  j["attempts"] = res.counters.attempts / n;
  j["poisson_points"] = res.counters.poisson_points / n;
  j["skeleton_points"] = res.counters.skeleton_points / n;
  j["random_variables"] = res.counters.logical_draws / n;
  j["raw_uniforms"] = res.counters.raw_uniforms / n;
  j["n_accepted"] = cell.n_paths;
  j["total_time_s"] = res.wall_seconds;  // informational, hardware-bound
  return j;
}

}  // namespace

int cmd_bench(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  std::vector<ExperimentCell> cells = build_cells(cfg, args);
  std::vector<CellResult> results;
  run_pool(cells, results, args.jobs);

  std::filesystem::create_directories(args.out_dir);
  {
    std::ofstream csv(args.out_dir + "/bench.csv");
    csv << "algorithm,model,kappa,omega,tau,y0,yT,T,n_paths,status,attempts,poisson_points,"
           "skeleton_points,random_variables,raw_uniforms\n";
    for (std::size_t i = 0; i < cells.size(); ++i) csv << csv_row(cells[i], results[i]) << "\n";
  }
  {
    json out;
    out["rows"] = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) out["rows"].push_back(json_row(cells[i], results[i]));
    std::ofstream js(args.out_dir + "/bench.json");
    js << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  std::vector<ExperimentCell> cells = build_cells(cfg, args);
  if (cells.size() != 1) throw ConfigError("simulate: expects a single-cell configuration");
  const ExperimentCell& cell = cells[0];
  const int fill_points = static_cast<int>(cfg.get_number("simulate", "fill_points", 20.0));

  const ExactSampler sampler = build_sampler(cell);
  std::filesystem::create_directories(args.out_dir);
  std::ofstream csv(args.out_dir + "/paths.csv");
  csv << "replicate,t,y\n";
  std::ofstream js(args.out_dir + "/skeletons.json");
  js << "{\"seed\":" << cell.seed << ",\"skeletons\":[";
  for (std::uint64_t r = 0; r < cell.n_paths; ++r) {
    RngStream rng(cell.seed, r);
    const Skeleton sk = sampler.run(rng);
    if (r) js << ",";
    js << "\n" << skeleton_to_json(sk);
    std::vector<double> times;
    times.reserve(fill_points + 1);
    for (int g = 0; g <= fill_points; ++g) times.push_back(cell.T * g / fill_points);
    const auto points = fill_in(sk, times, rng);
    for (const auto& [t, v] : points) {
      csv << r << "," << fmt17(t) << "," << fmt17(v) << "\n";
    }
  }
  js << "\n]}\n";
  return 0;
}

}  // namespace exactdiff::cli
