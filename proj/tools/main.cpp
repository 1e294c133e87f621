// coxsvi command line front end.
//
// Subcommands wire the library into reproducible runs: simulate writes a
// cohort plus its generating truth, fit runs stochastic variational
// inference, oracle-fit runs the exact Newton solver, and the remaining
// commands post-process artifacts. Every run with an --out directory
// echoes its fully resolved configuration (config.ini, reloadable through
// --config) and a manifest.json recording command, version, seed, and
// wall time. Primary data artifacts are byte-identical across reruns with
// the same configuration and seed; the manifest is informational.
//
// Exit codes: 0 success; 1 bad usage or invalid input, with a single-line
// error on stderr; 2 runtime failure (numerical breakdown, fatal
// non-convergence).

#include "CLI11.hpp"
#include "json.hpp"

#include "coxsvi/data.hpp"
#include "coxsvi/format.hpp"
#include "coxsvi/likelihood.hpp"
#include "coxsvi/metrics.hpp"
#include "coxsvi/numeric.hpp"
#include "coxsvi/oracle.hpp"
#include "coxsvi/priors.hpp"
#include "coxsvi/simulator.hpp"
#include "coxsvi/svi.hpp"
#include "coxsvi/variational.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace coxsvi;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------
// Small shared helpers

std::vector<Real> parse_real_list(const std::string& text) {
  std::vector<Real> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    std::istringstream item(token);
    Real v;
    if (!(item >> v)) throw ValidationError("cannot parse number '" + token + "'");
    out.push_back(v);
  }
  return out;
}

Vector to_vector(const std::vector<Real>& v) {
  Vector out(static_cast<Index>(v.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(static_cast<Index>(a.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = a[static_cast<std::size_t>(i)].get<Real>();
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& a) {
  const Index r = static_cast<Index>(a.size());
  const Index c = r > 0 ? static_cast<Index>(a[0].size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = a[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != c)
      throw ValidationError("ragged matrix in state file");
    for (Index j = 0; j < c; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<Real>();
  }
  return m;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file " + path.string());
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

// Plain text (whitespace/comma separated) or a truth/state JSON carrying a
// "theta" or "loc" array.
Vector read_theta_file(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    const json j = load_json(path);
    if (j.contains("theta")) return vector_from_json(j["theta"]);
    if (j.contains("loc")) return vector_from_json(j["loc"]);
    throw ValidationError(path + ": no theta or loc array");
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file " + path);
  std::vector<Real> values;
  std::string token;
  while (in >> token) {
    for (const Real v : parse_real_list(token)) values.push_back(v);
  }
  if (values.empty()) throw ValidationError(path + ": no coefficients found");
  return to_vector(values);
}

// ---------------------------------------------------------------------
// Manifest and config echo

struct RunTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  Real seconds() const {
    return std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_manifest(const std::filesystem::path& dir, const CLI::App& sub,
                    std::uint64_t seed, const RunTimer& timer,
                    const std::vector<std::string>& artifacts) {
  std::filesystem::create_directories(dir);
  {
    // Section header keys the echo to this subcommand so the file reloads
    // through --config as-is.
    auto out = open_output(dir / "config.ini");
    out << '[' << sub.get_name() << "]\n" << sub.config_to_str(true, true);
  }
  json manifest;
  manifest["command"] = sub.get_name();
  manifest["version"] = kVersion;
  manifest["seed"] = seed;
  manifest["wall_seconds"] = timer.seconds();
  manifest["artifacts"] = artifacts;
  auto out = open_output(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------
// Option bundles

struct PriorOpts {
  std::string kind = "normal";
  Real sigma = 1;
  Real nu = 1;
  Real s = Real(0.001);

  void attach(CLI::App* cmd) {
    cmd->add_option("--prior", kind, "Prior family")
        ->check(CLI::IsMember({"normal", "student-t"}))
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "Normal prior sd")->capture_default_str();
    cmd->add_option("--nu", nu, "Student-t degrees of freedom")->capture_default_str();
    cmd->add_option("--s", s, "Student-t scale")->capture_default_str();
  }
  PriorSpec build() const {
    return kind == "normal" ? PriorSpec::normal_prior(sigma)
                            : PriorSpec::student_t_prior(nu, s);
  }
};

struct FamilyOpts {
  std::string family = "meanfield";
  int rank = 0;
  bool unit_diagonal = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--family", family, "Variational family")
        ->check(CLI::IsMember({"meanfield", "fullrank", "lowrank"}))
        ->capture_default_str();
    cmd->add_option("--rank", rank, "Low-rank factor rows")->capture_default_str();
    cmd->add_flag("--unit-diagonal", unit_diagonal,
                  "Pin the low-rank covariance diagonal at one");
  }
  FamilyConfig build() const {
    FamilyConfig c;
    c.family = family == "meanfield"  ? Family::meanfield
               : family == "fullrank" ? Family::fullrank
                                      : Family::lowrank;
    c.rank = rank;
    c.unit_diagonal = unit_diagonal;
    return c;
  }
};

struct FitOpts {
  Index steps = 1000;
  int mc_samples = 1;
  std::string batch_mode = "obs";
  Index batch_size = 256;
  Real lr = Real(1e-2);
  Real lr_decay = 1;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, const std::string& prefix = "--") {
    cmd->add_option(prefix + "steps", steps, "Optimization steps")->capture_default_str();
    cmd->add_option(prefix + "mc-samples", mc_samples, "Monte Carlo draws per step")
        ->capture_default_str();
    cmd->add_option(prefix + "batch-mode", batch_mode, "Subsampling unit")
        ->check(CLI::IsMember({"ind", "obs"}))
        ->capture_default_str();
    cmd->add_option(prefix + "batch-size", batch_size, "Records or individuals per batch")
        ->capture_default_str();
    cmd->add_option(prefix + "lr", lr, "Learning rate")->capture_default_str();
    cmd->add_option(prefix + "lr-decay", lr_decay,
                    "Total learning-rate decay factor across the run")
        ->capture_default_str();
  }
  FitConfig build() const {
    FitConfig c;
    c.steps = steps;
    c.mc_samples = mc_samples;
    c.batch_mode = batch_mode == "ind" ? BatchMode::individuals : BatchMode::observations;
    c.batch_size = batch_size;
    c.learning_rate = lr;
    c.lr_decay = lr_decay;
    c.seed = seed;
    return c;
  }
};

struct SimOpts {
  Index n_individuals = 1000;
  int n_binary = 3;
  int n_continuous = 3;
  std::string theta_text;
  Real bernoulli_p = Real(0.2);
  std::string baseline = "renewal";
  Real alpha0 = Real(0.5);
  Real hazard_scale = 1;
  Real calibrate = 0;  // target censorship; 0 disables
  Index pilot_n = 200;
  Real censor_low = 1000;
  Real censor_high = 30000;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, const std::string& prefix = "--") {
    cmd->add_option(prefix + "n-individuals", n_individuals, "Cohort size")
        ->capture_default_str();
    cmd->add_option(prefix + "n-binary", n_binary, "Binary covariate count")
        ->capture_default_str();
    cmd->add_option(prefix + "n-continuous", n_continuous, "Continuous covariate count")
        ->capture_default_str();
    cmd->add_option(prefix + "theta", theta_text,
                    "Generating coefficients, comma separated (default all zero)")
        ->capture_default_str();
    cmd->add_option(prefix + "bernoulli-p", bernoulli_p, "Binary covariate success rate")
        ->capture_default_str();
    cmd->add_option(prefix + "baseline", baseline, "Baseline hazard path")
        ->check(CLI::IsMember({"renewal", "constant"}))
        ->capture_default_str();
    cmd->add_option(prefix + "alpha0", alpha0, "Constant baseline probability")
        ->capture_default_str();
    cmd->add_option(prefix + "hazard-scale", hazard_scale, "Baseline path multiplier")
        ->capture_default_str();
    cmd->add_option(prefix + "calibrate", calibrate,
                    "Calibrate hazard-scale to this censorship rate (0 keeps "
                    "hazard-scale as given)")
        ->capture_default_str();
    cmd->add_option(prefix + "pilot-n", pilot_n, "Calibration pilot cohort size")
        ->capture_default_str();
    cmd->add_option(prefix + "censor-low", censor_low, "Censoring draw lower bound")
        ->capture_default_str();
    cmd->add_option(prefix + "censor-high", censor_high, "Censoring draw upper bound")
        ->capture_default_str();
  }
  SimConfig build() const {
    SimConfig c;
    c.n_individuals = n_individuals;
    c.n_binary = n_binary;
    c.n_continuous = n_continuous;
    if (!theta_text.empty()) c.theta = to_vector(parse_real_list(theta_text));
    c.bernoulli_p = bernoulli_p;
    c.baseline.kind = baseline == "constant" ? BaselineKind::constant : BaselineKind::renewal;
    c.baseline.constant_value = alpha0;
    c.hazard_scale = hazard_scale;
    c.censor_low = censor_low;
    c.censor_high = censor_high;
    c.seed = seed;
    if (c.theta.size() == 0) c.theta = Vector::Zero(c.covariates());
    if (c.theta.size() != c.covariates())
      throw ValidationError("theta has " + std::to_string(c.theta.size()) +
                            " entries for " + std::to_string(c.covariates()) +
                            " covariates");
    return c;
  }
  // Resolves the hazard scale, running the pilot calibration when asked.
  SimConfig resolve(int threads) const {
    SimConfig c = build();
    if (calibrate > 0) c.hazard_scale = calibrate_hazard_scale(c, calibrate, pilot_n);
    (void)threads;
    return c;
  }
};

// ---------------------------------------------------------------------
// State serialization

const char* family_name(Family f) {
  switch (f) {
    case Family::meanfield: return "meanfield";
    case Family::fullrank: return "fullrank";
    case Family::lowrank: return "lowrank";
  }
  return "meanfield";
}

void write_state_json(const std::filesystem::path& path, const VariationalState& state,
                      const std::vector<std::string>& names, std::uint64_t seed) {
  json j;
  j["version"] = kVersion;
  j["family"] = family_name(state.family);
  j["seed"] = seed;
  j["covariate_names"] = names;
  j["loc"] = vector_to_json(state.loc);
  switch (state.family) {
    case Family::meanfield:
      j["scale_raw"] = vector_to_json(state.scale_raw);
      break;
    case Family::fullrank:
      j["factor_raw"] = matrix_to_json(state.factor_raw);
      break;
    case Family::lowrank:
      j["w"] = matrix_to_json(state.w);
      j["unit_diagonal"] = state.unit_diagonal;
      if (!state.unit_diagonal) j["diag_raw"] = vector_to_json(state.diag_raw);
      break;
  }
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

VariationalState read_state_json(const std::string& path, std::vector<std::string>* names) {
  const json j = load_json(path);
  VariationalState state;
  const std::string family = j.at("family").get<std::string>();
  state.loc = vector_from_json(j.at("loc"));
  if (family == "meanfield") {
    state.family = Family::meanfield;
    state.scale_raw = vector_from_json(j.at("scale_raw"));
  } else if (family == "fullrank") {
    state.family = Family::fullrank;
    state.factor_raw = matrix_from_json(j.at("factor_raw"));
  } else if (family == "lowrank") {
    state.family = Family::lowrank;
    state.w = matrix_from_json(j.at("w"));
    state.unit_diagonal = j.value("unit_diagonal", false);
    if (!state.unit_diagonal) state.diag_raw = vector_from_json(j.at("diag_raw"));
  } else {
    throw ValidationError(path + ": unknown family '" + family + "'");
  }
  if (names != nullptr && j.contains("covariate_names"))
    *names = j.at("covariate_names").get<std::vector<std::string>>();
  return state;
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<TraceRecord>& trace) {
  auto out = open_output(path);
  out << "step,elbo,loglik,grad_norm\n";
  for (const TraceRecord& t : trace)
    out << format_integer(t.step) << ',' << format_real(t.elbo) << ','
        << format_real(t.loglik) << ',' << format_real(t.grad_norm) << '\n';
}

// Wald summary from the Newton fit, on the same schema the variational
// summary uses so downstream tooling reads either.
PosteriorSummary wald_summary(const MleResult& mle, std::vector<std::string> names,
                              Real level) {
  PosteriorSummary s;
  s.names = std::move(names);
  s.mean = mle.theta;
  s.sd = mle.se;
  const Real z = normal_quantile((1 + level) / 2);
  s.hpd_low = s.mean - z * s.sd;
  s.hpd_high = s.mean + z * s.sd;
  s.hazard_ratio = s.mean.array().exp();
  s.hazard_ratio_low = s.hpd_low.array().exp();
  s.hazard_ratio_high = s.hpd_high.array().exp();
  s.level = level;
  return s;
}

// ---------------------------------------------------------------------
// Subcommands

int run_simulate(const SimOpts& opts, const std::string& out_dir, int threads,
                 const CLI::App& cmd) {
  const RunTimer timer;
  const SimConfig config = opts.resolve(threads);
  const CohortTruth truth = simulate_cohort(config, threads);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "data.csv");
    write_long_csv(out, truth.data.rows, truth.data.covariate_names);
  }
  {
    json j;
    j["version"] = kVersion;
    j["seed"] = config.seed;
    j["n_individuals"] = config.n_individuals;
    j["n_observations"] = truth.data.totals.n_observations;
    j["total_events"] = truth.data.totals.total_events;
    j["theta"] = vector_to_json(truth.theta);
    j["hazard_scale"] = config.hazard_scale;
    j["censorship"] = truth.censorship;
    j["tie_fraction"] = truth.tie_fraction;
    auto out = open_output(dir / "truth.json");
    out << j.dump(2) << '\n';
  }
  write_manifest(dir, cmd, config.seed, timer, {"data.csv", "truth.json"});
  std::cout << "simulated " << truth.data.totals.n_individuals << " individuals, "
            << truth.data.totals.n_observations << " records, "
            << truth.data.totals.total_events << " events, censorship "
            << format_real(truth.censorship) << "\n";
  return 0;
}

int run_fit(const std::string& data_path, const PriorOpts& prior_opts,
            const FamilyOpts& family_opts, const FitOpts& fit_opts, Real level,
            const std::string& out_dir, const CLI::App& cmd) {
  const RunTimer timer;
  const CsvFileDataSource source(data_path);
  const FitResult result =
      fit(source, prior_opts.build(), family_opts.build(), fit_opts.build());

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_state_json(dir / "state.json", result.state, source.covariate_names(),
                   fit_opts.seed);
  write_trace_csv(dir / "trace.csv", result.trace);
  {
    auto out = open_output(dir / "summary.csv");
    write_summary_csv(out, marginal_summary(result.state, level, source.covariate_names()));
  }
  write_manifest(dir, cmd, fit_opts.seed, timer,
                 {"state.json", "trace.csv", "summary.csv"});
  const Real final_elbo = result.trace.empty() ? 0 : result.trace.back().elbo;
  std::cout << "fit " << source.totals().n_observations << " records in "
            << result.trace.size() << " steps, final elbo " << format_real(final_elbo)
            << (result.converged_early ? " (stopped early)" : "") << "\n";
  return 0;
}

int run_oracle_fit(const std::string& data_path, Real tol, int max_iter, Real level,
                   const std::string& out_dir, const CLI::App& cmd) {
  const RunTimer timer;
  const CsvFileDataSource source(data_path);
  NewtonConfig config;
  config.tol = tol;
  config.max_iter = max_iter;
  const MleResult mle = newton_fit(source.fetch_all(), config);

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
      auto out = open_output(dir / "summary.csv");
      write_summary_csv(out, wald_summary(mle, source.covariate_names(), level));
    }
    {
      json j;
      j["version"] = kVersion;
      j["theta"] = vector_to_json(mle.theta);
      j["se"] = vector_to_json(mle.se);
      j["loglik"] = mle.loglik;
      j["iterations"] = mle.iterations;
      j["converged"] = mle.converged;
      auto out = open_output(dir / "oracle.json");
      out << j.dump(2) << '\n';
    }
    write_manifest(dir, cmd, 0, timer, {"summary.csv", "oracle.json"});
  } else {
    write_summary_csv(std::cout, wald_summary(mle, source.covariate_names(), level));
  }
  if (!mle.converged) {
    std::cerr << "error: numeric: newton solver did not converge in "
              << max_iter << " iterations\n";
    return 2;
  }
  std::cout << "oracle fit converged in " << mle.iterations << " iterations, loglik "
            << format_real(mle.loglik) << "\n";
  return 0;
}

int run_summarize(const std::string& state_path, Real level, const std::string& out_dir,
                  const CLI::App& cmd) {
  const RunTimer timer;
  std::vector<std::string> names;
  const VariationalState state = read_state_json(state_path, &names);
  const PosteriorSummary summary = marginal_summary(state, level, names);
  if (out_dir.empty()) {
    write_summary_csv(std::cout, summary);
    return 0;
  }
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "summary.csv");
    write_summary_csv(out, summary);
  }
  write_manifest(dir, cmd, 0, timer, {"summary.csv"});
  return 0;
}

int run_concordance(const std::string& data_path, const std::string& theta_path) {
  const CsvFileDataSource source(data_path);
  const Vector theta = read_theta_file(theta_path);
  std::cout << "concordance " << format_real(concordance(source.fetch_all(), theta))
            << "\n";
  return 0;
}

int run_reweight(const std::string& data_path, const std::string& theta_path,
                 const ReweightConfig& config, const std::string& out_dir,
                 const CLI::App& cmd) {
  const RunTimer timer;
  const CsvFileDataSource source(data_path);
  const Vector theta = read_theta_file(theta_path);
  const ReweightReport report = reweighting_study(source, theta, config);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "reweight.csv");
    write_reweight_csv(out, report);
  }
  write_manifest(dir, cmd, config.seed, timer, {"reweight.csv"});
  std::cout << "full " << format_real(report.full_loglik) << " reweighted-bias "
            << format_real(report.reweighted_summary.rel_bias) << " naive-bias "
            << format_real(report.naive_summary.rel_bias) << "\n";
  return 0;
}

int run_coverage(const SimOpts& sim_opts, const PriorOpts& prior_opts,
                 const FamilyOpts& family_opts, const FitOpts& fit_opts, Index runs,
                 Real level, std::uint64_t seed, int threads,
                 const std::string& out_dir, const CLI::App& cmd) {
  const RunTimer timer;
  CoverageConfig config;
  config.sim = sim_opts.resolve(threads);
  config.prior = prior_opts.build();
  config.family = family_opts.build();
  config.fit = fit_opts.build();
  config.runs = runs;
  config.level = level;
  config.seed = seed;
  config.threads = threads;
  const CoverageReport report = coverage_experiment(config);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "coverage.csv");
    write_coverage_csv(out, report);
  }
  write_manifest(dir, cmd, seed, timer, {"coverage.csv"});
  std::cout << format_coverage_table(report);
  return 0;
}

std::string single_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian Cox regression on subsampled counting-process data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  // Config files are processed by the root parser only, with values keyed
  // by [subcommand] sections; unknown keys are an error.
  app.set_config("--config", "", "Read options from an INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  auto configure = [](CLI::App* cmd) {
    cmd->configurable(true);
    return cmd;
  };

  // simulate
  CLI::App* sim_cmd = configure(app.add_subcommand("simulate", "Generate a cohort"));
  SimOpts sim_opts;
  sim_opts.attach(sim_cmd);
  std::string sim_out;
  int sim_threads = 1;
  sim_cmd->add_option("--seed", sim_opts.seed, "Simulation seed")->capture_default_str();
  sim_cmd->add_option("--threads", sim_threads, "Worker threads")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();

  // fit
  CLI::App* fit_cmd =
      configure(app.add_subcommand("fit", "Variational fit on a data file"));
  std::string fit_data, fit_out;
  PriorOpts fit_prior;
  FamilyOpts fit_family;
  FitOpts fit_opts;
  Real fit_level = Real(0.95);
  fit_cmd->add_option("--data", fit_data, "Long-format CSV")->required();
  fit_prior.attach(fit_cmd);
  fit_family.attach(fit_cmd);
  fit_opts.attach(fit_cmd);
  fit_cmd->add_option("--seed", fit_opts.seed, "Fit seed")->capture_default_str();
  fit_cmd->add_option("--level", fit_level, "Interval level for summary.csv")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "Output directory")->required();

  // oracle-fit
  CLI::App* oracle_cmd =
      configure(app.add_subcommand("oracle-fit", "Exact Newton maximum likelihood"));
  std::string oracle_data, oracle_out;
  Real oracle_tol = Real(1e-8);
  int oracle_max_iter = 50;
  Real oracle_level = Real(0.95);
  oracle_cmd->add_option("--data", oracle_data, "Long-format CSV")->required();
  oracle_cmd->add_option("--tol", oracle_tol, "Score convergence tolerance")
      ->capture_default_str();
  oracle_cmd->add_option("--max-iter", oracle_max_iter, "Newton iteration cap")
      ->capture_default_str();
  oracle_cmd->add_option("--level", oracle_level, "Wald interval level")
      ->capture_default_str();
  oracle_cmd->add_option("--out", oracle_out, "Output directory (stdout when omitted)");

  // summarize
  CLI::App* sum_cmd =
      configure(app.add_subcommand("summarize", "Marginal summary of a saved state"));
  std::string sum_state, sum_out;
  Real sum_level = Real(0.95);
  sum_cmd->add_option("--state", sum_state, "state.json from a fit")->required();
  sum_cmd->add_option("--level", sum_level, "Interval level")->capture_default_str();
  sum_cmd->add_option("--out", sum_out, "Output directory (stdout when omitted)");

  // concordance
  CLI::App* conc_cmd =
      configure(app.add_subcommand("concordance", "Concordance of a coefficient vector"));
  std::string conc_data, conc_theta;
  conc_cmd->add_option("--data", conc_data, "Long-format CSV")->required();
  conc_cmd->add_option("--theta", conc_theta,
                       "Coefficient file (text list, truth.json, or state.json)")
      ->required();

  // reweight-study
  CLI::App* rw_cmd = configure(
      app.add_subcommand("reweight-study", "Batch log-likelihood estimator study"));
  std::string rw_data, rw_theta, rw_out;
  std::string rw_mode = "obs";
  ReweightConfig rw_config;
  rw_cmd->add_option("--data", rw_data, "Long-format CSV")->required();
  rw_cmd->add_option("--theta", rw_theta, "Coefficient file")->required();
  rw_cmd->add_option("--batch-size", rw_config.batch_size, "Batch size")
      ->capture_default_str();
  rw_cmd->add_option("--n-batches", rw_config.n_batches, "Number of draws")
      ->capture_default_str();
  rw_cmd->add_option("--batch-mode", rw_mode, "Subsampling unit")
      ->check(CLI::IsMember({"ind", "obs"}))
      ->capture_default_str();
  rw_cmd->add_option("--seed", rw_config.seed, "Sampling seed")->capture_default_str();
  rw_cmd->add_option("--out", rw_out, "Output directory")->required();

  // coverage
  CLI::App* cov_cmd = configure(
      app.add_subcommand("coverage", "Repeated simulate-fit calibration experiment"));
  SimOpts cov_sim;
  PriorOpts cov_prior;
  FamilyOpts cov_family;
  FitOpts cov_fit;
  Index cov_runs = 30;
  Real cov_level = Real(0.95);
  std::uint64_t cov_seed = 0;
  int cov_threads = 1;
  std::string cov_out;
  cov_sim.attach(cov_cmd, "--sim-");
  cov_prior.attach(cov_cmd);
  cov_family.attach(cov_cmd);
  cov_fit.attach(cov_cmd, "--fit-");
  cov_cmd->add_option("--runs", cov_runs, "Experiment repetitions")->capture_default_str();
  cov_cmd->add_option("--level", cov_level, "Interval level")->capture_default_str();
  cov_cmd->add_option("--seed", cov_seed, "Experiment master seed")->capture_default_str();
  cov_cmd->add_option("--threads", cov_threads, "Parallel runs")->capture_default_str();
  cov_cmd->add_option("--out", cov_out, "Output directory")->required();

  // --config is accepted after the subcommand name as well; the root
  // parser is the one that processes config files, so lift it there.
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc));
  args.emplace_back(argv[0]);
  std::vector<std::string> rest;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      args.emplace_back(a);
      args.emplace_back(argv[++i]);
    } else if (a.rfind("--config=", 0) == 0) {
      args.emplace_back(a);
    } else {
      rest.push_back(a);
    }
  }
  args.insert(args.end(), rest.begin(), rest.end());
  std::vector<char*> argp;
  argp.reserve(args.size());
  for (std::string& a : args) argp.push_back(a.data());

  try {
    app.parse(static_cast<int>(argp.size()), argp.data());
    if (*sim_cmd) return run_simulate(sim_opts, sim_out, sim_threads, *sim_cmd);
    if (*fit_cmd)
      return run_fit(fit_data, fit_prior, fit_family, fit_opts, fit_level, fit_out,
                     *fit_cmd);
    if (*oracle_cmd)
      return run_oracle_fit(oracle_data, oracle_tol, oracle_max_iter, oracle_level,
                            oracle_out, *oracle_cmd);
    if (*sum_cmd) return run_summarize(sum_state, sum_level, sum_out, *sum_cmd);
    if (*conc_cmd) return run_concordance(conc_data, conc_theta);
    if (*rw_cmd) {
      rw_config.mode = rw_mode == "ind" ? BatchMode::individuals : BatchMode::observations;
      return run_reweight(rw_data, rw_theta, rw_config, rw_out, *rw_cmd);
    }
    if (*cov_cmd)
      return run_coverage(cov_sim, cov_prior, cov_family, cov_fit, cov_runs, cov_level,
                          cov_seed, cov_threads, cov_out, *cov_cmd);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: cli: " << single_line(e.what()) << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << single_line(e.what()) << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: validation: " << single_line(e.what()) << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: validation: " << single_line(e.what()) << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error: numeric: " << single_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << single_line(e.what()) << "\n";
    return 2;
  }
}
