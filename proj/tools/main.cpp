// annulus-energy: solve, verify, sweep, and evaluate minimal-total-energy
// radial stretchings between spherical annuli.
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annulus/bvp.hpp"
#include "annulus/checks.hpp"
#include "annulus/io.hpp"
#include "annulus/model.hpp"
#include "annulus/problem.hpp"
#include "annulus/variational.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

struct ProblemFlags {
  int n = 2;
  double r = 1, R = 2, r_star = 1, R_star = 2, alpha = 0.5;
};

/// Binds options so that a flat key=value --config file fills in whatever the
/// command line did not set; flags always win.  Values are parsed with
/// std::from_chars (exact decimal-to-binary).
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App& cmd) : cmd_(cmd) {
    cmd.add_option("--config", config_path_, "key=value file; flags take precedence");
  }

  template <typename T>
  CLI::Option* bind(const std::string& name, T& var, const std::string& desc,
                    bool required = false) {
    CLI::Option* opt = cmd_.add_option(name, var, desc);
    entries_.push_back({name.substr(2), opt, required, [&var](const std::string& text) {
                          return parse_value(text, var);
                        }});
    return opt;
  }

  CLI::Option* bind_flag(const std::string& name, bool& var, const std::string& desc) {
    CLI::Option* opt = cmd_.add_flag(name, var, desc);
    entries_.push_back({name.substr(2), opt, false, [&var](const std::string& text) {
                          return parse_value(text, var);
                        }});
    return opt;
  }

  /// Merge config values for unset options, then enforce required presence.
  void finalize() const {
    std::vector<std::pair<std::string, std::string>> kv;
    if (!config_path_.empty()) {
      std::ifstream is(config_path_);
      if (!is) throw CLI::ValidationError("--config", "cannot open " + config_path_);
      std::string line;
      int lineno = 0;
      while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw CLI::ValidationError("--config", "line " + std::to_string(lineno) +
                                                     ": expected key=value");
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
      }
    }
    for (const auto& [key, value] : kv) {
      const Entry* entry = nullptr;
      for (const auto& e : entries_)
        if (e.key == key) entry = &e;
      if (!entry)
        throw CLI::ValidationError("--config", "unknown key '" + key + "'");
      if (entry->opt->count() == 0 && !entry->assign(value))
        throw CLI::ValidationError("--config", "bad value for '" + key + "': " + value);
    }
    for (const auto& e : entries_) {
      if (!e.required || e.opt->count() > 0) continue;
      bool in_config = false;
      for (const auto& [key, value] : kv) in_config |= key == e.key;
      if (!in_config) throw CLI::ValidationError("--" + e.key, "is required");
    }
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    bool required;
    std::function<bool(const std::string&)> assign;
  };

  static bool parse_value(const std::string& text, double& var) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), var);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
  }
  static bool parse_value(const std::string& text, int& var) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), var);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
  }
  static bool parse_value(const std::string& text, std::uint64_t& var) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), var);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
  }
  static bool parse_value(const std::string& text, bool& var) {
    if (text == "1" || text == "true") return var = true, true;
    if (text == "0" || text == "false") return (var = false), true;
    return false;
  }
  static bool parse_value(const std::string& text, std::string& var) {
    var = text;
    return true;
  }

  CLI::App& cmd_;
  std::string config_path_;
  std::vector<Entry> entries_;
};

void add_problem_options(ConfigBinder& b, ProblemFlags& pf) {
  b.bind("--n", pf.n, "dimension (integer >= 2)", true);
  b.bind("--r", pf.r, "inner radius of the domain annulus", true);
  b.bind("--R", pf.R, "outer radius of the domain annulus", true);
  b.bind("--r-star", pf.r_star, "inner radius of the target annulus", true);
  b.bind("--R-star", pf.R_star, "outer radius of the target annulus", true);
  b.bind("--alpha", pf.alpha, "energy weight in (0,1)", true);
}

int thread_cap(int points) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("ANNULUS_ENERGY_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = v;
  }
  return std::min(cap, points);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers; results must be
/// written into index-addressed slots so output order stays deterministic.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("output path not writable: " + path);
  return os;
}

int cmd_solve(const ProblemFlags& pf, double tol, int grid, const std::string& out_dir,
              const std::string& format) {
  const annulus::Problem pb =
      annulus::make_problem(pf.n, pf.r, pf.R, pf.r_star, pf.R_star, pf.alpha);
  const std::string profile_path =
      out_dir + "/profile." + (format == "json" ? "json" : "csv");
  const std::string report_path = out_dir + "/report.json";
  auto profile_os = open_output(profile_path);
  auto report_os = open_output(report_path);

  annulus::BvpOptions opt;
  opt.shoot_tol = tol;
  opt.out_grid = grid;
  const annulus::ShootingResult sol = annulus::find_lambda(pb, opt);
  const annulus::EnergyReport rep = annulus::total_energy(sol.profile, pb);

  if (format == "json") {
    annulus::write_profile_json(profile_os, sol.profile, pb);
  } else {
    annulus::write_profile_csv(profile_os, sol.profile, pb);
  }
  report_os << annulus::report_to_json(rep, pb).dump(2) << '\n';

  std::cout << "lambda_star    " << annulus::detail::fmt_double(sol.lambda_star) << "\n"
            << "case           " << to_string(rep.case_tag.tag) << "\n"
            << "energy_total   " << annulus::detail::fmt_double(rep.total) << "\n"
            << "energy_term    " << annulus::detail::fmt_double(rep.energy_term) << "\n"
            << "distortion     " << annulus::detail::fmt_double(rep.distortion_term) << "\n"
            << "el_residual    " << annulus::detail::fmt_double(rep.el_residual) << "\n"
            << "|H(R)-R*|      " << annulus::detail::fmt_double(sol.residual) << "\n"
            << "wrote          " << profile_path << ", " << report_path << "\n";
  return exit_ok;
}

int cmd_verify(const ProblemFlags& pf, int trials, int oracle_grid, std::uint64_t seed,
               int grid, const std::string& out_dir) {
  const annulus::Problem pb =
      annulus::make_problem(pf.n, pf.r, pf.R, pf.r_star, pf.R_star, pf.alpha);
  const std::string report_path = out_dir + "/verify_report.json";
  auto report_os = open_output(report_path);

  annulus::CheckOptions opt;
  opt.trials = trials;
  opt.oracle_grid = oracle_grid;
  opt.seed = seed;
  opt.grid = grid;
  const auto results = annulus::run_checks(pb, opt);

  nlohmann::json jchecks = nlohmann::json::array();
  bool any_fail = false;
  for (const auto& c : results) {
    const char* tag = c.status == annulus::CheckResult::Status::pass   ? "PASS"
                      : c.status == annulus::CheckResult::Status::skip ? "SKIP"
                                                                       : "FAIL";
    any_fail |= c.status == annulus::CheckResult::Status::fail;
    std::cout << "[" << tag << "] " << c.name << ": " << c.detail << "\n";
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["status"] = tag;
    jc["detail"] = c.detail;
    jc["data"] = c.data;
    jchecks.push_back(std::move(jc));
  }
  nlohmann::json doc;
  doc["n"] = pb.n;
  doc["r"] = pb.r;
  doc["R"] = pb.R;
  doc["r_star"] = pb.r_star;
  doc["R_star"] = pb.R_star;
  doc["alpha"] = pb.alpha;
  doc["seed"] = seed;
  doc["checks"] = jchecks;
  report_os << doc.dump(2) << '\n';
  std::cout << (any_fail ? "verification FAILED" : "all checks passed") << ", report: "
            << report_path << "\n";
  return any_fail ? exit_failure : exit_ok;
}

int cmd_sweep(const ProblemFlags& pf, const std::string& param, double from, double to,
              int count, bool log_spacing, double max_rel_jump, int grid,
              const std::string& out_dir) {
  if (count < 2 || !(to > from))
    throw CLI::ValidationError("sweep", "need --count >= 2 and --to > --from");
  const std::string path = out_dir + "/sweep.csv";
  auto os = open_output(path);

  std::vector<double> xs(count);
  for (int i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / (count - 1);
    xs[i] = log_spacing ? from * std::pow(to / from, u) : from + (to - from) * u;
  }

  const int threads = thread_cap(count);
  if (param == "lambda") {
    const annulus::Problem pb =
        annulus::make_problem(pf.n, pf.r, pf.R, pf.r_star, pf.R_star, pf.alpha);
    if (!(from > 0)) throw CLI::ValidationError("sweep", "lambda sweep needs --from > 0");
    std::vector<double> hr(count), energy(count);
    parallel_for(count, threads, [&](int i) {
      const annulus::Profile prof = annulus::solve_profile(xs[i], pb, grid);
      hr[i] = prof.H.back();
      energy[i] = annulus::profile_energy(prof.s, prof.H, prof.K, pb).total;
    });
    os << "lambda,H_R,energy_total\n";
    for (int i = 0; i < count; ++i)
      os << annulus::detail::fmt_double(xs[i]) << ',' << annulus::detail::fmt_double(hr[i])
         << ',' << annulus::detail::fmt_double(energy[i]) << '\n';
    bool monotone = true;
    for (int i = 1; i < count; ++i) monotone &= hr[i] > hr[i - 1];
    std::cout << "H_lambda(R) monotone increasing: " << (monotone ? "yes" : "NO") << "\n"
              << "wrote " << path << "\n";
    return monotone ? exit_ok : exit_failure;
  }
  if (param == "alpha") {
    if (!(from > 0) || !(to < 1))
      throw CLI::ValidationError("sweep", "alpha sweep needs 0 < --from < --to < 1");
    std::vector<double> lam(count), energy(count);
    parallel_for(count, threads, [&](int i) {
      const annulus::Problem pb =
          annulus::make_problem(pf.n, pf.r, pf.R, pf.r_star, pf.R_star, xs[i]);
      annulus::BvpOptions opt;
      opt.out_grid = grid;
      const annulus::ShootingResult sol = annulus::find_lambda(pb, opt);
      lam[i] = sol.lambda_star;
      energy[i] = annulus::total_energy(sol.profile, pb).total;
    });
    os << "alpha,lambda_star,energy_total\n";
    for (int i = 0; i < count; ++i)
      os << annulus::detail::fmt_double(xs[i]) << ',' << annulus::detail::fmt_double(lam[i])
         << ',' << annulus::detail::fmt_double(energy[i]) << '\n';
    double worst = 0;
    for (int i = 1; i < count; ++i)
      worst = std::max(worst, std::abs(lam[i] - lam[i - 1]) / std::abs(lam[i - 1]));
    std::cout << "max relative jump of lambda_star between adjacent points: " << worst << "\n"
              << "wrote " << path << "\n";
    return worst <= max_rel_jump ? exit_ok : exit_failure;
  }
  throw CLI::ValidationError("sweep", "--param must be lambda or alpha");
}

int cmd_energy(const ProblemFlags& pf, const std::string& profile_path,
               const std::string& out_dir) {
  const annulus::Problem pb =
      annulus::make_problem(pf.n, pf.r, pf.R, pf.r_star, pf.R_star, pf.alpha);
  std::ifstream is(profile_path);
  if (!is) throw std::runtime_error("cannot open profile: " + profile_path);
  const annulus::ProfileTable tab = annulus::read_profile_csv(is);

  annulus::Profile prof;
  prof.s = tab.s;
  prof.H = tab.H;
  prof.K = tab.K ? *tab.K : annulus::fd_slopes(tab.s, tab.H);
  const std::string report_path = out_dir + "/report.json";
  auto report_os = open_output(report_path);

  annulus::EnergyReport rep = annulus::total_energy(prof, pb);
  rep.lambda_star.reset();  // evaluated, not solved
  report_os << annulus::report_to_json(rep, pb).dump(2) << '\n';
  std::cout << "energy_total   " << annulus::detail::fmt_double(rep.total) << "\n"
            << "energy_term    " << annulus::detail::fmt_double(rep.energy_term) << "\n"
            << "distortion     " << annulus::detail::fmt_double(rep.distortion_term) << "\n"
            << "el_residual    " << annulus::detail::fmt_double(rep.el_residual) << "\n"
            << "case           " << to_string(rep.case_tag.tag) << "\n"
            << "wrote          " << report_path << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minimal total energy of radial stretchings between spherical annuli"};
  app.require_subcommand(1);

  ProblemFlags pf_solve, pf_verify, pf_sweep, pf_energy;
  double tol = 1e-9;
  int grid = 512;
  std::string out_dir = ".";
  std::string format = "csv";

  auto* solve = app.add_subcommand("solve", "solve the boundary value problem and report");
  ConfigBinder solve_cfg(*solve);
  add_problem_options(solve_cfg, pf_solve);
  solve_cfg.bind("--tol", tol, "relative shooting tolerance on |H(R)-R*|");
  solve_cfg.bind("--grid", grid, "output grid size")->check(CLI::Range(16, 1 << 20));
  solve_cfg.bind("--out", out_dir, "output directory");
  solve_cfg.bind("--format", format, "profile file format")
      ->check(CLI::IsMember({"csv", "json"}));

  int trials = 100, oracle_grid = 128, vgrid = 512;
  std::uint64_t seed = 12345;
  std::string vout = ".";
  auto* verify = app.add_subcommand("verify", "run the invariant and oracle check battery");
  ConfigBinder verify_cfg(*verify);
  add_problem_options(verify_cfg, pf_verify);
  verify_cfg.bind("--trials", trials, "number of random trial profiles (0 skips)");
  verify_cfg.bind("--oracle-grid", oracle_grid, "grid size for the discrete minimizer")
      ->check(CLI::Range(32, 1 << 16));
  verify_cfg.bind("--seed", seed, "seed for all randomized checks");
  verify_cfg.bind("--grid", vgrid, "solution grid size")->check(CLI::Range(64, 1 << 20));
  verify_cfg.bind("--out", vout, "output directory");

  std::string sweep_param;
  double sweep_from = 0, sweep_to = 0, max_rel_jump = 0.5;
  int sweep_count = 0, sgrid = 256;
  bool sweep_log = false;
  std::string sout = ".";
  auto* sweep = app.add_subcommand("sweep", "tabulate the shooting family over lambda or alpha");
  ConfigBinder sweep_cfg(*sweep);
  add_problem_options(sweep_cfg, pf_sweep);
  sweep_cfg.bind("--param", sweep_param, "sweep parameter: lambda or alpha", true)
      ->check(CLI::IsMember({"lambda", "alpha"}));
  sweep_cfg.bind("--from", sweep_from, "sweep start", true);
  sweep_cfg.bind("--to", sweep_to, "sweep end", true);
  sweep_cfg.bind("--count", sweep_count, "number of sweep points", true);
  sweep_cfg.bind_flag("--log", sweep_log, "log-spaced sweep points");
  sweep_cfg.bind("--max-rel-jump", max_rel_jump,
                 "alpha sweep: largest allowed relative jump of lambda_star");
  sweep_cfg.bind("--grid", sgrid, "profile grid size")->check(CLI::Range(16, 1 << 20));
  sweep_cfg.bind("--out", sout, "output directory");

  std::string profile_path;
  std::string eout = ".";
  auto* energy = app.add_subcommand("energy", "evaluate the energy report of a profile table");
  ConfigBinder energy_cfg(*energy);
  add_problem_options(energy_cfg, pf_energy);
  energy_cfg.bind("--profile", profile_path, "profile csv (columns s,H[,Hdot,...])", true);
  energy_cfg.bind("--out", eout, "output directory");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(solve)) solve_cfg.finalize();
    if (app.got_subcommand(verify)) verify_cfg.finalize();
    if (app.got_subcommand(sweep)) sweep_cfg.finalize();
    if (app.got_subcommand(energy)) energy_cfg.finalize();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (app.got_subcommand(solve))
      return cmd_solve(pf_solve, tol, grid, out_dir, format);
    if (app.got_subcommand(verify))
      return cmd_verify(pf_verify, trials, oracle_grid, seed, vgrid, vout);
    if (app.got_subcommand(sweep))
      return cmd_sweep(pf_sweep, sweep_param, sweep_from, sweep_to, sweep_count, sweep_log,
                       max_rel_jump, sgrid, sout);
    if (app.got_subcommand(energy)) return cmd_energy(pf_energy, profile_path, eout);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_usage;
}
