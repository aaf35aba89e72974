#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "safescreen/dataset.hpp"
#include "safescreen/errors.hpp"
#include "safescreen/io.hpp"
#include "safescreen/kernel.hpp"
#include "safescreen/path.hpp"
#include "safescreen/screening.hpp"
#include "safescreen/solver.hpp"

namespace safescreen::cli {

namespace {

constexpr double kVerifyAlphaTolerance = 1e-6;

struct DataFlags {
  std::string path;
  bool zero_label_negative = false;
};

struct KernelFlags {
  std::string kernel = "linear";
  std::string gamma;
};

struct SolverFlags {
  double tol = 1e-9;
  std::size_t max_epochs = 10000;
  std::uint64_t seed = 0;
  bool shrinking = false;

  SolverConfig config() const {
    SolverConfig c;
    c.kkt_tolerance = tol;
    c.max_epochs = max_epochs;
    c.shuffle_seed = seed;
    c.active_set_shrinking = shrinking;
    return c;
  }
};

void add_data_flags(CLI::App* cmd, DataFlags& flags) {
  cmd->add_option("--data", flags.path, "LIBSVM-format training data")->required();
  cmd->add_flag("--zero-label-negative", flags.zero_label_negative, "Read label 0 as -1");
}

void add_kernel_flags(CLI::App* cmd, KernelFlags& flags) {
  cmd->add_option("--kernel", flags.kernel, "linear or rbf")
      ->check(CLI::IsMember({"linear", "rbf"}));
  cmd->add_option("--gamma", flags.gamma, "RBF width: a number or auto:k for k/d (default auto:1)");
}

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--tol", flags.tol, "KKT tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-epochs", flags.max_epochs, "Solver epoch limit");
  cmd->add_option("--seed", flags.seed, "Coordinate shuffle seed");
  cmd->add_flag("--shrinking", flags.shrinking, "Enable active-set shrinking");
}

Dataset load_data(const DataFlags& flags) {
  ParseOptions options;
  options.zero_label_is_negative = flags.zero_label_negative;
  return load_libsvm(flags.path, options);
}

Kernel make_kernel(const KernelFlags& flags, const Dataset& data) {
  if (flags.kernel == "linear") {
    if (!flags.gamma.empty()) throw std::invalid_argument("--gamma only applies to --kernel rbf");
    return Kernel::linear();
  }
  return Kernel::rbf(parse_gamma(flags.gamma.empty() ? "auto:1" : flags.gamma, data.dim()));
}

std::string sibling_csv(const std::string& json_path) {
  std::filesystem::path p(json_path);
  if (p.extension() == ".json") return p.replace_extension(".csv").string();
  return json_path + ".csv";
}

void print_objective(std::ostream& out, double C, const ObjectiveReport& r) {
  out << std::setprecision(12) << "C=" << C << " dual=" << r.dual_value
      << " primal=" << r.primal_value << " gap=" << r.gap << " xi=" << r.xi << '\n';
}

// --- train -----------------------------------------------------------------

struct TrainCommand {
  DataFlags data;
  KernelFlags kernel;
  SolverFlags solver;
  double C = 0.0;
  std::string warm;
  std::string out;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_kernel_flags(cmd, kernel);
    add_solver_flags(cmd, solver);
    cmd->add_option("--c", C, "Regularization parameter")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--warm", warm, "Warm-start model JSON");
    cmd->add_option("--out", out, "Output model JSON")->required();
  }

  int run(std::ostream& os) const {
    const Dataset d = load_data(data);
    const KernelOracle oracle(d, make_kernel(kernel, d));
    const std::string hash = dataset_hash(d);
    std::optional<Model> warm_model;
    if (!warm.empty()) {
      warm_model = load_model(warm);
      if (warm_model->dataset_hash != hash)
        throw DataError("warm-start model was trained on a different dataset");
      if (warm_model->kernel.type != oracle.kernel().type ||
          warm_model->kernel.gamma != oracle.kernel().gamma)
        throw DataError("warm-start model uses a different kernel");
    }
    const SolverConfig config = solver.config();
    const DualSolution solution =
        solve(oracle, C, config, warm_model ? &warm_model->solution : nullptr);
    save_model(out, Model{solution, oracle.kernel(), hash, config.kkt_tolerance});
    print_objective(os, C, primal_objective(oracle, solution));
    return kSuccess;
  }
};

// --- screen ----------------------------------------------------------------

struct ScreenCommand {
  DataFlags data;
  SolverFlags solver;
  std::string model;
  std::string model_b;
  std::string test = "it";
  double C = 0.0;
  std::string out;
  bool verify = false;
  unsigned threads = 0;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_solver_flags(cmd, solver);
    cmd->add_option("--model", model, "Reference model JSON (smaller C)")->required();
    cmd->add_option("--c", C, "Target regularization parameter")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--test", test, "bt1, bt2, it or dt")
        ->check(CLI::IsMember({"bt1", "bt2", "it", "dt"}, CLI::ignore_case));
    cmd->add_option("--out", out, "Report JSON (a .csv is written alongside)")->required();
    cmd->add_flag("--verify", verify, "Solve reduced and full problems and compare");
    cmd->add_option("--dt-model-b", model_b, "Model at C_b >= C, for the dome test");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  Model load_checked(const std::string& path, const std::string& hash) const {
    Model m = load_model(path);
    if (!m.dataset_hash.empty() && m.dataset_hash != hash)
      throw DataError("model '" + path + "' was trained on a different dataset");
    return m;
  }

  int run(std::ostream& os, std::ostream& es) const {
    const Dataset d = load_data(data);
    const std::string hash = dataset_hash(d);
    const Model reference = load_checked(model, hash);
    if (reference.solution.alpha.size() != d.size())
      throw DataError("model length does not match the dataset");
    const KernelOracle oracle(d, reference.kernel);
    const ScreeningTest kind = parse_test(test);
    if (kind != ScreeningTest::DT && C < reference.solution.C)
      throw std::invalid_argument("--c must not be below the reference model's C (" +
                                  std::to_string(reference.solution.C) +
                                  "); the balls are built from a smaller-C optimum");

    ScreenOptions options;
    options.threads = threads;
    if (kind == ScreeningTest::DT) {
      if (model_b.empty()) throw std::invalid_argument("--test dt requires --dt-model-b");
      const Model upper = load_checked(model_b, hash);
      if (upper.solution.C < C) throw std::invalid_argument("--dt-model-b must be trained at C_b >= C");
      if (upper.kernel.type != reference.kernel.type || upper.kernel.gamma != reference.kernel.gamma)
        throw DataError("--dt-model-b uses a different kernel");
      options.dome_gamma_b = make_reference(upper.solution, oracle).norm_sq;
    }

    const ReferenceSolution ref = make_reference(reference.solution, oracle);
    ScreeningReport report = screen(ref, C, kind, oracle, options);

    int code = kSuccess;
    if (verify) {
      const SolverConfig config = solver.config();
      const DualSolution full = solve(oracle, C, config, &reference.solution);
      const DualSolution reduced =
          solve_reduced(reduce_problem(report, oracle), oracle, config, &reference.solution);
      double max_diff = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i)
        max_diff = std::max(max_diff, std::abs(full.alpha[i] - reduced.alpha[i]));
      attach_exact_partition(report, kkt_partition(full, 1e-6));
      const std::size_t violations = count_violations(report, full, kVerifyAlphaTolerance);
      os << std::setprecision(6) << "max_alpha_diff=" << max_diff << " violations=" << violations
         << '\n';
      if (max_diff > kVerifyAlphaTolerance || violations > 0) {
        es << "verification failed\n";
        code = kVerificationFailure;
      }
    }

    write_file(out, report_to_json(report) + "\n");
    std::ofstream csv(sibling_csv(out));
    if (!csv) throw DataError("cannot write '" + sibling_csv(out) + "'");
    write_report_csv(csv, report);

    os << std::setprecision(6) << "test=" << test_name(kind) << " C=" << C
       << " C_ref=" << ref.C << " screened_R=" << report.screened_R
       << " screened_L=" << report.screened_L << " rate_all=" << report.rate_all;
    if (report.rate_nonsv) os << " rate_nonsv=" << *report.rate_nonsv;
    os << '\n';
    return code;
  }
};

// --- path ------------------------------------------------------------------

struct PathCommand {
  DataFlags data;
  KernelFlags kernel;
  SolverFlags solver;
  double c_max = 1e4;
  double eps = 1e-3;
  std::string test = "it";
  std::string out;
  std::string dump_dir;
  bool no_verify = false;
  unsigned threads = 0;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_kernel_flags(cmd, kernel);
    add_solver_flags(cmd, solver);
    cmd->add_option("--c-max", c_max, "Largest C on the path")->check(CLI::PositiveNumber);
    cmd->add_option("--eps", eps, "Relative dual approximation error")->check(CLI::PositiveNumber);
    cmd->add_option("--test", test, "bt1, bt2 or it")
        ->check(CLI::IsMember({"bt1", "bt2", "it"}, CLI::ignore_case));
    cmd->add_option("--out", out, "Path CSV")->required();
    cmd->add_option("--dump-dir", dump_dir, "Write each step's model JSON here");
    cmd->add_flag("--no-verify", no_verify, "Skip the full-problem KKT check per step");
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  int run(std::ostream& os, std::ostream& es) const {
    const Dataset d = load_data(data);
    const KernelOracle oracle(d, make_kernel(kernel, d));
    PathConfig config;
    config.c_max = c_max;
    config.epsilon = eps;
    config.test = parse_test(test);
    config.solver = solver.config();
    config.verify = !no_verify;
    config.threads = threads;
    const PathResult result = run_path(oracle, config);

    std::ofstream csv(out);
    if (!csv) throw DataError("cannot write '" + out + "'");
    write_path_csv(csv, result);

    if (!dump_dir.empty()) {
      std::filesystem::create_directories(dump_dir);
      const std::string hash = dataset_hash(d);
      for (std::size_t t = 0; t < result.steps.size(); ++t) {
        std::ostringstream name;
        name << "step_" << std::setw(4) << std::setfill('0') << t << ".json";
        save_model((std::filesystem::path(dump_dir) / name.str()).string(),
                   Model{result.steps[t].solution, oracle.kernel(), hash, config.solver.kkt_tolerance});
      }
    }

    std::size_t screened = 0;
    for (const PathStep& s : result.steps) screened += s.screened_R + s.screened_L;
    os << "steps=" << result.steps.size() << " termination=\""
       << termination_reason(result.termination) << "\" total_screened=" << screened << '\n';
    if (config.verify && !result.all_verified()) {
      es << "verification failed on at least one path step\n";
      return kVerificationFailure;
    }
    return kSuccess;
  }
};

// --- rates -----------------------------------------------------------------

struct RatesCommand {
  DataFlags data;
  KernelFlags kernel;
  SolverFlags solver;
  double C = 0.0;
  std::string ratios = "0.05:0.05:0.95";
  bool include_one = false;
  double band = 1e-6;
  std::string out;
  unsigned threads = 0;

  void attach(CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_kernel_flags(cmd, kernel);
    add_solver_flags(cmd, solver);
    cmd->add_option("--c", C, "Target regularization parameter")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--ratios", ratios, "C_ref/C grid as start:step:end");
    cmd->add_flag("--include-one", include_one, "Append the ratio 1.0");
    cmd->add_option("--band", band, "Margin band separating E from R and L")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", out, "Rates CSV")->required();
    cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  int run(std::ostream& os, std::ostream& es) const {
    const Dataset d = load_data(data);
    const KernelOracle oracle(d, make_kernel(kernel, d));
    std::vector<double> grid = parse_ratio_grid(ratios);
    if (include_one && (grid.empty() || grid.back() < 1.0)) grid.push_back(1.0);
    const auto rows = rate_sweep(oracle, C, grid, solver.config(), band, threads);

    std::ofstream csv(out);
    if (!csv) throw DataError("cannot write '" + out + "'");
    csv << "ratio,bt1_rate,bt2_rate,it_rate\n" << std::setprecision(17);
    bool warned = false;
    for (const RateRow& r : rows) {
      csv << r.ratio << ',' << r.bt1 << ',' << r.bt2 << ',' << r.it << '\n';
      if (std::isnan(r.it) && !warned) {
        es << "warning: every sample lies on the margin at C; rates are NaN\n";
        warned = true;
      }
    }
    os << "rows=" << rows.size() << '\n';
    return kSuccess;
  }
};

// --- gen-toy ---------------------------------------------------------------

struct GenToyCommand {
  std::size_t n = 1000;
  std::uint64_t seed = 42;
  std::string out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n", n, "Number of samples (even)");
    cmd->add_option("--seed", seed, "Generator seed");
    cmd->add_option("--out", out, "LIBSVM output (metadata goes to <out>.meta.json)")->required();
  }

  int run(std::ostream& os) const {
    const Dataset d = generate_toy(n, seed);
    write_file(out, to_libsvm(d));
    write_file(out + ".meta.json", metadata_to_json(d) + "\n");
    os << "wrote " << d.size() << " samples to " << out << '\n';
    return kSuccess;
  }
};

}  // namespace

std::vector<double> parse_ratio_grid(const std::string& text) {
  double start = 0.0, step = 0.0, end = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> start >> c1 >> step >> c2 >> end) || c1 != ':' || c2 != ':' || !in.eof())
    throw std::invalid_argument("--ratios must look like start:step:end");
  if (!(step > 0.0) || !(start > 0.0) || end < start || end > 1.0)
    throw std::invalid_argument("--ratios needs 0 < start <= end <= 1 and step > 0");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9)) + 1;
  // Rounded so that 0.05:0.05:0.95 yields 0.6 and not 0.6000000000000001.
  for (std::size_t k = 0; k < count; ++k)
    grid.push_back(std::round((start + static_cast<double>(k) * step) * 1e12) / 1e12);
  return grid;
}

double parse_gamma(const std::string& text, std::size_t dim) {
  try {
    std::size_t used = 0;
    if (text.rfind("auto:", 0) == 0) {
      const double k = std::stod(text.substr(5), &used);
      if (used != text.size() - 5 || !(k > 0.0)) throw std::invalid_argument(text);
      return k / static_cast<double>(dim);
    }
    const double g = std::stod(text, &used);
    if (used != text.size() || !(g > 0.0)) throw std::invalid_argument(text);
    return g;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--gamma must be a positive number or auto:k, got '" + text + "'");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safe sample screening for SVM training"};
  app.require_subcommand(1);

  TrainCommand train;
  ScreenCommand screen_cmd;
  PathCommand path;
  RatesCommand rates;
  GenToyCommand gen_toy;
  train.attach(app.add_subcommand("train", "Train an SVM by dual coordinate ascent"));
  screen_cmd.attach(app.add_subcommand("screen", "Screen samples for a larger C from a reference model"));
  path.attach(app.add_subcommand("path", "Epsilon-approximation regularization path with screening"));
  rates.attach(app.add_subcommand("rates", "Screening rates of BT1/BT2/IT over a C_ref/C grid"));
  gen_toy.attach(app.add_subcommand("gen-toy", "Generate the two-Gaussian toy dataset"));

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageOrDataError;
  }

  try {
    if (app.got_subcommand("train")) return train.run(out);
    if (app.got_subcommand("screen")) return screen_cmd.run(out, err);
    if (app.got_subcommand("path")) return path.run(out, err);
    if (app.got_subcommand("rates")) return rates.run(out, err);
    if (app.got_subcommand("gen-toy")) return gen_toy.run(out);
  } catch (const NumericalInconsistency& e) {
    err << "numerical inconsistency: " << e.what() << '\n';
    return kNumericalInconsistency;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageOrDataError;
  }
  return kUsageOrDataError;
}

}  // namespace safescreen::cli
