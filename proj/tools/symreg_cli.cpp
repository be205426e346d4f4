#include "run.hpp"

#include "symreg/experiments/batch.hpp"
#include "symreg/experiments/trial.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace symreg;

void add_solver_options(CLI::App& cmd, app::RunConfig& cfg) {
  cmd.add_option("--model", cfg.model_path, "Model point file")->required();
  cmd.add_option("--dim", cfg.dim, "2 or 3; inferred from the file if omitted");
  cmd.add_option("--tau", cfg.tau, "Optimality gap; defaults to the trimmed-count formula");
  cmd.add_option("--epsilon", cfg.epsilon, "Translation/depth half-range")
      ->capture_default_str();
  cmd.add_option("--trim", cfg.trim, "Kept residual fraction")
      ->capture_default_str()
      ->check(CLI::Range(0.01, 1.0));
  cmd.add_option("--w-reflected", cfg.w_reflected,
                 "Weight of registration matches into the reflected model")
      ->capture_default_str()
      ->check(CLI::Range(0.01, 1.0));
  cmd.add_option("--seed", cfg.seed, "Seed for randomized baselines")
      ->capture_default_str();
  cmd.add_flag("--trace", cfg.trace, "Write the outer search trace");
  cmd.add_option("--out-dir", cfg.out_dir, "Output directory")
      ->capture_default_str();
  cmd.add_option("--truth", cfg.truth_path,
                 "Ground-truth file from `generate`; adds errors to the record");
}

template <int D>
int generate(const experiments::TrialSpec& spec,
             const std::filesystem::path& out_dir) {
  const auto trial = experiments::make_trial<D>(spec);
  std::filesystem::create_directories(out_dir);
  std::ostringstream header;
  header << "shape " << trial.shape << ", overlap " << trial.overlap
         << ", seed " << spec.seed;
  io::save_points(out_dir / "model.xyz", trial.model, header.str());
  io::save_points(out_dir / "data.xyz", trial.data, header.str());
  app::json truth = {{"dim", D},
                     {"shape", trial.shape},
                     {"seed", spec.seed},
                     {"requested_overlap", spec.overlap},
                     {"overlap", trial.overlap},
                     {"outlier_fraction", spec.outlier_fraction},
                     {"truth", app::to_json(trial.truth)}};
  app::write_json(out_dir / "truth.json", truth);
  std::cout << "wrote " << (out_dir / "model.xyz").string() << ", "
            << (out_dir / "data.xyz").string() << ", "
            << (out_dir / "truth.json").string() << '\n';
  return 0;
}

struct BenchmarkOptions {
  int dim = 2;
  std::size_t trials = 20;
  std::vector<double> overlaps{0.3};
  double outliers = 0.0;
  std::vector<std::string> methods{"joint", "register-only"};
  std::uint64_t seed = 1;
  std::optional<double> tau;
  std::size_t threads = 0;
  bool time = false;
  std::optional<std::filesystem::path> out_dir;
};

template <int D>
int benchmark(const BenchmarkOptions& opt) {
  std::vector<experiments::TrialSpec> specs;
  for (double o : opt.overlaps) {
    auto part = experiments::protocol_specs(opt.trials, o, opt.outliers,
                                            opt.seed + specs.size());
    specs.insert(specs.end(), part.begin(), part.end());
  }
  std::vector<experiments::Method> methods;
  for (const auto& m : opt.methods) methods.push_back(experiments::parse_method(m));
  experiments::BatchConfig cfg;
  cfg.solve.tau = opt.tau;
  cfg.threads = opt.threads;
  cfg.record_time = opt.time;
  const auto rows = experiments::run_batch<D>(specs, methods, cfg);
  const auto summary = experiments::summarize(rows);
  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    std::ofstream r(*opt.out_dir / "trials.csv");
    experiments::write_rows(r, rows, opt.time);
    std::ofstream s(*opt.out_dir / "summary.csv");
    experiments::write_summary(s, summary);
    if (!r || !s) throw std::runtime_error("failed writing benchmark output");
  }
  experiments::write_summary(std::cout, summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Joint registration and symmetry-plane estimation"};
  cli.require_subcommand(1);

  app::RunConfig reg;
  auto* reg_cmd = cli.add_subcommand("register", "Align data to model and estimate the shared mirror plane");
  add_solver_options(*reg_cmd, reg);
  reg_cmd->add_option("--data", reg.data_path, "Data point file")->required();
  reg_cmd->add_option("--method", reg.method, "joint | register-only | ransac-sym")
      ->capture_default_str()
      ->check(CLI::IsMember({"joint", "register-only", "ransac-sym"}));

  app::RunConfig sym;
  sym.task = app::Task::kDetectSymmetry;
  auto* sym_cmd = cli.add_subcommand("detect-symmetry", "Mirror plane of a single point set");
  add_solver_options(*sym_cmd, sym);
  sym_cmd->add_option("--method", sym.method, "joint | ransac-sym")
      ->capture_default_str()
      ->check(CLI::IsMember({"joint", "ransac-sym"}));

  BenchmarkOptions bench;
  auto* bench_cmd = cli.add_subcommand("benchmark", "Run generated trials and print per-bucket errors");
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str()->check(CLI::IsMember({2, 3}));
  bench_cmd->add_option("--trials", bench.trials, "Trials per overlap")->capture_default_str();
  bench_cmd->add_option("--overlap", bench.overlaps, "Requested overlaps")->capture_default_str();
  bench_cmd->add_option("--outliers", bench.outliers, "Outlier fraction per set")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.3));
  bench_cmd->add_option("--methods", bench.methods, "joint, register-only, two-stage")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "First trial seed")->capture_default_str();
  bench_cmd->add_option("--tau", bench.tau, "Optimality gap override");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (default: SYMREG_THREADS or all cores)");
  bench_cmd->add_flag("--time", bench.time, "Add wall time per trial (output is then not reproducible)");
  bench_cmd->add_option("--out-dir", bench.out_dir, "Write trials.csv and summary.csv here");

  experiments::TrialSpec gen;
  int gen_dim = 2;
  std::string gen_shape = "house";
  std::filesystem::path gen_out = ".";
  auto* gen_cmd = cli.add_subcommand("generate", "Write a synthetic model/data pair with its ground truth");
  gen_cmd->add_option("--dim", gen_dim)->capture_default_str()->check(CLI::IsMember({2, 3}));
  gen_cmd->add_option("--shape", gen_shape)->capture_default_str();
  gen_cmd->add_option("--overlap", gen.overlap)->capture_default_str();
  gen_cmd->add_option("--outliers", gen.outlier_fraction)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out-dir", gen_out)->capture_default_str();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (reg_cmd->parsed()) {
      std::cout << app::run(reg).dump(2) << '\n';
    } else if (sym_cmd->parsed()) {
      std::cout << app::run(sym).dump(2) << '\n';
    } else if (bench_cmd->parsed()) {
      return bench.dim == 2 ? benchmark<2>(bench) : benchmark<3>(bench);
    } else if (gen_cmd->parsed()) {
      const auto& lib = experiments::outline_library();
      const auto it = std::find_if(lib.begin(), lib.end(), [&](const auto& o) {
        return o.name == gen_shape;
      });
      if (it == lib.end()) throw std::invalid_argument("unknown shape: " + gen_shape);
      gen.shape = static_cast<std::size_t>(it - lib.begin());
      return gen_dim == 2 ? generate<2>(gen, gen_out) : generate<3>(gen, gen_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "symreg: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
