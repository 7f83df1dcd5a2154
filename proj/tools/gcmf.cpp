// Command-line driver: fit / predict / eval / synth / cv-map / protocol.
// Every command is reproducible: the same inputs and seed give byte-identical
// output files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcmf/engine.hpp"
#include "gcmf/map.hpp"
#include "gcmf/metrics.hpp"
#include "gcmf/protocols.hpp"
#include "gcmf/rng.hpp"
#include "gcmf/synth.hpp"

namespace fs = std::filesystem;
using namespace gcmf;

namespace {

struct CommonFitOptions {
  std::string schema_path;
  std::string data_path;
  std::string variant = "gcmf";
  bool map = false;
  bool no_bias = false;
  int k = 0;  // 0 keeps the schema's rank
  double tol = 1e-6;
  int max_iters = 2000;
  double lambda = 0.5;
  double prior = 1e-10;  // a0=b0=p0=q0
  uint64_t seed = 1;
  std::string out_dir = ".";
};

void add_fit_options(CLI::App* cmd, CommonFitOptions& opt) {
  cmd->add_option("--schema", opt.schema_path, "schema JSON file")->required();
  cmd->add_option("--data", opt.data_path, "training triplet file")->required();
  cmd->add_option("--variant", opt.variant, "gcmf or cmf")
      ->check(CLI::IsMember({"gcmf", "cmf"}));
  cmd->add_flag("--map", opt.map, "MAP estimation instead of VB");
  cmd->add_flag("--no-bias", opt.no_bias, "disable row/column bias terms");
  cmd->add_option("--k", opt.k, "factorization rank (overrides the schema)");
  cmd->add_option("--tol", opt.tol, "relative objective tolerance");
  cmd->add_option("--max-iters", opt.max_iters, "sweep cap");
  cmd->add_option("--lambda", opt.lambda, "Newton relaxation in (0,1)");
  cmd->add_option("--prior", opt.prior, "vague prior value for a0=b0=p0=q0");
  cmd->add_option("--seed", opt.seed, "random seed");
  cmd->add_option("--out", opt.out_dir, "output directory")->required();
}

ModelVariant make_variant(const CommonFitOptions& opt) {
  VariantKind kind;
  if (opt.variant == "gcmf")
    kind = opt.map ? VariantKind::GCMF_MAP : VariantKind::GCMF;
  else
    kind = opt.map ? VariantKind::CMF_MAP : VariantKind::CMF;
  return {kind, !opt.no_bias};
}

Hyperparams make_hyper(const CommonFitOptions& opt) {
  Hyperparams h;
  h.a0 = h.b0 = h.p0 = h.q0 = opt.prior;
  h.tol = opt.tol;
  h.max_iters = opt.max_iters;
  h.newton_relaxation = opt.lambda;
  return h;
}

Schema load_schema_with_rank(const CommonFitOptions& opt) {
  Schema schema = load_schema(opt.schema_path);
  if (opt.k > 0) schema.rank = opt.k;
  require_valid(schema);
  return schema;
}

int run_fit(const CommonFitOptions& opt) {
  const Schema schema = load_schema_with_rank(opt);
  const Dataset data = load_triplets(opt.data_path, schema);
  const ModelVariant variant = make_variant(opt);
  const Hyperparams hyper = make_hyper(opt);
  const FitResult result =
      opt.map ? fit_map(schema, data, hyper, variant, opt.seed)
              : fit(schema, data, hyper, variant, opt.seed);
  fs::create_directories(opt.out_dir);
  save_checkpoint(result.state, (fs::path(opt.out_dir) / "checkpoint.json").string());
  save_trace_csv(result.trace, (fs::path(opt.out_dir) / "trace.csv").string());
  std::cout << "fit: " << result.trace.size() << " sweeps, "
            << (result.converged ? "converged" : "iteration cap reached")
            << ", checkpoint written to " << opt.out_dir << "\n";
  return 0;
}

int run_predict(const std::string& checkpoint_path,
                const std::string& queries_path, const std::string& out_path) {
  const ModelState state = load_checkpoint(checkpoint_path);
  std::ifstream in(queries_path);
  if (!in) throw Error("cannot open query file '" + queries_path + "'");
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write predictions '" + out_path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    int m = 0, i = 0, j = 0;
    if (!(fields >> m)) continue;
    if (!(fields >> i >> j))
      throw ParseError(queries_path + ":" + std::to_string(line_no) +
                       ": expected 'relation row col'");
    out << m << ' ' << i << ' ' << j << ' '
        << format_double(predict_mean(state, m, i, j)) << "\n";
  }
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& test_path,
             const std::string& out_path) {
  const ModelState state = load_checkpoint(checkpoint_path);
  const Dataset test = load_triplets(test_path, state.schema);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write eval table '" + out_path + "'");
  out << "relation,n_test,rmse\n";
  for (const ObservedMatrix& matrix : test)
    out << matrix.relation_id << ',' << matrix.n_obs() << ','
        << format_double(rmse(state, matrix)) << "\n";
  out << "all," << [&] {
    long long n = 0;
    for (const auto& m : test) n += m.n_obs();
    return n;
  }() << ',' << format_double(rmse(state, test)) << "\n";
  std::cout << "eval: overall test RMSE " << format_double(rmse(state, test))
            << "\n";
  return 0;
}

int run_synth(const std::string& kind, int m, uint64_t seed, bool small,
              double holdout, const std::string& likelihood,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  Schema schema;
  Dataset data;
  std::vector<std::string> comments = {"generator: " + kind,
                                       "seed: " + std::to_string(seed)};
  if (kind == "circular") {
    CircularSynthSpec spec;
    spec.n_matrices = m;
    spec.size_lo = small ? 30 : 100;
    spec.size_hi = small ? 50 : 150;
    spec.likelihoods = {likelihood_from_string(likelihood)};
    spec.seed = seed;
    const CircularSynthData gen = gen_circular(spec);
    schema = gen.schema;
    data = gen.data;
    // Ground truth factors, one matrix per entity set.
    std::ofstream truth((fs::path(out_dir) / "truth.txt").string());
    truth << "# set row factor value (planted loadings)\n";
    for (size_t e = 0; e < gen.true_factors.size(); ++e)
      for (int i = 0; i < gen.true_factors[e].rows(); ++i)
        for (int r = 0; r < gen.true_factors[e].cols(); ++r)
          truth << e << ' ' << i << ' ' << r << ' '
                << format_double(gen.true_factors[e](i, r)) << "\n";
  } else if (kind == "multiview") {
    MultiviewSynthSpec spec;
    spec.n_rows = small ? 40 : 60;
    spec.d1 = spec.d2 = small ? 24 : 30;
    spec.seed = seed;
    const MultiviewSynthData gen =
        gen_augmented_multiview(spec, ProximitySpec::Kernel::Gaussian, 1.0);
    schema = gen.schema;
    data = gen.data;
  } else {
    throw Error("unknown generator '" + kind + "' (circular or multiview)");
  }
  save_schema(schema, (fs::path(out_dir) / "schema.json").string());
  if (holdout > 0.0) {
    auto [train, test] =
        holdout_split_all(data, holdout, derive_seed(seed, "synth/holdout"));
    comments.push_back("holdout_fraction: " + format_double(holdout));
    save_triplets(train, (fs::path(out_dir) / "train.txt").string(), comments);
    save_triplets(test, (fs::path(out_dir) / "test.txt").string(), comments);
  }
  save_triplets(data, (fs::path(out_dir) / "data.txt").string(), comments);
  std::cout << "synth: wrote " << data.size() << " relation(s) under "
            << out_dir << "\n";
  return 0;
}

int run_cv_map(const CommonFitOptions& opt, int folds, int grid_points,
               double grid_lo, double grid_hi, int threads) {
  const Schema schema = load_schema_with_rank(opt);
  const Dataset data = load_triplets(opt.data_path, schema);
  MapConfig config;
  config.folds = folds;
  config.seed = opt.seed;
  config.threads = threads;
  for (int i = 0; i < grid_points; ++i) {
    const double t = grid_points == 1
                         ? 0.5
                         : static_cast<double>(i) / (grid_points - 1);
    config.grid_a0b0.push_back(
        std::exp(std::log(grid_lo) + t * (std::log(grid_hi) - std::log(grid_lo))));
  }
  config.grid_p0q0 = config.grid_a0b0;

  ModelVariant variant = make_variant(opt);
  if (!is_map(variant.kind))
    variant.kind = variant.kind == VariantKind::GCMF ? VariantKind::GCMF_MAP
                                                     : VariantKind::CMF_MAP;
  const Hyperparams base = make_hyper(opt);
  const CvResult cv = cv_map(schema, data, config, variant, base);

  fs::create_directories(opt.out_dir);
  save_cv_table_csv(cv, (fs::path(opt.out_dir) / "cv_table.csv").string());
  const FitResult best = fit_map(schema, data, cv.best_hyperparams(base),
                                 variant, derive_seed(opt.seed, "cv/best"));
  save_checkpoint(best.state,
                  (fs::path(opt.out_dir) / "checkpoint.json").string());
  save_trace_csv(best.trace, (fs::path(opt.out_dir) / "trace.csv").string());
  std::cout << "cv-map: " << cv.fit_count << " fits; best a0=b0="
            << format_double(cv.best_a0b0)
            << " p0=q0=" << format_double(cv.best_p0q0) << "\n";
  return 0;
}

int run_protocol_cmd(const std::string& id, uint64_t seed, int n_seeds,
                     bool small, int threads, const std::string& out_dir) {
  ProtocolOptions options;
  options.seed = seed;
  options.n_seeds = n_seeds;
  options.small = small;
  options.threads = threads;
  const ProtocolReport report = run_protocol(id, options);
  fs::create_directories(out_dir);
  save_report_csv(report, (fs::path(out_dir) / "report.csv").string());
  std::ofstream summary((fs::path(out_dir) / "summary.txt").string());
  summary << report.summary;
  std::cout << report.summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group-sparse collective matrix factorization"};
  app.set_config("--config");
  app.require_subcommand(1);

  CommonFitOptions fit_opt;
  CLI::App* cmd_fit = app.add_subcommand("fit", "fit a model, write checkpoint + trace");
  add_fit_options(cmd_fit, fit_opt);
  int threads = 1;
  cmd_fit->add_option("--threads", threads, "worker threads (fits are single-threaded)");

  std::string checkpoint_path, queries_path, out_path, test_path;
  CLI::App* cmd_predict =
      app.add_subcommand("predict", "predict (relation,row,col) queries");
  cmd_predict->add_option("--checkpoint", checkpoint_path)->required();
  cmd_predict->add_option("--queries", queries_path)->required();
  cmd_predict->add_option("--out", out_path)->required();

  CLI::App* cmd_eval =
      app.add_subcommand("eval", "RMSE table against held-out triplets");
  cmd_eval->add_option("--checkpoint", checkpoint_path)->required();
  cmd_eval->add_option("--test", test_path)->required();
  cmd_eval->add_option("--out", out_path)->required();

  std::string synth_kind = "circular", synth_lik = "bernoulli", synth_out;
  int synth_m = 3;
  uint64_t synth_seed = 1;
  bool synth_small = false;
  double synth_holdout = 0.0;
  CLI::App* cmd_synth =
      app.add_subcommand("synth", "generate a synthetic dataset + ground truth");
  cmd_synth->add_option("--protocol", synth_kind, "circular or multiview");
  cmd_synth->add_option("--m", synth_m, "number of matrices (circular)");
  cmd_synth->add_option("--likelihood", synth_lik);
  cmd_synth->add_option("--seed", synth_seed);
  cmd_synth->add_flag("--small", synth_small, "desk-scale sizes");
  cmd_synth->add_option("--holdout", synth_holdout,
                        "also write a train/test split with this fraction");
  cmd_synth->add_option("--out", synth_out)->required();

  CommonFitOptions cv_opt;
  int cv_folds = 2, cv_grid_points = 11, cv_threads = 1;
  double cv_grid_lo = 1e-6, cv_grid_hi = 1e4;
  CLI::App* cmd_cv = app.add_subcommand(
      "cv-map", "cross-validate MAP hyperparameters, write table + best fit");
  add_fit_options(cmd_cv, cv_opt);
  cmd_cv->add_option("--folds", cv_folds);
  cmd_cv->add_option("--grid-points", cv_grid_points);
  cmd_cv->add_option("--grid-lo", cv_grid_lo);
  cmd_cv->add_option("--grid-hi", cv_grid_hi);
  cmd_cv->add_option("--threads", cv_threads);

  std::string protocol_id, protocol_out = ".";
  uint64_t protocol_seed = 1;
  int protocol_seeds = 3, protocol_threads = 1;
  bool protocol_small = false;
  CLI::App* cmd_protocol =
      app.add_subcommand("protocol", "run a named benchmark protocol");
  cmd_protocol->add_option("--id", protocol_id, "protocol id")
      ->required()
      ->check(CLI::IsMember(protocol_ids()));
  cmd_protocol->add_option("--seed", protocol_seed);
  cmd_protocol->add_option("--seeds", protocol_seeds, "number of repeats");
  cmd_protocol->add_flag("--small", protocol_small);
  cmd_protocol->add_option("--threads", protocol_threads);
  cmd_protocol->add_option("--out", protocol_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_fit) return run_fit(fit_opt);
    if (*cmd_predict) return run_predict(checkpoint_path, queries_path, out_path);
    if (*cmd_eval) return run_eval(checkpoint_path, test_path, out_path);
    if (*cmd_synth)
      return run_synth(synth_kind, synth_m, synth_seed, synth_small,
                       synth_holdout, synth_lik, synth_out);
    if (*cmd_cv)
      return run_cv_map(cv_opt, cv_folds, cv_grid_points, cv_grid_lo,
                        cv_grid_hi, cv_threads);
    if (*cmd_protocol)
      return run_protocol_cmd(protocol_id, protocol_seed, protocol_seeds,
                              protocol_small, protocol_threads, protocol_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
