// rrmix: fits mixtures of sparse low-rank multivariate regressions, builds a
// model collection over (clusters, column support, ranks), selects a model by
// penalized likelihood, and evaluates against a known truth.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rrmix/csv.hpp"
#include "rrmix/density.hpp"
#include "rrmix/pipeline.hpp"
#include "rrmix/rng.hpp"

namespace {

using namespace rrmix;

struct CommonOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output;
};

struct CollectionOptions {
  std::vector<int> k_set = {2};
  int grid_size = 15;
  int rank_min = 1;
  int rank_max = 4;
  std::string rank_mode = "cartesian";
  int n_restarts = 5;
  int max_iter = 200;
  double rel_tol = 1e-6;
};

struct SelectionOptions {
  std::string mode = "slope";
  double kappa = 1.0;
  double a_sigma_sq = 1e-2;
  double A_sigma_sq = 1e2;
  double A_singular = 50.0;
};

struct DivergenceOptions {
  double rho = 0.5;
  int mc_samples = 10000;
};

struct DataOptions {
  std::string train;
  std::string test;
  std::string truth;
  std::vector<std::string> responses;
  bool center = false;
  bool expand_second_order = false;
};

struct SimOptions {
  std::string setting;  // p_lt_n | p_gt_n | "" (explicit)
  int n = 200, p = 10, q = 10, j_size = 6, K = 2, n_test = -1;
  std::vector<int> ranks = {3, 3};
  double rho = 0.01;
  std::vector<double> b = {3.0, -3.0};
};

void add_collection_options(CLI::App* cmd, CollectionOptions& opt) {
  cmd->add_option("--k-set", opt.k_set, "Cluster counts to try")->delimiter(',');
  cmd->add_option("--grid-size", opt.grid_size, "Regularization grid size");
  cmd->add_option("--rank-min", opt.rank_min, "Smallest rank");
  cmd->add_option("--rank-max", opt.rank_max, "Largest rank (capped at min(|J|, q))");
  cmd->add_option("--rank-mode", opt.rank_mode, "Rank vectors: shared or cartesian")
      ->check(CLI::IsMember({"shared", "cartesian"}));
  cmd->add_option("--restarts", opt.n_restarts, "EM restarts per fit");
  cmd->add_option("--max-iter", opt.max_iter, "EM iteration cap");
  cmd->add_option("--rel-tol", opt.rel_tol, "EM relative convergence tolerance");
}

void add_selection_options(CLI::App* cmd, SelectionOptions& opt) {
  cmd->add_option("--selection-mode", opt.mode, "slope, theoretical, or bic")
      ->check(CLI::IsMember({"slope", "theoretical", "bic"}));
  cmd->add_option("--kappa", opt.kappa, "Penalty constant for theoretical mode");
  cmd->add_option("--a-sigma-sq", opt.a_sigma_sq, "Lower variance bound");
  cmd->add_option("--A-sigma-sq", opt.A_sigma_sq, "Upper variance bound");
  cmd->add_option("--A-singular", opt.A_singular, "Singular value bound");
}

void add_divergence_options(CLI::App* cmd, DivergenceOptions& opt) {
  cmd->add_option("--rho-jkl", opt.rho, "JKL smoothing weight in (0,1)");
  cmd->add_option("--mc-samples", opt.mc_samples, "Monte Carlo draws per row");
}

CollectionConfig to_collection_config(const CollectionOptions& opt, const CommonOptions& common) {
  CollectionConfig cfg;
  cfg.K_set = opt.k_set;
  cfg.G = opt.grid_size;
  cfg.r_min = opt.rank_min;
  cfg.r_max = opt.rank_max;
  cfg.rank_mode = opt.rank_mode == "shared" ? RankMode::Shared : RankMode::Cartesian;
  cfg.lasso.n_restarts = opt.n_restarts;
  cfg.lasso.max_iter = opt.max_iter;
  cfg.lasso.rel_tol = opt.rel_tol;
  cfg.rank_max_iter = opt.max_iter;
  cfg.rank_rel_tol = opt.rel_tol;
  cfg.seed = common.seed;
  cfg.workers = common.workers;
  return cfg;
}

PenaltyConfig to_penalty_config(const SelectionOptions& opt) {
  PenaltyConfig cfg;
  if (opt.mode == "slope")
    cfg.mode = SelectionMode::SlopeDimensionJump;
  else if (opt.mode == "theoretical")
    cfg.mode = SelectionMode::Theoretical;
  else
    cfg.mode = SelectionMode::Bic;
  cfg.kappa = opt.kappa;
  cfg.calibrate = opt.mode == "slope";
  cfg.bounds.a_sigma_sq = opt.a_sigma_sq;
  cfg.bounds.A_sigma_sq = opt.A_sigma_sq;
  cfg.bounds.A_singular = opt.A_singular;
  return cfg;
}

JklConfig to_jkl_config(const DivergenceOptions& opt, std::uint64_t seed) {
  JklConfig cfg;
  cfg.rho = opt.rho;
  cfg.mc_samples = opt.mc_samples;
  cfg.seed = seed;
  return cfg;
}

SimConfig to_sim_config(const SimOptions& opt, std::uint64_t seed) {
  SimConfig cfg;
  if (opt.setting == "p_lt_n")
    cfg = setting_p_lt_n();
  else if (opt.setting == "p_gt_n")
    cfg = setting_p_gt_n();
  else {
    cfg.n = opt.n;
    cfg.p = opt.p;
    cfg.q = opt.q;
    cfg.J_size = opt.j_size;
    cfg.K = opt.K;
    cfg.R = opt.ranks;
    cfg.rho = opt.rho;
    cfg.b = opt.b;
  }
  cfg.n_test = opt.n_test;
  cfg.seed = seed;
  return cfg;
}

void add_sim_options(CLI::App* cmd, SimOptions& opt) {
  cmd->add_option("--setting", opt.setting, "Preset: p_lt_n or p_gt_n")
      ->check(CLI::IsMember({"p_lt_n", "p_gt_n"}));
  cmd->add_option("--n", opt.n, "Training observations");
  cmd->add_option("--p", opt.p, "Predictors");
  cmd->add_option("--q", opt.q, "Responses");
  cmd->add_option("--j-size", opt.j_size, "True support size");
  cmd->add_option("--k", opt.K, "True cluster count");
  cmd->add_option("--ranks", opt.ranks, "True per-cluster ranks")->delimiter(',');
  cmd->add_option("--rho", opt.rho, "Covariate scale (X ~ N(0, rho I))");
  cmd->add_option("--b", opt.b, "Per-cluster signal multipliers")->delimiter(',');
  cmd->add_option("--n-test", opt.n_test, "Test observations (-1 = same as n)");
}

void add_data_options(CLI::App* cmd, DataOptions& opt, bool require_train) {
  auto* train = cmd->add_option("--train", opt.train, "Training CSV");
  if (require_train) train->required();
  cmd->add_option("--test", opt.test, "Held-out CSV");
  cmd->add_option("--truth", opt.truth, "Truth JSON (simulation output)");
  cmd->add_option("--responses", opt.responses, "Response column names")->delimiter(',');
  cmd->add_flag("--center", opt.center, "Center responses and predictors");
  cmd->add_flag("--expand-second-order", opt.expand_second_order,
                "Add squares, pairwise products, and an intercept");
}

CsvSchema to_schema(const DataOptions& opt, int default_q) {
  CsvSchema schema;
  schema.response_columns = opt.responses;
  if (schema.response_columns.empty())
    for (int z = 1; z <= default_q; ++z) schema.response_columns.push_back("y" + std::to_string(z));
  schema.center = opt.center;
  schema.expand_second_order = opt.expand_second_order;
  return schema;
}

Json truth_to_json(const TrueModel& truth) {
  Json j;
  j["model"] = model_to_json(truth.model);
  Json cols = Json::array();
  for (int c : truth.J) cols.push_back(c + 1);
  j["J"] = std::move(cols);
  j["R"] = truth.R;
  return j;
}

TrueModel truth_from_json(const Json& j) {
  TrueModel truth;
  truth.model = model_from_json(j.at("model"));
  for (const Json& c : j.at("J")) truth.J.push_back(c.get<int>() - 1);
  truth.R = j.at("R").get<std::vector<int>>();
  return truth;
}

void emit(const CommonOptions& common, Json body) {
  body["version"] = kReportVersion;
  if (!common.output.empty()) {
    write_report(common.output, body);
  } else {
    std::cout << body.dump(2) << "\n";
  }
}

int run_simulate(const CommonOptions& common, const SimOptions& sim_opt, const std::string& out_dir) {
  const SimConfig cfg = to_sim_config(sim_opt, common.seed);
  const SimData data = generate(cfg);
  std::filesystem::create_directories(out_dir);
  write_dataset_csv(out_dir + "/train.csv", data.train);
  write_dataset_csv(out_dir + "/test.csv", data.test);
  Json truth = truth_to_json(data.truth);
  truth["version"] = kReportVersion;
  write_report(out_dir + "/truth.json", truth);
  Json body;
  body["command"] = "simulate";
  body["seed"] = common.seed;
  body["n"] = data.train.n();
  body["p"] = data.train.p();
  body["q"] = data.train.q();
  body["n_test"] = data.test.n();
  body["out_dir"] = out_dir;
  emit(common, std::move(body));
  return 0;
}

struct LoadedData {
  Dataset train;
  Dataset test;
  std::optional<TrueModel> truth;
};

LoadedData load_or_simulate(const DataOptions& data_opt, const SimOptions& sim_opt,
                            const CommonOptions& common, int default_q) {
  LoadedData out;
  if (!data_opt.train.empty()) {
    const CsvSchema schema = to_schema(data_opt, default_q);
    out.train = ingest(data_opt.train, schema);
    out.test = data_opt.test.empty() ? out.train : ingest(data_opt.test, schema);
    if (!data_opt.truth.empty()) out.truth = truth_from_json(read_report(data_opt.truth));
  } else {
    const SimData sim = generate(to_sim_config(sim_opt, common.seed));
    out.train = sim.train;
    out.test = sim.test;
    out.truth = sim.truth;
  }
  return out;
}

int run_fit(const CommonOptions& common, const DataOptions& data_opt, const SimOptions& sim_opt,
            const CollectionOptions& coll_opt, const SelectionOptions& sel_opt,
            const DivergenceOptions& div_opt, const std::string& table_csv) {
  const SimConfig sim_defaults = to_sim_config(sim_opt, common.seed);
  const LoadedData data = load_or_simulate(data_opt, sim_opt, common, sim_defaults.q);

  PipelineConfig pipe;
  pipe.collection = to_collection_config(coll_opt, common);
  pipe.collection.lasso.seed = derive_seed(common.seed, 18);
  pipe.penalty = to_penalty_config(sel_opt);
  pipe.divergence = to_jkl_config(div_opt, derive_seed(common.seed, 19));
  const PipelineResult result = run_pipeline(data.train, data.test, data.truth, pipe);

  Json body;
  body["command"] = "fit";
  body["seed"] = common.seed;
  body["n"] = data.train.n();
  body["p"] = data.train.p();
  body["q"] = data.train.q();
  body["collection"] = collection_to_json(result.collection);
  body["selection"] = selection_to_json(result.selection);
  body["chosen"] = fitted_to_json(result.chosen);
  if (result.evaluation) body["evaluation"] = eval_to_json(*result.evaluation);
  if (!table_csv.empty()) {
    std::ofstream csv(table_csv);
    csv << "K,J_size,ranks,loglik,dim_means,dim_full,penalty,criterion\n";
    for (const CriterionRow& row : result.selection.table) {
      csv << row.index.K << "," << row.index.J.size() << ",";
      for (std::size_t i = 0; i < row.index.R.size(); ++i)
        csv << row.index.R[i] << (i + 1 < row.index.R.size() ? ";" : "");
      char buf[128];
      std::snprintf(buf, sizeof(buf), ",%.17g,%ld,%ld,%.17g,%.17g\n", row.loglik, row.dim_means,
                    row.dim_full, row.penalty, row.criterion);
      csv << buf;
    }
  }
  emit(common, std::move(body));
  return 0;
}

int run_select(const CommonOptions& common, const std::string& report_path,
               const SelectionOptions& sel_opt) {
  const Json saved = read_report(report_path);
  const Collection collection = collection_from_json(saved.at("collection"));
  const long n = saved.at("n").get<long>();
  const int p = saved.at("p").get<int>();
  const int q = saved.at("q").get<int>();
  const SelectionResult sel = select_model(collection, n, p, q, to_penalty_config(sel_opt));

  Json body;
  body["command"] = "select";
  body["seed"] = common.seed;
  body["n"] = n;
  body["p"] = p;
  body["q"] = q;
  body["selection"] = selection_to_json(sel);
  body["chosen"] = fitted_to_json(collection.fits[sel.chosen]);
  emit(common, std::move(body));
  return 0;
}

int run_evaluate(const CommonOptions& common, const std::string& report_path,
                 const DataOptions& data_opt, const DivergenceOptions& div_opt) {
  const Json saved = read_report(report_path);
  const FittedModel fit = fitted_from_json(saved.at("chosen"));
  const CsvSchema schema = to_schema(data_opt, fit.model.q());
  const Dataset data = ingest(data_opt.train, schema);

  Json body;
  body["command"] = "evaluate";
  body["seed"] = common.seed;
  body["loglik"] = log_likelihood(fit.model, data);
  body["mse"] = mse(fit.model, data);
  if (!data_opt.truth.empty()) {
    const TrueModel truth = truth_from_json(read_report(data_opt.truth));
    body["evaluation"] =
        eval_to_json(evaluate_fit(fit, truth, data, to_jkl_config(div_opt, common.seed)));
  }
  emit(common, std::move(body));
  return 0;
}

int run_table1(const CommonOptions& common, const SimOptions& sim_opt,
               const CollectionOptions& coll_opt, const SelectionOptions& sel_opt,
               const DivergenceOptions& div_opt, int runs) {
  Table1Config cfg;
  cfg.sim = to_sim_config(sim_opt, common.seed);
  cfg.pipeline.collection = to_collection_config(coll_opt, common);
  cfg.pipeline.penalty = to_penalty_config(sel_opt);
  cfg.pipeline.divergence = to_jkl_config(div_opt, 0);
  cfg.runs = runs;
  cfg.base_seed = common.seed;
  cfg.workers = common.workers;
  const Table1Summary summary = run_table1(cfg);

  Json body;
  body["command"] = "reproduce-table1";
  body["setting"] = sim_opt.setting.empty() ? "custom" : sim_opt.setting;
  body["seed"] = common.seed;
  body["summary"] = table1_to_json(summary);
  emit(common, std::move(body));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixtures of sparse low-rank multivariate regressions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config");

  CommonOptions common;
  app.add_option("--seed", common.seed, "Base seed")->capture_default_str();
  app.add_option("--workers", common.workers, "Worker thread cap")->capture_default_str();
  app.add_option("--output", common.output, "Report path (default: stdout)");

  SimOptions sim_opt;
  DataOptions data_opt;
  CollectionOptions coll_opt;
  SelectionOptions sel_opt;
  DivergenceOptions div_opt;
  std::string out_dir = "sim_out";
  std::string report_path;
  std::string table_csv;
  int runs = 20;

  CLI::App* simulate = app.add_subcommand("simulate", "Write train/test CSVs and truth JSON");
  add_sim_options(simulate, sim_opt);
  simulate->add_option("--out-dir", out_dir, "Output directory");

  CLI::App* fit = app.add_subcommand("fit", "Run the full pipeline on data or a simulation");
  add_sim_options(fit, sim_opt);
  add_data_options(fit, data_opt, false);
  add_collection_options(fit, coll_opt);
  add_selection_options(fit, sel_opt);
  add_divergence_options(fit, div_opt);
  fit->add_option("--table-csv", table_csv, "Also write the criterion table as CSV");

  CLI::App* select = app.add_subcommand("select", "Re-select from a saved fit report");
  select->add_option("--report", report_path, "Saved fit report")->required();
  add_selection_options(select, sel_opt);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model on a dataset");
  evaluate->add_option("--report", report_path, "Saved fit/select report")->required();
  add_data_options(evaluate, data_opt, true);
  add_divergence_options(evaluate, div_opt);

  CLI::App* table1 = app.add_subcommand("reproduce-table1", "Repeated-simulation summary");
  add_sim_options(table1, sim_opt);
  add_collection_options(table1, coll_opt);
  add_selection_options(table1, sel_opt);
  add_divergence_options(table1, div_opt);
  table1->add_option("--runs", runs, "Number of simulated runs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(common, sim_opt, out_dir);
    if (fit->parsed())
      return run_fit(common, data_opt, sim_opt, coll_opt, sel_opt, div_opt, table_csv);
    if (select->parsed()) return run_select(common, report_path, sel_opt);
    if (evaluate->parsed()) return run_evaluate(common, report_path, data_opt, div_opt);
    if (table1->parsed()) return run_table1(common, sim_opt, coll_opt, sel_opt, div_opt, runs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!common.output.empty()) {
      Json body;
      body["version"] = kReportVersion;
      body["error"]["message"] = e.what();
      try {
        write_report(common.output, body);
      } catch (...) {
      }
    }
    return 1;
  }
  return 0;
}
