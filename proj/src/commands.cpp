#include "gimt_cdm/commands.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "gimt_cdm/gimt.hpp"
#include "gimt_cdm/io.hpp"
#include "gimt_cdm/parallel.hpp"

namespace gimt_cdm::app {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSimulateStream = 0x5E;

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    levels.push_back(parse_double(field, "--levels"));
  }
  if (levels.empty()) {
    throw ParseError("--levels: expected a comma-separated list of probabilities");
  }
  return levels;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json fit_json(const FitResult& f, const ResponseMatrix& data, const ModelSpec& spec) {
  Json j;
  j["converged"] = f.converged;
  j["message"] = f.message;
  j["risk"] = f.risk;
  j["grad_norm"] = f.grad_norm;
  j["iterations"] = f.iterations;
  j["hessian_min_eig"] = f.hessian_min_eig;
  j["hessian_condition"] = std::isfinite(f.hessian_condition) ? Json(f.hessian_condition) : Json(nullptr);
  j["n"] = data.examinees();
  j["items"] = spec.items();
  j["skills"] = spec.skills();
  j["num_params"] = spec.num_params();
  Json beta = Json::array();
  for (int p = 0; p < f.beta_hat.size(); ++p) {
    beta.push_back(f.beta_hat.flat()[p]);
  }
  j["beta_hat"] = std::move(beta);
  return j;
}

std::string item_params_csv(const ItemParams& beta) {
  std::ostringstream ss;
  write_item_params(ss, beta);
  return ss.str();
}

std::string binary_csv(const BinaryMatrix& m) {
  std::ostringstream ss;
  write_binary_csv(ss, m);
  return ss.str();
}

Json config_json(const ExperimentConfig& c) {
  Json j;
  j["responses"] = c.responses.generic_string();
  j["qmatrix"] = c.qmatrix.generic_string();
  j["mu_slope"] = c.mu_slope;
  j["mu_intercept"] = c.mu_intercept;
  j["sigma2"] = c.sigma2;
  j["guess"] = c.guess;
  j["levels"] = c.levels;
  j["replications"] = c.replications;
  j["datasets"] = c.datasets;
  j["n"] = c.n;
  j["seed"] = c.seed;
  j["share_datasets"] = c.share_datasets;
  j["grad_tol"] = c.grad_tol;
  j["step_tol"] = c.step_tol;
  j["max_iters"] = c.max_iters;
  j["fd_scale"] = c.fd_scale;
  j["score"] = c.score;
  return j;
}

// Files are written in order and then listed, with hashes, in the manifest.
struct OutputSet {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> files;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
  Json write_all() const {
    Json listing = Json::array();
    for (const auto& [name, content] : files) {
      write_text_file(dir / name, content);
      listing.push_back(Json{{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    return listing;
  }
};

void add_evaluation_files(OutputSet& out, const std::vector<CellResult>& cells, ScoreKind kind,
                          const std::vector<double>& level_order, Json& meta) {
  try {
    const auto curves = replication_curves(cells, kind);
    const auto summary = summarize_levels(cells, kind);
    for (double level : level_order) {
      bool any = false;
      for (const auto& c : curves) any = any || c.level == level;
      if (any) {
        out.add("roc_level_" + level_file_tag(level) + ".csv", roc_level_to_csv(curves, level));
      }
    }
    out.add("auroc_summary.csv", auroc_summary_to_csv(summary));
    meta["score"] = to_string(kind);
    meta["ci_method"] = "normal approximation over replications: mean +- 1.96 sd / sqrt(R), clamped to [0, 1]";
    meta["level0_convention"] =
        "level-0 replication r ranked against the pooled other level-0 replications (first half vs second half of "
        "the datasets when only one replication exists)";
    meta["failed_cells_excluded"] = true;
  } catch (const EvaluationError& e) {
    meta["evaluation_error"] = e.what();
  }
}

std::vector<double> distinct_levels(const std::vector<CellResult>& cells) {
  std::vector<double> levels;
  for (const auto& c : cells) {
    if (std::find(levels.begin(), levels.end(), c.level) == levels.end()) levels.push_back(c.level);
  }
  return levels;
}

Json error_json(const std::string& kind, const std::string& reason) {
  return Json{{"status", "error"}, {"error", kind}, {"reason", reason}};
}

} // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig
// ---------------------------------------------------------------------------

ModelSpec ExperimentConfig::model_spec(QMatrix q) const {
  const int skills = q.skills();
  ModelSpec spec{std::move(q), AttributePrior::from_mastery_probability(skills, guess), GaussianPrior{}};
  spec.param_prior.mu = Eigen::Vector2d(mu_slope, mu_intercept);
  spec.param_prior.sigma2 = sigma2;
  spec.validate();
  return spec;
}

FitConfig ExperimentConfig::fit_config() const {
  FitConfig f;
  f.grad_tol = grad_tol;
  f.step_tol = step_tol;
  f.max_iters = max_iters;
  f.seed = seed;
  f.validate();
  return f;
}

PerturbationPlan ExperimentConfig::plan() const {
  PerturbationPlan p;
  p.flip_levels = levels;
  p.replications_per_level = replications;
  p.datasets_per_replication = datasets;
  p.n_per_dataset = n;
  p.seed = seed;
  p.share_datasets_within_level = share_datasets;
  p.validate();
  return p;
}

int ExperimentConfig::resolved_workers() const {
  if (workers > 0) return workers;
  if (const char* env = std::getenv("GIMT_CDM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return default_workers();
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) {
    ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return ss.str();
}

std::string level_file_tag(double level) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%gpct", level * 100.0);
  return buf;
}

std::string grid_to_csv(const std::vector<CellResult>& cells) {
  std::ostringstream ss;
  ss << "level,replication,dataset,s_hat,wald,p_value,converged,min_eig,label,c_hat,status\n";
  for (const auto& c : cells) {
    ss << format_double(c.level) << ',' << c.replication << ',' << c.dataset << ',';
    if (c.gimt) {
      ss << format_double(c.gimt->s_hat) << ',' << format_double(c.gimt->wald) << ','
         << format_double(c.gimt->p_value);
    } else {
      ss << ",,";
    }
    ss << ',' << (c.converged ? 1 : 0) << ',' << format_double(c.min_eig) << ',' << to_string(c.label) << ',';
    if (c.gimt) ss << format_double(c.gimt->c_hat);
    ss << ',' << to_string(c.status) << '\n';
  }
  return ss.str();
}

std::vector<CellResult> grid_from_csv(const std::string& text, const std::string& source) {
  static const std::map<std::string, CellStatus> statuses{
      {"ok", CellStatus::Ok},
      {"not_converged", CellStatus::NotConverged},
      {"degenerate_fit", CellStatus::DegenerateFit},
      {"matrix_failure", CellStatus::MatrixFailure},
      {"variance_failure", CellStatus::VarianceFailure},
      {"optimization_failure", CellStatus::OptimizationFailure},
      {"perturbation_failure", CellStatus::PerturbationFailure},
      {"failed", CellStatus::Failed}};

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("level,replication,dataset,s_hat,wald,p_value,converged,min_eig,label", 0) != 0) {
        throw ParseError(source + ":1: unexpected grid header");
      }
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 11) {
      throw ParseError(where + ": expected 11 columns, got " + std::to_string(f.size()));
    }
    CellResult c;
    c.level = parse_double(f[0], where);
    c.replication = static_cast<int>(parse_double(f[1], where));
    c.dataset = static_cast<int>(parse_double(f[2], where));
    c.converged = f[6] == "1";
    c.min_eig = parse_double(f[7], where);
    c.label = f[8] == "correct" ? CellLabel::Correct : CellLabel::Misspecified;
    const auto st = statuses.find(f[10]);
    if (st == statuses.end()) {
      throw ParseError(where + ": unknown status '" + f[10] + "'");
    }
    c.status = st->second;
    if (c.status == CellStatus::Ok) {
      GimtResult g;
      g.s_hat = parse_double(f[3], where);
      g.wald = parse_double(f[4], where);
      g.p_value = parse_double(f[5], where);
      g.c_hat = parse_double(f[9], where);
      c.gimt = g;
    }
    cells.push_back(std::move(c));
  }
  if (cells.empty()) {
    throw ParseError(source + ": no grid rows");
  }
  return cells;
}

std::string auroc_summary_to_csv(const std::vector<AurocSummary>& rows) {
  std::ostringstream ss;
  ss << "level,auroc_mean,ci_lower,ci_upper,replications,per_replication_auroc,scored_cells,excluded_cells,"
        "comparison\n";
  for (const auto& r : rows) {
    ss << format_double(r.level) << ',' << format_double(r.mean) << ',' << format_double(r.ci_lower) << ','
       << format_double(r.ci_upper) << ',' << r.per_replication_auroc.size() << ',';
    for (std::size_t i = 0; i < r.per_replication_auroc.size(); ++i) {
      if (i > 0) ss << ';';
      ss << format_double(r.per_replication_auroc[i]);
    }
    ss << ',' << r.scored_cells << ',' << r.excluded_cells << ',' << r.comparison << '\n';
  }
  return ss.str();
}

std::string roc_level_to_csv(const std::vector<ReplicationRoc>& curves, double level) {
  std::ostringstream ss;
  ss << "replication,threshold,fpr,tpr\n";
  for (const auto& c : curves) {
    if (c.level != level) continue;
    for (std::size_t k = 0; k < c.curve.size(); ++k) {
      ss << c.replication << ',' << format_double(c.curve.thresholds[k]) << ',' << format_double(c.curve.fpr[k])
         << ',' << format_double(c.curve.tpr[k]) << '\n';
    }
  }
  return ss.str();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const DimensionError*>(&e)) return kExitDimension;
  if (dynamic_cast<const OptimizationError*>(&e)) return kExitConvergence;
  if (dynamic_cast<const DegenerateFitError*>(&e)) return kExitDegenerate;
  if (dynamic_cast<const MatrixError*>(&e) || dynamic_cast<const VarianceError*>(&e)) return kExitNumerical;
  return kExitUsage;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_fit(const ExperimentConfig& cfg, std::ostream& log) {
  const ResponseMatrix data = read_responses(cfg.responses);
  const ModelSpec spec = cfg.model_spec(read_qmatrix(cfg.qmatrix));
  const FitResult f = fit(data, spec, cfg.fit_config());

  OutputSet out{cfg.out, {}};
  out.add("fit.json", fit_json(f, data, spec).dump(2) + "\n");
  out.add("beta.csv", item_params_csv(f.beta_hat));
  out.write_all();
  log << "fit: " << f.message << ", risk " << format_double(f.risk) << ", " << f.iterations
      << " iterations, min Hessian eigenvalue " << f.hessian_min_eig << "\n";
  return f.converged ? kExitOk : kExitConvergence;
}

int cmd_gimt(const ExperimentConfig& cfg, std::ostream& log) {
  const ResponseMatrix data = read_responses(cfg.responses);
  const ModelSpec spec = cfg.model_spec(read_qmatrix(cfg.qmatrix));
  const ItemParams beta = read_item_params(cfg.beta);
  if (beta.items() != spec.items()) {
    throw DimensionError("parameter file has " + std::to_string(beta.items()) + " items but the Q-matrix has " +
                         std::to_string(spec.items()));
  }
  Json j;
  int code = kExitOk;
  try {
    const InfoMatrices info = compute_info_matrices(data, spec, beta);
    const double s_hat = gimt_det_stat(info.a_hat, info.b_hat);
    GimtOptions opts;
    opts.fd_scale = cfg.fd_scale;
    const double c_hat = stat_variance(info, data, spec, beta, opts);
    const GimtResult r = wald_test(s_hat, c_hat, data.examinees());
    j["status"] = "ok";
    j["s_hat"] = r.s_hat;
    j["c_hat"] = r.c_hat;
    j["wald"] = r.wald;
    j["p_value"] = r.p_value;
    j["df"] = r.df;
    j["n"] = r.n;
    j["q"] = spec.num_params();
    j["a_hat"] = matrix_json(info.a_hat);
    j["b_hat"] = matrix_json(info.b_hat);
    log << "gimt: s_hat " << r.s_hat << ", W " << r.wald << ", p " << r.p_value << "\n";
  } catch (const DegenerateFitError& e) {
    j = error_json("degenerate_fit", e.what());
    code = kExitDegenerate;
  } catch (const MatrixError& e) {
    j = error_json("matrix", e.what());
    code = kExitNumerical;
  } catch (const VarianceError& e) {
    j = error_json("variance", e.what());
    code = kExitNumerical;
  }
  if (code != kExitOk) {
    log << "gimt: " << j["reason"].get<std::string>() << "\n";
  }
  write_text_file(cfg.out / "gimt.json", j.dump(2) + "\n");
  return code;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  const ModelSpec spec = cfg.model_spec(read_qmatrix(cfg.qmatrix));
  const DgpModel dgp{spec, read_item_params(cfg.beta), cfg.seed};
  dgp.validate();
  RandomStream stream = RandomStream::derive(dgp.seed, {kSimulateStream});
  const ResponseMatrix data = sample_dataset(dgp, cfg.n, stream);
  write_text_file(cfg.out / "responses.csv", binary_csv(data));
  log << "simulate: wrote " << data.examinees() << " x " << data.items() << " responses\n";
  return kExitOk;
}

int cmd_perturb_q(const ExperimentConfig& cfg, std::ostream& log) {
  const QMatrix q = read_qmatrix(cfg.qmatrix);
  PerturbationPlan plan;
  plan.seed = cfg.seed;
  RandomStream stream = q_stream(plan, cfg.level, cfg.replication);
  const PerturbedQ p = perturb_q(q, cfg.level, stream, plan.max_perturbation_retries);
  write_text_file(cfg.out / "qmatrix_perturbed.csv", binary_csv(p.q));
  log << "perturb-q: " << p.flips << " entries flipped, " << p.rejected_draws << " draws rejected\n";
  return kExitOk;
}

int cmd_roc(const ExperimentConfig& cfg, std::ostream& log) {
  const auto cells = grid_from_csv(read_text_file(cfg.grid), cfg.grid.string());
  OutputSet out{cfg.out, {}};
  Json meta;
  add_evaluation_files(out, cells, parse_score_kind(cfg.score), distinct_levels(cells), meta);
  if (meta.contains("evaluation_error")) {
    throw EvaluationError(meta["evaluation_error"].get<std::string>());
  }
  out.write_all();
  log << "roc: wrote " << out.files.size() << " files\n";
  return kExitOk;
}

int cmd_pipeline(const ExperimentConfig& cfg, std::ostream& log) {
  const ResponseMatrix data = read_responses(cfg.responses);
  const ModelSpec spec = cfg.model_spec(read_qmatrix(cfg.qmatrix));
  const FitConfig fit_cfg = cfg.fit_config();
  const PerturbationPlan plan = cfg.plan();
  const ScoreKind kind = parse_score_kind(cfg.score);

  OutputSet out{cfg.out, {}};
  const FitResult dgp_fit = fit(data, spec, fit_cfg);
  out.add("dgp_fit.json", fit_json(dgp_fit, data, spec).dump(2) + "\n");
  out.add("dgp_beta.csv", item_params_csv(dgp_fit.beta_hat));
  if (!dgp_fit.converged) {
    out.write_all();
    log << "pipeline: DGP fit did not converge (" << dgp_fit.message << ")\n";
    return kExitConvergence;
  }
  log << "pipeline: DGP fitted (risk " << format_double(dgp_fit.risk) << "), running " << plan.cell_count()
      << " cells\n";

  const DgpModel dgp{spec, dgp_fit.beta_hat, cfg.seed};
  GimtOptions gimt_options;
  gimt_options.fd_scale = cfg.fd_scale;
  const auto cells = run_grid(dgp, plan, fit_cfg, cfg.resolved_workers(), gimt_options);
  out.add("grid.csv", grid_to_csv(cells));

  Json eval_meta;
  add_evaluation_files(out, cells, kind, plan.flip_levels, eval_meta);

  std::map<std::string, int> failures;
  Json replications = Json::array();
  for (const auto& c : cells) {
    if (!c.ok()) ++failures[to_string(c.status)];
    if (c.dataset == 0) {
      replications.push_back(Json{{"level", c.level},
                                  {"replication", c.replication},
                                  {"q_flips", c.q_flips},
                                  {"rejected_draws", c.q_rejected_draws}});
    }
  }

  Json manifest;
  manifest["tool"] = "gimt-cdm";
  manifest["version"] = kVersion;
  manifest["command"] = "pipeline";
  const Json config = config_json(cfg);
  manifest["config"] = config;
  manifest["config_sha256"] = sha256_hex(config.dump());
  manifest["seeds"] = Json{{"plan_seed", plan.seed},
                           {"substreams", "q: (seed, 0x51, level_ppm, replication); data: (seed, 0xDA, "
                                          "level_ppm, replication, dataset)"}};
  manifest["cells"] = Json{{"total", cells.size()}, {"failed", failures}};
  manifest["replications"] = std::move(replications);
  manifest["evaluation"] = eval_meta;
  manifest["files"] = out.write_all();
  write_text_file(cfg.out / "manifest.json", manifest.dump(2) + "\n");

  log << "pipeline: " << cells.size() << " cells, " << (cells.size() - static_cast<std::size_t>(std::count_if(
                                                            cells.begin(), cells.end(),
                                                            [](const CellResult& c) { return c.ok(); })))
      << " failed; outputs in " << cfg.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"DINA model fitting and determinant information matrix test"};
  app.set_config("--config", "", "key = value configuration file; flags override it");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  ExperimentConfig cfg;
  std::string responses, qmatrix, beta, grid, out = "out", levels;

  app.add_option("--responses", responses, "headerless 0/1 response CSV (rows = examinees)");
  app.add_option("--qmatrix", qmatrix, "headerless 0/1 Q-matrix CSV (rows = items)");
  app.add_option("--beta", beta, "item parameter CSV (item,slope,intercept)");
  app.add_option("--grid", grid, "grid CSV written by pipeline");
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--mu-slope", cfg.mu_slope, "prior mean of each item slope")->capture_default_str();
  app.add_option("--mu-intercept", cfg.mu_intercept, "prior mean of each item intercept")->capture_default_str();
  app.add_option("--sigma2", cfg.sigma2, "prior variance of each item parameter")->capture_default_str();
  app.add_option("--guess", cfg.guess, "skill mastery probability sigmoid(-eta)")->capture_default_str();
  app.add_option("--levels", levels, "comma-separated Q flip probabilities (default 0,0.01,0.05,0.1,0.15,0.2)");
  app.add_option("--replications", cfg.replications, "perturbed Q-matrices per level")->capture_default_str();
  app.add_option("--datasets", cfg.datasets, "bootstrap datasets per replication")->capture_default_str();
  app.add_option("--n", cfg.n, "examinees per simulated dataset")->capture_default_str();
  app.add_option("--seed", cfg.seed, "root random seed")->capture_default_str();
  app.add_flag("--share-datasets", cfg.share_datasets, "reuse dataset d across replications of a level");
  app.add_option("--level", cfg.level, "flip probability for perturb-q")->capture_default_str();
  app.add_option("--replication", cfg.replication, "replication index for perturb-q")->capture_default_str();
  app.add_option("--grad-tol", cfg.grad_tol, "gradient sup-norm tolerance")->capture_default_str();
  app.add_option("--step-tol", cfg.step_tol, "step sup-norm tolerance")->capture_default_str();
  app.add_option("--max-iters", cfg.max_iters, "optimizer iteration limit")->capture_default_str();
  app.add_option("--fd-scale", cfg.fd_scale, "relative third-derivative step")->capture_default_str();
  app.add_option("--score", cfg.score, "ROC score: wald, s_hat or abs_s_hat")->capture_default_str();
  app.add_option("--workers", cfg.workers, "worker threads (default GIMT_CDM_THREADS or all cores)");

  auto add_command = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    return sub;
  };
  auto* fit_cmd = add_command("fit", "fit the model and write fit.json and beta.csv");
  auto* gimt_cmd = add_command("gimt", "compute the determinant information matrix test at --beta");
  auto* sim_cmd = add_command("simulate", "sample responses from the model at --beta");
  auto* perturb_cmd = add_command("perturb-q", "flip Q-matrix entries with probability --level");
  auto* roc_cmd = add_command("roc", "ROC curves and AUROC summary from a grid CSV");
  auto* pipe_cmd = add_command("pipeline", "fit the DGP, run the perturbation grid and evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.responses = responses;
    cfg.qmatrix = qmatrix;
    cfg.beta = beta;
    cfg.grid = grid;
    cfg.out = out;
    if (!levels.empty()) cfg.levels = parse_levels(levels);

    auto need = [](const std::string& value, const char* flag) {
      if (value.empty()) throw ParseError(std::string("missing required option ") + flag);
    };
    std::ostream& log = std::cerr;
    if (fit_cmd->parsed()) {
      need(responses, "--responses");
      need(qmatrix, "--qmatrix");
      return cmd_fit(cfg, log);
    }
    if (gimt_cmd->parsed()) {
      need(responses, "--responses");
      need(qmatrix, "--qmatrix");
      need(beta, "--beta");
      return cmd_gimt(cfg, log);
    }
    if (sim_cmd->parsed()) {
      need(qmatrix, "--qmatrix");
      need(beta, "--beta");
      return cmd_simulate(cfg, log);
    }
    if (perturb_cmd->parsed()) {
      need(qmatrix, "--qmatrix");
      return cmd_perturb_q(cfg, log);
    }
    if (roc_cmd->parsed()) {
      need(grid, "--grid");
      return cmd_roc(cfg, log);
    }
    if (pipe_cmd->parsed()) {
      need(responses, "--responses");
      need(qmatrix, "--qmatrix");
      return cmd_pipeline(cfg, log);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

} // namespace gimt_cdm::app
