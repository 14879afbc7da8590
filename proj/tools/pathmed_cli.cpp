#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

#include "pathmed/report.hpp"
#include "pathmed/rng.hpp"

namespace pm = pathmed;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> inputs;
  std::string estimator;
  std::string output;
  int folds = -1;
  std::int64_t seed = -1;
  double clip = -1.0;
  int threads = 0;
  std::string inference;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_option("--input", f.inputs, "input CSV path(s); overrides the config");
  cmd->add_option("--estimator", f.estimator, "estimator override");
  cmd->add_option("--output", f.output, "report path override");
  cmd->add_option("--folds", f.folds, "cross-fitting folds (0 disables)");
  cmd->add_option("--seed", f.seed, "seed override");
  cmd->add_option("--clip", f.clip, "probability clipping threshold");
  cmd->add_option("--threads", f.threads, "worker cap");
  cmd->add_option("--inference", f.inference, "eif | bootstrap | none");
}

pm::RunConfig resolve(const CommonFlags& f) {
  pm::RunConfig c = pm::load_config(f.config_path);
  if (!f.inputs.empty()) c.inputs = f.inputs;
  if (!f.estimator.empty()) {
    try {
      c.hybrid = pm::hybrid_choices_from_string(f.estimator);
      c.method = pm::Method::hybrid;
    } catch (const pm::Error&) {
      c.method = pm::method_from_string(f.estimator);
      c.hybrid.clear();
    }
  }
  if (!f.output.empty()) c.output = f.output;
  if (f.folds >= 0) c.folds = f.folds;
  if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
  if (f.clip >= 0.0) c.clip = f.clip;
  if (f.threads > 0) c.threads = f.threads;
  if (!f.inference.empty()) c.inference = f.inference;
  if (c.inputs.empty())
    throw pm::Error(pm::ErrorCategory::config, "no input file given");
  return c;
}

pm::GmfOptions gmf_options(const pm::RunConfig& c, std::uint64_t salt) {
  pm::GmfOptions o;
  o.clip = c.clip;
  o.mc_draws = c.mc_draws;
  o.seed = pm::derive_seed(c.seed, 0xc11, salt);
  o.hybrid_choices = c.hybrid;
  return o;
}

pm::InferenceOptions inference_options(const pm::RunConfig& c) {
  pm::InferenceOptions inf;
  inf.kind = c.inference == "bootstrap" ? pm::InferenceOptions::Kind::bootstrap
             : c.inference == "none"    ? pm::InferenceOptions::Kind::none
                                        : pm::InferenceOptions::Kind::eif;
  inf.level = c.level;
  inf.folds = c.folds;
  inf.bootstrap_reps = c.bootstrap_reps;
  inf.seed = pm::derive_seed(c.seed, 0x1f5, 0);
  inf.threads = c.threads;
  return inf;
}

void write_report(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out)
    throw pm::Error(pm::ErrorCategory::config,
                    "cannot open '" + path + "' for writing");
  out << body << '\n';
  if (!out)
    throw pm::Error(pm::ErrorCategory::config, "failed writing '" + path + "'");
}

pm::EffectSpec build_spec(const pm::EffectRequest& req, int K) {
  if (req.kind == pm::EffectKind::Custom) {
    if (!req.comparison || !req.baseline)
      throw pm::Error(pm::ErrorCategory::config,
                      "custom effects need comparison and baseline regimes");
    return pm::EffectSpec::custom(*req.comparison, *req.baseline);
  }
  return pm::standard_regimes(K, req.kind, req.k);
}

// pool one effect across the per-imputation runs
pm::EffectReportEntry pool_entry(const std::string& label,
                                 const std::vector<pm::EffectEstimate>& runs,
                                 double level) {
  pm::EffectReportEntry entry;
  entry.label = label;
  entry.estimate = runs.front();
  if (runs.size() == 1) return entry;
  std::vector<double> points, variances;
  for (const auto& r : runs) {
    points.push_back(r.point);
    variances.push_back(std::isfinite(r.se) ? r.se * r.se : 0.0);
  }
  pm::PooledEstimate pooled = pm::rubin_pool(points, variances);
  entry.estimate.point = pooled.point;
  entry.estimate.se = std::sqrt(pooled.total);
  pm::Interval ci = pm::wald_ci(pooled.point, pooled.total, level);
  entry.estimate.ci_lo = ci.lo;
  entry.estimate.ci_hi = ci.hi;
  entry.pooled = pooled;
  return entry;
}

int cmd_estimate(const CommonFlags& flags) {
  pm::RunConfig config = resolve(flags);
  if (config.effects.empty())
    throw pm::Error(pm::ErrorCategory::config, "config lists no effects");

  std::vector<std::vector<pm::EffectEstimate>> runs(config.effects.size());
  std::vector<pm::Warning> run_warnings;
  std::vector<std::string> labels(config.effects.size());
  for (const auto& path : config.inputs) {
    pm::ObservedData data = pm::load_dataset(config, path);
    pm::LearnerPolicy policy = pm::build_policy(config, data);
    pm::NuisanceCache cache;
    for (size_t e = 0; e < config.effects.size(); ++e) {
      pm::EffectSpec spec = build_spec(config.effects[e], data.num_mediators());
      labels[e] = spec.label();
      runs[e].push_back(pm::estimate_effect(data, spec, config.method, policy,
                                            gmf_options(config, e),
                                            inference_options(config), &cache));
    }
  }
  std::vector<pm::EffectReportEntry> entries;
  for (size_t e = 0; e < config.effects.size(); ++e)
    entries.push_back(pool_entry(labels[e], runs[e], config.level));
  write_report(config.output,
               pm::effect_report_json("estimate", config, entries, run_warnings));
  std::cout << "wrote " << config.output << "\n";
  return 0;
}

int cmd_decompose(const CommonFlags& flags, const std::string& order_str) {
  pm::RunConfig config = resolve(flags);
  std::vector<int> order;
  if (!order_str.empty()) {
    std::stringstream ss(order_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) order.push_back(std::stoi(tok));
  }

  std::vector<std::vector<pm::EffectEstimate>> runs;
  std::vector<std::string> labels;
  double telescope_gap = 0.0;
  for (const auto& path : config.inputs) {
    pm::ObservedData data = pm::load_dataset(config, path);
    pm::LearnerPolicy policy = pm::build_policy(config, data);
    pm::Decomposition dec = pm::decompose_ate(
        data, config.method, policy, gmf_options(config, 0),
        inference_options(config), order);
    double total = 0.0;
    for (const auto& comp : dec.components) total += comp.point;
    telescope_gap = std::max(telescope_gap, std::abs(total - dec.ate.point));
    if (std::abs(total - dec.ate.point) > 1e-10)
      throw pm::Error(pm::ErrorCategory::numeric,
                      "decomposition failed to telescope");
    if (runs.empty()) {
      runs.resize(dec.components.size() + 1);
      labels.resize(dec.components.size() + 1);
    }
    runs[0].push_back(dec.ate);
    labels[0] = "ATE";
    for (size_t t = 0; t < dec.components.size(); ++t) {
      runs[t + 1].push_back(dec.components[t]);
      labels[t + 1] = dec.components[t].path_label;
    }
  }
  std::vector<pm::EffectReportEntry> entries;
  for (size_t e = 0; e < runs.size(); ++e)
    entries.push_back(pool_entry(labels[e], runs[e], config.level));
  write_report(config.output,
               pm::effect_report_json("decompose", config, entries, {},
                                      telescope_gap));
  std::cout << "wrote " << config.output << "\n";
  return 0;
}

int cmd_disparity(const CommonFlags& flags) {
  pm::RunConfig config = resolve(flags);
  if (!config.covariates.empty())
    throw pm::Error(pm::ErrorCategory::config,
                    "disparity decompositions take no covariates");

  std::vector<std::vector<pm::EffectEstimate>> runs;
  std::vector<std::string> labels;
  double telescope_gap = 0.0;
  for (const auto& path : config.inputs) {
    pm::ObservedData data = pm::load_dataset(config, path);
    pm::LearnerPolicy policy = pm::build_policy(config, data);
    pm::Decomposition dec = pm::disparity_decompose(
        data, policy, gmf_options(config, 0), inference_options(config));
    double total = 0.0;
    for (const auto& comp : dec.components) total += comp.point;
    telescope_gap = std::max(telescope_gap, std::abs(total - dec.ate.point));
    if (std::abs(total - dec.ate.point) > 1e-10)
      throw pm::Error(pm::ErrorCategory::numeric,
                      "disparity components failed to telescope");
    if (runs.empty()) {
      runs.resize(dec.components.size() + 1);
      labels.resize(dec.components.size() + 1);
    }
    runs[0].push_back(dec.ate);
    labels[0] = "gap";
    for (size_t t = 0; t < dec.components.size(); ++t) {
      runs[t + 1].push_back(dec.components[t]);
      labels[t + 1] = dec.components[t].path_label;
    }
  }
  std::vector<pm::EffectReportEntry> entries;
  for (size_t e = 0; e < runs.size(); ++e)
    entries.push_back(pool_entry(labels[e], runs[e], config.level));
  write_report(config.output,
               pm::effect_report_json("disparity", config, entries, {},
                                      telescope_gap));
  std::cout << "wrote " << config.output << "\n";
  return 0;
}

int cmd_simulate(int reps, long n, std::int64_t seed, const std::string& cases,
                 const std::string& estimators, const std::string& out_csv,
                 const std::string& out_json, int threads, bool full) {
  pm::StudyGrid grid;
  grid.reps = full ? 1000 : reps;
  grid.n = n;
  if (seed >= 0) grid.seed = static_cast<std::uint64_t>(seed);
  grid.threads = threads > 0 ? threads : 1;
  grid.cases.clear();
  for (char c : cases) {
    switch (c) {
      case 'a': grid.cases.push_back(pm::SpecCase::a); break;
      case 'b': grid.cases.push_back(pm::SpecCase::b); break;
      case 'c': grid.cases.push_back(pm::SpecCase::c); break;
      case 'd': grid.cases.push_back(pm::SpecCase::d); break;
      case 'e': grid.cases.push_back(pm::SpecCase::e); break;
      default:
        throw pm::Error(pm::ErrorCategory::config,
                        std::string("unknown case '") + c + "'");
    }
  }
  std::stringstream ss(estimators);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) grid.estimators.push_back(pm::study_estimator(tok));
  if (grid.estimators.empty())
    throw pm::Error(pm::ErrorCategory::config, "no estimators requested");

  pm::StudyReport report = pm::run_study(grid);
  pm::write_study_csv(report, out_csv);
  write_report(out_json, pm::study_summary_json(report));
  std::cout << "wrote " << out_csv << " and " << out_json << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"estimation of path-specific effects through ordered mediators"};
  app.require_subcommand(1);

  CommonFlags est_flags, dec_flags, dis_flags;
  std::string order;

  CLI::App* estimate = app.add_subcommand("estimate", "estimate the configured effects");
  add_common(estimate, est_flags);

  CLI::App* decompose =
      app.add_subcommand("decompose", "decompose the total effect over the ladder");
  add_common(decompose, dec_flags);
  decompose->add_option("--order", order,
                        "comma-separated flip order of coordinates 1..K+1");

  CLI::App* disparity =
      app.add_subcommand("disparity", "between-group decomposition");
  add_common(disparity, dis_flags);

  int reps = 200, threads = 1;
  long n = 2000;
  std::int64_t seed = -1;
  bool full = false;
  std::string cases = "abcde";
  std::string estimators = "w-a,ri,ri-w-w,ri-ri-w,eif2,eif2-wglm";
  std::string out_csv = "study.csv", out_json = "study_summary.json";
  CLI::App* simulate = app.add_subcommand("simulate", "estimator robustness study");
  simulate->add_option("--reps", reps, "replicates per case");
  simulate->add_option("--n", n, "sample size per replicate");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--cases", cases, "subset of abcde");
  simulate->add_option("--estimators", estimators, "comma-separated estimators");
  simulate->add_option("--out-csv", out_csv, "long-format results");
  simulate->add_option("--out-json", out_json, "summary");
  simulate->add_option("--threads", threads, "worker cap");
  simulate->add_flag("--full", full, "run the full 1000 replicates");

  try {
    app.parse(argc, argv);
    if (*estimate) return cmd_estimate(est_flags);
    if (*decompose) return cmd_decompose(dec_flags, order);
    if (*disparity) return cmd_disparity(dis_flags);
    if (*simulate)
      return cmd_simulate(reps, n, seed, cases, estimators, out_csv, out_json,
                          threads, full);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const pm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
