#include "pathmed/config.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "pathmed/csv.hpp"

namespace pathmed {

namespace {

using nlohmann::json;

EffectKind effect_kind_from_string(const std::string& s) {
  if (s == "NDE") return EffectKind::NDE;
  if (s == "NIE_M1" || s == "NIE") return EffectKind::NIE_M1;
  if (s == "TIE_M1" || s == "TIE") return EffectKind::TIE_M1;
  if (s == "nPSE") return EffectKind::nPSE;
  if (s == "cPSE") return EffectKind::cPSE;
  if (s == "ATE") return EffectKind::ATE;
  if (s == "custom") return EffectKind::Custom;
  throw Error(ErrorCategory::config, "unknown effect kind '" + s + "'");
}

Regime regime_from_json(const json& j) {
  std::vector<int> a;
  for (const auto& v : j) a.push_back(v.get<int>());
  return Regime(a);
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::config, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::config, path + ": " + e.what());
  }

  RunConfig c;
  try {
    if (j.contains("input")) {
      if (j["input"].is_string())
        c.inputs = {j["input"].get<std::string>()};
      else
        c.inputs = j["input"].get<std::vector<std::string>>();
    }
    const json& roles = j.at("roles");
    c.treatment = roles.at("treatment").get<std::string>();
    c.outcome = roles.at("outcome").get<std::string>();
    if (roles.contains("covariates"))
      c.covariates = roles["covariates"].get<std::vector<std::string>>();
    if (roles.contains("mediators"))
      for (const auto& block : roles["mediators"])
        c.mediators.push_back(block.get<std::vector<std::string>>());
    if (roles.contains("discrete"))
      c.discrete = roles["discrete"].get<std::vector<std::string>>();

    if (j.contains("estimator")) {
      std::string est = j["estimator"].get<std::string>();
      if (est.find("RI") == 0 || est.find("W") == 0 || est.find("ri-") == 0 ||
          est.find("w-") == 0) {
        // hybrid spelled as a choice string, e.g. "RI-RI-W"
        try {
          c.hybrid = hybrid_choices_from_string(est);
          c.method = Method::hybrid;
        } catch (const Error&) {
          c.method = method_from_string(est);
        }
      } else {
        c.method = method_from_string(est);
      }
    }
    if (j.contains("learners")) {
      const json& l = j["learners"];
      if (l.contains("default")) c.learner = l["default"].get<std::string>();
      if (l.contains("overrides"))
        for (auto it = l["overrides"].begin(); it != l["overrides"].end(); ++it)
          c.learner_overrides[it.key()] = it.value().get<std::string>();
      if (l.contains("predictors"))
        for (auto it = l["predictors"].begin(); it != l["predictors"].end(); ++it)
          c.predictor_overrides[it.key()] =
              it.value().get<std::vector<std::string>>();
      if (l.contains("arm_restricted_outcome"))
        c.arm_restricted_outcome = l["arm_restricted_outcome"].get<bool>();
    }
    if (j.contains("effects")) {
      for (const auto& e : j["effects"]) {
        EffectRequest r;
        r.kind = effect_kind_from_string(e.at("kind").get<std::string>());
        if (e.contains("k")) r.k = e["k"].get<int>();
        if (e.contains("comparison")) r.comparison = regime_from_json(e["comparison"]);
        if (e.contains("baseline")) r.baseline = regime_from_json(e["baseline"]);
        c.effects.push_back(std::move(r));
      }
    }
    if (j.contains("folds")) c.folds = j["folds"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("clip")) c.clip = j["clip"].get<double>();
    if (j.contains("mc_draws")) c.mc_draws = j["mc_draws"].get<int>();
    if (j.contains("inference")) c.inference = j["inference"].get<std::string>();
    if (j.contains("bootstrap_reps"))
      c.bootstrap_reps = j["bootstrap_reps"].get<int>();
    if (j.contains("level")) c.level = j["level"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::config, path + ": " + e.what());
  }

  if (c.inference != "eif" && c.inference != "bootstrap" && c.inference != "none")
    throw Error(ErrorCategory::config,
                "inference must be one of eif, bootstrap, none");
  return c;
}

ObservedData load_dataset(const RunConfig& config, const std::string& path) {
  CsvTable t = read_csv(path);
  auto need = [&](const std::string& name) {
    int col = t.column(name);
    if (col < 0)
      throw Error(ErrorCategory::config,
                  path + ": declared column '" + name + "' not found");
    return col;
  };

  ObservedData d;
  const Index n = t.nrows();
  int a_col = need(config.treatment);
  int y_col = need(config.outcome);
  d.a.resize(n);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    d.a(i) = t.rows[static_cast<size_t>(i)][static_cast<size_t>(a_col)];
    d.y(i) = t.rows[static_cast<size_t>(i)][static_cast<size_t>(y_col)];
  }
  d.a_name = config.treatment;
  d.y_name = config.outcome;

  d.x.resize(n, static_cast<Index>(config.covariates.size()));
  for (size_t j = 0; j < config.covariates.size(); ++j) {
    int col = need(config.covariates[j]);
    for (Index i = 0; i < n; ++i)
      d.x(i, static_cast<Index>(j)) =
          t.rows[static_cast<size_t>(i)][static_cast<size_t>(col)];
  }
  d.x_names = config.covariates;

  auto tagged_discrete = [&](const std::string& name) {
    return std::find(config.discrete.begin(), config.discrete.end(), name) !=
           config.discrete.end();
  };
  for (const auto& block : config.mediators) {
    if (block.empty())
      throw Error(ErrorCategory::config, "empty mediator block in config");
    Matrix m(n, static_cast<Index>(block.size()));
    std::vector<bool> disc;
    for (size_t j = 0; j < block.size(); ++j) {
      int col = need(block[j]);
      for (Index i = 0; i < n; ++i)
        m(i, static_cast<Index>(j)) =
            t.rows[static_cast<size_t>(i)][static_cast<size_t>(col)];
      disc.push_back(tagged_discrete(block[j]));
    }
    d.mediators.push_back(std::move(m));
    d.mediator_names.push_back(block);
    d.discrete.push_back(std::move(disc));
  }
  d.check();
  return d;
}

LearnerPolicy build_policy(const RunConfig& config, const ObservedData& data) {
  LearnerKind def = learner_kind_from_string(config.learner);
  LearnerPolicy p = LearnerPolicy::defaults(data, def);
  p.arm_restricted_outcome = config.arm_restricted_outcome;

  auto apply = [&](const std::string& role, LearnerSpec& spec) {
    auto lit = config.learner_overrides.find(role);
    if (lit != config.learner_overrides.end())
      spec.kind = learner_kind_from_string(lit->second);
    auto pit = config.predictor_overrides.find(role);
    if (pit != config.predictor_overrides.end()) {
      spec.x_cols.clear();
      for (const auto& name : pit->second) {
        auto found = std::find(data.x_names.begin(), data.x_names.end(), name);
        if (found == data.x_names.end())
          throw Error(ErrorCategory::config,
                      "predictor override names unknown covariate '" + name + "'");
        spec.x_cols.push_back(static_cast<int>(found - data.x_names.begin()));
      }
    }
  };
  for (int k = 0; k <= data.num_mediators(); ++k) {
    apply("pi" + std::to_string(k), p.pi[static_cast<size_t>(k)]);
    apply("mu" + std::to_string(k), p.mu[static_cast<size_t>(k)]);
  }
  for (int k = 1; k <= data.num_mediators(); ++k)
    apply("f" + std::to_string(k), p.f[static_cast<size_t>(k - 1)]);
  return p;
}

}  // namespace pathmed
