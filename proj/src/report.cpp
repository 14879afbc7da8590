#include "pathmed/report.hpp"

#include <cmath>

#include <json.hpp>

namespace pathmed {

namespace {

using nlohmann::json;

json regime_json(const Regime& r) {
  json out = json::array();
  for (int a : r.assignments) out.push_back(a);
  return out;
}

json warnings_json(const std::vector<Warning>& warnings) {
  json out = json::array();
  for (const auto& w : warnings) {
    json e;
    e["code"] = w.code;
    e["message"] = w.message;
    e["value"] = w.value;
    out.push_back(e);
  }
  return out;
}

void put_finite(json& j, const std::string& key, double v) {
  if (std::isfinite(v)) j[key] = v;
}

}  // namespace

std::string effect_report_json(const std::string& command,
                               const RunConfig& config,
                               const std::vector<EffectReportEntry>& effects,
                               const std::vector<Warning>& run_warnings,
                               double telescope_gap) {
  json j;
  j["schema_version"] = 1;
  j["command"] = command;
  j["method"] = method_name(config.method);
  json meta;
  meta["seed"] = config.seed;
  meta["folds"] = config.folds;
  meta["clip"] = config.clip;
  meta["learner"] = config.learner;
  meta["inference"] = config.inference;
  meta["level"] = config.level;
  meta["inputs"] = config.inputs;
  j["metadata"] = meta;
  if (command == "decompose" || command == "disparity")
    j["telescope_gap"] = telescope_gap;
  j["warnings"] = warnings_json(run_warnings);

  j["effects"] = json::array();
  for (const auto& e : effects) {
    json out;
    out["label"] = e.label;
    out["kind"] = effect_kind_name(e.estimate.spec.kind);
    if (!e.estimate.spec.comparison.assignments.empty()) {
      out["comparison"] = regime_json(e.estimate.spec.comparison);
      out["baseline"] = regime_json(e.estimate.spec.baseline);
    }
    out["point"] = e.estimate.point;
    put_finite(out, "se", e.estimate.se);
    if (std::isfinite(e.estimate.ci_lo)) {
      out["ci"] = json::array({e.estimate.ci_lo, e.estimate.ci_hi});
      out["level"] = e.estimate.level;
    }
    out["clipped_evaluations"] = e.estimate.clipped;
    out["warnings"] = warnings_json(e.estimate.warnings);
    if (e.pooled) {
      json p;
      p["m"] = e.pooled->m;
      p["within_variance"] = e.pooled->within;
      p["between_variance"] = e.pooled->between;
      p["total_variance"] = e.pooled->total;
      out["pooled"] = p;
    }
    j["effects"].push_back(out);
  }
  return j.dump(2);
}

namespace {

std::string type_name(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

std::string check(const json& doc, const json& schema, const std::string& path) {
  if (schema.contains("type")) {
    std::string want = schema["type"].get<std::string>();
    std::string got = type_name(doc);
    bool ok = want == got || (want == "number" && got == "integer");
    if (!ok) return path + ": expected " + want + ", got " + got;
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"]) ok = ok || v == doc;
    if (!ok) return path + ": value not in enum";
  }
  if (doc.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!doc.contains(key.get<std::string>()))
          return path + ": missing required '" + key.get<std::string>() + "'";
    if (schema.contains("properties")) {
      for (auto it = schema["properties"].begin(); it != schema["properties"].end();
           ++it) {
        if (!doc.contains(it.key())) continue;
        std::string err = check(doc[it.key()], it.value(), path + "/" + it.key());
        if (!err.empty()) return err;
      }
      if (schema.contains("additionalProperties") &&
          schema["additionalProperties"].is_boolean() &&
          !schema["additionalProperties"].get<bool>()) {
        for (auto it = doc.begin(); it != doc.end(); ++it)
          if (!schema["properties"].contains(it.key()))
            return path + ": unexpected property '" + it.key() + "'";
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    for (size_t i = 0; i < doc.size(); ++i) {
      std::string err = check(doc[i], schema["items"],
                              path + "[" + std::to_string(i) + "]");
      if (!err.empty()) return err;
    }
  }
  return "";
}

}  // namespace

std::string validate_schema(const std::string& document_json,
                            const std::string& schema_json) {
  json doc, schema;
  try {
    doc = json::parse(document_json);
  } catch (const json::parse_error& e) {
    return std::string("document: ") + e.what();
  }
  try {
    schema = json::parse(schema_json);
  } catch (const json::parse_error& e) {
    return std::string("schema: ") + e.what();
  }
  return check(doc, schema, "$");
}

}  // namespace pathmed
