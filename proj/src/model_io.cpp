#include "morphoscope/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace morphoscope {

namespace {

using nlohmann::json;

const char* scope_name(PriorScope scope) {
  return scope == PriorScope::value ? "value" : "pooled";
}

PriorScope parse_scope(const std::string& name) {
  if (name == "value") return PriorScope::value;
  if (name == "pooled") return PriorScope::pooled;
  throw FormatError("unknown prior scope '" + name + "'");
}

}  // namespace

std::string model_to_json_text(const ProbeModel& model) {
  json j;
  j["format_version"] = 1;
  j["schema"] = {{"attribute", model.schema.attribute}, {"values", model.schema.values}};
  j["dim"] = model.dim;
  json priors = json::object();
  json gaussians = json::object();
  for (int v = 0; v < model.n_values(); ++v) {
    const std::string& name = model.schema.values[static_cast<std::size_t>(v)];
    priors[name] = model.class_prior[static_cast<std::size_t>(v)];
    const auto& g = model.gaussians[static_cast<std::size_t>(v)];
    std::vector<double> mean(g.mean.data(), g.mean.data() + g.mean.size());
    std::vector<double> cov;
    cov.reserve(static_cast<std::size_t>(g.dim) * static_cast<std::size_t>(g.dim));
    for (int r = 0; r < g.dim; ++r) {
      for (int c = 0; c < g.dim; ++c) cov.push_back(g.cov(r, c));
    }
    gaussians[name] = {{"mean", mean}, {"cov", cov}};
  }
  j["class_prior"] = priors;
  j["gaussians"] = gaussians;
  j["provenance"] = {{"dataset_id", model.provenance.dataset_id},
                     {"tool_version", model.provenance.tool_version},
                     {"fit_timestamp", model.provenance.fit_timestamp},
                     {"hyperparams",
                      {{"k0", model.provenance.policy.k0},
                       {"nu_offset", model.provenance.policy.nu_offset},
                       {"prior_scope", scope_name(model.provenance.policy.scope)},
                       {"mle", model.provenance.policy.mle}}}};
  return j.dump(2);
}

ProbeModel model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw FormatError("unsupported model format_version " +
                        std::to_string(j.at("format_version").get<int>()));
    }
    ProbeModel model;
    model.schema.attribute = j.at("schema").at("attribute").get<std::string>();
    model.schema.values = j.at("schema").at("values").get<std::vector<std::string>>();
    model.dim = j.at("dim").get<int>();
    const auto& priors = j.at("class_prior");
    const auto& gaussians = j.at("gaussians");
    for (const std::string& name : model.schema.values) {
      model.class_prior.push_back(priors.at(name).get<double>());
      const auto& jg = gaussians.at(name);
      const auto mean = jg.at("mean").get<std::vector<double>>();
      const auto cov = jg.at("cov").get<std::vector<double>>();
      const int d = model.dim;
      if (static_cast<int>(mean.size()) != d ||
          static_cast<int>(cov.size()) != d * d) {
        throw FormatError("gaussian for '" + name + "' has wrong dimensions");
      }
      GaussianParams g;
      g.dim = d;
      g.mean = Eigen::Map<const Vec>(mean.data(), d);
      g.cov = Mat(d, d);
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
          g.cov(r, c) = cov[static_cast<std::size_t>(r) * static_cast<std::size_t>(d) +
                            static_cast<std::size_t>(c)];
        }
      }
      model.gaussians.push_back(std::move(g));
    }
    if (j.contains("provenance")) {
      const auto& p = j.at("provenance");
      model.provenance.dataset_id = p.value("dataset_id", std::string());
      model.provenance.tool_version = p.value("tool_version", std::string());
      model.provenance.fit_timestamp = p.value("fit_timestamp", std::string());
      if (p.contains("hyperparams")) {
        const auto& h = p.at("hyperparams");
        model.provenance.policy.k0 = h.value("k0", 0.01);
        model.provenance.policy.nu_offset = h.value("nu_offset", 2.0);
        model.provenance.policy.scope = parse_scope(h.value("prior_scope", std::string("value")));
        model.provenance.policy.mle = h.value("mle", false);
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model field: ") + e.what());
  }
}

void save_model(const ProbeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << model_to_json_text(model) << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

ProbeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json_text(text);
}

}  // namespace morphoscope
