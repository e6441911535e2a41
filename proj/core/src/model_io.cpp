#include "npvine/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "npvine/error.hpp"

namespace npvine {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kFormatName = "npvine-model";

bool is_scalar_array(const Json& j) {
  return j.is_array() && std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_primitive(); });
}

void emit(std::ostream& out, const Json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
  const std::string inner(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  if (j.is_object() && !j.empty()) {
    out << "{\n";
    std::size_t k = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++k) {
      out << inner << Json(it.key()).dump() << ": ";
      emit(out, it.value(), depth + 1);
      out << (k + 1 < j.size() ? ",\n" : "\n");
    }
    out << pad << "}";
  } else if (j.is_array() && !j.empty() && !is_scalar_array(j)) {
    out << "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      out << inner;
      emit(out, j[k], depth + 1);
      out << (k + 1 < j.size() ? ",\n" : "\n");
    }
    out << pad << "]";
  } else if (j.is_array()) {
    out << "[";
    for (std::size_t k = 0; k < j.size(); ++k) out << (k ? ", " : "") << j[k].dump();
    out << "]";
  } else {
    out << j.dump();
  }
}

Json copula_json(const PairCopula& copula) {
  Json j;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IndependenceCopula>) {
          j["kind"] = "independence";
        } else if constexpr (std::is_same_v<T, GaussianCopula>) {
          j["kind"] = "gaussian";
          j["rho"] = c.rho;
        } else {
          j["kind"] = "kernel";
          j["sigma_z"] = c.sigma_z();
          j["sigma_w"] = c.sigma_w();
          j["gamma"] = c.gamma();
          j["z_centers"] = c.z_centers();
          j["w_centers"] = c.w_centers();
        }
      },
      copula);
  return j;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::parse, std::string("model file: missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::parse, std::string("model file: field '") + key + "' has the wrong type");
  }
}

double finite(const Json& j, const char* key) {
  const double v = get<double>(j, key);
  if (!std::isfinite(v)) fail(ErrorKind::parse, std::string("model file: field '") + key + "' is not finite");
  return v;
}

std::vector<double> finite_array(const Json& j, const char* key) {
  auto v = get<std::vector<double>>(j, key);
  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorKind::parse, std::string("model file: '") + key + "' holds a non-finite value");
  }
  return v;
}

PairCopula copula_from(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  try {
    if (kind == "independence") return IndependenceCopula{};
    if (kind == "gaussian") {
      const double rho = finite(j, "rho");
      if (!(std::abs(rho) < 1.0)) fail(ErrorKind::structural, "model file: gaussian rho must lie in (-1, 1)");
      return GaussianCopula(rho);
    }
    if (kind == "kernel") {
      auto z = finite_array(j, "z_centers");
      auto w = finite_array(j, "w_centers");
      if (z.empty() || z.size() != w.size()) fail(ErrorKind::structural, "model file: kernel copula centers malformed");
      const double sz = finite(j, "sigma_z");
      const double sw = finite(j, "sigma_w");
      if (!(sz > 0.0 && sw > 0.0)) fail(ErrorKind::structural, "model file: kernel copula bandwidths must be positive");
      return KernelCopula(std::move(z), std::move(w), sz, sw, finite(j, "gamma"));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::domain) fail(ErrorKind::structural, std::string("model file: ") + e.what());
    throw;
  }
  fail(ErrorKind::parse, "model file: unknown copula kind '" + kind + "'");
}

}  // namespace

std::string model_to_string(const VineModel& vine) { return model_to_string(ModelFile{vine, std::nullopt}); }

std::string model_to_string(const ModelFile& file) {
  const VineModel& vine = file.vine;
  Json j;
  j["format"] = kFormatName;
  j["format_version"] = kModelFormatVersion;
  j["variable_names"] = vine.variable_names;
  j["target_index"] = vine.target_index ? Json(*vine.target_index) : Json(nullptr);
  Json meta;
  meta["n"] = vine.metadata.n;
  meta["seed"] = vine.metadata.seed;
  meta["truncation"] = vine.metadata.truncation;
  meta["family"] = vine.metadata.family;
  if (!vine.metadata.timestamp.empty()) meta["timestamp"] = vine.metadata.timestamp;
  j["fit_metadata"] = meta;
  j["marginals"] = Json::array();
  for (const auto& m : vine.marginals) {
    Json mj;
    mj["bandwidth"] = m.bandwidth();
    mj["centers"] = m.centers();
    j["marginals"].push_back(mj);
  }
  j["trees"] = Json::array();
  for (const auto& tree : vine.trees) {
    Json tj;
    tj["level"] = tree.level;
    tj["node_count"] = tree.node_count;
    tj["edges"] = Json::array();
    for (const auto& e : tree.edges) {
      Json ej;
      ej["conditioned"] = e.conditioned;
      ej["conditioning"] = e.conditioning;
      ej["nodes"] = e.nodes;
      ej["tau"] = e.tau;
      ej["copula"] = copula_json(e.copula);
      tj["edges"].push_back(ej);
    }
    j["trees"].push_back(tj);
  }
  if (file.standardizer) {
    Json sj;
    sj["names"] = file.standardizer->names;
    sj["mean"] = file.standardizer->mean;
    sj["sd"] = file.standardizer->sd;
    j["standardization"] = sj;
  }
  std::ostringstream out;
  emit(out, j, 0);
  out << "\n";
  return out.str();
}

VineModel model_from_string(std::string_view text) { return model_file_from_string(text).vine; }

ModelFile model_file_from_string(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, std::string("model file is not valid JSON: ") + e.what());
  }
  if (get<std::string>(j, "format") != kFormatName) fail(ErrorKind::parse, "not an npvine model file");
  const int version = get<int>(j, "format_version");
  if (version != kModelFormatVersion) {
    fail(ErrorKind::schema_mismatch, "unsupported model format version " + std::to_string(version));
  }

  VineModel vine;
  vine.variable_names = get<std::vector<std::string>>(j, "variable_names");
  const Json& target = field(j, "target_index");
  if (!target.is_null()) vine.target_index = get<std::size_t>(j, "target_index");
  const Json& meta = field(j, "fit_metadata");
  vine.metadata.n = get<std::size_t>(meta, "n");
  vine.metadata.seed = get<std::uint64_t>(meta, "seed");
  vine.metadata.truncation = get<std::size_t>(meta, "truncation");
  vine.metadata.family = get<std::string>(meta, "family");
  if (meta.contains("timestamp")) vine.metadata.timestamp = get<std::string>(meta, "timestamp");
  parse_family(vine.metadata.family);

  const Json& marginals = field(j, "marginals");
  if (!marginals.is_array()) fail(ErrorKind::parse, "model file: 'marginals' must be an array");
  for (const Json& m : marginals) {
    const double h = finite(m, "bandwidth");
    auto centers = finite_array(m, "centers");
    if (!(h > 0.0) || centers.empty()) fail(ErrorKind::structural, "model file: marginal needs centers and a positive bandwidth");
    vine.marginals.emplace_back(std::move(centers), h);
  }

  const Json& trees = field(j, "trees");
  if (!trees.is_array()) fail(ErrorKind::parse, "model file: 'trees' must be an array");
  for (const Json& t : trees) {
    VineTree tree;
    tree.level = get<std::size_t>(t, "level");
    tree.node_count = get<std::size_t>(t, "node_count");
    const Json& edges = field(t, "edges");
    if (!edges.is_array()) fail(ErrorKind::parse, "model file: 'edges' must be an array");
    for (const Json& ej : edges) {
      VineEdge e;
      e.conditioned = get<std::array<std::size_t, 2>>(ej, "conditioned");
      e.conditioning = get<std::vector<std::size_t>>(ej, "conditioning");
      e.nodes = get<std::array<std::size_t, 2>>(ej, "nodes");
      e.tau = finite(ej, "tau");
      e.weight = std::abs(e.tau);
      e.copula = copula_from(field(ej, "copula"));
      e.constraint = e.conditioning;
      e.constraint.push_back(e.conditioned[0]);
      e.constraint.push_back(e.conditioned[1]);
      std::sort(e.constraint.begin(), e.constraint.end());
      tree.edges.push_back(std::move(e));
    }
    vine.trees.push_back(std::move(tree));
  }
  validate(vine);

  ModelFile file{std::move(vine), std::nullopt};
  if (j.contains("standardization")) {
    const Json& sj = j.at("standardization");
    Standardizer s;
    s.names = get<std::vector<std::string>>(sj, "names");
    s.mean = finite_array(sj, "mean");
    s.sd = finite_array(sj, "sd");
    if (s.mean.size() != s.names.size() || s.sd.size() != s.names.size() ||
        std::any_of(s.sd.begin(), s.sd.end(), [](double v) { return !(v > 0.0); })) {
      fail(ErrorKind::structural, "model file: standardization malformed");
    }
    file.standardizer = std::move(s);
  }
  return file;
}

void save_model(const VineModel& vine, const std::string& path) { save_model(ModelFile{vine, std::nullopt}, path); }

void save_model(const ModelFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::configuration, "cannot write model file '" + path + "'");
  out << model_to_string(file);
  if (!out) fail(ErrorKind::configuration, "failed writing model file '" + path + "'");
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::configuration, "cannot read model file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_file_from_string(buffer.str());
}

VineModel load_model(const std::string& path) { return load_model_file(path).vine; }

}  // namespace npvine
