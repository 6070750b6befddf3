#include <json.hpp>

#include <fstream>
#include <sstream>

#include "pcsindy/errors.hpp"
#include "pcsindy/sindy.hpp"

namespace pcsindy {

using nlohmann::ordered_json;

std::string model_to_json(const IdentifiedModel& m) {
  ordered_json j;
  j["format"] = "pcsindy-model/1";
  j["f0"] = m.f0;
  j["dt"] = m.dt;
  j["samples"] = m.samples;
  auto& lib = j["library"];
  lib["kind"] = to_string(m.library.kind);
  lib["degree"] = m.library.degree;
  lib["sinusoids"] = m.library.sinusoids;
  lib["include_vq_int"] = m.library.include_vq_int;
  lib["ders"] = ordered_json::array();
  for (const auto& d : m.library.roster)
    lib["ders"].push_back({{"label", d.label}, {"bus", d.bus_id}});
  j["stlsq"] = {{"threshold", m.config.threshold},
                {"max_iters", m.config.max_iters},
                {"normalize_columns", m.config.normalize_columns},
                {"ridge", m.config.ridge},
                {"block_structured", m.config.block_structured}};
  j["columns"] = m.column_labels;
  j["targets"] = m.target_labels;
  j["coefficients"] = ordered_json::array();
  for (Eigen::Index c = 0; c < m.xi.cols(); ++c)
    for (Eigen::Index r = 0; r < m.xi.rows(); ++r)
      if (m.xi(r, c) != 0.0)
        j["coefficients"].push_back({{"target", m.target_labels[static_cast<std::size_t>(c)]},
                                     {"column", m.column_labels[static_cast<std::size_t>(r)]},
                                     {"value", m.xi(r, c)}});
  j["diagnostics"] = ordered_json::array();
  for (const auto& d : m.diagnostics)
    j["diagnostics"].push_back({{"target", d.target},
                                {"iterations", d.iterations},
                                {"converged", d.converged},
                                {"support", d.support_size},
                                {"residual_rms", d.residual_rms}});
  return j.dump(2) + "\n";
}

IdentifiedModel model_from_json(const std::string& text) {
  IdentifiedModel m;
  try {
    const auto j = ordered_json::parse(text);
    if (j.value("format", "") != "pcsindy-model/1") throw ConfigError("not a model file");
    m.f0 = j.at("f0").get<double>();
    m.dt = j.at("dt").get<double>();
    m.samples = j.at("samples").get<std::size_t>();
    const auto& lib = j.at("library");
    m.library.kind = parse_library_kind(lib.at("kind").get<std::string>());
    m.library.degree = lib.at("degree").get<int>();
    m.library.sinusoids = lib.at("sinusoids").get<bool>();
    m.library.include_vq_int = lib.at("include_vq_int").get<bool>();
    for (const auto& d : lib.at("ders")) {
      auto desc = parse_der_label(d.at("label").get<std::string>());
      desc.bus_id = d.at("bus").get<int>();
      m.library.roster.push_back(desc);
    }
    const auto& s = j.at("stlsq");
    m.config.threshold = s.at("threshold").get<double>();
    m.config.max_iters = s.at("max_iters").get<int>();
    m.config.normalize_columns = s.at("normalize_columns").get<bool>();
    m.config.ridge = s.at("ridge").get<double>();
    m.config.block_structured = s.at("block_structured").get<bool>();
    m.column_labels = j.at("columns").get<std::vector<std::string>>();
    m.target_labels = j.at("targets").get<std::vector<std::string>>();
    for (const auto& d : j.at("diagnostics")) {
      TargetDiagnostics t;
      t.target = d.at("target").get<std::string>();
      t.iterations = d.at("iterations").get<int>();
      t.converged = d.at("converged").get<bool>();
      t.support_size = d.at("support").get<std::size_t>();
      t.residual_rms = d.at("residual_rms").get<double>();
      m.diagnostics.push_back(t);
    }
    const CandidateLibrary check(m.library);
    if (check.column_labels() != m.column_labels || check.target_labels() != m.target_labels)
      throw ConfigError("model labels do not match its library description");
    m.xi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.column_labels.size()),
                                 static_cast<Eigen::Index>(m.target_labels.size()));
    const auto find = [](const std::vector<std::string>& v, const std::string& s) {
      for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == s) return static_cast<Eigen::Index>(i);
      throw ConfigError("model refers to unknown label '" + s + "'");
    };
    for (const auto& c : j.at("coefficients"))
      m.xi(find(m.column_labels, c.at("column").get<std::string>()),
           find(m.target_labels, c.at("target").get<std::string>())) = c.at("value").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

void save_model(const std::filesystem::path& path, const IdentifiedModel& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open '" + path.string() + "' for writing");
  os << model_to_json(m);
}

IdentifiedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace pcsindy
