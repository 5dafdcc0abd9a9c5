#include "xpca/model_io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace xpca {

using nlohmann::json;

namespace {

json matrix_rows(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) r.push_back(M(i, c));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd read_matrix(const json& rows, Eigen::Index nrow, Eigen::Index ncol,
                            const char* what) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != nrow)
    throw std::runtime_error(std::string("model file: bad shape for ") + what);
  Eigen::MatrixXd M(nrow, ncol);
  for (Eigen::Index i = 0; i < nrow; ++i) {
    const json& r = rows[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != ncol)
      throw std::runtime_error(std::string("model file: bad shape for ") + what);
    for (Eigen::Index c = 0; c < ncol; ++c) M(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

// JSON has no NaN or infinity; they are written as null.
double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

std::string model_to_json(const ModelFile& file) {
  const FactorModel& m = file.model;
  json j;
  j["format"] = "xpca-model";
  j["version"] = kModelFormatVersion;
  j["method"] = to_string(m.method);
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["rank"] = m.rank();
  j["U"] = matrix_rows(m.U);
  j["V"] = matrix_rows(m.V);
  j["sigma"] = m.sigma;
  j["ties"] = to_string(m.ties);
  j["epsilon"] = m.epsilon;

  json moments = json::array();
  for (const ColumnMoments& c : m.moments) moments.push_back({{"mean", c.mean}, {"stddev", c.stddev}});
  j["moments"] = std::move(moments);

  json edfs = json::array();
  for (const Edf& e : m.edfs) edfs.push_back({{"support", e.distinct()}, {"counts", e.counts()}});
  j["edfs"] = std::move(edfs);

  json trace = json::array();
  for (double v : m.info.trace) trace.push_back(std::isfinite(v) ? json(v) : json());
  j["fit"] = {{"iterations", m.info.iterations},
              {"objective", std::isfinite(m.info.objective) ? json(m.info.objective) : json()},
              {"converged", m.info.converged},
              {"optimizer", m.info.optimizer},
              {"fallback_used", m.info.fallback_used},
              {"trace", std::move(trace)}};

  j["column_names"] = file.column_names;
  json missing = json::array();
  for (const Entry& e : file.missing) missing.push_back({e.row, e.col});
  j["missing"] = std::move(missing);
  return j.dump();
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("model file: not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "xpca-model") throw std::runtime_error("model file: unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw std::runtime_error("model file: unsupported version");

    ModelFile file;
    FactorModel& m = file.model;
    m.method = parse_method(j.at("method").get<std::string>());
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto rank = j.at("rank").get<Eigen::Index>();
    m.U = read_matrix(j.at("U"), rows, rank, "U");
    m.V = read_matrix(j.at("V"), cols, rank, "V");
    m.sigma = j.at("sigma").get<double>();
    m.ties = parse_tie_rule(j.at("ties").get<std::string>());
    m.epsilon = j.at("epsilon").get<double>();
    for (const json& c : j.at("moments"))
      m.moments.push_back({c.at("mean").get<double>(), c.at("stddev").get<double>()});
    for (const json& e : j.at("edfs"))
      m.edfs.emplace_back(e.at("support").get<std::vector<double>>(),
                          e.at("counts").get<std::vector<std::size_t>>());

    const json& fit = j.at("fit");
    m.info.iterations = fit.at("iterations").get<int>();
    m.info.objective = number_or_nan(fit.at("objective"));
    m.info.converged = fit.at("converged").get<bool>();
    m.info.optimizer = fit.at("optimizer").get<std::string>();
    m.info.fallback_used = fit.at("fallback_used").get<bool>();
    for (const json& v : fit.at("trace")) m.info.trace.push_back(number_or_nan(v));

    file.column_names = j.at("column_names").get<std::vector<std::string>>();
    for (const json& e : j.at("missing"))
      file.missing.push_back({e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>()});

    const bool needs_moments = m.method == Method::PCA;
    if (needs_moments && static_cast<Eigen::Index>(m.moments.size()) != cols)
      throw std::runtime_error("model file: PCA model needs one moment pair per column");
    if (!needs_moments && static_cast<Eigen::Index>(m.edfs.size()) != cols)
      throw std::runtime_error("model file: copula model needs one EDF per column");
    for (const Entry& e : file.missing)
      if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
        throw std::runtime_error("model file: missing-cell index out of range");
    return file;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: malformed field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << model_to_json(file) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace xpca
