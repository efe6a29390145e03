#include "lamn/io.hpp"

#include <cstdio>
#include <fstream>

namespace lamn::io {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + file.string());
  out << content;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const MatrixXd& rows) {
  if (header.size() != static_cast<size_t>(rows.cols()))
    throw ConfigError("write_csv: header/column mismatch");
  std::string buf;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) buf += ',';
    buf += header[i];
  }
  buf += "\r\n";
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) buf += ',';
      buf += fmt17(rows(r, c));
    }
    buf += "\r\n";
  }
  write_text(file, buf);
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a non-empty array of arrays for a matrix");
  const size_t rows = j.size();
  const size_t cols = j[0].size();
  MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw ConfigError("ragged matrix in config");
    for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

VectorXd vector_from_json(const json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError("expected a number or array for a vector");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

model::BuiltinModel model_from_json(const json& j) {
  if (!j.contains("name")) throw ConfigError("model config needs a 'name'");
  const std::string name = j.at("name").get<std::string>();
  model::Params params;
  if (j.contains("params")) {
    for (const auto& [k, v] : j.at("params").items()) {
      if (!v.is_number()) throw ConfigError("model param '" + k + "' must be numeric");
      params[k] = v.get<double>();
    }
  }
  auto built = model::builtin_model(name, params);
  if (j.contains("dims")) {
    const auto& dims = j.at("dims");
    auto check_dim = [&](const char* key, int have) {
      if (dims.contains(key) && dims.at(key).get<int>() != have)
        throw ConfigError(std::string("model dims mismatch for '") + key + "'");
    };
    check_dim("m", built.spec.m);
    check_dim("kappa", built.spec.kappa);
    check_dim("r", built.spec.r);
    check_dim("d", built.spec.d);
  }
  if (j.contains("scheme")) {
    const auto& sc = j.at("scheme");
    const std::string kind = sc.value("kind", "complete");
    if (kind == "complete") {
      built.scheme = model::SchemeSpec::complete();
    } else if (kind == "partial") {
      if (!sc.contains("Q") || !sc.contains("B"))
        throw ConfigError("partial scheme override needs Q and B matrices");
      built.scheme = model::SchemeSpec::partial(matrix_from_json(sc.at("Q")),
                                                matrix_from_json(sc.at("B")));
    } else {
      throw ConfigError("unknown scheme kind '" + kind + "'");
    }
  }
  return built;
}

json manifest(const json& resolved_config) {
  json m;
  m["lamnlab_version"] = kVersion;
  m["config"] = resolved_config;
  return m;
}

void write_json(const std::filesystem::path& file, const json& j) {
  write_text(file, j.dump(2) + "\n");
}

}  // namespace lamn::io
