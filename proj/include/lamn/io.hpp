#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lamn/common.hpp"
#include "lamn/model.hpp"

namespace lamn::io {

using json = nlohmann::ordered_json;

/// %.17g with the C locale; '.' decimal point.
std::string fmt17(double x);

/// RFC-4180 CSV (CRLF line endings), numeric cells at 17 significant digits.
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const MatrixXd& rows);

void write_text(const std::filesystem::path& file, const std::string& content);

json matrix_to_json(const MatrixXd& m);
json vector_to_json(const VectorXd& v);
MatrixXd matrix_from_json(const json& j);
VectorXd vector_from_json(const json& j);

/// Builds a model + scheme from a config document:
///   {"name": ..., "params": {...}, "dims": {...}, "scheme": {"kind", "Q", "B"}}
/// Builtin names act as presets; dims, when given, are validated; a scheme
/// entry overrides the preset's scheme.
model::BuiltinModel model_from_json(const json& j);

/// Byte-stable manifest echoing the fully resolved config.
json manifest(const json& resolved_config);

void write_json(const std::filesystem::path& file, const json& j);

}  // namespace lamn::io
