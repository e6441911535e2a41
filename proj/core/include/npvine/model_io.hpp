#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "npvine/dataset.hpp"
#include "npvine/vine.hpp"

namespace npvine {

inline constexpr int kModelFormatVersion = 1;

/// JSON text of the model. Objects are indented, numeric arrays stay on one
/// line, and every double is written in shortest round-trip form, so
/// load-then-save reproduces the text byte for byte.
std::string model_to_string(const VineModel& vine);

/// A vine plus the input standardization it was fitted under, if any.
struct ModelFile {
  VineModel vine;
  std::optional<Standardizer> standardizer;
};

std::string model_to_string(const ModelFile& file);
ModelFile model_file_from_string(std::string_view text);

/// Parses and validates a model. Malformed JSON or missing fields throw
/// Error(parse); an unsupported format version throws Error(schema_mismatch);
/// inconsistent vine structure throws Error(structural).
VineModel model_from_string(std::string_view text);

void save_model(const ModelFile& file, const std::string& path);
void save_model(const VineModel& vine, const std::string& path);
ModelFile load_model_file(const std::string& path);
VineModel load_model(const std::string& path);

}  // namespace npvine
