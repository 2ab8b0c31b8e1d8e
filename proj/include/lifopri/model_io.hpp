#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lifopri/workload.hpp"

namespace lifopri {

/// Session-model file format tag; see README for the schema.
inline constexpr std::string_view kModelFormat = "lifopri-session-model/1";

SessionModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const SessionModel& model);

SessionModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const SessionModel& model);

/// Reads a whole file; throws Error(IoError).
std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see a partial file.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace lifopri
