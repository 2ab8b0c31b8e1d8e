#include "lifopri/model_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace lifopri {

namespace {

std::size_t state_or_throw(const std::string& name) {
  auto s = parse_state(name);
  if (!s) throw Error(Errc::ConfigInvalid, fmt::format("unknown state '{}'", name));
  return *s;
}

std::string state_label(std::size_t s) {
  return s == kExit ? "Exit" : std::string(label(kind_at(s)));
}

}  // namespace

SessionModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("format") && j.at("format").get<std::string>() != kModelFormat) {
      throw Error(Errc::ConfigInvalid,
                  fmt::format("unsupported model format '{}'", j.at("format").get<std::string>()));
    }
    SessionModel m;
    for (std::size_t i = 0; i < kKindCount; ++i) m.mean_exec_time[i] = kDefaultExecMs[i] / 1000.0;
    if (j.contains("start")) {
      const auto s = state_or_throw(j.at("start").get<std::string>());
      if (s == kExit) throw Error(Errc::ConfigInvalid, "start state cannot be Exit");
      m.start = kind_at(s);
    }
    if (j.contains("mean_exec_ms")) {
      for (const auto& [name, value] : j.at("mean_exec_ms").items()) {
        const auto s = state_or_throw(name);
        if (s == kExit) throw Error(Errc::ConfigInvalid, "Exit has no execution time");
        m.mean_exec_time[s] = value.get<double>() / 1000.0;
      }
    }
    const auto& rows = j.at("transitions");
    for (const auto& [from_name, row] : rows.items()) {
      const auto from = state_or_throw(from_name);
      for (const auto& [to_name, p] : row.items()) {
        m.transitions[from][state_or_throw(to_name)] = p.get<double>();
      }
    }
    if (!rows.contains("Exit")) m.transitions[kExit][kExit] = 1.0;
    if (j.contains("utility_scales")) {
      const auto& s = j.at("utility_scales");
      m.scales.browsing = s.value("browsing", m.scales.browsing);
      m.scales.transaction = s.value("transaction", m.scales.transaction);
      m.scales.significant_digits = s.value("significant_digits", m.scales.significant_digits);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigInvalid, fmt::format("malformed session model: {}", e.what()));
  }
}

nlohmann::json model_to_json(const SessionModel& model) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["start"] = label(model.start);
  nlohmann::json exec = nlohmann::json::object();
  for (auto k : kAllKinds) exec[std::string(label(k))] = model.mean_exec(k) * 1000.0;
  j["mean_exec_ms"] = exec;
  nlohmann::json rows = nlohmann::json::object();
  for (std::size_t i = 0; i < kStateCount; ++i) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t c = 0; c < kStateCount; ++c) {
      if (model.transitions[i][c] != 0.0) row[state_label(c)] = model.transitions[i][c];
    }
    rows[state_label(i)] = row;
  }
  j["transitions"] = rows;
  j["utility_scales"] = {{"browsing", model.scales.browsing},
                         {"transaction", model.scales.transaction},
                         {"significant_digits", model.scales.significant_digits}};
  return j;
}

SessionModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, fmt::format("{}: {}", path.string(), e.what()));
  }
  return model_from_json(j);
}

void save_model(const std::filesystem::path& path, const SessionModel& model) {
  write_text_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out.flush()) throw Error(Errc::IoError, fmt::format("write failed for {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, fmt::format("cannot rename to {}: {}", path.string(), ec.message()));
}

}  // namespace lifopri
