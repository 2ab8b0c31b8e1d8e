#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lifopri/harness.hpp"
#include "lifopri/model_io.hpp"
#include "lifopri/plot.hpp"

namespace lifopri {

namespace {

namespace fs = std::filesystem;

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s, const fs::path& file) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw Error(Errc::IoError, fmt::format("{}: '{}' is not a number", file.string(), s));
  }
}

struct RunFiles {
  std::map<std::string, std::string> summary;
  std::array<KindCounts, kKindCount> counts{};
  fs::path stem;
};

RunFiles load_run(const fs::path& summary_path) {
  RunFiles run;
  const std::string name = summary_path.filename().string();
  run.stem = summary_path.parent_path() / name.substr(0, name.size() - std::string(".summary.csv").size());
  const auto rows = read_csv(summary_path);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() >= 2) run.summary[rows[i][0]] = rows[i][1];
  }
  for (const char* key : {"scenario", "kind", "scheme", "rho", "timeout_s"}) {
    if (!run.summary.count(key)) throw Error(Errc::IoError, fmt::format("{}: missing '{}'", summary_path.string(), key));
  }
  const fs::path ledger = run.stem.string() + ".ledger.csv";
  for (const auto& row : read_csv(ledger)) {
    if (row.size() < 7) continue;
    const auto state = parse_state(row[0]);
    if (!state || *state == kExit) continue;
    auto& c = run.counts[*state];
    c.generated = std::stoull(row[2]);
    c.completed = std::stoull(row[3]);
    c.timed_out = std::stoull(row[4]);
    c.dropped = std::stoull(row[5]);
    c.not_generated = std::stoull(row[6]);
  }
  return run;
}

struct GroupKey {
  std::string scenario;
  std::string timeout;
  double rho;
  int scheme;
  auto operator<=>(const GroupKey&) const = default;
};

struct Group {
  std::string kind;
  std::string scheme;
  int n = 0;
  std::map<std::string, double> sums;
  std::array<KindCounts, kKindCount> counts{};
  std::vector<fs::path> stems;

  double mean(const std::string& key) const {
    auto it = sums.find(key);
    return it == sums.end() || n == 0 ? 0.0 : it->second / n;
  }
};

const std::vector<std::string> kNumericKeys = {"throughput_rps",   "capacity_fraction",      "mean_response_s",
                                               "session_completion_pct", "mean_session_latency_s", "mean_utilization",
                                               "capacity_rps"};

KindCounts pooled(const Group& g, KindSet filter) {
  KindCounts t;
  for (std::size_t i = 0; i < kKindCount; ++i) {
    if (filter.test(i)) t += g.counts[i];
  }
  return t;
}

std::array<double, 4> percentages(const KindCounts& c) {
  const double denom = static_cast<double>(c.generated + c.not_generated);
  if (denom == 0.0) return {0.0, 0.0, 0.0, 0.0};
  return {100.0 * c.completed / denom, 100.0 * c.timed_out / denom, 100.0 * c.dropped / denom,
          100.0 * c.not_generated / denom};
}

const std::array<const char*, 4> kOutcomeNames = {"Completed", "Timed-out", "Dropped", "Not-generated"};

std::string timeout_suffix(const std::string& timeout) { return timeout == "model" ? "" : "_to" + timeout; }

std::vector<double> averaged_ccdf(const Group& g, const std::string& filter, std::vector<double>& grid) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& stem : g.stems) {
    const fs::path file = stem.string() + ".ccdf.csv";
    if (!fs::exists(file)) continue;
    for (const auto& row : read_csv(file)) {
      if (row.size() < 3 || row[0] != filter || row[1] == "inf") continue;
      auto& slot = acc[to_double(row[1], file)];
      slot.first += to_double(row[2], file);
      slot.second += 1;
    }
  }
  std::vector<double> values;
  grid.clear();
  for (const auto& [t, v] : acc) {
    grid.push_back(t);
    values.push_back(v.first / v.second);
  }
  return values;
}

}  // namespace

std::vector<fs::path> report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, fmt::format("{} is not a directory", dir.string()));
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 12 && name.ends_with(".summary.csv")) summaries.push_back(entry.path());
  }
  if (summaries.empty()) throw Error(Errc::IoError, fmt::format("no run summaries in {}", dir.string()));
  std::sort(summaries.begin(), summaries.end());

  std::map<GroupKey, Group> groups;
  for (const auto& path : summaries) {
    const auto run = load_run(path);
    const auto& s = run.summary;
    const auto scheme = parse_scheme(s.at("scheme"));
    if (!scheme) throw Error(Errc::IoError, fmt::format("{}: unknown scheme '{}'", path.string(), s.at("scheme")));
    GroupKey key{s.at("scenario"), s.at("timeout_s"), to_double(s.at("rho"), path), static_cast<int>(*scheme)};
    auto& g = groups[key];
    g.kind = s.at("kind");
    g.scheme = s.at("scheme");
    g.n += 1;
    for (const auto& k : kNumericKeys) {
      if (auto it = s.find(k); it != s.end()) g.sums[k] += to_double(it->second, path);
    }
    for (std::size_t i = 0; i < kKindCount; ++i) g.counts[i] += run.counts[i];
    g.stems.push_back(run.stem);
  }

  const std::string e1 = std::string(scenario_kind_name(ScenarioKind::SingleQueue));
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& body) {
    write_text_file_atomic(dir / name, body);
    written.push_back(dir / name);
  };

  std::string curves =
      "scenario,timeout_s,scheme,rho,runs,throughput_rps,capacity_fraction,mean_response_s,completed_pct,"
      "session_completion_pct\n";
  for (const auto& [key, g] : groups) {
    const auto pct = percentages(pooled(g, all_kinds()));
    curves += fmt::format("{},{},{},{:.3f},{},{:.4f},{:.4f},{:.4f},{:.2f},{:.2f}\n", key.scenario, key.timeout,
                          g.scheme, key.rho, g.n, g.mean("throughput_rps"), g.mean("capacity_fraction"),
                          g.mean("mean_response_s"), pct[0], g.mean("session_completion_pct"));
  }
  emit("load_curves.csv", curves);

  // Single-queue scenarios: one row per metric, one column per scheme.
  std::map<std::tuple<std::string, std::string, double>, std::map<int, const Group*>> single;
  std::set<int> single_schemes;
  for (const auto& [key, g] : groups) {
    if (g.kind != e1) continue;
    single[{key.scenario, key.timeout, key.rho}][key.scheme] = &g;
    single_schemes.insert(key.scheme);
  }
  if (!single.empty()) {
    std::string t1 = "scenario,timeout_s,rho,metric";
    for (int s : single_schemes) t1 += fmt::format(",{}", scheme_name(static_cast<Scheme>(s)));
    t1 += "\n";
    const std::array<const char*, 5> metrics = {"completed_pct", "timed_out_pct", "dropped_pct", "throughput_rps",
                                                "mean_response_s"};
    for (const auto& [k, by_scheme] : single) {
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        t1 += fmt::format("{},{},{:.3f},{}", std::get<0>(k), std::get<1>(k), std::get<2>(k), metrics[m]);
        for (int s : single_schemes) {
          auto it = by_scheme.find(s);
          if (it == by_scheme.end()) {
            t1 += ",";
            continue;
          }
          const auto& g = *it->second;
          const auto pct = percentages(pooled(g, all_kinds()));
          const double v = m < 3 ? pct[m] : g.mean(metrics[m]);
          t1 += m < 3 ? fmt::format(",{:.1f}", v) : fmt::format(",{:.3f}", v);
        }
        t1 += "\n";
      }
    }
    emit("table1.csv", t1);
  }

  std::string t4 = "scenario,rho,scheme,outcome,Browsing,Tr-1,Tr-2,Tr-3,Tr-4\n";
  std::string t5 =
      "scenario,rho,scheme,completed_pct,timed_out_pct,dropped_pct,not_generated_pct,session_completion_pct,"
      "throughput_rps\n";
  bool any_multi = false;
  for (const auto& [key, g] : groups) {
    if (g.kind == e1) continue;
    any_multi = true;
    std::vector<std::array<double, 4>> cols = {percentages(pooled(g, kinds_of(RequestClass::Browsing)))};
    for (auto k : {RequestKind::Login, RequestKind::Shipping, RequestKind::Payment, RequestKind::Confirm}) {
      cols.push_back(percentages(pooled(g, only(k))));
    }
    for (std::size_t o = 0; o < kOutcomeNames.size(); ++o) {
      t4 += fmt::format("{},{:.3f},{},{}", key.scenario, key.rho, g.scheme, kOutcomeNames[o]);
      for (const auto& c : cols) t4 += fmt::format(",{:.1f}", c[o]);
      t4 += "\n";
    }
    const auto pct = percentages(pooled(g, all_kinds()));
    t5 += fmt::format("{},{:.3f},{},{:.1f},{:.1f},{:.1f},{:.1f},{:.1f},{:.3f}\n", key.scenario, key.rho, g.scheme,
                      pct[0], pct[1], pct[2], pct[3], g.mean("session_completion_pct"), g.mean("throughput_rps"));
  }
  if (any_multi) {
    emit("table4.csv", t4);
    emit("table5.csv", t5);
  }

  // Plots per (scenario, timeout variant).
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<GroupKey, const Group*>>> panels;
  for (const auto& [key, g] : groups) panels[{key.scenario, key.timeout}].emplace_back(key, &g);
  for (const auto& [panel, members] : panels) {
    const auto& [scenario, timeout] = panel;
    const std::string suffix = scenario + timeout_suffix(timeout);
    const std::string subtitle = timeout == "model" ? scenario : fmt::format("{}, timeout {} s", scenario, timeout);
    std::map<int, PlotSeries> tput, resp;
    double max_rho = 0.0;
    for (const auto& [key, g] : members) {
      for (auto* m : {&tput, &resp}) (*m)[key.scheme].name = g->scheme;
      tput[key.scheme].x.push_back(key.rho);
      tput[key.scheme].y.push_back(g->mean("throughput_rps"));
      resp[key.scheme].x.push_back(key.rho);
      resp[key.scheme].y.push_back(g->mean("mean_response_s"));
      max_rho = std::max(max_rho, key.rho);
    }
    LineChart tc{"Throughput vs offered load: " + subtitle, "offered load (rho)", "completed requests/s", {}, false};
    LineChart rc{"Mean response time vs offered load: " + subtitle, "offered load (rho)", "mean response (s)", {},
                 false};
    for (auto& [s, series] : tput) tc.series.push_back(series);
    for (auto& [s, series] : resp) rc.series.push_back(series);
    emit("throughput_" + suffix + ".svg", render_svg(tc));
    emit("response_" + suffix + ".svg", render_svg(rc));

    const bool is_single = members.front().second->kind == e1;
    const std::string filter = is_single ? "All" : "Br-1";
    LineChart cc{fmt::format("Response time CCDF ({}) at rho {:.3g}: {}", filter, max_rho, subtitle),
                 "response time (s)", "P(response > t)", {}, true};
    for (const auto& [key, g] : members) {
      if (key.rho != max_rho) continue;
      PlotSeries s;
      s.name = g->scheme;
      s.y = averaged_ccdf(*g, filter, s.x);
      if (!s.x.empty()) cc.series.push_back(std::move(s));
    }
    if (!cc.series.empty()) emit("ccdf_" + suffix + ".svg", render_svg(cc));
  }
  return written;
}

}  // namespace lifopri
