#include "scenario_io.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "errors.hpp"

namespace pevsched {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      throw ParseError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(where + ": expected a finite number");
  return d;
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> as_series(const json& v, std::size_t horizon, const std::string& where) {
  if (v.is_number()) return std::vector<double>(horizon, as_number(v, where));
  if (!v.is_array()) throw ParseError(where + ": expected a number or an array of numbers");
  if (v.size() != horizon) {
    std::ostringstream os;
    os << where << ": expected " << horizon << " entries, found " << v.size();
    throw ParseError(os.str());
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::size_t as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ParseError(where + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

json series_json(const std::vector<double>& v) {
  if (!v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return v.front();
  return v;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");
  reject_unknown(doc, {"format", "horizon", "feeders", "pevs"}, source);
  if (doc.contains("format") && doc["format"] != kScenarioFormat) {
    throw ParseError(source + ": unsupported format '" + doc["format"].dump() + "'");
  }

  NetworkDescription desc;
  if (doc.contains("horizon")) desc.horizon = as_index(doc["horizon"], source + ": horizon");
  if (desc.horizon == 0) throw ParseError(source + ": horizon must be positive");

  const json& feeders = require(doc, "feeders", source);
  if (!feeders.is_array()) throw ParseError(source + ": 'feeders' must be an array");
  for (std::size_t i = 0; i < feeders.size(); ++i) {
    const json& f = feeders[i];
    std::string where = source + ": feeders[" + std::to_string(i) + "]";
    if (!f.is_object()) throw ParseError(where + ": expected an object");
    FeederSpec spec;
    spec.id = as_string(require(f, "id", where), where + ".id");
    where += " ('" + spec.id + "')";
    reject_unknown(f, {"id", "parent", "capacity", "base_load"}, where);
    if (f.contains("parent") && !f["parent"].is_null()) spec.parent = as_string(f["parent"], where + ".parent");
    spec.capacity = as_number(require(f, "capacity", where), where + ".capacity");
    if (f.contains("base_load")) desc.leaf_base_load[spec.id] = as_series(f["base_load"], desc.horizon, where + ".base_load");
    desc.feeders.push_back(std::move(spec));
  }

  Fleet fleet;
  const auto pevs = doc.find("pevs");
  if (pevs != doc.end()) {
    if (!pevs->is_array()) throw ParseError(source + ": 'pevs' must be an array");
    for (std::size_t i = 0; i < pevs->size(); ++i) {
      const json& p = (*pevs)[i];
      std::string where = source + ": pevs[" + std::to_string(i) + "]";
      if (!p.is_object()) throw ParseError(where + ": expected an object");
      PevSpec pev;
      pev.id = as_string(require(p, "id", where), where + ".id");
      where += " ('" + pev.id + "')";
      reject_unknown(p, {"id", "feeder", "window", "rate_cap", "demand", "battery"}, where);
      pev.feeder = as_string(require(p, "feeder", where), where + ".feeder");
      pev.window_start = 0;
      pev.window_end = desc.horizon;
      if (p.contains("window")) {
        const json& w = p["window"];
        if (!w.is_array() || w.size() != 2) throw ParseError(where + ".window: expected [start, end]");
        pev.window_start = as_index(w[0], where + ".window[0]");
        pev.window_end = as_index(w[1], where + ".window[1]");
      }
      pev.rate_cap = as_series(require(p, "rate_cap", where), desc.horizon, where + ".rate_cap");
      if (p.contains("battery")) {
        const json& b = p["battery"];
        const std::string bw = where + ".battery";
        if (!b.is_object()) throw ParseError(bw + ": expected an object");
        reject_unknown(b, {"capacity_kwh", "efficiency", "initial_soc"}, bw);
        BatterySpec bat;
        bat.capacity_kwh = as_number(require(b, "capacity_kwh", bw), bw + ".capacity_kwh");
        if (b.contains("efficiency")) bat.efficiency = as_number(b["efficiency"], bw + ".efficiency");
        if (b.contains("initial_soc")) bat.initial_soc = as_number(b["initial_soc"], bw + ".initial_soc");
        if (!(bat.efficiency > 0.0 && bat.efficiency <= 1.0) || bat.initial_soc < 0.0 || bat.initial_soc > 1.0 ||
            bat.capacity_kwh < 0.0) {
          throw ParseError(bw + ": capacity must be >= 0, efficiency in (0, 1], initial_soc in [0, 1]");
        }
        pev.battery = bat;
      }
      if (p.contains("demand")) {
        pev.demand = as_number(p["demand"], where + ".demand");
      } else if (pev.battery) {
        pev.demand = pev.battery->required_energy();
      } else {
        throw ParseError(where + ": missing field 'demand' (or 'battery')");
      }
      fleet.push_back(std::move(pev));
    }
  }
  return make_scenario(std::move(desc), std::move(fleet));
}

Scenario load_scenario(const std::string& path, FeasibilityReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path);
  FeasibilityReport r = validate_feasibility(s.network, s.fleet);
  if (report) *report = std::move(r);
  return s;
}

std::string serialize_scenario(const Scenario& scenario) {
  const auto& d = scenario.description;
  json doc;
  doc["format"] = kScenarioFormat;
  doc["horizon"] = d.horizon;
  json feeders = json::array();
  for (const auto& f : d.feeders) {
    json j;
    j["id"] = f.id;
    j["parent"] = f.parent.empty() ? json(nullptr) : json(f.parent);
    j["capacity"] = f.capacity;
    if (const auto it = d.leaf_base_load.find(f.id); it != d.leaf_base_load.end()) j["base_load"] = it->second;
    feeders.push_back(std::move(j));
  }
  doc["feeders"] = std::move(feeders);
  json pevs = json::array();
  for (const auto& p : scenario.fleet) {
    json j;
    j["id"] = p.id;
    j["feeder"] = p.feeder;
    j["window"] = {p.window_start, p.window_end};
    j["rate_cap"] = series_json(p.rate_cap);
    j["demand"] = p.demand;
    if (p.battery) {
      j["battery"] = {{"capacity_kwh", p.battery->capacity_kwh},
                      {"efficiency", p.battery->efficiency},
                      {"initial_soc", p.battery->initial_soc}};
    }
    pevs.push_back(std::move(j));
  }
  doc["pevs"] = std::move(pevs);
  return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << serialize_scenario(scenario);
  if (!out) throw IoError("failed writing '" + path + "'");
}

namespace {

// Hourly shapes, peak 1.
constexpr std::array<double, 24> kResidential = {0.52, 0.47, 0.44, 0.43, 0.44, 0.50, 0.62, 0.74, 0.72, 0.66, 0.62, 0.61,
                                                 0.61, 0.60, 0.61, 0.65, 0.74, 0.88, 0.98, 1.00, 0.96, 0.86, 0.73, 0.61};
constexpr std::array<double, 24> kCommercial = {0.36, 0.34, 0.33, 0.33, 0.34, 0.38, 0.48, 0.66, 0.86, 0.96, 1.00, 1.00,
                                                0.98, 1.00, 0.99, 0.96, 0.90, 0.78, 0.62, 0.52, 0.46, 0.42, 0.39, 0.37};
constexpr std::array<double, 24> kNightShift = {0.96, 1.00, 1.00, 0.98, 0.95, 0.86, 0.60, 0.38, 0.30, 0.28, 0.28, 0.28,
                                                0.28, 0.28, 0.28, 0.28, 0.30, 0.34, 0.42, 0.55, 0.68, 0.80, 0.88, 0.93};

struct LoadPoint {
  const char* id;
  double weight;  // spot load of the bus in the IEEE 13-bus data, kW
  const std::array<double, 24>* shape;
};

}  // namespace

Scenario generate_desk13(const Desk13Options& o) {
  if (!(o.scale > 0.0 && o.scale <= 1.0)) throw ConfigurationError("scale must lie in (0, 1]");
  if (!(o.nu > 1.0)) throw ConfigurationError("nu must exceed 1");
  constexpr std::size_t T = 24;
  const std::array<std::pair<const char*, const char*>, 12> tree = {{{"632", ""},
                                                                      {"633", "632"},
                                                                      {"634", "633"},
                                                                      {"645", "632"},
                                                                      {"646", "645"},
                                                                      {"671", "632"},
                                                                      {"692", "671"},
                                                                      {"675", "692"},
                                                                      {"684", "671"},
                                                                      {"611", "684"},
                                                                      {"652", "684"},
                                                                      {"680", "671"}}};
  const std::array<LoadPoint, 6> points = {{{"634", 400.0, &kResidential},
                                            {"646", 230.0, &kResidential},
                                            {"675", 843.0, &kResidential},
                                            {"611", 170.0, &kCommercial},
                                            {"652", 60.0, &kNightShift},
                                            {"680", 1155.0, &kCommercial}}};

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> jitter(-o.noise, o.noise);
  std::map<std::string, std::vector<double>> loads;
  for (const auto& p : points) {
    std::vector<double> series(T);
    for (std::size_t t = 0; t < T; ++t) series[t] = p.weight * (*p.shape)[t] * (1.0 + jitter(rng));
    loads[p.id] = std::move(series);
  }
  double peak = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double total = 0.0;
    for (const auto& [id, series] : loads) total += series[t];
    peak = std::max(peak, total);
  }
  const double factor = o.peak_kw * o.scale / peak;
  for (auto& [id, series] : loads) {
    for (double& v : series) v *= factor;
  }

  NetworkDescription desc;
  desc.horizon = T;
  desc.leaf_base_load = loads;
  for (const auto& [id, parent] : tree) desc.feeders.push_back({id, parent, 0.0});
  // Capacities follow the nu rule on each feeder's aggregated base load.
  std::map<std::string, std::vector<double>> aggregated;
  for (const auto& [id, series] : loads) {
    std::string at = id;
    while (!at.empty()) {
      auto& row = aggregated[at];
      row.resize(T, 0.0);
      for (std::size_t t = 0; t < T; ++t) row[t] += series[t];
      const auto it = std::find_if(tree.begin(), tree.end(), [&](const auto& e) { return at == e.first; });
      at = it->second;
    }
  }
  for (auto& f : desc.feeders) {
    const auto& row = aggregated.at(f.id);
    f.capacity = o.nu * *std::max_element(row.begin(), row.end());
  }

  const auto per_point = static_cast<std::size_t>(std::llround(static_cast<double>(o.pevs_per_load_point) * o.scale));
  Fleet fleet;
  for (const auto& p : points) {
    for (std::size_t i = 0; i < per_point; ++i) {
      PevSpec pev;
      pev.id = std::string("ev") + p.id + "-" + std::to_string(i + 1);
      pev.feeder = p.id;
      pev.window_start = 0;
      pev.window_end = T;
      pev.rate_cap.assign(T, o.rate_cap_kw);
      pev.demand = o.demand_kwh;
      fleet.push_back(std::move(pev));
    }
  }
  return make_scenario(std::move(desc), std::move(fleet));
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::unconstrained: return "unconstrained";
    case Strategy::penalty: return "penalty";
    case Strategy::primal_dual: return "primal-dual";
  }
  return "unknown";
}

StrategyRun run_strategy(const Scenario& scenario, Strategy strategy, const CompareOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const Network& net = scenario.network;
  StrategyRun run;
  run.strategy = strategy;
  if (strategy == Strategy::primal_dual) {
    auto r = run_primal_dual(net, scenario.fleet, options.primal_dual);
    run.profiles = std::move(r.averaged);
    run.trace = std::move(r.trace);
    run.iterations = r.iterations;
  } else {
    const OverloadCost cost = strategy == Strategy::penalty
                                  ? default_overload_cost(net, scenario.fleet, options.penalty_offset)
                                  : OverloadCost::none(net.feeder_count());
    auto r = run_penalty(net, scenario.fleet, cost, options.penalty);
    run.profiles = std::move(r.profiles);
    run.trace = std::move(r.trace);
    run.iterations = r.iterations;
  }
  run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  run.variance = total_load_variance(run.profiles, net);
  run.objective = variance_objective(run.profiles, net);
  const LoadSnapshot loads = compute_loads(run.profiles, net);
  run.max_overload = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < net.horizon(); ++t) {
    run.max_overload = std::max(run.max_overload, normalized_max_overload(loads, net, t));
  }
  const MessageCount per_round = message_count(net);
  run.messages.downstream_messages = per_round.downstream_messages * run.iterations;
  run.messages.downstream_hops = per_round.downstream_hops * run.iterations;
  run.messages.upstream_announcements = per_round.upstream_announcements * run.iterations;
  run.trace.add_metadata("downstream_messages_per_round", static_cast<double>(per_round.downstream_messages));
  run.trace.add_metadata("downstream_hops_per_round", static_cast<double>(per_round.downstream_hops));
  run.trace.add_metadata("upstream_announcements_per_round", static_cast<double>(per_round.upstream_announcements));
  return run;
}

std::vector<StrategyRun> run_compare(const Scenario& scenario, const CompareOptions& options) {
  std::vector<StrategyRun> runs;
  for (Strategy s : {Strategy::unconstrained, Strategy::penalty, Strategy::primal_dual}) {
    runs.push_back(run_strategy(scenario, s, options));
  }
  return runs;
}

namespace {

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  writer(out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

void write_hourly_csv(std::ostream& os, const Scenario& scenario, const ProfileSet& profiles) {
  const Network& net = scenario.network;
  const LoadSnapshot loads = compute_loads(profiles, net);
  const auto D = net.total_base_load();
  os << "# pevsched-hourly v1\n";
  os << "hour,base_load,pev_load,total_load,normalized_max_overload\n";
  for (std::size_t t = 0; t < net.horizon(); ++t) {
    os << t << ',' << format_double(D[t]) << ',' << format_double(loads.total_pev[t]) << ','
       << format_double(D[t] + loads.total_pev[t]) << ',' << format_double(normalized_max_overload(loads, net, t))
       << '\n';
  }
}

void write_hourly_csv(const std::string& path, const Scenario& scenario, const ProfileSet& profiles) {
  write_file(path, [&](std::ostream& os) { write_hourly_csv(os, scenario, profiles); });
}

void write_summary_csv(std::ostream& os, const std::vector<StrategyRun>& runs) {
  os << "# pevsched-summary v1\n";
  os << "strategy,variance,objective,max_normalized_overload,iterations,wall_time_s,downstream_messages,"
        "downstream_hops,upstream_announcements\n";
  for (const auto& r : runs) {
    os << strategy_name(r.strategy) << ',' << format_double(r.variance) << ',' << format_double(r.objective) << ','
       << format_double(r.max_overload) << ',' << r.iterations << ',' << format_double(r.wall_time_s) << ','
       << r.messages.downstream_messages << ',' << r.messages.downstream_hops << ','
       << r.messages.upstream_announcements << '\n';
  }
}

void write_summary_csv(const std::string& path, const std::vector<StrategyRun>& runs) {
  write_file(path, [&](std::ostream& os) { write_summary_csv(os, runs); });
}

void write_profiles_csv(std::ostream& os, const Scenario& scenario, const ProfileSet& profiles) {
  os << "# pevsched-profiles v1\n";
  os << "pev";
  for (std::size_t t = 0; t < profiles.horizon(); ++t) os << ",hour_" << t;
  os << '\n';
  for (std::size_t k = 0; k < profiles.pev_count(); ++k) {
    os << scenario.fleet[k].id;
    for (double v : profiles.row(k)) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_profiles_csv(const std::string& path, const Scenario& scenario, const ProfileSet& profiles) {
  write_file(path, [&](std::ostream& os) { write_profiles_csv(os, scenario, profiles); });
}

void write_compare_outputs(const std::string& directory, const Scenario& scenario,
                           const std::vector<StrategyRun>& runs) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory + "': " + ec.message());
  const std::filesystem::path dir(directory);
  for (const auto& r : runs) {
    write_hourly_csv((dir / (std::string(strategy_name(r.strategy)) + "_hourly.csv")).string(), scenario, r.profiles);
    write_trace_csv((dir / (std::string(strategy_name(r.strategy)) + "_trace.csv")).string(), r.trace);
  }
  write_summary_csv((dir / "summary.csv").string(), runs);
}

}  // namespace pevsched
