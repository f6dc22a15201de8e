#include "acmptc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "acmptc/error.hpp"

namespace acmptc {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object, remembering which were consumed so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "out of range");
      out = static_cast<int>(x);
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char* key, Range& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        fail(key, "expected [min, max]");
      }
      out = Range{(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  void read(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of numbers");
      out.clear();
      for (const json& x : *v) {
        if (!x.is_number()) fail(key, "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  void read(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of positive integers");
      out.clear();
      for (const json& x : *v) {
        if (!x.is_number_unsigned()) fail(key, "expected an array of positive integers");
        out.push_back(x.get<std::size_t>());
      }
    }
  }

  void read(const char* key, std::optional<std::string>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        fail(key, "expected a string or null");
      }
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      try {
        out = parse(v->get<std::string>());
      } catch (const ConfigError& e) {
        fail(key, e.what());
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError(path_ + "." + key + ": unknown key");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const char* key, const std::string& why) const {
    throw ConfigError(path_ + "." + key + ": " + why);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

json range_json(const Range& r) { return json::array({r.min, r.max}); }

json optional_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json to_json(const ScenarioConfig& c) {
  json doc = json::object();
  const DynamicsConfig& d = c.dynamics;
  doc["dynamics"] = {
      {"n_paths", d.n_paths},
      {"bandwidth_range", range_json(d.bandwidth_range)},
      {"latency_range", range_json(d.latency_range)},
      {"loss_range", range_json(d.loss_range)},
      {"walk_step_fraction", d.walk_step_fraction},
      {"background_traffic_range", range_json(d.background_traffic_range)},
      {"seed", d.seed},
  };
  json streams = json::array();
  for (const StreamSpec& s : c.streams) {
    streams.push_back({{"stream_id", s.stream_id},
                       {"expected_rate_mbps", s.expected_rate_mbps},
                       {"weight_gamma", s.weight_gamma},
                       {"max_paths", s.max_paths}});
  }
  doc["streams"] = std::move(streams);
  const ControlParams& p = c.control;
  doc["control"] = {
      {"sel_alpha", p.sel_alpha},       {"sel_beta", p.sel_beta},
      {"sel_gamma", p.sel_gamma},       {"cwnd_inc_alpha", p.cwnd_inc_alpha},
      {"cwnd_dec_beta", p.cwnd_dec_beta}, {"rate_delta", p.rate_delta},
      {"util_w_B", p.util_w_B},         {"util_w_L", p.util_w_L},
      {"util_w_P", p.util_w_P},         {"util_w_Q", p.util_w_Q},
      {"eta", p.eta},                   {"target_tau", p.target_tau},
      {"default_tau", p.default_tau},   {"C_th", p.C_th},
      {"RTT_th_ms", p.RTT_th_ms},       {"L_th_ms", p.L_th_ms},
      {"rho_th", p.rho_th},             {"rho_max", p.rho_max},
      {"L_max_ms", p.L_max_ms},         {"QoS_min", p.QoS_min},
      {"deviation_ewma", p.deviation_ewma},
  };
  const AgentConfig& a = c.agent;
  doc["agent"] = {
      {"discount", a.discount},
      {"learning_rate", a.learning_rate},
      {"epsilon_start", a.epsilon_start},
      {"epsilon_end", a.epsilon_end},
      {"epsilon_decay", a.epsilon_decay},
      {"grad_clip_norm", a.grad_clip_norm},
      {"episodes", a.episodes},
      {"horizon", a.horizon},
      {"hidden_layers", a.hidden_layers},
  };
  doc["run"] = {
      {"horizon", c.horizon},
      {"scheduler", std::string(to_string(c.scheduler))},
      {"scenario_kind", std::string(to_string(c.scenario_kind))},
      {"trace_path", optional_json(c.trace_path)},
      {"stream_trace_path", optional_json(c.stream_trace_path)},
  };
  return doc;
}

ScenarioConfig from_json(const json& doc) {
  ScenarioConfig c;
  Section root(doc, "config");
  if (doc.contains("dynamics")) {
    Section s(doc["dynamics"], "dynamics");
    DynamicsConfig& d = c.dynamics;
    s.read("n_paths", d.n_paths);
    s.read("bandwidth_range", d.bandwidth_range);
    s.read("latency_range", d.latency_range);
    s.read("loss_range", d.loss_range);
    s.read("walk_step_fraction", d.walk_step_fraction);
    s.read("background_traffic_range", d.background_traffic_range);
    s.read("seed", d.seed);
    s.finish();
  }
  if (doc.contains("streams")) {
    const json& list = doc["streams"];
    if (!list.is_array()) throw ConfigError("streams: expected an array of stream objects");
    c.streams.clear();
    for (std::size_t j = 0; j < list.size(); ++j) {
      Section s(list[j], "streams[" + std::to_string(j) + "]");
      StreamSpec spec;
      spec.stream_id = static_cast<int>(j);
      s.read("stream_id", spec.stream_id);
      s.read("expected_rate_mbps", spec.expected_rate_mbps);
      s.read("weight_gamma", spec.weight_gamma);
      s.read("max_paths", spec.max_paths);
      s.finish();
      c.streams.push_back(spec);
    }
  }
  if (doc.contains("control")) {
    Section s(doc["control"], "control");
    ControlParams& p = c.control;
    s.read("sel_alpha", p.sel_alpha);
    s.read("sel_beta", p.sel_beta);
    s.read("sel_gamma", p.sel_gamma);
    s.read("cwnd_inc_alpha", p.cwnd_inc_alpha);
    s.read("cwnd_dec_beta", p.cwnd_dec_beta);
    s.read("rate_delta", p.rate_delta);
    s.read("util_w_B", p.util_w_B);
    s.read("util_w_L", p.util_w_L);
    s.read("util_w_P", p.util_w_P);
    s.read("util_w_Q", p.util_w_Q);
    s.read("eta", p.eta);
    s.read("target_tau", p.target_tau);
    s.read("default_tau", p.default_tau);
    s.read("C_th", p.C_th);
    s.read("RTT_th_ms", p.RTT_th_ms);
    s.read("L_th_ms", p.L_th_ms);
    s.read("rho_th", p.rho_th);
    s.read("rho_max", p.rho_max);
    s.read("L_max_ms", p.L_max_ms);
    s.read("QoS_min", p.QoS_min);
    s.read("deviation_ewma", p.deviation_ewma);
    s.finish();
  }
  if (doc.contains("agent")) {
    Section s(doc["agent"], "agent");
    AgentConfig& a = c.agent;
    s.read("discount", a.discount);
    s.read("learning_rate", a.learning_rate);
    s.read("epsilon_start", a.epsilon_start);
    s.read("epsilon_end", a.epsilon_end);
    s.read("epsilon_decay", a.epsilon_decay);
    s.read("grad_clip_norm", a.grad_clip_norm);
    s.read("episodes", a.episodes);
    s.read("horizon", a.horizon);
    s.read("hidden_layers", a.hidden_layers);
    s.finish();
  }
  if (doc.contains("run")) {
    Section s(doc["run"], "run");
    s.read("horizon", c.horizon);
    s.read_enum("scheduler", c.scheduler, parse_scheduler);
    s.read_enum("scenario_kind", c.scenario_kind, parse_scenario_kind);
    s.read("trace_path", c.trace_path);
    s.read("stream_trace_path", c.stream_trace_path);
    s.finish();
  }
  // The root only has sections; mark them seen.
  for (const auto& [key, value] : doc.items()) {
    if (key != "dynamics" && key != "streams" && key != "control" && key != "agent" && key != "run") {
      throw ConfigError(key + ": unknown section");
    }
  }
  c.validate();
  return c;
}

json parse_document(std::string_view text) {
  // An empty or whitespace-only document means "all defaults".
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
}

const std::set<std::string>& reference_keys() {
  static const std::set<std::string> keys = {
      "dynamics.n_paths",        "dynamics.bandwidth_range", "dynamics.latency_range",
      "dynamics.loss_range",     "dynamics.background_traffic_range",
      "control.util_w_B",        "control.util_w_L",         "control.util_w_P",
      "agent.discount",          "agent.learning_rate",      "agent.epsilon_start",
      "agent.epsilon_end",       "agent.horizon",            "run.horizon",
  };
  return keys;
}

void flatten(const json& node, const std::string& path, const json* given, std::vector<ConfigEntry>& out) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      const json* sub = (given && given->is_object() && given->contains(key)) ? &(*given)[key] : nullptr;
      flatten(value, path.empty() ? key : path + "." + key, sub, out);
    }
    return;
  }
  if (node.is_array() && !node.empty() && node[0].is_object()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      const json* sub = (given && given->is_array() && i < given->size()) ? &(*given)[i] : nullptr;
      flatten(node[i], path + "[" + std::to_string(i) + "]", sub, out);
    }
    return;
  }
  ConfigEntry e;
  e.key = path;
  e.value = node.dump();
  e.source = given ? "config" : "default";
  const std::string generic = path.substr(0, path.find('[')) == "streams" ? "streams" : path;
  e.origin = reference_keys().contains(generic) ? "reference setup" : "engine choice";
  out.push_back(std::move(e));
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  try {
    return from_json(parse_document(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::vector<ConfigEntry> explain_config(std::string_view text) {
  const json given = parse_document(text);
  const ScenarioConfig cfg = parse_config(text);
  std::vector<ConfigEntry> out;
  flatten(to_json(cfg), "", &given, out);
  return out;
}

std::string format_explanation(const std::vector<ConfigEntry>& entries) {
  std::size_t width = 0;
  for (const ConfigEntry& e : entries) width = std::max(width, e.key.size());
  std::ostringstream os;
  for (const ConfigEntry& e : entries) {
    os << e.key << std::string(width - e.key.size() + 2, ' ') << e.value << "  [" << e.source;
    if (e.source == "default") os << ", " << e.origin;
    os << "]\n";
  }
  return os.str();
}

}  // namespace acmptc
