#include "acmptc/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "acmptc/error.hpp"
#include "acmptc/export.hpp"

namespace acmptc {

namespace {

using ordered = nlohmann::ordered_json;

constexpr std::string_view kFormat = "acmptc-checkpoint";

ordered network_json(const MlpParams& net) {
  ordered layers = ordered::array();
  for (const DenseLayer& l : net.layers) {
    layers.push_back({{"inputs", l.inputs}, {"outputs", l.outputs}, {"weights", l.weights}, {"bias", l.bias}});
  }
  return layers;
}

MlpParams network_from(const ordered& node, const std::string& where) {
  if (!node.is_array() || node.empty()) throw ShapeError(where + ": expected a non-empty layer list");
  MlpParams net;
  for (std::size_t k = 0; k < node.size(); ++k) {
    const ordered& l = node[k];
    DenseLayer layer;
    layer.inputs = l.at("inputs").get<std::size_t>();
    layer.outputs = l.at("outputs").get<std::size_t>();
    layer.weights = l.at("weights").get<std::vector<double>>();
    layer.bias = l.at("bias").get<std::vector<double>>();
    const std::string at = where + ".layers[" + std::to_string(k) + "]";
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      throw ShapeError(at + ": weight or bias size does not match inputs x outputs");
    }
    if (!net.layers.empty() && net.layers.back().outputs != layer.inputs) {
      throw ShapeError(at + ": inputs do not match the previous layer's outputs");
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

ordered agent_config_json(const AgentConfig& a) {
  return {{"discount", a.discount},         {"learning_rate", a.learning_rate},
          {"epsilon_start", a.epsilon_start}, {"epsilon_end", a.epsilon_end},
          {"epsilon_decay", a.epsilon_decay}, {"grad_clip_norm", a.grad_clip_norm},
          {"episodes", a.episodes},           {"horizon", a.horizon},
          {"hidden_layers", a.hidden_layers}};
}

AgentConfig agent_config_from(const ordered& node) {
  AgentConfig a;
  a.discount = node.at("discount").get<double>();
  a.learning_rate = node.at("learning_rate").get<double>();
  a.epsilon_start = node.at("epsilon_start").get<double>();
  a.epsilon_end = node.at("epsilon_end").get<double>();
  a.epsilon_decay = node.at("epsilon_decay").get<double>();
  a.grad_clip_norm = node.at("grad_clip_norm").get<double>();
  a.episodes = node.at("episodes").get<int>();
  a.horizon = node.at("horizon").get<int>();
  a.hidden_layers = node.at("hidden_layers").get<std::vector<std::size_t>>();
  return a;
}

std::vector<std::size_t> hidden_sizes(const MlpParams& net) {
  std::vector<std::size_t> sizes = net.layer_sizes();
  return {sizes.begin() + 1, sizes.end() - 1};
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  ordered doc = ordered::object();
  doc["format"] = std::string(kFormat);
  doc["version"] = std::string(version());
  doc["agent_config"] = agent_config_json(checkpoint.agent_config);
  ordered list = ordered::array();
  for (const Agent& a : checkpoint.agents) {
    if (!a.actor.all_finite() || !a.critic.all_finite()) throw InputError("checkpoint: agent has non-finite parameters");
    list.push_back({{"actor", network_json(a.actor)}, {"critic", network_json(a.critic)}});
  }
  doc["agents"] = std::move(list);
  return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  ordered doc;
  try {
    doc = ordered::parse(text);
  } catch (const ordered::parse_error& e) {
    throw ParseError(1, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw ParseError(1, "not an acmptc checkpoint");
    Checkpoint checkpoint;
    checkpoint.agent_config = agent_config_from(doc.at("agent_config"));
    try {
      checkpoint.agent_config.validate();
    } catch (const ConfigError& e) {
      throw ParseError(1, std::string("checkpoint agent_config: ") + e.what());
    }
    const ordered& list = doc.at("agents");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string where = "agents[" + std::to_string(k) + "]";
      Agent a;
      a.actor = network_from(list[k].at("actor"), where + ".actor");
      a.critic = network_from(list[k].at("critic"), where + ".critic");
      if (a.actor.input_size() != a.critic.input_size() || a.critic.output_size() != 1) {
        throw ShapeError(where + ": actor and critic shapes disagree");
      }
      if (hidden_sizes(a.actor) != checkpoint.agent_config.hidden_layers ||
          hidden_sizes(a.critic) != checkpoint.agent_config.hidden_layers) {
        throw ShapeError(where + ": hidden layers do not match agent_config.hidden_layers");
      }
      checkpoint.agents.push_back(std::move(a));
    }
    return checkpoint;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw ParseError(1, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace acmptc
