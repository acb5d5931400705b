#include "coopq/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace coopq {

nlohmann::json instance_to_json(const VerticalInstance& inst) {
  nlohmann::json j;
  j["thetas"] = inst.thetas;
  j["queues"] = inst.initial_queues;
  if (inst.delay_offset) j["delay_offset"] = true;
  return j;
}

VerticalInstance instance_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance must be a JSON object");
  if (!j.contains("thetas") || !j["thetas"].is_array())
    throw std::invalid_argument("instance field 'thetas' missing or not an array");
  if (!j.contains("queues") || !j["queues"].is_array())
    throw std::invalid_argument("instance field 'queues' missing or not an array");
  VerticalInstance inst;
  for (const auto& v : j["thetas"]) {
    if (!v.is_number()) throw std::invalid_argument("'thetas' entries must be numbers");
    inst.thetas.push_back(v.get<double>());
  }
  for (const auto& v : j["queues"]) {
    if (!v.is_number_integer())
      throw std::invalid_argument("'queues' entries must be integers");
    inst.initial_queues.push_back(v.get<int>());
  }
  if (j.contains("delay_offset")) {
    if (!j["delay_offset"].is_boolean())
      throw std::invalid_argument("'delay_offset' must be a boolean");
    inst.delay_offset = j["delay_offset"].get<bool>();
  }
  inst.validate();
  return inst;
}

VerticalInstance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open instance file: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string coalition_to_string(const Coalition& c) {
  std::string s;
  for (int i : c.members()) {
    if (!s.empty()) s += ',';
    s += std::to_string(i + 1);
  }
  return s;
}

nlohmann::json partition_to_json(const Partition& p) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    nlohmann::json ids = nlohmann::json::array();
    for (int i : b.members()) ids.push_back(i + 1);
    blocks.push_back(std::move(ids));
  }
  return blocks;
}

nlohmann::json pfg_to_json(const PartitionFunctionGame& game) {
  nlohmann::json j;
  j["agents"] = game.n();
  nlohmann::json parts = nlohmann::json::array();
  for (int pi = 0; pi < game.partition_count(); ++pi) {
    const Partition& p = game.partitions()[static_cast<std::size_t>(pi)];
    nlohmann::json pj;
    pj["blocks"] = partition_to_json(p);
    nlohmann::json vals = nlohmann::json::array();
    for (int b = 0; b < p.block_count(); ++b) vals.push_back(game.value(pi, b));
    pj["values"] = std::move(vals);
    parts.push_back(std::move(pj));
  }
  j["partitions"] = std::move(parts);
  return j;
}

}  // namespace coopq
