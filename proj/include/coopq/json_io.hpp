// Serialization conventions: agent ids are 1-based in JSON and other
// human-facing output; lane indices stay 0-based everywhere.
#pragma once

#include <string>

#include "json.hpp"

#include "coopq/pfg.hpp"
#include "coopq/vertical.hpp"

namespace coopq {

nlohmann::json instance_to_json(const VerticalInstance& inst);
// Accepts {"thetas": [...], "queues": [...]} plus optional "delay_offset";
// throws std::invalid_argument with the offending field named.
VerticalInstance instance_from_json(const nlohmann::json& j);
// Reads and parses a file; parse errors mention the path.
VerticalInstance load_instance(const std::string& path);

std::string coalition_to_string(const Coalition& c); // "1,3"
nlohmann::json partition_to_json(const Partition& p); // nested 1-based ids

nlohmann::json pfg_to_json(const PartitionFunctionGame& game);

}  // namespace coopq
