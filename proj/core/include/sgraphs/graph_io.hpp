#pragma once

#include "sgraphs/factor_graph.hpp"

#include <filesystem>
#include <string>

namespace sgraphs {

inline constexpr const char* kGraphSchema = "sgraph/1";

/// JSON with `schema`, `drift`, `nodes` (id, kind, state, fixed) and
/// `factors` (kind, nodes, measurement, information upper triangle).
/// Pose states are [qw qx qy qz tx ty tz], planes [azimuth elevation distance].
/// Doubles are written with round-trip precision, so a load/dump cycle is exact.
std::string graph_to_json(const SituationalGraph& graph);

/// Throws InputError on a schema mismatch or malformed content.
SituationalGraph graph_from_json(const std::string& text);

void write_graph(const std::filesystem::path& path, const SituationalGraph& graph);
SituationalGraph read_graph(const std::filesystem::path& path);

}  // namespace sgraphs
