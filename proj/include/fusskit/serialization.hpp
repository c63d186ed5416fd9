#pragma once

#include <filesystem>
#include <string>

#include "fusskit/losses.hpp"
#include "fusskit/metrics.hpp"
#include "fusskit/room.hpp"
#include "fusskit/scenes.hpp"
#include "json.hpp"

namespace fuss {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

// RIR sidecar: room geometry, materials, positions, seed and simulator settings.
Json room_sidecar_json(const RoomSpec& room, const SimConfig& sim);
RoomSpec room_from_sidecar(const Json& j);
SimConfig sim_from_sidecar(const Json& j);

Json to_json(const CorpusClip& clip);
CorpusClip clip_from_json(const Json& j);

Json to_json(const SplitAssignment& assignment);
SplitAssignment split_assignment_from_json(const Json& j);

Json to_json(const MixtureSpec& spec);
MixtureSpec mixture_spec_from_json(const Json& j);

Json to_json(const PitLossResult& result);
Json to_json(const ExampleEval& example);
Json report_json(const EvalReport& report, const MetricConfig& config);

const char* formulation_name(SiSnrFormulation f) noexcept;
SiSnrFormulation parse_formulation(const std::string& name);

// Writes text to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fuss
