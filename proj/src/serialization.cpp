#include "fusskit/serialization.hpp"

#include <fstream>
#include <sstream>

namespace fuss {
namespace fs = std::filesystem;

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::missing_metadata, std::string("malformed ") + what + ": " + e.what());
    }
}

Json optional_db(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

const char* role_name(EventRole r) { return r == EventRole::background ? "background" : "foreground"; }

EventRole parse_role(const std::string& s) {
    if (s == "background") return EventRole::background;
    if (s == "foreground") return EventRole::foreground;
    throw Error(Errc::missing_metadata, "unknown event role '" + s + "'");
}

}  // namespace

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const Json& j) {
    return guarded("position", [&] { return Vec3{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; });
}

Json room_sidecar_json(const RoomSpec& room, const SimConfig& sim) {
    Json walls = Json::array();
    for (const auto& m : room.wall_materials) walls.push_back(m.name);
    Json sources = Json::array();
    for (const auto& p : room.source_positions) sources.push_back(to_json(p));
    return Json{
        {"schema_version", kManifestSchemaVersion},
        {"room_id", room.room_id},
        {"dimensions_m", Json::array({room.width, room.length, room.height})},
        {"wall_materials", walls},
        {"reflectivity_gain", room.reflectivity_gain},
        {"mic_position", to_json(room.mic_position)},
        {"source_positions", sources},
        {"seed", room.seed},
        {"sabine_t60_s", sabine_t60(room)},
        {"sim",
         {{"sample_rate", sim.sample_rate},
          {"speed_of_sound", sim.speed_of_sound},
          {"rir_length_s", resolved_rir_length(room, sim)},
          {"max_order", resolved_max_order(room, sim)},
          {"jitter_m", sim.jitter},
          {"sinc_half_width", sim.sinc_half_width}}},
    };
}

RoomSpec room_from_sidecar(const Json& j) {
    return guarded("room sidecar", [&] {
        RoomSpec room;
        room.room_id = j.at("room_id").get<std::string>();
        const auto& d = j.at("dimensions_m");
        room.width = d.at(0).get<double>();
        room.length = d.at(1).get<double>();
        room.height = d.at(2).get<double>();
        const auto& walls = j.at("wall_materials");
        if (walls.size() != kNumSurfaces) throw Error(Errc::missing_metadata, "sidecar needs six wall materials");
        for (std::size_t s = 0; s < kNumSurfaces; ++s) room.wall_materials[s] = material_by_name(walls[s].get<std::string>());
        room.reflectivity_gain = j.at("reflectivity_gain").get<double>();
        room.mic_position = vec3_from_json(j.at("mic_position"));
        for (const auto& p : j.at("source_positions")) room.source_positions.push_back(vec3_from_json(p));
        room.seed = j.at("seed").get<std::uint64_t>();
        return room;
    });
}

SimConfig sim_from_sidecar(const Json& j) {
    return guarded("room sidecar", [&] {
        const auto& s = j.at("sim");
        SimConfig sim;
        sim.sample_rate = s.at("sample_rate").get<int>();
        sim.speed_of_sound = s.at("speed_of_sound").get<double>();
        sim.rir_length = s.at("rir_length_s").get<double>();
        sim.max_order = s.at("max_order").get<int>();
        sim.jitter = s.at("jitter_m").get<double>();
        sim.sinc_half_width = s.at("sinc_half_width").get<int>();
        return sim;
    });
}

Json to_json(const CorpusClip& c) {
    return Json{{"id", c.id},
                {"path", c.path.generic_string()},
                {"class_label", c.class_label},
                {"uploader", c.uploader},
                {"duration_s", c.duration},
                {"license", c.license},
                {"sample_rate", c.sample_rate}};
}

CorpusClip clip_from_json(const Json& j) {
    return guarded("clip record", [&] {
        CorpusClip c;
        c.id = j.at("id").get<std::string>();
        c.path = j.at("path").get<std::string>();
        c.class_label = j.at("class_label").get<std::string>();
        c.uploader = j.at("uploader").get<std::string>();
        c.duration = j.at("duration_s").get<double>();
        c.license = j.at("license").get<std::string>();
        c.sample_rate = j.value("sample_rate", 0);
        return c;
    });
}

Json to_json(const SplitAssignment& a) {
    Json uploaders = Json::object();
    for (const auto& [name, split] : a.uploader_split) uploaders[name] = split_name(split);
    Json counts = Json::object(), targets = Json::object();
    for (Split s : kAllSplits) {
        counts[split_name(s)] = a.clip_counts[static_cast<std::size_t>(s)];
        targets[split_name(s)] = a.target_counts[static_cast<std::size_t>(s)];
    }
    return Json{{"schema_version", kManifestSchemaVersion},
                {"clip_counts", counts},
                {"target_counts", targets},
                {"warnings", a.warnings},
                {"uploaders", uploaders}};
}

SplitAssignment split_assignment_from_json(const Json& j) {
    return guarded("split assignment", [&] {
        SplitAssignment a;
        for (const auto& [name, split] : j.at("uploaders").items()) a.uploader_split[name] = parse_split(split.get<std::string>());
        for (Split s : kAllSplits) {
            a.clip_counts[static_cast<std::size_t>(s)] = j.at("clip_counts").at(split_name(s)).get<std::size_t>();
            a.target_counts[static_cast<std::size_t>(s)] = j.at("target_counts").at(split_name(s)).get<double>();
        }
        a.warnings = j.value("warnings", std::vector<std::string>{});
        return a;
    });
}

Json to_json(const MixtureSpec& spec) {
    Json events = Json::array();
    for (const auto& e : spec.events) {
        events.push_back({{"clip_id", e.clip_id},
                          {"role", role_name(e.role)},
                          {"class_label", e.class_label},
                          {"start_time", e.start_time},
                          {"segment_offset", e.segment_offset},
                          {"segment_duration", e.segment_duration},
                          {"gain_db", e.gain_db}});
    }
    return Json{{"schema_version", spec.schema_version},
                {"example_id", spec.example_id},
                {"split", split_name(spec.split)},
                {"seed", spec.seed},
                {"room_id", spec.room_id},
                {"rir_ids", spec.rir_ids},
                {"events", events}};
}

MixtureSpec mixture_spec_from_json(const Json& j) {
    return guarded("mixture spec", [&] {
        MixtureSpec spec;
        spec.schema_version = j.at("schema_version").get<int>();
        if (spec.schema_version != kManifestSchemaVersion) {
            throw Error(Errc::missing_metadata, "unsupported mixture schema_version " + std::to_string(spec.schema_version));
        }
        spec.example_id = j.at("example_id").get<std::string>();
        spec.split = parse_split(j.at("split").get<std::string>());
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.room_id = j.at("room_id").get<std::string>();
        spec.rir_ids = j.at("rir_ids").get<std::vector<std::string>>();
        for (const auto& e : j.at("events")) {
            spec.events.push_back({e.at("clip_id").get<std::string>(), parse_role(e.at("role").get<std::string>()),
                                   e.at("start_time").get<double>(), e.at("segment_offset").get<double>(),
                                   e.at("segment_duration").get<double>(), e.at("gain_db").get<double>(),
                                   e.at("class_label").get<std::string>()});
        }
        return spec;
    });
}

Json to_json(const PitLossResult& r) {
    Json pairs = Json::array();
    for (const auto& p : r.per_pair_losses) {
        pairs.push_back({{"estimate", p.estimate},
                         {"slot", p.slot},
                         {"kind", p.kind == SlotKind::active ? "active" : "inactive"},
                         {"loss_db", p.value}});
    }
    return Json{{"total_loss", r.total_loss},
                {"num_active", r.num_active},
                {"best_permutation", r.best_permutation},
                {"per_pair_losses", pairs}};
}

Json to_json(const ExampleEval& e) {
    Json pairs = Json::array();
    for (const auto& p : e.pairs) {
        pairs.push_back({{"reference", p.reference},
                         {"estimate", p.estimate},
                         {"si_snr_db", p.si_snr_db},
                         {"input_si_snr_db", p.input_si_snr_db},
                         {"si_snri_db", p.si_snri_db}});
    }
    return Json{{"example_id", e.example_id},
                {"reference_count", e.reference_count},
                {"estimate_count", e.estimate_count},
                {"separation", separation_class_name(e.separation_class)},
                {"assignment", e.assignment},
                {"input_si_snr_db", e.input_si_snr_db},
                {"pairs", pairs}};
}

const char* formulation_name(SiSnrFormulation f) noexcept {
    return f == SiSnrFormulation::scaled ? "scaled" : "stabilized";
}

SiSnrFormulation parse_formulation(const std::string& name) {
    if (name == "scaled") return SiSnrFormulation::scaled;
    if (name == "stabilized") return SiSnrFormulation::stabilized;
    throw Error(Errc::invalid_argument, "unknown formulation '" + name + "' (scaled, stabilized)");
}

Json report_json(const EvalReport& report, const MetricConfig& config) {
    const CountingRates rates = report.counting_rates();
    Json distribution = Json::object();
    for (const auto& [count, d] : report.input_si_snr_distribution()) {
        distribution[std::to_string(count)] = {{"count", d.count}, {"mean", d.mean},     {"stddev", d.stddev},
                                               {"min", d.min},     {"q1", d.q1},         {"median", d.median},
                                               {"q3", d.q3},       {"max", d.max}};
    }
    return Json{
        {"schema_version", kReportSchemaVersion},
        {"formulation", formulation_name(config.formulation)},
        {"epsilon", config.epsilon},
        {"inactive_margin_db", config.inactive_margin_db},
        {"averaging", report.averaging() == MsiAveraging::per_pair ? "per_pair" : "per_example"},
        {"num_examples", report.num_examples()},
        {"single_source_si_snr_db", optional_db(report.single_source_si_snr())},
        {"msi_by_count",
         {{"2", optional_db(report.msi(2))},
          {"3", optional_db(report.msi(3))},
          {"4", optional_db(report.msi(4))},
          {"2-4", optional_db(report.msi_pooled())}}},
        {"counting_rates", {{"under", rates.under}, {"equal", rates.equal}, {"over", rates.over}}},
        {"confusion_matrix", report.confusion_matrix()},
        {"input_si_snr_distribution", distribution},
    };
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
        out << text;
        out.flush();
        if (!out) throw Error(Errc::io_error, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::file_not_found, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fuss
