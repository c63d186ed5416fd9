#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fusskit/pipeline.hpp"
#include "fusskit/synthetic.hpp"
#include "support.hpp"

using namespace fuss;
using namespace fuss::testing;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> contents for every regular file under root.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = bytes_of(e.path());
    }
    return out;
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

PipelineConfig small_config() {
    PipelineConfig c;
    c.master_seed = 17;
    c.examples_per_split = {6, 3, 3};
    c.rooms_per_split = {6, 3, 3};
    c.sim.rir_length = 0.25;
    c.sync();
    return c;
}

// Corpus, index and split shared by every case in this file.
struct Prepared {
    TempDir dir{"pipeline"};
    fs::path index;
    fs::path split;
    CorpusIndex corpus;
    SplitAssignment assignment;

    Prepared() {
        SynthCorpusOptions opt;
        opt.seed = 3;
        write_synthetic_corpus(dir.path() / "corpus", opt);
        index = dir.path() / "index.jsonl";
        split = dir.path() / "split.json";
        corpus = run_index(dir.path() / "corpus", index, small_config());
        assignment = run_split(index, split, small_config());
    }
};

Prepared& prepared() {
    static Prepared p;
    return p;
}

void check_mixture_is_sum(const fs::path& example_dir) {
    const AudioBuffer mix = read_wav(example_dir / "mixture.wav");
    std::vector<double> sum(mix.size(), 0.0);
    int sources = 0;
    for (const auto& e : fs::directory_iterator(example_dir)) {
        if (e.path().filename() == "mixture.wav") continue;
        const AudioBuffer s = read_wav(e.path());
        REQUIRE(s.size() == mix.size());
        for (std::size_t i = 0; i < s.size(); ++i) sum[i] += s[i];
        ++sources;
    }
    CHECK(sources >= 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) worst = std::max(worst, std::abs(sum[i] - mix[i]));
    CHECK(worst < 1e-6);
}

}  // namespace

TEST_CASE("pipeline config survives a JSON round trip") {
    PipelineConfig c = small_config();
    c.workers = 3;
    c.mix.foreground_snr_db = {0.0, 10.0};
    c.metric.formulation = SiSnrFormulation::scaled;
    c.averaging = MsiAveraging::per_example;
    c.index.cc0_only = true;
    const Json j = to_json(c);
    const PipelineConfig back = pipeline_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.workers == 3);
    CHECK(back.mix.foreground_snr_db.hi == 10.0);
    CHECK(back.metric.formulation == SiSnrFormulation::scaled);

    TempDir dir("config");
    write_text_atomic(dir.path() / "c.json", R"({"master_seed": 5, "mix": {"canvas_duration": 4.0}})");
    const PipelineConfig loaded = load_pipeline_config(dir.path() / "c.json");
    CHECK(loaded.master_seed == 5);
    CHECK(loaded.mix.canvas_duration == 4.0);
    CHECK(loaded.mix.max_sources == MixConfig{}.max_sources);
}

TEST_CASE("pipeline config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(pipeline_config_from_json(Json::parse(R"({"seed": 1})")), Error);
    CHECK_THROWS_AS(pipeline_config_from_json(Json::parse(R"({"mix": {"canvas": 1}})")), Error);
    PipelineConfig c;
    c.workers = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PipelineConfig{};
    c.sources_per_room = 2;
    CHECK_THROWS_AS(c.validate(), Error);
    c = PipelineConfig{};
    c.examples_per_split[1] = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("seed streams are distinct") {
    std::set<std::uint64_t> seen;
    for (Split s : kAllSplits) {
        for (std::size_t i = 0; i < 50; ++i) {
            seen.insert(room_seed(9, s, i));
            seen.insert(example_seed(9, s, i));
        }
    }
    CHECK(seen.size() == 300);
    CHECK(example_seed(9, Split::eval, 4) == example_seed(9, Split::eval, 4));
    CHECK(example_seed(9, Split::eval, 4) != example_seed(10, Split::eval, 4));
}

TEST_CASE("index and split cover the synthetic corpus") {
    const Prepared& p = prepared();
    CHECK(p.corpus.clips.size() == 80);
    const auto loaded = load_index(p.index);
    REQUIRE(loaded.size() == p.corpus.clips.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].id == p.corpus.clips[i].id);
        CHECK(fs::path(loaded[i].path).is_absolute());
    }
    const SplitAssignment back = load_split(p.split);
    CHECK(back.uploader_split == p.assignment.uploader_split);
    std::size_t total = 0;
    for (std::size_t c : back.clip_counts) total += c;
    CHECK(total == loaded.size());
}

TEST_CASE("dry mixing writes consistent examples and resumes") {
    const Prepared& p = prepared();
    TempDir out("dry");
    const PipelineConfig c = small_config();
    const MixRunResult r = run_mix(p.index, p.split, Split::train, RenderMode::dry, out.path(), c);
    CHECK(r.written == 6);
    CHECK(r.skipped == 0);
    std::size_t histogram_total = 0;
    for (std::size_t k = 0; k < r.count_histogram.size(); ++k) histogram_total += r.count_histogram[k];
    CHECK(histogram_total == 6);

    const auto list = lines_of(out.path() / "train_example_list.txt");
    const auto specs = lines_of(out.path() / "train_examples.jsonl");
    REQUIRE(list.size() == 6);
    REQUIRE(specs.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        const fs::path dir = out.path() / "train" / example_name(i);
        REQUIRE(fs::is_directory(dir));
        check_mixture_is_sum(dir);
        const MixtureSpec spec = mixture_spec_from_json(Json::parse(specs[i]));
        CHECK(spec.example_id == example_name(i));
        CHECK(static_cast<std::size_t>(std::count(list[i].begin(), list[i].end(), '\t')) == spec.events.size());
        const RenderedExample again = rerender(spec, load_index(p.index), RenderMode::dry, c);
        const AudioBuffer disk = read_wav(dir / "mixture.wav");
        REQUIRE(disk.size() == again.mixture.size());
        for (std::size_t k = 0; k < disk.size(); ++k) {
            CHECK(disk[k] == static_cast<double>(static_cast<float>(again.mixture[k])));
        }
    }

    const auto before = snapshot(out.path());
    fs::remove_all(out.path() / "train" / example_name(2));
    const MixRunResult resumed = run_mix(p.index, p.split, Split::train, RenderMode::dry, out.path(), c);
    CHECK(resumed.written == 1);
    CHECK(resumed.skipped == 5);
    CHECK(snapshot(out.path()) == before);
}

TEST_CASE("worker count does not change the output") {
    const Prepared& p = prepared();
    TempDir a("w1"), b("w3");
    PipelineConfig c = small_config();
    run_rir(Split::eval, a.path() / "rirs", c);
    run_mix(p.index, p.split, Split::eval, RenderMode::reverberant, a.path() / "mix", c, a.path() / "rirs");
    c.workers = 3;
    run_rir(Split::eval, b.path() / "rirs", c);
    run_mix(p.index, p.split, Split::eval, RenderMode::reverberant, b.path() / "mix", c, b.path() / "rirs");
    const auto sa = snapshot(a.path()), sb = snapshot(b.path());
    CHECK(sa.size() > 10);
    CHECK(sa == sb);
}

TEST_CASE("reverberant mixing uses the stored rooms") {
    const Prepared& p = prepared();
    TempDir out("reverb");
    const PipelineConfig c = small_config();
    const RirRunResult rr = run_rir(Split::validation, out.path() / "rirs", c);
    CHECK(rr.rooms == 3);
    CHECK(rr.rir_files == 12);
    CHECK(run_rir(Split::validation, out.path() / "rirs", c).skipped_rooms == 3);
    const Json sidecar = Json::parse(read_text(out.path() / "rirs" / "validation" / room_sidecar_name(room_name(Split::validation, 1))));
    CHECK(room_from_sidecar(sidecar).room_id == room_name(Split::validation, 1));

    run_mix(p.index, p.split, Split::validation, RenderMode::reverberant, out.path() / "mix", c, out.path() / "rirs");
    for (std::size_t i = 0; i < 3; ++i) check_mixture_is_sum(out.path() / "mix" / "validation" / example_name(i));

    const auto spec = mixture_spec_from_json(Json::parse(lines_of(out.path() / "mix" / "validation_examples.jsonl")[0]));
    const RenderedExample again = rerender(spec, load_index(p.index), RenderMode::reverberant, c, out.path() / "rirs");
    const AudioBuffer disk = read_wav(out.path() / "mix" / "validation" / example_name(0) / "mixture.wav");
    for (std::size_t k = 0; k < disk.size(); k += 101) {
        CHECK(disk[k] == static_cast<double>(static_cast<float>(again.mixture[k])));
    }
    CHECK_THROWS_AS(run_mix(p.index, p.split, Split::validation, RenderMode::reverberant, out.path() / "x", c), Error);
}

TEST_CASE("eval on perfect estimates counts every example as equal") {
    const Prepared& p = prepared();
    TempDir out("eval");
    const PipelineConfig c = small_config();
    run_mix(p.index, p.split, Split::train, RenderMode::dry, out.path() / "mix", c);
    const fs::path refs = out.path() / "mix" / "train";
    const fs::path ests = out.path() / "est";
    for (const auto& e : fs::directory_iterator(refs)) {
        if (!e.is_directory()) continue;
        fs::create_directories(ests / e.path().filename());
        for (const auto& f : fs::directory_iterator(e.path())) {
            if (f.path().filename() != "mixture.wav") fs::copy_file(f.path(), ests / e.path().filename() / f.path().filename());
        }
    }
    fs::create_directories(refs / "example99999");
    write_wav(AudioBuffer::zeros(160, 16000), refs / "example99999" / "mixture.wav");

    const EvalRunResult r = run_eval(refs, ests, out.path() / "report", c);
    CHECK(r.examples.size() == 6);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].rfind("example99999", 0) == 0);
    CHECK(r.report.counting_rates().equal == doctest::Approx(1.0));
    for (const auto& e : r.examples) {
        for (const auto& pair : e.pairs) CHECK(pair.si_snr_db > 60.0);
    }
    for (const char* f : {"report.json", "per_example.jsonl", "confusion_matrix.csv", "input_si_snr.csv"}) {
        CHECK(fs::exists(out.path() / "report" / f));
    }
    const Json report = Json::parse(read_text(out.path() / "report" / "report.json"));
    for (const char* key : {"schema_version", "formulation", "epsilon", "num_examples", "msi_by_count",
                            "counting_rates", "confusion_matrix", "input_si_snr_distribution"}) {
        CHECK(report.contains(key));
    }
    CHECK(report.at("num_examples") == 6);
    CHECK(lines_of(out.path() / "report" / "per_example.jsonl").size() == 6);
}

TEST_CASE("loss check scores estimate files against references") {
    TempDir dir("losscheck");
    Rng rng(21);
    const fs::path ex = dir.path() / "example00000";
    fs::create_directories(ex);
    const AudioBuffer a = noise(rng, 800, 0.3), b = noise(rng, 800, 0.2);
    write_wav(added(a, b), ex / "mixture.wav");
    write_wav(a, ex / "reference0.wav");
    write_wav(b, ex / "reference1.wav");
    write_wav(AudioBuffer::zeros(800, 16000), ex / "reference2.wav");
    write_wav(b, ex / "estimate0.wav");
    write_wav(AudioBuffer::zeros(800, 16000), ex / "estimate1.wav");
    write_wav(a, ex / "estimate2.wav");
    write_wav(AudioBuffer::zeros(800, 16000), ex / "estimate3.wav");
    const LossCheckResult r = run_loss_check(dir.path(), dir.path() / "losses.jsonl", small_config());
    REQUIRE(r.examples.size() == 1);
    CHECK(r.failures.empty());
    const PitLossResult& loss = r.examples[0].second;
    CHECK(loss.num_active == 2);
    CHECK(loss.best_permutation[0] == 1);
    CHECK(loss.best_permutation[2] == 0);
    const auto lines = lines_of(dir.path() / "losses.jsonl");
    REQUIRE(lines.size() == 1);
    CHECK(Json::parse(lines[0]).at("example_id") == "example00000");
}

TEST_CASE("overlap rows are percentages") {
    const Prepared& p = prepared();
    TempDir out("overlap");
    run_mix(p.index, p.split, Split::train, RenderMode::dry, out.path(), small_config());
    const OverlapTable t = run_overlap(out.path() / "train", out.path() / "overlap.csv", small_config());
    CHECK_FALSE(t.counts().empty());
    for (const auto& [count, _] : t.counts()) {
        const auto row = t.row(count);
        double s = 0.0;
        for (double v : row) s += v;
        CHECK(s == doctest::Approx(100.0));
    }
    CHECK(fs::exists(out.path() / "overlap.csv"));
}
