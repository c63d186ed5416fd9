// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fusskit/losses.hpp"
#include "fusskit/metrics.hpp"
#include "fusskit/pipeline.hpp"
#include "fusskit/room.hpp"
#include "fusskit/scenes.hpp"
#include "fusskit/synthetic.hpp"
#include "support.hpp"

using namespace fuss;
using namespace fuss::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::string note;  // appended after the detail, e.g. a skipped sub-check

    void require(bool ok, const std::string& why) {
        if (!ok && pass) {
            pass = false;
            detail = why;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// ---------------------------------------------------------------------------
// Independent oracles

double oracle_snr_loss(std::span<const double> y, std::span<const double> e, double tau) {
    double err = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) err += (y[i] - e[i]) * (y[i] - e[i]);
    for (double v : y) energy += v * v;
    return 10.0 * std::log10(err + tau * energy);
}

double oracle_inactive_loss(std::span<const double> x, std::span<const double> e, double tau) {
    double est = 0.0, mix = 0.0;
    for (double v : e) est += v * v;
    for (double v : x) mix += v * v;
    return 10.0 * std::log10(est + tau * mix);
}

struct Brute {
    double total = std::numeric_limits<double>::infinity();
    std::vector<int> perm;
};

// Heap's algorithm over estimate -> slot maps; ties keep the lexicographically smaller map.
Brute brute_force_pit(const std::vector<AudioBuffer>& refs, const std::vector<AudioBuffer>& ests,
                      const AudioBuffer& mix, double tau) {
    const int m = static_cast<int>(ests.size());
    std::vector<int> a(static_cast<std::size_t>(m));
    std::iota(a.begin(), a.end(), 0);
    Brute best;
    auto visit = [&] {
        double total = 0.0;
        for (int e = 0; e < m; ++e) {
            const int slot = a[e];
            total += slot < static_cast<int>(refs.size()) ? oracle_snr_loss(refs[slot].samples(), ests[e].samples(), tau)
                                                           : oracle_inactive_loss(mix.samples(), ests[e].samples(), tau);
        }
        if (total < best.total || (total == best.total && a < best.perm)) {
            best.total = total;
            best.perm = a;
        }
    };
    std::vector<int> c(static_cast<std::size_t>(m), 0);
    visit();
    int i = 0;
    while (i < m) {
        if (c[i] < i) {
            std::swap(a[i % 2 == 0 ? 0 : c[i]], a[i]);
            visit();
            ++c[i];
            i = 0;
        } else {
            c[i] = 0;
            ++i;
        }
    }
    return best;
}

// Estimate with a chosen textbook SI-SNR: reference plus a scaled orthogonal component.
std::vector<double> at_snr(Rng& rng, std::span<const double> y, double snr_db, double gain) {
    std::vector<double> n = gaussian(rng, y.size());
    const double p = dot(n, y) / dot(y, y);
    for (std::size_t i = 0; i < n.size(); ++i) n[i] -= p * y[i];
    const double scale = std::sqrt(dot(y, y) / dot(n, n) * std::pow(10.0, -snr_db / 10.0));
    std::vector<double> e(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) e[i] = gain * (y[i] + scale * n[i]);
    return e;
}

// First sample within 20 dB of the strongest one.
std::size_t onset(std::span<const double> x) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    std::size_t i = 0;
    while (std::abs(x[i]) < 0.1 * peak) ++i;
    return i;
}

std::string bytes_of(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = bytes_of(e.path());
    }
    return out;
}

std::vector<fs::path> sorted_dirs(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<AudioBuffer> source_wavs(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".wav" && e.path().filename() != "mixture.wav") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<AudioBuffer> out;
    for (const auto& f : files) out.push_back(read_wav(f));
    return out;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome loss_hand_values() {
    Outcome o;
    Rng rng(101);
    const double tau = LossConfig{}.tau();
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        const auto y = unit_energy(gaussian(rng, 1000 + 37 * static_cast<std::size_t>(t)));
        const std::vector<double> zero(y.size(), 0.0);
        worst = std::max(worst, std::abs(loss_snr(y, y, tau) + 30.0));
        worst = std::max(worst, std::abs(loss_inactive(y, zero, tau) + 30.0));
    }
    o.require(worst <= 1e-9, fmt("max deviation from -30 dB is %.3g dB", worst));
    o.detail = o.pass ? fmt("max deviation %.2g dB", worst) : o.detail;
    return o;
}

Outcome pit_brute_force() {
    Outcome o;
    Rng rng(202);
    const double tau = LossConfig{}.tau();
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const int active = 1 + static_cast<int>(rng.below(4));
        const std::size_t n = 64 + rng.below(200);
        std::vector<AudioBuffer> refs;
        for (int k = 0; k < active; ++k) refs.push_back(noise(rng, n, rng.uniform(0.05, 2.0)));
        AudioBuffer mix = refs[0];
        for (int k = 1; k < active; ++k) mix = added(mix, refs[static_cast<std::size_t>(k)]);
        std::vector<AudioBuffer> ests;
        for (int k = 0; k < 4; ++k) ests.push_back(noise(rng, n, rng.uniform(0.05, 2.0)));
        const PitLossResult got = pit_loss(refs, ests, mix);
        const Brute want = brute_force_pit(refs, ests, mix, tau);
        if (got.total_loss != want.total || got.best_permutation != want.perm) ++mismatches;
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " of 200 instances differ from brute force");
    if (o.pass) o.detail = "200/200 exact";
    return o;
}

Outcome gradient_checks() {
    Outcome o;
    Rng rng(303);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 8 + rng.below(57);
        const double tau = std::pow(10.0, -rng.uniform(1.0, 4.0));
        const auto y = gaussian(rng, n, rng.uniform(0.1, 2.0));
        const auto x = gaussian(rng, n, rng.uniform(0.1, 2.0));
        const auto e = gaussian(rng, n, rng.uniform(0.1, 2.0));
        auto rel = [](const std::vector<double>& g, const std::vector<double>& ref) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                num += (g[i] - ref[i]) * (g[i] - ref[i]);
                den += ref[i] * ref[i];
            }
            return std::sqrt(num / den);
        };
        worst = std::max(worst, rel(loss_snr_gradient(y, e, tau),
                                    finite_difference_grad([&](std::span<const double> p) { return loss_snr(y, p, tau); }, e)));
        worst = std::max(worst, rel(loss_inactive_gradient(x, e, tau),
                                    finite_difference_grad([&](std::span<const double> p) { return loss_inactive(x, p, tau); }, e)));
    }
    o.require(worst <= 1e-4, fmt("max relative error %.3g", worst));
    if (o.pass) o.detail = fmt("100 points, max relative error %.2g", worst);
    return o;
}

Outcome mixture_consistency_check() {
    Outcome o;
    Rng rng(404);
    double worst_sum = 0.0, worst_idem = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int m = 1 + static_cast<int>(rng.below(6));
        const std::size_t n = 16 + rng.below(2000);
        const AudioBuffer x = noise(rng, n, rng.uniform(0.01, 1.0));
        std::vector<AudioBuffer> init;
        for (int k = 0; k < m; ++k) init.push_back(noise(rng, n, rng.uniform(0.01, 1.0)));
        const auto out = mixture_consistency(init, x);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (const auto& b : out) s += b[i];
            worst_sum = std::max(worst_sum, std::abs(s - x[i]));
        }
        const auto again = mixture_consistency(out, x);
        for (int k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                worst_idem = std::max(worst_idem, std::abs(again[static_cast<std::size_t>(k)][i] - out[static_cast<std::size_t>(k)][i]));
            }
        }
    }
    o.require(worst_sum <= 1e-6, fmt("sum deviates by %.3g", worst_sum));
    o.require(worst_idem <= 1e-9, fmt("projection moves by %.3g on reapplication", worst_idem));
    if (o.pass) o.detail = fmt("1000 instances, sum err %.2g, idempotence err %.2g", worst_sum, worst_idem);
    return o;
}

Outcome metric_equivalence_and_divergence() {
    Outcome o;
    Rng rng(505);
    double worst = 0.0;
    int compared = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto y = gaussian(rng, 256 + rng.below(2000), rng.uniform(0.01, 2.0));
        const auto e = at_snr(rng, y, rng.uniform(-45.0, 45.0), rng.uniform(0.01, 10.0));
        const double a = si_snr_scaled(y, e, 1e-12).value_db;
        const double b = si_snr_stabilized(y, e, 1e-12).value_db;
        if (std::abs(a) >= 40.0 || std::abs(b) >= 40.0) continue;
        ++compared;
        worst = std::max(worst, std::abs(a - b));
    }
    o.require(compared >= 500, "too few non-degenerate pairs");
    o.require(worst <= 1e-4, fmt("forms differ by %.3g dB", worst));

    int violations = 0;
    for (int t = 0; t < 20; ++t) {
        // n is a unit-norm direction, so delta is the estimate norm.
        const auto y = gaussian(rng, 16000, rng.uniform(0.01, 0.3));
        const auto n = unit_energy(gaussian(rng, 16000));
        double previous = -std::numeric_limits<double>::infinity();
        for (double delta : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
            std::vector<double> s = n;
            for (double& v : s) v *= delta;
            const double scaled_db = si_snr_scaled(y, s).value_db;
            const double stable_db = si_snr_stabilized(y, s).value_db;
            if (!(scaled_db > stable_db) || !(scaled_db > previous)) ++violations;
            previous = scaled_db;
        }
    }
    o.require(violations == 0, std::to_string(violations) + " divergence steps not monotone");
    if (o.pass) o.detail = fmt("%g pairs agree within %.2g dB; divergence monotone in 20/20 trials", compared, worst);
    return o;
}

Outcome epsilon_caps() {
    Outcome o;
    Rng rng(606);
    const double eps = 1e-8;
    const double expected = 10.0 * std::log10((1.0 + eps) / eps);
    double worst_hi = 0.0, worst_lo = 0.0;
    for (int t = 0; t < 5; ++t) {
        // Ten seconds at 16 kHz with -20 dBFS RMS.
        const auto y = gaussian(rng, 160000, 0.1);
        auto z = gaussian(rng, y.size(), 0.1);
        const double p = dot(z, y) / dot(y, y);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] -= p * y[i];
        worst_hi = std::max(worst_hi, std::abs(si_snr_stabilized(y, y, eps).value_db - expected));
        worst_lo = std::max(worst_lo, std::abs(si_snr_stabilized(y, z, eps).value_db + expected));
    }
    o.require(worst_hi <= 0.01, fmt("identical case off by %.3g dB", worst_hi));
    o.require(worst_lo <= 0.01, fmt("orthogonal case off by %.3g dB", worst_lo));
    if (o.pass) o.detail = fmt("+%.4f / -%.4f dB, max error %.2g dB", expected, expected, std::max(worst_hi, worst_lo));
    return o;
}

Outcome rir_checks() {
    Outcome o;
    const RoomRanges ranges;
    SimConfig short_sim;
    short_sim.rir_length = 0.25;
    const int tolerance = filter_half_width(short_sim) + 1;
    int off = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const RoomSpec room = sample_room(derive_seed(7000, {seed}), 1, ranges);
        const Rir rir = image_method_rir(room, 0, short_sim);
        const double expected =
            distance(room.source_positions[0], room.mic_position) / short_sim.speed_of_sound * short_sim.sample_rate;
        const double err = std::abs(static_cast<double>(onset(rir.samples.samples())) - expected);
        worst = std::max(worst, err);
        if (err > tolerance) ++off;
    }
    o.require(off == 0, std::to_string(off) + " rooms with direct path outside tolerance");

    RoomSpec dead = sample_room(77, 1, ranges);
    dead.wall_materials.fill(Material{"anechoic", {0, 0, 0, 0, 0, 0, 0}});
    const Rir dead_rir = image_method_rir(dead, 0, short_sim);
    const double delay = distance(dead.source_positions[0], dead.mic_position) / short_sim.speed_of_sound *
                         short_sim.sample_rate;
    const auto lo = static_cast<std::ptrdiff_t>(std::floor(delay)) - short_sim.sinc_half_width + 1;
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(delay)) + short_sim.sinc_half_width;
    int stray = 0;
    for (std::size_t i = 0; i < dead_rir.samples.size(); ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        if ((k < lo || k > hi) && dead_rir.samples[i] != 0.0) ++stray;
    }
    o.require(stray == 0, std::to_string(stray) + " non-zero samples outside the direct path in an absorbing room");

    Rng rng(707);
    int monotone = 0;
    std::string worst_pair;
    for (std::uint64_t t = 0; t < 100; ++t) {
        RoomSpec a = sample_room(derive_seed(8000, {t}), 1, ranges);
        RoomSpec b = a;
        double g1 = rng.uniform(ranges.reflectivity_gain.lo, ranges.reflectivity_gain.hi);
        double g2 = rng.uniform(ranges.reflectivity_gain.lo, ranges.reflectivity_gain.hi);
        if (g1 > g2) std::swap(g1, g2);
        a.reflectivity_gain = g1;
        b.reflectivity_gain = g2;
        const double ta = measure_t60(image_method_rir(a, 0)).seconds;
        const double tb = measure_t60(image_method_rir(b, 0)).seconds;
        if (ta < tb) {
            ++monotone;
        } else if (worst_pair.empty()) {
            worst_pair = fmt("gains %.4f < %.4f gave T60 %.4f s", g1, g2, ta) + fmt(" and %.4f s", tb);
        }
    }
    o.require(monotone == 100, fmt("T60 monotone in %g/100 pairs; ", monotone) + worst_pair);
    if (o.pass) {
        o.detail = fmt("direct path max error %.1f samples (tolerance %g); T60 monotone %g/100", worst, tolerance, monotone);
    }
    return o;
}

// Clip metadata without audio; durations are what sampling needs.
std::vector<CorpusClip> metadata_corpus(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CorpusClip> clips;
    const int classes = 40, uploaders = 120;
    for (int i = 0; i < 4000; ++i) {
        CorpusClip c;
        char id[32];
        std::snprintf(id, sizeof id, "clip%05d", i);
        c.id = id;
        c.path = std::string(id) + ".wav";
        c.class_label = "class" + std::to_string(rng.below(classes));
        // Skewed uploader sizes: index ~ floor(u^2 * uploaders).
        const double u = rng.uniform();
        c.uploader = "user" + std::to_string(static_cast<int>(u * u * uploaders));
        c.duration = rng.uniform() < 0.3 ? rng.uniform(10.5, 30.0) : rng.uniform(0.3, 9.5);
        c.license = "cc0";
        c.sample_rate = kDefaultSampleRate;
        clips.push_back(c);
    }
    return clips;
}

Outcome sampling_statistics() {
    Outcome o;
    const auto clips = metadata_corpus(808);
    const SplitAssignment split = partition_by_uploader(clips, 9);
    std::map<std::string, std::string> uploader_of;
    for (const auto& c : clips) uploader_of[c.id] = c.uploader;

    std::set<std::string> seen_uploaders;
    std::array<std::vector<CorpusClip>, 3> per_split;
    for (Split s : kAllSplits) {
        per_split[static_cast<std::size_t>(s)] = clips_in_split(clips, split, s);
        std::set<std::string> mine;
        for (const auto& c : per_split[static_cast<std::size_t>(s)]) mine.insert(c.uploader);
        for (const auto& u : mine) {
            if (!seen_uploaders.insert(u).second) o.require(false, "uploader " + u + " appears in two splits");
        }
    }

    const MixConfig mix;
    const std::array<std::size_t, 3> quota{8000, 1000, 1000};
    std::array<std::size_t, 5> counts{};
    int repeats = 0, leaks = 0;
    std::size_t total = 0;
    for (Split s : kAllSplits) {
        const ClipPool pool(per_split[static_cast<std::size_t>(s)], mix.canvas_duration);
        for (std::size_t i = 0; i < quota[static_cast<std::size_t>(s)]; ++i) {
            const MixtureSpec spec = sample_mixture_spec(example_seed(31, s, i), s, i, pool, mix);
            ++counts[spec.events.size()];
            ++total;
            std::set<std::string> labels;
            for (const auto& e : spec.events) {
                if (!labels.insert(e.class_label).second) ++repeats;
                if (split.split_of(uploader_of.at(e.clip_id)) != s) ++leaks;
            }
        }
    }
    double worst = 0.0;
    for (int k = 1; k <= 4; ++k) worst = std::max(worst, std::abs(static_cast<double>(counts[static_cast<std::size_t>(k)]) / total - 0.25));
    o.require(counts[0] == 0, "spec with no sources");
    o.require(worst <= 0.02, fmt("count frequency off by %.4f", worst));
    o.require(repeats == 0, std::to_string(repeats) + " class repeats");
    o.require(leaks == 0, std::to_string(leaks) + " clips from another split's uploaders");
    if (o.pass) {
        o.detail = "10000 specs, counts " + std::to_string(counts[1]) + "/" + std::to_string(counts[2]) + "/" +
                   std::to_string(counts[3]) + "/" + std::to_string(counts[4]) + ", 0 repeats, 0 leaks";
    }
    return o;
}

// Synthetic corpus and one rendered dry split shared by the protocol checks.
struct SyntheticRun {
    TempDir dir{"acceptance"};
    PipelineConfig config;
    fs::path split_dir;

    SyntheticRun() {
        SynthCorpusOptions opt;
        opt.seed = 12;
        write_synthetic_corpus(dir.path() / "corpus", opt);
        config.master_seed = 2024;
        config.examples_per_split = {200, 1, 1};
        config.rooms_per_split = {200, 1, 1};
        config.sync();
        run_index(dir.path() / "corpus", dir.path() / "index.jsonl", config);
        run_split(dir.path() / "index.jsonl", dir.path() / "split.json", config);
        run_mix(dir.path() / "index.jsonl", dir.path() / "split.json", Split::train, RenderMode::dry,
                dir.path() / "mix", config);
        split_dir = dir.path() / "mix" / "train";
    }
};

SyntheticRun& synthetic_run() {
    static SyntheticRun run;
    return run;
}

// Single-source overlap row on real source data, when FUSS_SOURCE_DIR points at it.
void real_overlap_row(Outcome& o) {
    const char* root = std::getenv("FUSS_SOURCE_DIR");
    if (!root || !*root) {
        o.note = "real-data row SKIPPED (FUSS_SOURCE_DIR unset)";
        return;
    }
    PipelineConfig config;
    IndexOptions options;
    const CorpusIndex index = index_corpus(root, options);
    const SplitAssignment split = partition_by_uploader(index.clips, config.master_seed, config.split_targets);
    const ClipPool pool(clips_in_split(index.clips, split, Split::train), config.mix.canvas_duration);
    OverlapTable table;
    const std::size_t n = 2000;
    for (std::size_t i = 0; i < n; ++i) {
        const MixtureSpec spec = sample_mixture_spec(example_seed(config.master_seed, Split::train, i), Split::train, i,
                                                     pool, config.mix);
        if (spec.events.size() != 1) continue;
        const RenderedExample ex = render_example(spec, pool, nullptr, RenderMode::dry, config.mix);
        table.add(1, overlap_stats(ex.sources));
    }
    const auto row = table.row(1);
    const bool ok = row.size() >= 2 && std::abs(row[0] - 19.0) <= 3.0 && std::abs(row[1] - 81.0) <= 3.0;
    o.require(ok, fmt("real-data count=1 row is %.1f/%.1f, expected 19/81", row.empty() ? -1 : row[0],
                      row.size() < 2 ? -1 : row[1]));
    o.note = fmt("real-data count=1 row %.1f/%.1f", row[0], row[1]);
}

Outcome overlap_identity() {
    Outcome o;
    SyntheticRun& run = synthetic_run();
    const OverlapTable table = run_overlap(run.split_dir, run.dir.path() / "overlap.csv", run.config);
    double worst = 0.0;
    for (const auto& [count, _] : table.counts()) {
        const auto row = table.row(count);
        worst = std::max(worst, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 100.0));
    }
    o.require(table.counts().size() == 4, "expected rows for counts 1 to 4");
    o.require(worst <= 0.01, fmt("a row sums to 100 +- %.3g", worst));

    Rng rng(909);
    const std::vector<AudioBuffer> pair = {noise(rng, 16000, 0.3), noise(rng, 16000, 0.05)};
    const OverlapStats full = overlap_stats(pair);
    o.require(full.percent.size() > 2 && std::abs(full.percent[2] - 100.0) <= 0.01,
              fmt("full-overlap pair reports %.3f%% in column 2", full.percent.size() > 2 ? full.percent[2] : -1.0));
    if (o.pass) o.detail = fmt("rows sum to 100 within %.2g; full-overlap pair %.2f%%", worst, full.percent[2]);
    real_overlap_row(o);
    return o;
}

Outcome protocol_end_to_end() {
    Outcome o;
    SyntheticRun& run = synthetic_run();
    const fs::path base = run.dir.path();
    const auto examples = sorted_dirs(run.split_dir);
    o.require(examples.size() == 200, "expected 200 rendered examples");

    for (const auto& ex : examples) {
        const std::string name = ex.filename().string();
        const AudioBuffer mixture = read_wav(ex / "mixture.wav");
        const auto refs = source_wavs(ex);
        const auto irm = oracle_mask_separate(mixture, refs);
        for (const char* kind : {"irm", "replicated", "perfect"}) fs::create_directories(base / kind / name);
        for (std::size_t k = 0; k < irm.size(); ++k) {
            write_wav(irm[k], base / "irm" / name / ("estimate" + std::to_string(k) + ".wav"));
        }
        for (int k = 0; k < 4; ++k) fs::copy_file(ex / "mixture.wav", base / "replicated" / name / ("estimate" + std::to_string(k) + ".wav"));
        for (const auto& f : fs::directory_iterator(ex)) {
            if (f.path().filename() != "mixture.wav") fs::copy_file(f.path(), base / "perfect" / name / f.path().filename());
        }
    }

    const EvalRunResult irm = run_eval(run.split_dir, base / "irm", base / "report_irm", run.config);
    const EvalRunResult rep = run_eval(run.split_dir, base / "replicated", base / "report_replicated", run.config);
    const EvalRunResult perfect = run_eval(run.split_dir, base / "perfect", base / "report_perfect", run.config);
    for (const auto* r : {&irm, &rep, &perfect}) {
        o.require(r->failures.empty(), "eval failures: " + (r->failures.empty() ? std::string() : r->failures[0]));
        o.require(r->report.num_examples() == 200, "eval did not score 200 examples");
    }

    const auto one_s = irm.report.single_source_si_snr();
    o.require(one_s && *one_s > 0.0, "IRM 1S is not positive");
    std::string summary = one_s ? fmt("IRM 1S %.1f", *one_s) : "";
    for (int c = 2; c <= 4; ++c) {
        const auto a = irm.report.msi(c), b = rep.report.msi(c);
        o.require(a.has_value() && b.has_value(), "missing bucket for count " + std::to_string(c));
        if (!a || !b) continue;
        o.require(*a > 0.0, fmt("IRM MSi%g is %.3f dB", c, *a));
        o.require(*a > *b, fmt("IRM MSi%g does not beat replicated mixture", c));
        o.require(std::abs(*b) <= 0.1, fmt("replicated MSi%g is %.3f dB", c, *b));
        summary += fmt(", MSi%g %.1f vs %.2f", c, *a, *b);
    }
    const auto pooled_irm = irm.report.msi_pooled(), pooled_rep = rep.report.msi_pooled();
    o.require(pooled_irm && pooled_rep && *pooled_irm > *pooled_rep, "pooled IRM MSi does not beat replicated mixture");

    o.require(perfect.report.counting_rates().equal == 1.0, "perfect references are not all equal-separated");
    const auto& cm = perfect.report.confusion_matrix();
    long long off = 0;
    for (std::size_t r = 0; r < cm.size(); ++r) {
        for (std::size_t e = 0; e < cm[r].size(); ++e) off += r == e ? 0 : cm[r][e];
    }
    o.require(off == 0, std::to_string(off) + " off-diagonal confusion entries for perfect references");
    if (o.pass) o.detail = summary + "; perfect equal rate 1.0, diagonal-only";
    return o;
}

Outcome determinism() {
    Outcome o;
    TempDir root("determinism");
    SynthCorpusOptions opt;
    opt.seed = 5;
    write_synthetic_corpus(root.path() / "corpus", opt);

    auto full_run = [&](const fs::path& out, int workers) {
        PipelineConfig c;
        c.master_seed = 99;
        c.workers = workers;
        c.examples_per_split = {60, 20, 20};
        c.rooms_per_split = {60, 20, 20};
        c.sync();
        run_index(root.path() / "corpus", out / "index.jsonl", c);
        run_split(out / "index.jsonl", out / "split.json", c);
        for (Split s : kAllSplits) {
            run_rir(s, out / "rirs", c);
            run_mix(out / "index.jsonl", out / "split.json", s, RenderMode::reverberant, out / "mix", c, out / "rirs");
        }
    };
    full_run(root.path() / "a", 1);
    full_run(root.path() / "b", 4);
    const auto a = snapshot(root.path() / "a"), b = snapshot(root.path() / "b");
    std::size_t differing = 0;
    for (const auto& [name, bytes] : a) {
        auto it = b.find(name);
        if (it == b.end() || it->second != bytes) ++differing;
    }
    o.require(a.size() == b.size(), fmt("trees hold %g and %g files", static_cast<double>(a.size()), static_cast<double>(b.size())));
    o.require(differing == 0, std::to_string(differing) + " files differ between worker counts");
    if (o.pass) o.detail = std::to_string(a.size()) + " files byte-identical with 1 and 4 workers";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;  // 0 = none
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "loss hand values", 1.0, loss_hand_values},
        {2, "PIT equals brute force", 30.0, pit_brute_force},
        {3, "loss gradients", 0.0, gradient_checks},
        {4, "mixture consistency", 0.0, mixture_consistency_check},
        {5, "SI-SNR equivalence and divergence", 0.0, metric_equivalence_and_divergence},
        {6, "SI-SNR epsilon caps", 0.0, epsilon_caps},
        {7, "RIR analytic checks", 120.0, rir_checks},
        {8, "sampling statistics", 0.0, sampling_statistics},
        {9, "overlap identity", 0.0, overlap_identity},
        {10, "protocol end to end", 0.0, protocol_end_to_end},
        {11, "determinism across worker counts", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
            o.require(false, fmt("took %.1f s, limit %.0f s", secs, c.time_limit_s));
        }
        if (!o.pass) ++failed;
        std::string line = o.detail;
        if (!o.note.empty()) line += "; " + o.note;
        std::printf("%s %2d  %-34s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, line.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
