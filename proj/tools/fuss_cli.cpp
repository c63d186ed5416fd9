#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fusskit/pipeline.hpp"
#include "fusskit/synthetic.hpp"

namespace fs = std::filesystem;
using namespace fuss;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::invalid_argument:
        case Errc::missing_manifest: return kExitUsage;
        default: return kExitData;
    }
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Universal sound separation dataset and evaluation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<int> sample_rate;
    std::optional<int> workers;
    std::string config_path;
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--sample-rate", sample_rate, "Sample rate in Hz");
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);

    std::string corpus_root, index_path, split_path, out_path, rir_root, ref_dir, est_dir, dir;
    std::string split_arg = "train", mode_arg = "dry", formulation_arg;
    std::optional<std::size_t> count_override;
    std::optional<double> snr_max;
    SynthCorpusOptions synth;

    auto* index_cmd = app.add_subcommand("index", "Index a source corpus into a clip list");
    index_cmd->add_option("corpus", corpus_root, "Corpus root with manifest.csv or manifest.jsonl")->required();
    index_cmd->add_option("-o,--out", out_path, "Output index (JSONL)")->required();

    auto* split_cmd = app.add_subcommand("split", "Partition indexed clips by uploader");
    split_cmd->add_option("--index", index_path, "Index JSONL")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("-o,--out", out_path, "Output split assignment (JSON)")->required();

    auto* rir_cmd = app.add_subcommand("rir", "Simulate rooms and write impulse responses");
    rir_cmd->add_option("--split", split_arg, "train, validation or eval");
    rir_cmd->add_option("-o,--out", out_path, "RIR root directory")->required();
    rir_cmd->add_option("--rooms", count_override, "Number of rooms (overrides config)");

    auto* mix_cmd = app.add_subcommand("mix", "Sample and render mixtures");
    mix_cmd->add_option("--index", index_path, "Index JSONL")->required()->check(CLI::ExistingFile);
    mix_cmd->add_option("--splits", split_path, "Split assignment JSON")->required()->check(CLI::ExistingFile);
    mix_cmd->add_option("--split", split_arg, "train, validation or eval");
    mix_cmd->add_option("--mode", mode_arg, "dry or reverberant")->check(CLI::IsMember({"dry", "reverberant"}));
    mix_cmd->add_option("--rirs", rir_root, "RIR root directory (reverberant mode)");
    mix_cmd->add_option("-o,--out", out_path, "Output root")->required();
    mix_cmd->add_option("--examples", count_override, "Number of examples (overrides config)");

    auto* eval_cmd = app.add_subcommand("eval", "Score estimates against references");
    eval_cmd->add_option("--ref", ref_dir, "Directory of example folders with references")->required();
    eval_cmd->add_option("--est", est_dir, "Directory of example folders with estimates")->required();
    eval_cmd->add_option("-o,--out", out_path, "Report directory")->required();
    eval_cmd->add_option("--formulation", formulation_arg, "scaled or stabilized")
        ->check(CLI::IsMember({"scaled", "stabilized"}));

    auto* loss_cmd = app.add_subcommand("loss-check", "Compute the permutation-invariant loss per example");
    loss_cmd->add_option("dir", dir, "Directory of example folders")->required();
    loss_cmd->add_option("-o,--out", out_path, "Output JSONL")->required();
    loss_cmd->add_option("--snr-max", snr_max, "SNR cap in dB");

    auto* overlap_cmd = app.add_subcommand("overlap", "Local overlap table for a rendered split");
    overlap_cmd->add_option("dir", dir, "Split directory")->required();
    overlap_cmd->add_option("-o,--out", out_path, "Output CSV");

    auto* synth_cmd = app.add_subcommand("synth-corpus", "Write a small synthetic source corpus");
    synth_cmd->add_option("dir", dir, "Output directory")->required();
    synth_cmd->add_option("--classes", synth.num_classes, "Number of classes");
    synth_cmd->add_option("--backgrounds", synth.backgrounds_per_class, "Long clips per class");
    synth_cmd->add_option("--foregrounds", synth.foregrounds_per_class, "Short clips per class");
    synth_cmd->add_option("--uploaders", synth.num_uploaders, "Number of uploaders");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        PipelineConfig config;
        if (!config_path.empty()) config = load_pipeline_config(config_path, config);
        if (seed) config.master_seed = *seed;
        if (sample_rate) config.sample_rate = *sample_rate;
        if (workers) config.workers = *workers;
        config.sync();
        if (!formulation_arg.empty()) config.metric.formulation = parse_formulation(formulation_arg);
        if (snr_max) config.loss.snr_max = *snr_max;
        const Split split = parse_split(split_arg);
        if (count_override) {
            auto& target = rir_cmd->parsed() ? config.rooms_per_split : config.examples_per_split;
            target[static_cast<std::size_t>(split)] = *count_override;
        }
        config.validate();

        if (index_cmd->parsed()) {
            const CorpusIndex index = run_index(corpus_root, out_path, config);
            print_warnings(index.warnings);
            std::printf("%zu clips, %.1f h (skipped %zu unreadable, excluded %zu multi-label, %zu license)\n",
                        index.clips.size(), index.total_hours(), index.skipped_unreadable,
                        index.excluded_multi_label, index.excluded_license);
        } else if (split_cmd->parsed()) {
            const SplitAssignment a = run_split(index_path, out_path, config);
            print_warnings(a.warnings);
            for (Split s : kAllSplits) {
                const auto k = static_cast<std::size_t>(s);
                std::printf("%-10s %6zu clips (target %.0f)\n", split_name(s), a.clip_counts[k], a.target_counts[k]);
            }
        } else if (rir_cmd->parsed()) {
            const RirRunResult r = run_rir(split, out_path, config);
            std::printf("%zu rooms, %zu RIR files (%zu rooms already present)\n", r.rooms, r.rir_files,
                        r.skipped_rooms);
        } else if (mix_cmd->parsed()) {
            const RenderMode mode = mode_arg == "reverberant" ? RenderMode::reverberant : RenderMode::dry;
            const MixRunResult r = run_mix(index_path, split_path, split, mode, out_path, config, rir_root);
            std::printf("%zu examples written, %zu already present; source counts:", r.written, r.skipped);
            for (std::size_t k = 1; k < r.count_histogram.size(); ++k) std::printf(" %zu:%zu", k, r.count_histogram[k]);
            std::printf("\n");
        } else if (eval_cmd->parsed()) {
            const EvalRunResult r = run_eval(ref_dir, est_dir, out_path, config);
            std::cout << r.report.table();
            for (const auto& f : r.failures) std::cerr << "error: " << f << "\n";
            if (!r.failures.empty()) return kExitData;
        } else if (loss_cmd->parsed()) {
            const LossCheckResult r = run_loss_check(dir, out_path, config);
            std::printf("%zu examples scored\n", r.examples.size());
            for (const auto& f : r.failures) std::cerr << "error: " << f << "\n";
            if (!r.failures.empty()) return kExitData;
        } else if (overlap_cmd->parsed()) {
            const OverlapTable table = run_overlap(dir, out_path, config);
            for (const auto& [count, row_counts] : table.counts()) {
                std::printf("%d source(s):", count);
                for (double p : table.row(count)) std::printf(" %6.2f", p);
                std::printf("\n");
            }
        } else if (synth_cmd->parsed()) {
            synth.sample_rate = config.sample_rate;
            synth.seed = config.master_seed;
            const SynthCorpusSummary s = write_synthetic_corpus(dir, synth);
            std::printf("%d clips, %.1f s\n", s.num_clips, s.total_seconds);
        }
    } catch (const Error& e) {
        std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return 0;
}
