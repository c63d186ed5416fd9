#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusskit/audio.hpp"

namespace fuss {

enum class SiSnrFormulation {
    scaled,      // optimal-scale projection; overrates near-silent estimates
    stabilized,  // cosine-similarity form; bounded by epsilon on both ends
};

enum class MsiAveraging { per_pair, per_example };

struct MetricConfig {
    double epsilon = 1e-8;
    double inactive_margin_db = 20.0;
    SiSnrFormulation formulation = SiSnrFormulation::stabilized;

    void validate() const;
};

struct SiSnrDiagnostics {
    double alpha = 0.0;  // y'est / (||y||^2 + eps)
    double rho = 0.0;    // y'est / (||y|| ||est|| + eps)
    double value_db = 0.0;
};

SiSnrDiagnostics si_snr_scaled(std::span<const double> reference, std::span<const double> estimate,
                               double epsilon = 1e-8);
SiSnrDiagnostics si_snr_stabilized(std::span<const double> reference, std::span<const double> estimate,
                                   double epsilon = 1e-8);
double si_snr(std::span<const double> reference, std::span<const double> estimate, const MetricConfig& config);

enum class SeparationClass { under, equal, over };
const char* separation_class_name(SeparationClass c) noexcept;

struct EvaluatedPair {
    int reference = 0;
    int estimate = 0;
    double si_snr_db = 0.0;
    double input_si_snr_db = 0.0;
    double si_snri_db = 0.0;
};

struct ExampleEval {
    std::string example_id;
    int reference_count = 0;  // non-zero references
    int estimate_count = 0;   // estimates above the inactivity margin
    std::vector<int> assignment;  // assignment[reference slot] = estimate index
    std::vector<EvaluatedPair> pairs;  // kept pairs only
    std::vector<double> input_si_snr_db;  // mixture vs each non-zero reference
    SeparationClass separation_class = SeparationClass::equal;
};

inline constexpr int kMaxEvalSources = 8;

// Aligns estimates to references by maximizing summed SI-SNR over all
// permutations, then drops pairs whose reference is all-zero or whose
// estimate sits more than the margin below the quietest non-zero
// reference. Shorter lists are padded with silence to a common size.
ExampleEval align_and_filter(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                             const AudioBuffer& mixture, const MetricConfig& config = {});

// align_and_filter plus input SI-SNR (reference vs mixture) and improvement
// for every kept pair.
ExampleEval evaluate_example(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                             const AudioBuffer& mixture, const MetricConfig& config = {});

struct DistributionSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct CountingRates {
    double under = 0.0;
    double equal = 0.0;
    double over = 0.0;
};

// Corpus-level summary. Holds sufficient statistics so partial reports
// merge into the same totals regardless of order.
class EvalReport {
public:
    explicit EvalReport(MsiAveraging averaging = MsiAveraging::per_pair) : averaging_(averaging) {}

    void add(const ExampleEval& example);
    void merge(const EvalReport& other);

    std::size_t num_examples() const noexcept { return num_examples_; }
    MsiAveraging averaging() const noexcept { return averaging_; }

    // Mean absolute SI-SNR over single-source examples (1S).
    std::optional<double> single_source_si_snr() const;
    // Mean SI-SNRi for examples with `count` non-zero references.
    std::optional<double> msi(int count) const;
    // Mean SI-SNRi pooled over counts 2..4.
    std::optional<double> msi_pooled() const;

    // Normalized lower triangle / diagonal / upper triangle of the confusion matrix.
    CountingRates counting_rates() const;
    // confusion_matrix()[reference_count][estimate_count]
    const std::vector<std::vector<long long>>& confusion_matrix() const noexcept { return confusion_; }

    std::map<int, DistributionSummary> input_si_snr_distribution() const;
    const std::map<int, std::vector<double>>& input_si_snr_values() const noexcept { return input_values_; }

    // Text table: 1S, MSi 2/3/4/2-4, under/equal/over. Values clamp to +-80 dB.
    std::string table() const;

private:
    struct Bucket {
        double pair_sum = 0.0;
        long long pair_count = 0;
        double example_mean_sum = 0.0;
        long long example_count = 0;
    };

    std::optional<double> bucket_mean(const Bucket& b) const;
    void ensure_confusion_size(std::size_t n);

    MsiAveraging averaging_;
    std::size_t num_examples_ = 0;
    Bucket single_source_;
    std::map<int, Bucket> improvement_;
    std::vector<std::vector<long long>> confusion_;
    std::map<int, std::vector<double>> input_values_;
};

EvalReport aggregate_report(std::span<const ExampleEval> examples,
                            MsiAveraging averaging = MsiAveraging::per_pair);

enum class OracleMask { ideal_ratio, ideal_binary };

// Test fixture separator: masks from reference magnitudes applied to the
// mixture STFT, inverted, then projected with mixture consistency.
std::vector<AudioBuffer> oracle_mask_separate(const AudioBuffer& mixture, std::span<const AudioBuffer> references,
                                              const StftConfig& stft_config = {},
                                              OracleMask mask = OracleMask::ideal_ratio);

}  // namespace fuss
