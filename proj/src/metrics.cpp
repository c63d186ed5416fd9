#include "fusskit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fusskit/losses.hpp"

namespace fuss {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(Errc::length_mismatch, std::string(what) + ": lengths " + std::to_string(a) + " and " +
                                               std::to_string(b) + " differ");
    }
}

std::vector<AudioBuffer> padded(std::span<const AudioBuffer> list, std::size_t count, std::size_t length,
                                int sample_rate) {
    std::vector<AudioBuffer> out(list.begin(), list.end());
    while (out.size() < count) out.push_back(AudioBuffer::zeros(length, sample_rate));
    return out;
}

// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

}  // namespace

void MetricConfig::validate() const {
    if (!(epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
    if (!(inactive_margin_db > 0.0)) throw Error(Errc::invalid_argument, "inactive margin must be positive");
}

SiSnrDiagnostics si_snr_scaled(std::span<const double> reference, std::span<const double> estimate,
                               double epsilon) {
    require_same_length(reference.size(), estimate.size(), "si_snr_scaled");
    const double yy = sum_squares(reference);
    const double ee = sum_squares(estimate);
    const double ye = dot(reference, estimate);
    SiSnrDiagnostics d;
    d.alpha = ye / (yy + epsilon);
    d.rho = ye / (std::sqrt(yy) * std::sqrt(ee) + epsilon);
    double noise = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double r = d.alpha * reference[i] - estimate[i];
        noise += r * r;
    }
    const double signal = d.alpha * d.alpha * yy;
    d.value_db = 10.0 * std::log10((signal + epsilon) / (noise + epsilon));
    return d;
}

SiSnrDiagnostics si_snr_stabilized(std::span<const double> reference, std::span<const double> estimate,
                                   double epsilon) {
    require_same_length(reference.size(), estimate.size(), "si_snr_stabilized");
    const double yy = sum_squares(reference);
    const double ee = sum_squares(estimate);
    const double ye = dot(reference, estimate);
    SiSnrDiagnostics d;
    d.alpha = ye / (yy + epsilon);
    d.rho = ye / (std::sqrt(yy) * std::sqrt(ee) + epsilon);
    const double rho2 = std::min(d.rho * d.rho, 1.0);
    d.value_db = 10.0 * std::log10((rho2 + epsilon) / (1.0 - rho2 + epsilon));
    return d;
}

double si_snr(std::span<const double> reference, std::span<const double> estimate, const MetricConfig& config) {
    return config.formulation == SiSnrFormulation::scaled
               ? si_snr_scaled(reference, estimate, config.epsilon).value_db
               : si_snr_stabilized(reference, estimate, config.epsilon).value_db;
}

const char* separation_class_name(SeparationClass c) noexcept {
    switch (c) {
        case SeparationClass::under: return "under";
        case SeparationClass::equal: return "equal";
        case SeparationClass::over: return "over";
    }
    return "unknown";
}

ExampleEval align_and_filter(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                             const AudioBuffer& mixture, const MetricConfig& config) {
    config.validate();
    const std::size_t m = std::max(references.size(), estimates.size());
    if (m == 0) throw Error(Errc::degenerate_example, "no references and no estimates");
    if (m > static_cast<std::size_t>(kMaxEvalSources)) {
        throw Error(Errc::invalid_argument,
                    "alignment is exhaustive and limited to " + std::to_string(kMaxEvalSources) + " sources");
    }
    const std::size_t n = mixture.size();
    for (const auto& r : references) require_same_length(r.size(), n, "align_and_filter");
    for (const auto& e : estimates) require_same_length(e.size(), n, "align_and_filter");
    const auto refs = padded(references, m, n, mixture.sample_rate());
    const auto ests = padded(estimates, m, n, mixture.sample_rate());

    std::vector<bool> nonzero_ref(m);
    double quietest_ref_db = std::numeric_limits<double>::infinity();
    int reference_count = 0;
    for (std::size_t r = 0; r < m; ++r) {
        nonzero_ref[r] = !refs[r].is_silent();
        if (nonzero_ref[r]) {
            ++reference_count;
            quietest_ref_db = std::min(quietest_ref_db, energy_db(refs[r]));
        }
    }
    if (reference_count == 0) throw Error(Errc::degenerate_example, "example has no non-zero reference");

    // score[r][e]; all-zero references hold slots but never contribute.
    std::vector<std::vector<double>> score(m, std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < m; ++r) {
        if (!nonzero_ref[r]) continue;
        for (std::size_t e = 0; e < m; ++e) score[r][e] = si_snr(refs[r].samples(), ests[e].samples(), config);
    }

    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = -std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t r = 0; r < m; ++r) total += score[r][static_cast<std::size_t>(perm[r])];
        if (total > best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    const double threshold_db = quietest_ref_db - config.inactive_margin_db;
    std::vector<bool> active_est(m);
    int estimate_count = 0;
    for (std::size_t e = 0; e < m; ++e) {
        active_est[e] = energy_db(ests[e]) >= threshold_db;
        estimate_count += active_est[e] ? 1 : 0;
    }

    ExampleEval eval;
    eval.reference_count = reference_count;
    eval.estimate_count = estimate_count;
    eval.assignment = best;
    for (std::size_t r = 0; r < m; ++r) {
        const auto e = static_cast<std::size_t>(best[r]);
        if (!nonzero_ref[r] || !active_est[e]) continue;
        EvaluatedPair pair;
        pair.reference = static_cast<int>(r);
        pair.estimate = best[r];
        pair.si_snr_db = score[r][e];
        eval.pairs.push_back(pair);
    }
    eval.separation_class = estimate_count < reference_count    ? SeparationClass::under
                            : estimate_count == reference_count ? SeparationClass::equal
                                                                : SeparationClass::over;
    return eval;
}

ExampleEval evaluate_example(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                             const AudioBuffer& mixture, const MetricConfig& config) {
    ExampleEval eval = align_and_filter(references, estimates, mixture, config);
    std::vector<double> input(references.size(), 0.0);
    for (std::size_t r = 0; r < references.size(); ++r) {
        if (references[r].is_silent()) continue;
        input[r] = si_snr(references[r].samples(), mixture.samples(), config);
        eval.input_si_snr_db.push_back(input[r]);
    }
    for (auto& pair : eval.pairs) {
        pair.input_si_snr_db = input[static_cast<std::size_t>(pair.reference)];
        pair.si_snri_db = pair.si_snr_db - pair.input_si_snr_db;
    }
    return eval;
}

// ---------------------------------------------------------------------------
// EvalReport

void EvalReport::ensure_confusion_size(std::size_t n) {
    if (confusion_.size() >= n) return;
    confusion_.resize(n);
    for (auto& row : confusion_) row.resize(n, 0);
}

void EvalReport::add(const ExampleEval& example) {
    ++num_examples_;
    ensure_confusion_size(static_cast<std::size_t>(std::max({example.reference_count, example.estimate_count, 4})) + 1);
    ++confusion_[static_cast<std::size_t>(example.reference_count)][static_cast<std::size_t>(example.estimate_count)];

    const bool single = example.reference_count == 1;
    Bucket& bucket = single ? single_source_ : improvement_[example.reference_count];
    double example_sum = 0.0;
    for (const auto& pair : example.pairs) {
        const double v = single ? pair.si_snr_db : pair.si_snri_db;
        bucket.pair_sum += v;
        ++bucket.pair_count;
        example_sum += v;
    }
    auto& inputs = input_values_[example.reference_count];
    inputs.insert(inputs.end(), example.input_si_snr_db.begin(), example.input_si_snr_db.end());
    if (!example.pairs.empty()) {
        bucket.example_mean_sum += example_sum / static_cast<double>(example.pairs.size());
        ++bucket.example_count;
    }
}

void EvalReport::merge(const EvalReport& other) {
    num_examples_ += other.num_examples_;
    ensure_confusion_size(other.confusion_.size());
    for (std::size_t i = 0; i < other.confusion_.size(); ++i) {
        for (std::size_t j = 0; j < other.confusion_[i].size(); ++j) confusion_[i][j] += other.confusion_[i][j];
    }
    auto merge_bucket = [](Bucket& into, const Bucket& from) {
        into.pair_sum += from.pair_sum;
        into.pair_count += from.pair_count;
        into.example_mean_sum += from.example_mean_sum;
        into.example_count += from.example_count;
    };
    merge_bucket(single_source_, other.single_source_);
    for (const auto& [count, bucket] : other.improvement_) merge_bucket(improvement_[count], bucket);
    for (const auto& [count, values] : other.input_values_) {
        auto& dst = input_values_[count];
        dst.insert(dst.end(), values.begin(), values.end());
    }
}

std::optional<double> EvalReport::bucket_mean(const Bucket& b) const {
    if (averaging_ == MsiAveraging::per_pair) {
        if (b.pair_count == 0) return std::nullopt;
        return b.pair_sum / static_cast<double>(b.pair_count);
    }
    if (b.example_count == 0) return std::nullopt;
    return b.example_mean_sum / static_cast<double>(b.example_count);
}

std::optional<double> EvalReport::single_source_si_snr() const { return bucket_mean(single_source_); }

std::optional<double> EvalReport::msi(int count) const {
    auto it = improvement_.find(count);
    if (it == improvement_.end()) return std::nullopt;
    return bucket_mean(it->second);
}

std::optional<double> EvalReport::msi_pooled() const {
    Bucket pooled;
    for (const auto& [count, b] : improvement_) {
        if (count < 2 || count > 4) continue;
        pooled.pair_sum += b.pair_sum;
        pooled.pair_count += b.pair_count;
        pooled.example_mean_sum += b.example_mean_sum;
        pooled.example_count += b.example_count;
    }
    return bucket_mean(pooled);
}

CountingRates EvalReport::counting_rates() const {
    long long lower = 0, diag = 0, upper = 0;
    for (std::size_t r = 0; r < confusion_.size(); ++r) {
        for (std::size_t e = 0; e < confusion_[r].size(); ++e) {
            (e < r ? lower : e == r ? diag : upper) += confusion_[r][e];
        }
    }
    const double total = static_cast<double>(lower + diag + upper);
    if (total == 0.0) return {};
    return {lower / total, diag / total, upper / total};
}

std::map<int, DistributionSummary> EvalReport::input_si_snr_distribution() const {
    std::map<int, DistributionSummary> out;
    for (const auto& [count, values] : input_values_) {
        if (values.empty()) continue;
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        DistributionSummary s;
        s.count = sorted.size();
        const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
        double var = 0.0;
        for (double v : sorted) var += (v - mean) * (v - mean);
        s.mean = mean;
        s.stddev = std::sqrt(var / static_cast<double>(s.count));
        s.min = sorted.front();
        s.q1 = quantile(sorted, 0.25);
        s.median = quantile(sorted, 0.5);
        s.q3 = quantile(sorted, 0.75);
        s.max = sorted.back();
        out[count] = s;
    }
    return out;
}

std::string EvalReport::table() const {
    auto cell = [](std::optional<double> v) {
        char buf[32];
        if (!v) return std::string("     -");
        std::snprintf(buf, sizeof buf, "%6.1f", std::clamp(*v, -80.0, 80.0));
        return std::string(buf);
    };
    const CountingRates rates = counting_rates();
    char tail[64];
    std::snprintf(tail, sizeof tail, "  %5.2f  %5.2f  %5.2f", rates.under, rates.equal, rates.over);
    std::string out = "    1S   MSi2   MSi3   MSi4 MSi2-4  Under  Equal   Over\n";
    out += cell(single_source_si_snr()) + " " + cell(msi(2)) + " " + cell(msi(3)) + " " + cell(msi(4)) + " " +
           cell(msi_pooled()) + tail + "\n";
    return out;
}

EvalReport aggregate_report(std::span<const ExampleEval> examples, MsiAveraging averaging) {
    if (examples.empty()) throw Error(Errc::empty_input, "aggregate_report needs at least one example");
    EvalReport report(averaging);
    for (const auto& e : examples) report.add(e);
    return report;
}

// ---------------------------------------------------------------------------
// Oracle masking

std::vector<AudioBuffer> oracle_mask_separate(const AudioBuffer& mixture, std::span<const AudioBuffer> references,
                                              const StftConfig& stft_config, OracleMask mask) {
    if (references.empty()) throw Error(Errc::empty_input, "oracle_mask_separate needs references");
    for (const auto& r : references) {
        require_same_length(r.size(), mixture.size(), "oracle_mask_separate");
        if (r.sample_rate() != mixture.sample_rate()) {
            throw Error(Errc::sample_rate_mismatch, "oracle_mask_separate: sample rates differ");
        }
    }
    constexpr double kFloor = 1e-8;
    const Spectrogram mix = stft(mixture, stft_config);
    std::vector<std::vector<double>> mags;
    for (const auto& r : references) {
        const Spectrogram s = stft(r, stft_config);
        std::vector<double> m(s.frames.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(s.frames[i]);
        mags.push_back(std::move(m));
    }

    const std::size_t cells = mix.frames.size();
    std::vector<AudioBuffer> initial;
    for (std::size_t k = 0; k < references.size(); ++k) {
        Spectrogram masked = mix;
        for (std::size_t i = 0; i < cells; ++i) {
            double gain;
            if (mask == OracleMask::ideal_ratio) {
                double total = 0.0;
                for (const auto& m : mags) total += m[i];
                gain = mags[k][i] / (total + kFloor);
            } else {
                std::size_t winner = 0;
                for (std::size_t j = 1; j < mags.size(); ++j) {
                    if (mags[j][i] > mags[winner][i]) winner = j;
                }
                gain = winner == k ? 1.0 : 0.0;
            }
            masked.frames[i] *= gain;
        }
        initial.push_back(istft(masked));
    }
    return mixture_consistency(std::span<const AudioBuffer>(initial), mixture);
}

}  // namespace fuss
