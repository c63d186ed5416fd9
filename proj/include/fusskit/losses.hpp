#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fusskit/audio.hpp"

namespace fuss {

// Separation-model training objectives for a variable number of sources.
//
// A model emits M output waveforms for a mixture that contains M_a <= M
// active references. Outputs are assigned to slots by an exhaustive
// permutation search: the first M_a slots are scored against the active
// references with a thresholded negative SNR, the remaining slots are
// pushed towards silence relative to the mixture level. All arithmetic is
// double precision.

inline constexpr int kMaxPitOutputs = 6;

enum class LossReduction { sum, mean };

struct LossConfig {
    double snr_max = 30.0;  // dB
    int num_outputs = 4;
    LossReduction reduction = LossReduction::sum;

    // Soft threshold derived from the SNR cap: 10^(-snr_max / 10).
    double tau() const { return std::pow(10.0, -snr_max / 10.0); }
};

// Projects initial estimates so they sum to the mixture, spreading the
// residual equally: out_m = in_m + (x - sum_m' in_m') / M.
std::vector<AudioBuffer> mixture_consistency(std::span<const AudioBuffer> initial_sources,
                                             const AudioBuffer& mixture);
std::vector<std::vector<double>> mixture_consistency(std::span<const std::vector<double>> initial_sources,
                                                     std::span<const double> mixture);

// 10*log10(||y - est||^2 + tau*||y||^2)
double loss_snr(std::span<const double> reference, std::span<const double> estimate, double tau);
// 10*log10(||est||^2 + tau*||x||^2)
double loss_inactive(std::span<const double> mixture, std::span<const double> estimate, double tau);

inline double loss_snr(const AudioBuffer& y, const AudioBuffer& est, double tau) {
    return loss_snr(y.samples(), est.samples(), tau);
}
inline double loss_inactive(const AudioBuffer& x, const AudioBuffer& est, double tau) {
    return loss_inactive(x.samples(), est.samples(), tau);
}

// Closed-form gradients with respect to the estimate.
std::vector<double> loss_snr_gradient(std::span<const double> reference, std::span<const double> estimate,
                                      double tau);
std::vector<double> loss_inactive_gradient(std::span<const double> mixture, std::span<const double> estimate,
                                           double tau);

enum class SlotKind { active, inactive };

struct PairLoss {
    int estimate = 0;
    int slot = 0;
    SlotKind kind = SlotKind::active;
    double value = 0.0;
};

struct PitLossResult {
    double total_loss = 0.0;
    // best_permutation[e] is the slot assigned to estimate e. Slots below the
    // active count pair with references of the same index.
    std::vector<int> best_permutation;
    std::vector<PairLoss> per_pair_losses;  // ordered by estimate index
    int num_active = 0;
};

// Exhaustive search over all M! assignments; ties resolve to the
// lexicographically smallest best_permutation. The estimate count sets M.
PitLossResult pit_loss(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                       const AudioBuffer& mixture, const LossConfig& config = {});

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> point,
                                           double step = 1e-6);

}  // namespace fuss
