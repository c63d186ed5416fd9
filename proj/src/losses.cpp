#include "fusskit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <string>

namespace fuss {
namespace {

const double kDbPerLn = 10.0 / std::numbers::ln10;

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(Errc::length_mismatch, std::string(what) + ": lengths " + std::to_string(a) + " and " +
                                               std::to_string(b) + " differ");
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<std::vector<double>> mixture_consistency(std::span<const std::vector<double>> initial_sources,
                                                     std::span<const double> mixture) {
    if (initial_sources.empty()) throw Error(Errc::empty_input, "mixture_consistency needs at least one source");
    const std::size_t n = mixture.size();
    for (const auto& s : initial_sources) require_same_length(s.size(), n, "mixture_consistency");

    const double inv_m = 1.0 / static_cast<double>(initial_sources.size());
    std::vector<double> residual(mixture.begin(), mixture.end());
    for (const auto& s : initial_sources) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= s[i];
    }
    std::vector<std::vector<double>> out(initial_sources.begin(), initial_sources.end());
    for (auto& s : out) {
        for (std::size_t i = 0; i < n; ++i) s[i] += residual[i] * inv_m;
    }
    return out;
}

std::vector<AudioBuffer> mixture_consistency(std::span<const AudioBuffer> initial_sources,
                                             const AudioBuffer& mixture) {
    std::vector<std::vector<double>> raw;
    raw.reserve(initial_sources.size());
    for (const auto& s : initial_sources) {
        if (s.sample_rate() != mixture.sample_rate()) {
            throw Error(Errc::sample_rate_mismatch, "mixture_consistency: sample rates differ");
        }
        raw.push_back(s.data());
    }
    auto projected = mixture_consistency(std::span<const std::vector<double>>(raw), mixture.samples());
    std::vector<AudioBuffer> out;
    out.reserve(projected.size());
    for (auto& s : projected) out.emplace_back(std::move(s), mixture.sample_rate());
    return out;
}

double loss_snr(std::span<const double> reference, std::span<const double> estimate, double tau) {
    require_same_length(reference.size(), estimate.size(), "loss_snr");
    return 10.0 * std::log10(squared_distance(reference, estimate) + tau * sum_squares(reference));
}

double loss_inactive(std::span<const double> mixture, std::span<const double> estimate, double tau) {
    require_same_length(mixture.size(), estimate.size(), "loss_inactive");
    return 10.0 * std::log10(sum_squares(estimate) + tau * sum_squares(mixture));
}

std::vector<double> loss_snr_gradient(std::span<const double> reference, std::span<const double> estimate,
                                      double tau) {
    require_same_length(reference.size(), estimate.size(), "loss_snr_gradient");
    const double denom = squared_distance(reference, estimate) + tau * sum_squares(reference);
    std::vector<double> g(estimate.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * kDbPerLn * (estimate[i] - reference[i]) / denom;
    return g;
}

std::vector<double> loss_inactive_gradient(std::span<const double> mixture, std::span<const double> estimate,
                                           double tau) {
    require_same_length(mixture.size(), estimate.size(), "loss_inactive_gradient");
    const double denom = sum_squares(estimate) + tau * sum_squares(mixture);
    std::vector<double> g(estimate.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * kDbPerLn * estimate[i] / denom;
    return g;
}

PitLossResult pit_loss(std::span<const AudioBuffer> references, std::span<const AudioBuffer> estimates,
                       const AudioBuffer& mixture, const LossConfig& config) {
    const int m = static_cast<int>(estimates.size());
    const int m_active = static_cast<int>(references.size());
    if (m_active < 1) throw Error(Errc::invalid_argument, "pit_loss needs at least one active reference");
    if (m_active > m) {
        throw Error(Errc::invalid_argument, "pit_loss: " + std::to_string(m_active) + " references but only " +
                                                std::to_string(m) + " estimates");
    }
    if (m > kMaxPitOutputs) {
        throw Error(Errc::invalid_argument, "pit_loss: exhaustive search is limited to " +
                                                std::to_string(kMaxPitOutputs) + " outputs");
    }
    if (config.num_outputs > 0 && config.num_outputs != m) {
        throw Error(Errc::invalid_argument, "pit_loss: expected " + std::to_string(config.num_outputs) +
                                                " estimates, got " + std::to_string(m));
    }
    const std::size_t n = mixture.size();
    for (const auto& r : references) {
        require_same_length(r.size(), n, "pit_loss");
        if (r.is_silent()) {
            throw Error(Errc::invalid_argument, "pit_loss: all-zero reference in the active set");
        }
    }
    for (const auto& e : estimates) require_same_length(e.size(), n, "pit_loss");

    // Pairwise table: cost[e][slot]. Slots >= m_active score against silence.
    const double tau = config.tau();
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m)));
    for (int e = 0; e < m; ++e) {
        const double inactive = loss_inactive(mixture, estimates[e], tau);
        for (int s = 0; s < m; ++s) {
            cost[e][s] = s < m_active ? loss_snr(references[s], estimates[e], tau) : inactive;
        }
    }

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int e = 0; e < m; ++e) total += cost[e][perm[e]];
        if (total < best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    PitLossResult result;
    result.num_active = m_active;
    result.best_permutation = best;
    double total = 0.0;
    for (int e = 0; e < m; ++e) {
        const int slot = best[e];
        const PairLoss pair{e, slot, slot < m_active ? SlotKind::active : SlotKind::inactive, cost[e][slot]};
        total += pair.value;
        result.per_pair_losses.push_back(pair);
    }
    result.total_loss = config.reduction == LossReduction::mean ? total / m : total;
    return result;
}

std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> point, double step) {
    if (!(step > 0.0)) throw Error(Errc::invalid_argument, "finite difference step must be positive");
    std::vector<double> p(point.begin(), point.end());
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + step;
        const double up = f(p);
        p[i] = saved - step;
        const double down = f(p);
        p[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw Error(Errc::non_finite, "finite_difference_grad: non-finite function value at coordinate " +
                                              std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace fuss
