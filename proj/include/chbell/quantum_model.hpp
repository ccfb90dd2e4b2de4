#pragma once

// Detection probabilities for a nonmaximally entangled photon pair
//   |psi> = (|H>_A |H>_B + r |V>_A |V>_B) / sqrt(1 + r^2)
// measured by single-channel linear analyzers: a photon is transmitted
// (and can be detected) when it passes the projector onto
//   |theta> = cos(theta) |H> + sin(theta) |V>.

#include <array>
#include <cstdint>

#include "chbell/rng.hpp"
#include "chbell/setting.hpp"

namespace chbell {

class EntangledState {
public:
    // Throws std::invalid_argument unless 0 <= r <= 1.
    explicit EntangledState(double r);

    double r() const { return r_; }

    static EntangledState maximal() { return EntangledState(1.0); }

private:
    double r_;
};

struct AngleSet {
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;

    double alpha(Setting s) const;
    double beta(Setting s) const;

    // Every angle folded into [0, pi). Analyzer settings are pi-periodic.
    AngleSet canonical() const;
    bool finite() const;

    friend bool operator==(const AngleSet&, const AngleSet&) = default;
};

double canonical_angle(double theta);

struct JointProbabilities {
    double p_cc = 0.0; // both sides transmit
    double p_cn = 0.0; // A only
    double p_nc = 0.0; // B only
    double p_nn = 1.0; // neither

    double p_a() const { return p_cc + p_cn; }
    double p_b() const { return p_cc + p_nc; }
};

// Transmission probability of one side's analyzer at angle theta.
double single_transmission(const EntangledState& state, double theta);

JointProbabilities joint_detection_probabilities(const EntangledState& state, double alpha, double beta);

struct TrialOutcome {
    std::uint8_t detect_a = 0;
    std::uint8_t detect_b = 0;

    friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

// Distribution of (detect_a, detect_b) in {0,1,2}^2 for one trial after
// per-photon efficiency losses and independent per-side noise detections.
// Indexed [detect_a][detect_b].
using OutcomeDistribution = std::array<std::array<double, 3>, 3>;

OutcomeDistribution outcome_distribution(const JointProbabilities& probs, double efficiency, double noise);

// One trial: a categorical draw from `probs`, each ideal detection survives
// with probability `efficiency`, then each side independently gains one
// extra detection with probability `noise`.
TrialOutcome sample_trial(const JointProbabilities& probs, double efficiency, double noise, Rng& rng);

// Throws std::invalid_argument unless p is in [0, 1].
void require_probability(double p, const char* what);

} // namespace chbell
