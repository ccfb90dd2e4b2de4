#include "chbell/quantum_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace chbell {

EntangledState::EntangledState(double r) : r_(r) {
    if (!(r >= 0.0 && r <= 1.0))
        throw std::invalid_argument("maximality r must lie in [0, 1], got " + std::to_string(r));
}

double AngleSet::alpha(Setting s) const {
    return (s == Setting::a1b1 || s == Setting::a1b2) ? a1 : a2;
}

double AngleSet::beta(Setting s) const {
    return (s == Setting::a1b1 || s == Setting::a2b1) ? b1 : b2;
}

double canonical_angle(double theta) {
    double t = std::fmod(theta, std::numbers::pi);
    if (t < 0.0)
        t += std::numbers::pi;
    // fmod of a value just below a multiple of pi can round up to pi
    if (t >= std::numbers::pi)
        t = 0.0;
    return t;
}

AngleSet AngleSet::canonical() const {
    return {canonical_angle(a1), canonical_angle(a2), canonical_angle(b1), canonical_angle(b2)};
}

bool AngleSet::finite() const {
    return std::isfinite(a1) && std::isfinite(a2) && std::isfinite(b1) && std::isfinite(b2);
}

void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
}

double single_transmission(const EntangledState& state, double theta) {
    const double r = state.r();
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return (c * c + r * r * s * s) / (1.0 + r * r);
}

JointProbabilities joint_detection_probabilities(const EntangledState& state, double alpha, double beta) {
    const double r = state.r();
    const double norm = 1.0 + r * r;
    const double amp = std::cos(alpha) * std::cos(beta) + r * std::sin(alpha) * std::sin(beta);

    JointProbabilities p;
    p.p_cc = amp * amp / norm;
    p.p_cn = std::max(0.0, single_transmission(state, alpha) - p.p_cc);
    p.p_nc = std::max(0.0, single_transmission(state, beta) - p.p_cc);
    p.p_nn = std::max(0.0, 1.0 - p.p_cc - p.p_cn - p.p_nc);
    return p;
}

OutcomeDistribution outcome_distribution(const JointProbabilities& probs, double efficiency, double noise) {
    const double e = efficiency;
    const double m = 1.0 - efficiency;
    // Ideal outcome after independent per-photon losses, indexed [a][b].
    double lossy[2][2];
    lossy[1][1] = probs.p_cc * e * e;
    lossy[1][0] = probs.p_cc * e * m + probs.p_cn * e;
    lossy[0][1] = probs.p_cc * m * e + probs.p_nc * e;
    lossy[0][0] = probs.p_nn + probs.p_cc * m * m + probs.p_cn * m + probs.p_nc * m;

    const double extra[2] = {1.0 - noise, noise};
    OutcomeDistribution out{};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int na = 0; na < 2; ++na)
                for (int nb = 0; nb < 2; ++nb)
                    out[a + na][b + nb] += lossy[a][b] * extra[na] * extra[nb];
    return out;
}

TrialOutcome sample_trial(const JointProbabilities& probs, double efficiency, double noise, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double u = unit(rng);
    bool a = false;
    bool b = false;
    if (u < probs.p_cc) {
        a = b = true;
    } else if (u < probs.p_cc + probs.p_cn) {
        a = true;
    } else if (u < probs.p_cc + probs.p_cn + probs.p_nc) {
        b = true;
    }

    TrialOutcome out;
    if (a && unit(rng) < efficiency)
        ++out.detect_a;
    if (b && unit(rng) < efficiency)
        ++out.detect_b;
    if (noise > 0.0) {
        if (unit(rng) < noise)
            ++out.detect_a;
        if (unit(rng) < noise)
            ++out.detect_b;
    }
    return out;
}

} // namespace chbell
