#include "pilotkey/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pilotkey/errors.hpp"
#include "pilotkey/rng.hpp"

namespace pilotkey {

namespace {

const double kTsirelson = 2.0 * std::numbers::sqrt2;

// Born rule for a spin polarised along +-z (polarisation m) measured along
// an axis at angle theta from z.
Sign measure_polarised(Sign m, double theta, Rng& rng) {
    return biased_sign(rng, 0.5 * (1.0 + to_double(m) * std::cos(theta)));
}

Outcome oracle_outcome(const ProtocolRound& r, Rng& oracle) {
    const Sign s = r.settings.s;
    if (r.intercepted) {
        // Product state: Alice holds spin m, Bob spin -m, both along z. Alice
        // records her spin; Bob records s times his.
        const Sign m = *r.eve_resent;
        const double theta_b = alignment_angle(r.settings.delta);
        return {m, s * measure_polarised(-m, theta_b, oracle)};
    }
    if (r.settings.delta == Alignment::orthogonal) {
        return {fair_sign(oracle), fair_sign(oracle)};
    }
    const Sign wb = fair_sign(oracle);
    return {-(s * wb), wb};
}

}  // namespace

std::string to_string(OutcomeMode m) {
    switch (m) {
        case OutcomeMode::full_ode: return "full_ode";
        case OutcomeMode::sign_law: return "sign_law";
        case OutcomeMode::quantum_oracle: return "quantum_oracle";
    }
    return "?";
}

std::string to_string(ProtocolVariant v) {
    return v == ProtocolVariant::baseline ? "baseline" : "s_flip";
}

std::string to_string(AbortReason r) {
    switch (r) {
        case AbortReason::none: return "none";
        case AbortReason::anticorrelation_violation: return "anticorrelation_violation";
        case AbortReason::bell_violation: return "bell_violation";
    }
    return "?";
}

OutcomeMode parse_outcome_mode(const std::string& text) {
    if (text == "full_ode") return OutcomeMode::full_ode;
    if (text == "sign_law") return OutcomeMode::sign_law;
    if (text == "quantum_oracle") return OutcomeMode::quantum_oracle;
    throw std::invalid_argument("unknown outcome mode: " + text);
}

ProtocolVariant parse_variant(const std::string& text) {
    if (text == "s_flip") return ProtocolVariant::s_flip;
    if (text == "baseline") return ProtocolVariant::baseline;
    throw std::invalid_argument("unknown protocol variant: " + text);
}

double singlet_correlation(double theta_a, double theta_b) {
    return -std::cos(theta_a - theta_b);
}

ChshEstimate chsh_estimate(std::span<const BellSample> samples, const AngleSet& angles, std::size_t min_per_term) {
    ChshEstimate est;
    est.angles = angles;
    std::array<std::array<double, 2>, 2> sums{};
    for (const auto& b : samples) {
        if (b.alice_setting < 0 || b.alice_setting > 1 || b.bob_setting < 0 || b.bob_setting > 1) {
            throw std::invalid_argument("Bell setting index out of range");
        }
        sums[b.alice_setting][b.bob_setting] += to_double(b.W_A * b.W_B * b.s);
        ++est.counts[b.alice_setting][b.bob_setting];
    }
    double var = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int k = 0; k < 2; ++k) {
            const auto n = est.counts[i][k];
            if (n < min_per_term) {
                throw InsufficientStatistics("CHSH term (" + std::to_string(i) + "," + std::to_string(k) + ") has " +
                                             std::to_string(n) + " samples, need " + std::to_string(min_per_term));
            }
            const double e = sums[i][k] / static_cast<double>(n);
            est.correlation[i][k] = e;
            var += (1.0 - e * e) / static_cast<double>(n);
        }
    }
    const auto& E = est.correlation;
    est.S = E[0][0] - E[0][1] + E[1][0] + E[1][1];
    est.std_error = std::sqrt(var);
    return est;
}

ProtocolRound run_round(std::uint64_t index, const PhysParams& p, std::uint64_t master_seed,
                        const RoundOptions& options) {
    p.validate();
    if (!(options.intercept_fraction >= 0.0 && options.intercept_fraction <= 1.0)) {
        throw std::invalid_argument("intercept_fraction must lie in [0, 1]");
    }

    ProtocolRound r;
    r.index = index;

    auto source = make_stream(master_seed, index, Stream::source);
    r.initial = sample_initial(p.sigma0, source);

    auto bob = make_stream(options.bob_seed.value_or(master_seed), index, Stream::bob);
    const Sign s_draw = fair_sign(bob);
    r.settings.s = options.variant == ProtocolVariant::baseline ? Sign::plus : s_draw;
    r.settings.delta = fair_sign(bob) == Sign::plus ? Alignment::aligned : Alignment::orthogonal;

    auto channel = make_stream(master_seed, index, Stream::channel);
    r.intercepted = unit_uniform(channel) < options.intercept_fraction;
    if (r.intercepted) r.eve_resent = fair_sign(channel);

    r.lost = !passes_slits(r.initial, p);
    r.filtered_out = rejected_by_filter(r.initial, p);
    if (!r.usable()) return r;

    auto oracle = make_stream(master_seed, index, Stream::oracle);
    const bool physical = r.settings.delta == Alignment::aligned && !r.intercepted;
    if (!physical || options.mode == OutcomeMode::quantum_oracle) {
        r.outcome = oracle_outcome(r, oracle);
    } else if (options.mode == OutcomeMode::sign_law) {
        r.outcome = outcome_predicted(r.initial, r.settings.s);
    } else {
        const double t_end = options.t_end > 0.0 ? options.t_end : default_t_end(p);
        r.outcome = outcome_measured(integrate(r.initial, r.settings, p, t_end, options.dt, 2));
    }
    return r;
}

std::vector<ProtocolRound> run_rounds(std::size_t n_pairs, const PhysParams& p, std::uint64_t master_seed,
                                      const RoundOptions& options) {
    std::vector<ProtocolRound> rounds;
    rounds.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) rounds.push_back(run_round(i, p, master_seed, options));
    return rounds;
}

BellSample bell_sample(const ProtocolRound& round, const AngleSet& angles, std::uint64_t master_seed) {
    auto rng = make_stream(master_seed, round.index, Stream::bell);
    BellSample b;
    b.alice_setting = fair_sign(rng) == Sign::plus ? 0 : 1;
    b.bob_setting = fair_sign(rng) == Sign::plus ? 0 : 1;
    b.s = round.settings.s;
    const double ta = angles.alice(b.alice_setting);
    const double tb = angles.bob(b.bob_setting);
    Sign spin_a;
    Sign spin_b;
    if (round.intercepted) {
        const Sign m = *round.eve_resent;
        spin_a = measure_polarised(m, ta, rng);
        spin_b = measure_polarised(-m, tb, rng);
    } else {
        spin_a = fair_sign(rng);
        // P(spin_b = spin_a) = (1 - cos(ta - tb)) / 2 for the singlet.
        spin_b = biased_sign(rng, 0.5 * (1.0 - std::cos(ta - tb))) == Sign::plus ? spin_a : -spin_a;
    }
    b.W_A = spin_a;
    b.W_B = b.s * spin_b;
    return b;
}

std::uint8_t key_bit(Sign side) { return side == Sign::plus ? 1 : 0; }

void announce_test_subset(std::vector<ProtocolRound>& rounds, const SiftOptions& options) {
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        if (rounds[i].usable()) usable.push_back(i);
    }
    auto rng = make_stream(options.seed, 0, Stream::sifting);
    std::shuffle(usable.begin(), usable.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(usable.size())));
    for (std::size_t k = 0; k < n_test; ++k) {
        auto& r = rounds[usable[k]];
        r.announced_for_test = true;
        r.announced_WB = r.outcome->W_B;
        r.announced_s = r.settings.s;
        r.announced_WA = r.outcome->W_A;
    }
}

std::pair<KeyBits, KeyBits> extract_key(const SessionTranscript& transcript) {
    if (transcript.aborted) throw AbortedSession("session aborted: " + to_string(transcript.abort_reason));
    KeyBits alice;
    KeyBits bob;
    for (const auto& r : transcript.rounds) {
        if (!r.key_candidate()) continue;
        alice.push_back(key_bit(r.outcome->W_A));
        bob.push_back(key_bit(-(r.outcome->W_B * r.settings.s)));
    }
    return {std::move(alice), std::move(bob)};
}

SessionTranscript verify_and_extract(std::vector<ProtocolRound> rounds, const SiftOptions& options) {
    SessionTranscript tr;
    tr.rounds = std::move(rounds);

    for (const auto& r : tr.rounds) {
        if (!r.announced_for_test || r.settings.delta != Alignment::aligned) continue;
        if (*r.announced_WB != -(*r.announced_WA * *r.announced_s)) {
            tr.aborted = true;
            tr.abort_reason = AbortReason::anticorrelation_violation;
            return tr;
        }
    }

    std::map<int, std::vector<BellSample>> by_s;
    for (auto& r : tr.rounds) {
        if (!r.announced_for_test) continue;
        r.bell = bell_sample(r, options.angles, options.seed);
        by_s[to_int(r.settings.s)].push_back(*r.bell);
    }
    for (const auto& [s, samples] : by_s) {
        tr.chsh[s] = chsh_estimate(samples, options.angles, options.min_per_term);
    }
    for (const auto& [s, est] : tr.chsh) {
        if (std::abs(est.S - kTsirelson) > options.bell_tolerance) {
            tr.aborted = true;
            tr.abort_reason = AbortReason::bell_violation;
            return tr;
        }
    }

    auto [alice, bob] = extract_key(tr);
    if (alice.empty()) throw InsufficientRounds("no rounds left for the key");
    tr.alice_key = std::move(alice);
    tr.bob_key = std::move(bob);
    return tr;
}

SessionTranscript sift_and_verify(std::vector<ProtocolRound> rounds, const SiftOptions& options) {
    announce_test_subset(rounds, options);
    return verify_and_extract(std::move(rounds), options);
}

std::uint64_t inject_anticorrelation_violation(std::vector<ProtocolRound>& rounds) {
    for (auto& r : rounds) {
        if (r.announced_for_test && r.settings.delta == Alignment::aligned) {
            r.outcome->W_A = -r.outcome->W_A;
            r.announced_WA = r.outcome->W_A;
            return r.index;
        }
    }
    throw InsufficientRounds("no aligned test round to tamper with");
}

SessionTranscript run_session(const PhysParams& p, const SessionConfig& config) {
    auto rounds = run_rounds(config.pairs, p, config.seed, config.round);
    SiftOptions sift = config.sift;
    sift.seed = config.seed;
    announce_test_subset(rounds, sift);
    if (config.inject_violation) inject_anticorrelation_violation(rounds);
    return verify_and_extract(std::move(rounds), sift);
}

double expected_filter_rate(const PhysParams& p) {
    return std::erf(p.d / (2.0 * p.K * p.sigma0 * std::numbers::sqrt2));
}

}  // namespace pilotkey
