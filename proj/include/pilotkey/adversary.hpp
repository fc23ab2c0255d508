#pragma once

// A Bohmian eavesdropper who knows both hidden entrance positions of every
// pair and the whole public transcript, but not Bob's s unless his random
// number generator is assumed broken.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "pilotkey/protocol.hpp"

namespace pilotkey {

struct EveKnowledge {
    InitialPositions positions;
    Alignment delta = Alignment::aligned;  // public after step 5
    bool announced_for_test = false;
    std::optional<Sign> s;  // present only if Eve has Bob's s
};

/// Eve's view of one round. s is included for test rounds (it is proclaimed)
/// and, when knows_s is set, for every round.
EveKnowledge eve_view(const ProtocolRound& round, bool knows_s);

enum class EveStrategy {
    position_z20,   // -sgn(z20), the sign law with s assumed +1
    position_both,  // sgn(z10 - K z20), the branch law with s assumed +1
};

/// Baseline protocol: s is +1 and public, so W_A = -sgn(z20) exactly.
std::uint8_t eve_guess_baseline(const EveKnowledge& knowledge);

/// s-flip protocol: uses s when known, otherwise a deterministic function of
/// the positions chosen by `strategy`.
std::uint8_t eve_guess_protocol(const EveKnowledge& knowledge, EveStrategy strategy = EveStrategy::position_z20,
                                double K = 2.0);

struct AttackReport {
    ProtocolVariant variant = ProtocolVariant::s_flip;
    bool knows_s = false;
    std::size_t n_key_bits = 0;
    std::size_t n_correct = 0;
    double eve_accuracy = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double confidence = 0.95;
};

constexpr std::size_t kMinAttackKeyBits = 100;

/// Clopper-Pearson interval for k successes in n trials.
std::pair<double, double> binomial_interval(std::size_t k, std::size_t n, double confidence = 0.95);

/// Eve's per-bit accuracy against Alice's key. Throws AbortedSession or
/// InsufficientKey (fewer than 100 key bits).
AttackReport attack_report(const SessionTranscript& session, ProtocolVariant variant, const PhysParams& p,
                           bool knows_s = false, EveStrategy strategy = EveStrategy::position_z20);

struct AttackConfig {
    ProtocolVariant variant = ProtocolVariant::s_flip;
    std::size_t pairs = 10000;
    std::uint64_t seed = 1;
    bool knows_s = false;
    OutcomeMode mode = OutcomeMode::sign_law;
    EveStrategy strategy = EveStrategy::position_z20;
    SiftOptions sift;
};

AttackReport run_attack(const PhysParams& p, const AttackConfig& config);

}  // namespace pilotkey
