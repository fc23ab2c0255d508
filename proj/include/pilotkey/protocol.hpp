#pragma once

// The s-flip key-distribution protocol: pair generation, Bob's random
// choices of s and delta, the entrance-slit filter, public announcements,
// the anticorrelation and Bell checks, and sifted-key extraction.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilotkey/physics.hpp"
#include "pilotkey/trajectories.hpp"

namespace pilotkey {

enum class OutcomeMode { full_ode, sign_law, quantum_oracle };
enum class ProtocolVariant { s_flip, baseline };
enum class AbortReason { none, anticorrelation_violation, bell_violation };

std::string to_string(OutcomeMode m);
std::string to_string(ProtocolVariant v);
std::string to_string(AbortReason r);
OutcomeMode parse_outcome_mode(const std::string& text);
ProtocolVariant parse_variant(const std::string& text);

/// Analyser angles for the CHSH combination
/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b'), with E computed from Bob's
/// s-corrected outcomes. The default set is spaced by pi/4 and oriented so the
/// singlet gives S = +2 sqrt 2.
struct AngleSet {
    double a = 0.0;
    double a_prime = 1.5707963267948966;
    double b = -2.356194490192345;
    double b_prime = -0.7853981633974483;

    double alice(int setting) const { return setting == 0 ? a : a_prime; }
    double bob(int setting) const { return setting == 0 ? b : b_prime; }
};

/// Singlet correlation of spin outcomes, -cos(theta_a - theta_b).
double singlet_correlation(double theta_a, double theta_b);

/// One Bell-test record: setting indices into an AngleSet, both recorded
/// sides, and Bob's s for the round.
struct BellSample {
    int alice_setting = 0;
    int bob_setting = 0;
    Sign W_A = Sign::plus;
    Sign W_B = Sign::plus;
    Sign s = Sign::plus;
};

struct ChshEstimate {
    double S = 0.0;
    double std_error = 0.0;
    std::array<std::array<double, 2>, 2> correlation{};
    std::array<std::array<std::size_t, 2>, 2> counts{};
    AngleSet angles;
};

constexpr std::size_t kMinRoundsPerTerm = 100;

/// CHSH value from s-corrected products W_A * W_B * s. Throws
/// InsufficientStatistics if any of the four terms has fewer than
/// min_per_term samples.
ChshEstimate chsh_estimate(std::span<const BellSample> samples, const AngleSet& angles = {},
                           std::size_t min_per_term = kMinRoundsPerTerm);

struct RoundOptions {
    OutcomeMode mode = OutcomeMode::sign_law;
    ProtocolVariant variant = ProtocolVariant::s_flip;
    /// Probability that Eve intercepts the pair in transit and resends a
    /// product state polarised along z.
    double intercept_fraction = 0.0;
    /// Integration horizon for full_ode; 0 selects default_t_end.
    double t_end = 0.0;
    double dt = kDefaultDt;
    /// Seed for Bob's stream; defaults to the master seed.
    std::optional<std::uint64_t> bob_seed;
};

struct ProtocolRound {
    std::uint64_t index = 0;
    InitialPositions initial;  // hidden variables, never announced
    RoundSettings settings;
    bool lost = false;          // a particle missed its entrance slit
    bool filtered_out = false;  // Bob's near-centre rejection
    bool intercepted = false;
    std::optional<Sign> eve_resent;  // spin Eve resent to Alice
    std::optional<Outcome> outcome;
    bool announced_for_test = false;
    std::optional<Sign> announced_WB;
    std::optional<Sign> announced_s;
    std::optional<Sign> announced_WA;
    std::optional<BellSample> bell;

    bool usable() const { return !lost && !filtered_out; }
    bool key_candidate() const {
        return usable() && settings.delta == Alignment::aligned && !announced_for_test;
    }
};

/// Steps 1-4 for one pair. Randomness comes from per-round streams keyed by
/// (master_seed, index). Propagates IntegrationError and AmbiguousOutcome in
/// full_ode mode.
ProtocolRound run_round(std::uint64_t index, const PhysParams& p, std::uint64_t master_seed,
                        const RoundOptions& options = {});

std::vector<ProtocolRound> run_rounds(std::size_t n_pairs, const PhysParams& p, std::uint64_t master_seed,
                                      const RoundOptions& options = {});

/// Bell-test record for a test round, drawn by the Born-statistics oracle at
/// a uniformly chosen CHSH setting pair.
BellSample bell_sample(const ProtocolRound& round, const AngleSet& angles, std::uint64_t master_seed);

using KeyBits = std::vector<std::uint8_t>;

struct SessionTranscript {
    std::vector<ProtocolRound> rounds;
    KeyBits alice_key;
    KeyBits bob_key;
    bool aborted = false;
    AbortReason abort_reason = AbortReason::none;
    std::map<int, ChshEstimate> chsh;  // keyed by to_int(s)
};

struct SiftOptions {
    double test_fraction = 0.5;
    double bell_tolerance = 0.2;
    AngleSet angles;
    std::uint64_t seed = 0;
    std::size_t min_per_term = kMinRoundsPerTerm;
};

/// Step 6 announcements: Bob picks round(test_fraction * usable) usable
/// rounds and proclaims W_B and s; Alice answers with W_A.
void announce_test_subset(std::vector<ProtocolRound>& rounds, const SiftOptions& options);

/// Step 6 checks and step 7 key extraction on already-announced rounds.
/// Throws InsufficientRounds when no key bits would survive.
SessionTranscript verify_and_extract(std::vector<ProtocolRound> rounds, const SiftOptions& options);

/// announce_test_subset followed by verify_and_extract.
SessionTranscript sift_and_verify(std::vector<ProtocolRound> rounds, const SiftOptions& options);

/// Key bits: Alice maps W_A, Bob maps -W_B s, with +1 -> 1 and -1 -> 0.
/// Throws AbortedSession.
std::pair<KeyBits, KeyBits> extract_key(const SessionTranscript& transcript);

std::uint8_t key_bit(Sign side);

/// Flips Alice's recorded side in the first aligned test round, so that
/// W_B = +W_A s there. Returns the index of the tampered round. Throws
/// InsufficientRounds if no aligned test round exists.
std::uint64_t inject_anticorrelation_violation(std::vector<ProtocolRound>& rounds);

struct SessionConfig {
    std::size_t pairs = 10000;
    std::uint64_t seed = 1;
    RoundOptions round;
    SiftOptions sift;
    bool inject_violation = false;
};

SessionTranscript run_session(const PhysParams& p, const SessionConfig& config);

/// 2 Phi(d / (2 K sigma0)) - 1, the probability that Bob's filter rejects a pair.
double expected_filter_rate(const PhysParams& p);

}  // namespace pilotkey
