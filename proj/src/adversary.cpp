#include "pilotkey/adversary.hpp"

#include <boost/math/special_functions/beta.hpp>

#include "pilotkey/errors.hpp"

namespace pilotkey {

EveKnowledge eve_view(const ProtocolRound& round, bool knows_s) {
    EveKnowledge k;
    k.positions = round.initial;
    k.delta = round.settings.delta;
    k.announced_for_test = round.announced_for_test;
    if (knows_s || round.announced_for_test) k.s = round.settings.s;
    return k;
}

std::uint8_t eve_guess_baseline(const EveKnowledge& knowledge) {
    return key_bit(-sign_of(knowledge.positions.z20));
}

std::uint8_t eve_guess_protocol(const EveKnowledge& knowledge, EveStrategy strategy, double K) {
    const auto& x = knowledge.positions;
    if (knowledge.s) return key_bit(-(sign_of(x.z20) * *knowledge.s));
    if (strategy == EveStrategy::position_both) return key_bit(sign_of(x.z10 - K * x.z20));
    return key_bit(-sign_of(x.z20));
}

std::pair<double, double> binomial_interval(std::size_t k, std::size_t n, double confidence) {
    if (n == 0 || k > n) throw std::invalid_argument("binomial_interval needs 0 <= k <= n, n > 0");
    const double alpha = 1.0 - confidence;
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    const double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, alpha / 2.0);
    const double hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - alpha / 2.0);
    return {lo, hi};
}

AttackReport attack_report(const SessionTranscript& session, ProtocolVariant variant, const PhysParams& p,
                           bool knows_s, EveStrategy strategy) {
    const auto [alice, bob] = extract_key(session);
    (void)bob;
    AttackReport rep;
    rep.variant = variant;
    rep.knows_s = knows_s;
    std::size_t bit = 0;
    for (const auto& r : session.rounds) {
        if (!r.key_candidate()) continue;
        const auto view = eve_view(r, knows_s);
        const std::uint8_t guess =
            variant == ProtocolVariant::baseline ? eve_guess_baseline(view) : eve_guess_protocol(view, strategy, p.K);
        if (guess == alice[bit]) ++rep.n_correct;
        ++bit;
    }
    rep.n_key_bits = bit;
    if (rep.n_key_bits < kMinAttackKeyBits) {
        throw InsufficientKey("attack report needs at least " + std::to_string(kMinAttackKeyBits) + " key bits, got " +
                              std::to_string(rep.n_key_bits));
    }
    rep.eve_accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_key_bits);
    std::tie(rep.ci_low, rep.ci_high) = binomial_interval(rep.n_correct, rep.n_key_bits, rep.confidence);
    return rep;
}

AttackReport run_attack(const PhysParams& p, const AttackConfig& config) {
    SessionConfig sc;
    sc.pairs = config.pairs;
    sc.seed = config.seed;
    sc.round.mode = config.mode;
    sc.round.variant = config.variant;
    sc.sift = config.sift;
    const auto session = run_session(p, sc);
    return attack_report(session, config.variant, p, config.knows_s, config.strategy);
}

}  // namespace pilotkey
