#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "geoqrypt/common.hpp"
#include "geoqrypt/rng.hpp"
#include "geoqrypt/statevector.hpp"

// Ping-pong direct communication over ideal entangled memory. A message bit
// is written on the sender half of a shared |psi+> pair (identity for 0,
// pauli_z for 1), the travel qubit is forwarded through a teleport pair, and
// the receiver reads the bit back with a Bell measurement: Psi+ decodes to 0,
// Psi- to 1, and either Phi outcome is impossible without interference.
//
// Control rounds police the channel: a round is turned into a control round
// with probability control_fraction, the travel qubit is forwarded as usual
// without encoding, and the receiver measures both halves in the Hadamard
// basis. An undisturbed |psi+> always gives equal outcomes there; a
// computational-basis intercept of the travel qubit leaves the two outcomes
// independent, so each attacked control round fails with probability 1/2.
namespace geoqrypt::qdc {

enum class AttackKind : std::uint8_t { None, InterceptResend };
enum class MeasureBasis : std::uint8_t { Computational, Hadamard };

struct AttackModel {
    AttackKind kind = AttackKind::None;
    MeasureBasis basis = MeasureBasis::Computational;

    static AttackModel none() { return {}; }
    static AttackModel intercept_resend(MeasureBasis b) {
        return {AttackKind::InterceptResend, b};
    }
};

// Entangled memory for one transfer. Qubit 0 of a message pair is the
// sender (travel) half, qubit 1 the receiver (home) half; teleport pairs use
// the same order. Control rounds consume a message pair without conveying a
// bit, so callers provision more pairs than message bits.
struct QdcResources {
    std::vector<quantum::PureState> message_pairs;
    std::vector<quantum::PureState> teleport_pairs;
    double control_fraction = 0.0;
};

inline void validate(const QdcResources& res) {
    if (res.message_pairs.empty())
        throw precondition_error("QdcResources: no message pairs");
    if (res.teleport_pairs.size() < res.message_pairs.size())
        throw precondition_error("QdcResources: fewer teleport pairs than message pairs");
    if (!(res.control_fraction >= 0.0 && res.control_fraction < 1.0))
        throw precondition_error("QdcResources: control_fraction outside [0, 1)");
    for (const auto& p : res.message_pairs)
        if (quantum::fidelity(p, quantum::make_bell_pair(quantum::BellKind::PsiPlus)) <
            1.0 - 1e-9)
            throw precondition_error("QdcResources: message pair is not |psi+>");
    for (const auto& p : res.teleport_pairs)
        if (quantum::fidelity(p, quantum::make_bell_pair(quantum::BellKind::PsiPlus)) <
            1.0 - 1e-9)
            throw precondition_error("QdcResources: teleport pair is not |psi+>");
}

inline QdcResources make_resources(std::size_t n_message, std::size_t n_teleport,
                                   double control_fraction) {
    QdcResources res;
    res.control_fraction = control_fraction;
    res.message_pairs.reserve(n_message);
    res.teleport_pairs.reserve(n_teleport);
    for (std::size_t i = 0; i < n_message; ++i)
        res.message_pairs.push_back(quantum::make_bell_pair(quantum::BellKind::PsiPlus));
    for (std::size_t i = 0; i < n_teleport; ++i)
        res.teleport_pairs.push_back(quantum::make_bell_pair(quantum::BellKind::PsiPlus));
    validate(res);
    return res;
}

// Writes one bit on the sender half: identity for 0, pauli_z for 1.
inline quantum::PureState encode_bit(int bit, const quantum::PureState& pair) {
    if (bit != 0 && bit != 1)
        throw precondition_error("encode_bit: bit must be 0 or 1");
    if (quantum::fidelity(pair, quantum::make_bell_pair(quantum::BellKind::PsiPlus)) <
        1.0 - 1e-9)
        throw precondition_error("encode_bit: pair is not |psi+>");
    return bit ? quantum::apply_gate(pair, quantum::pauli_z(), 0) : pair;
}

// Bell-measures a (travel, home) pair. Phi outcomes cannot occur when the
// encoded pair arrived untouched, so they surface as tampering.
inline int decode_bit(const quantum::PureState& joint, Rng& rng) {
    if (joint.n_qubits() != 2)
        throw precondition_error("decode_bit: need a two-qubit state");
    auto r = quantum::bell_measure(joint, 0, 1, rng);
    switch (r.outcome) {
        case quantum::BellKind::PsiPlus: return 0;
        case quantum::BellKind::PsiMinus: return 1;
        default: throw tamper_error("decode_bit: Phi outcome, channel disturbed");
    }
}

namespace detail {

struct ForwardResult {
    quantum::PureState pair; // (arrived travel, home), travel as qubit 0
    std::uint8_t correction_bits;
};

// Teleports the travel qubit of message_pair through teleport_pair and
// applies the attack, if any, to the arrived qubit. Register layout during
// the round: q0 travel, q1 home, q2 teleport sender half, q3 receiver half.
// The correction frame is the caller's claim about the teleport pair; a pair
// that does not match the frame corrupts the forwarded qubit instead of
// failing, which is exactly what a real endpoint would experience.
inline ForwardResult forward_travel_qubit(const quantum::PureState& message_pair,
                                          const quantum::PureState& teleport_pair,
                                          std::pair<int, int> teleport_frame,
                                          const AttackModel& attack, Rng& rng) {
    using namespace geoqrypt::quantum;
    auto [xr, zr] = teleport_frame;
    PureState reg = tensor(message_pair, teleport_pair);
    auto m = bell_measure(reg, 0, 2, rng);
    auto [xk, zk] = bell_pauli_bits(m.outcome);
    const int x = xk ^ xr, z = zk ^ zr;
    PureState post = m.post;
    if (x) post = apply_gate(post, pauli_x(), 3);
    if (z) post = apply_gate(post, pauli_z(), 3);
    if (attack.kind == AttackKind::InterceptResend) {
        post = attack.basis == MeasureBasis::Computational
                   ? measure_qubit(post, 3, rng).post
                   : measure_qubit_x(post, 3, rng).post;
    }
    return {extract_pair(post, 3, 1), static_cast<std::uint8_t>(x | (z << 1))};
}

inline ForwardResult forward_travel_qubit(const quantum::PureState& message_pair,
                                          const quantum::PureState& teleport_pair,
                                          const AttackModel& attack, Rng& rng) {
    return forward_travel_qubit(message_pair, teleport_pair,
                                quantum::bell_pauli_bits(quantum::identify_bell(teleport_pair)),
                                attack, rng);
}

} // namespace detail

struct RoundResult {
    std::optional<int> decoded;
    std::optional<bool> control_pass;
    std::uint8_t correction_bits;
};

inline RoundResult message_round(const quantum::PureState& message_pair,
                                 const quantum::PureState& teleport_pair, int bit,
                                 const AttackModel& attack, Rng& rng) {
    auto fwd = detail::forward_travel_qubit(encode_bit(bit, message_pair), teleport_pair,
                                            attack, rng);
    return {decode_bit(fwd.pair, rng), std::nullopt, fwd.correction_bits};
}

inline RoundResult control_round(const quantum::PureState& message_pair,
                                 const quantum::PureState& teleport_pair,
                                 const AttackModel& attack, Rng& rng) {
    using namespace geoqrypt::quantum;
    auto fwd = detail::forward_travel_qubit(message_pair, teleport_pair, attack, rng);
    auto travel = measure_qubit_x(fwd.pair, 0, rng);
    auto home = measure_qubit_x(travel.post, 1, rng);
    return {std::nullopt, travel.outcome == home.outcome, fwd.correction_bits};
}

// Memory-resident rounds that take the shared pairs on faith. A deployed
// endpoint cannot inspect its half without measuring it, so these skip all
// state validation and fix the correction frame to the agreed |psi+>;
// disturbed memory surfaces through Phi decode outcomes and failed control
// comparisons rather than as precondition failures.
inline RoundResult blind_message_round(const quantum::PureState& message_pair,
                                       const quantum::PureState& teleport_pair, int bit,
                                       Rng& rng) {
    using namespace geoqrypt::quantum;
    if (bit != 0 && bit != 1)
        throw precondition_error("blind_message_round: bit must be 0 or 1");
    const PureState encoded = bit ? apply_gate(message_pair, pauli_z(), 0) : message_pair;
    auto fwd = detail::forward_travel_qubit(encoded, teleport_pair,
                                            bell_pauli_bits(BellKind::PsiPlus),
                                            AttackModel::none(), rng);
    return {decode_bit(fwd.pair, rng), std::nullopt, fwd.correction_bits};
}

inline RoundResult blind_control_round(const quantum::PureState& message_pair,
                                       const quantum::PureState& teleport_pair, Rng& rng) {
    using namespace geoqrypt::quantum;
    auto fwd = detail::forward_travel_qubit(message_pair, teleport_pair,
                                            bell_pauli_bits(BellKind::PsiPlus),
                                            AttackModel::none(), rng);
    auto travel = measure_qubit_x(fwd.pair, 0, rng);
    auto home = measure_qubit_x(travel.post, 1, rng);
    return {std::nullopt, travel.outcome == home.outcome, fwd.correction_bits};
}

struct QdcTranscript {
    std::vector<int> sent_bits;
    std::vector<int> decoded_bits;
    std::vector<std::uint8_t> teleport_corrections; // one entry per round
    std::vector<bool> control_results;              // true = pass
    std::size_t message_pairs_used = 0;
    std::size_t teleport_pairs_used = 0;

    bool all_controls_passed() const {
        for (bool ok : control_results)
            if (!ok) return false;
        return true;
    }
};

inline QdcTranscript pingpong_send(const std::vector<int>& message, const QdcResources& res,
                                   const AttackModel& attack, Rng& rng) {
    validate(res);
    QdcTranscript t;
    t.sent_bits = message;
    std::size_t mi = 0, ti = 0, sent = 0;
    while (sent < message.size()) {
        if (mi >= res.message_pairs.size() || ti >= res.teleport_pairs.size())
            throw precondition_error("pingpong_send: entangled memory exhausted");
        const bool control = rng.bernoulli(res.control_fraction);
        const auto& mp = res.message_pairs[mi++];
        const auto& tp = res.teleport_pairs[ti++];
        RoundResult r = control ? control_round(mp, tp, attack, rng)
                                : message_round(mp, tp, message[sent], attack, rng);
        t.teleport_corrections.push_back(r.correction_bits);
        if (control) {
            t.control_results.push_back(*r.control_pass);
        } else {
            t.decoded_bits.push_back(*r.decoded);
            ++sent;
        }
    }
    t.message_pairs_used = mi;
    t.teleport_pairs_used = ti;
    return t;
}

} // namespace geoqrypt::qdc
