#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <utility>
#include <vector>

#include "geoqrypt/common.hpp"
#include "geoqrypt/localization.hpp"
#include "geoqrypt/qdc.hpp"
#include "geoqrypt/qlv.hpp"
#include "geoqrypt/rng.hpp"
#include "geoqrypt/statevector.hpp"

// End-to-end location-locked decryption session. The server provisions obfuscated
// entangled memory into the decryptor device, splits the decoding
// instructions across reference stations, and releases the message only when
// the time-lock has opened, the location verdict accepts, and every
// entanglement check matches the ledger. Slot roles live exclusively in the
// server ledger: every slot the device holds is half of the same shared pair
// under an independent Haar unitary, so the device-side view carries no
// information about which slots do what.
namespace geoqrypt::orch {

enum class SlotRole : std::uint8_t {
    QdcMessageHalf = 0,
    QdcTeleportHalf = 1,
    QlvToken = 2,
    Decoy = 3,
};

// What the device stores for one slot: the joint pair state with qubit 0
// retained server-side and qubit 1 (obfuscated) in device memory.
struct ViewSlot {
    std::uint32_t slot_id = 0;
    quantum::PureState state = quantum::make_bell_pair(quantum::BellKind::PsiPlus);
};

struct DecryptorView {
    std::vector<ViewSlot> slots;
};

struct LedgerSlot {
    std::uint32_t slot_id = 0;
    SlotRole role = SlotRole::Decoy;
    quantum::Unitary2 obfuscation = quantum::Unitary2::Identity();
};

struct ServerLedger {
    std::vector<LedgerSlot> slots;

    std::size_t count(SlotRole role) const {
        std::size_t n = 0;
        for (const auto& s : slots)
            if (s.role == role) ++n;
        return n;
    }
};

// Provisions n_message + n_teleport + n_qlv + n_decoy slots. States are drawn
// from one substream and role assignment is shuffled by another, so the
// device-side view depends only on the total count and the seed, never on
// the role split.
inline std::pair<DecryptorView, ServerLedger> provision(std::size_t n_message,
                                                        std::size_t n_teleport,
                                                        std::size_t n_qlv,
                                                        std::size_t n_decoy,
                                                        const Rng& rng) {
    const std::size_t total = n_message + n_teleport + n_qlv + n_decoy;
    std::vector<SlotRole> roles;
    roles.reserve(total);
    roles.insert(roles.end(), n_message, SlotRole::QdcMessageHalf);
    roles.insert(roles.end(), n_teleport, SlotRole::QdcTeleportHalf);
    roles.insert(roles.end(), n_qlv, SlotRole::QlvToken);
    roles.insert(roles.end(), n_decoy, SlotRole::Decoy);

    Rng shuffle_rng = rng.substream("provision-shuffle");
    for (std::size_t i = total; i > 1; --i)
        std::swap(roles[i - 1], roles[shuffle_rng.uniform_below(i)]);

    Rng state_rng = rng.substream("provision-states");
    DecryptorView view;
    ServerLedger ledger;
    view.slots.reserve(total);
    ledger.slots.reserve(total);
    const quantum::PureState shared = quantum::make_bell_pair(quantum::BellKind::PsiPlus);
    for (std::size_t k = 0; k < total; ++k) {
        const quantum::Unitary2 u = quantum::sample_haar_unitary(state_rng);
        const auto id = static_cast<std::uint32_t>(k);
        view.slots.push_back({id, quantum::apply_gate(shared, u, 1)});
        ledger.slots.push_back({id, roles[k], u});
    }
    return {std::move(view), std::move(ledger)};
}

namespace detail {

inline void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64_le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline std::uint32_t get_u32_le(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

inline double get_f64_le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace detail

// Canonical byte form of the device-side view: slot count, then per slot the
// id and the four pair amplitudes. This is the object whose bytes must be
// independent of the hidden role assignment.
inline std::vector<std::uint8_t> serialize_view(const DecryptorView& view) {
    std::vector<std::uint8_t> out;
    detail::put_u32_le(out, static_cast<std::uint32_t>(view.slots.size()));
    for (const auto& slot : view.slots) {
        detail::put_u32_le(out, slot.slot_id);
        for (Eigen::Index i = 0; i < 4; ++i) {
            detail::put_f64_le(out, slot.state.amplitude(i).real());
            detail::put_f64_le(out, slot.state.amplitude(i).imag());
        }
    }
    return out;
}

// Basis byte values in an instruction entry. in_stream marks a token whose
// measurement basis arrives embedded in the transported plaintext.
inline constexpr std::uint8_t basis_computational = 0;
inline constexpr std::uint8_t basis_hadamard = 1;
inline constexpr std::uint8_t basis_in_stream = 0xFF;

struct InstructionEntry {
    std::uint32_t slot_id = 0;
    SlotRole role = SlotRole::Decoy;
    quantum::Unitary2 unitary = quantum::Unitary2::Identity(); // restores the shared pair
    std::uint8_t basis = basis_computational;
};

// Record layout: u32 entry count, then per entry u32 slot_id, u8 role, the
// unitary as 8 little-endian doubles (row-major, re then im), u8 basis.
inline std::vector<std::uint8_t> build_instruction_record(
    const std::vector<InstructionEntry>& entries) {
    std::vector<std::uint8_t> out;
    detail::put_u32_le(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        detail::put_u32_le(out, e.slot_id);
        out.push_back(static_cast<std::uint8_t>(e.role));
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                detail::put_f64_le(out, e.unitary(r, c).real());
                detail::put_f64_le(out, e.unitary(r, c).imag());
            }
        out.push_back(e.basis);
    }
    return out;
}

inline std::vector<InstructionEntry> parse_instruction_record(
    const std::vector<std::uint8_t>& record) {
    constexpr std::size_t entry_bytes = 4 + 1 + 64 + 1;
    if (record.size() < 4) throw precondition_error("instruction record truncated");
    const std::uint32_t n = detail::get_u32_le(record.data());
    if (record.size() != 4 + static_cast<std::size_t>(n) * entry_bytes)
        throw precondition_error("instruction record length mismatch");
    std::vector<InstructionEntry> entries(n);
    const std::uint8_t* p = record.data() + 4;
    for (std::uint32_t i = 0; i < n; ++i) {
        InstructionEntry& e = entries[i];
        e.slot_id = detail::get_u32_le(p);
        p += 4;
        if (*p > 3) throw precondition_error("instruction record: unknown role");
        e.role = static_cast<SlotRole>(*p++);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                e.unitary(r, c) = {detail::get_f64_le(p), detail::get_f64_le(p + 8)};
                p += 16;
            }
        if (!quantum::is_unitary(e.unitary))
            throw precondition_error("instruction record: matrix not unitary");
        e.basis = *p++;
        if (e.basis != basis_computational && e.basis != basis_hadamard &&
            e.basis != basis_in_stream)
            throw precondition_error("instruction record: unknown basis byte");
    }
    return entries;
}

struct InstructionShare {
    int rs_id = 0;
    std::vector<std::uint8_t> payload;
    int block_size = 0;
};

// n_rs - 1 uniformly random shares plus the closing share; XOR of all of
// them is the record, and any proper subset is one-time-padded noise.
inline std::vector<InstructionShare> split_instructions(
    const std::vector<std::uint8_t>& record, int n_rs, Rng& rng) {
    if (n_rs < 2) throw precondition_error("split_instructions: need at least two stations");
    std::vector<InstructionShare> shares(static_cast<std::size_t>(n_rs));
    std::vector<std::uint8_t> closing = record;
    for (int i = 0; i < n_rs - 1; ++i) {
        auto& share = shares[static_cast<std::size_t>(i)];
        share.rs_id = i + 1;
        share.block_size = static_cast<int>(record.size());
        share.payload.resize(record.size());
        for (auto& b : share.payload) b = static_cast<std::uint8_t>(rng.uniform_below(256));
        for (std::size_t k = 0; k < record.size(); ++k) closing[k] ^= share.payload[k];
    }
    shares.back().rs_id = n_rs;
    shares.back().block_size = static_cast<int>(record.size());
    shares.back().payload = std::move(closing);
    return shares;
}

inline std::vector<std::uint8_t> reconstruct_instructions(
    const std::vector<InstructionShare>& shares) {
    if (shares.empty()) throw precondition_error("reconstruct_instructions: no shares");
    std::vector<std::uint8_t> record = shares.front().payload;
    for (std::size_t i = 1; i < shares.size(); ++i) {
        if (shares[i].payload.size() != record.size())
            throw precondition_error("reconstruct_instructions: share length mismatch");
        for (std::size_t k = 0; k < record.size(); ++k) record[k] ^= shares[i].payload[k];
    }
    return record;
}

namespace detail {

// Plaintext stream carrying the token bases: after every k message bits, the
// next basis bit rides along inside the stream itself.
inline std::vector<int> build_plaintext_stream(const std::vector<int>& message,
                                               const std::vector<int>& bases, int k) {
    if (k < 1) throw precondition_error("plaintext stream: k must be positive");
    if (message.size() < bases.size() * static_cast<std::size_t>(k))
        throw precondition_error("plaintext stream: message too short to carry the bases");
    std::vector<int> stream;
    stream.reserve(message.size() + bases.size());
    std::size_t bi = 0;
    for (std::size_t i = 0; i < message.size(); ++i) {
        stream.push_back(message[i]);
        if ((i + 1) % static_cast<std::size_t>(k) == 0 && bi < bases.size())
            stream.push_back(bases[bi++]);
    }
    return stream;
}

inline std::pair<std::vector<int>, std::vector<int>> split_plaintext_stream(
    const std::vector<int>& stream, int k, std::size_t n_bases) {
    std::vector<int> message, bases;
    message.reserve(stream.size() - n_bases);
    bases.reserve(n_bases);
    std::size_t since_last = 0;
    for (int bit : stream) {
        if (since_last == static_cast<std::size_t>(k) && bases.size() < n_bases) {
            bases.push_back(bit);
            since_last = 0;
        } else {
            message.push_back(bit);
            ++since_last;
        }
    }
    if (bases.size() != n_bases)
        throw precondition_error("plaintext stream: basis bits missing");
    return {std::move(message), std::move(bases)};
}

} // namespace detail

enum class SessionRefusal : std::uint8_t {
    QlvFailed = 0,
    TimeLocked = 1,
    TamperDetected = 2,
    InstructionIncomplete = 3,
};

struct SessionResult {
    qlv::Verdict qlv_verdict;
    std::optional<std::vector<int>> decrypted;
    std::optional<SessionRefusal> refusal;
    qdc::QdcTranscript transcript;
    double clock = 0.0;
    bool shares_emitted = false;

    bool well_formed() const { return decrypted.has_value() != refusal.has_value(); }
};

enum class DeviceKind : std::uint8_t {
    Honest = 0,
    Relocated = 1,     // memory intact, hardware answers from claim + offset
    Tamper = 2,        // pre-measures every device half before following orders
    ShareWithholding = 3, // one instruction share never reaches the device
};

struct DeviceModel {
    DeviceKind kind = DeviceKind::Honest;
    loc::Point2 offset = loc::Point2::Zero();

    static DeviceModel honest() { return {}; }
    static DeviceModel relocated(const loc::Point2& offset) {
        return {DeviceKind::Relocated, offset};
    }
    static DeviceModel tamper() { return {DeviceKind::Tamper, loc::Point2::Zero()}; }
    static DeviceModel share_withholding() {
        return {DeviceKind::ShareWithholding, loc::Point2::Zero()};
    }
};

struct SessionConfig {
    int n_rs = 3;                  // instruction shares required
    double control_fraction = 0.1; // chance a transport round polices instead
    int intertwine_k = 16;         // message bits between embedded basis bits
    std::size_t n_qlv = 8;         // entanglement-checked location tokens
    std::size_t n_decoy = 4;
};

// Runs one complete session. Gate order: time-lock, instruction
// completeness, entanglement checks (transport + tokens), location verdict.
inline SessionResult run_session(const loc::Scenario& scenario,
                                 const std::vector<int>& message,
                                 const DeviceModel& device, double clock, const Rng& rng,
                                 const SessionConfig& config = {}) {
    scenario.validate();
    if (config.n_rs < 2) throw precondition_error("run_session: need at least two stations");
    if (!(config.control_fraction >= 0.0 && config.control_fraction < 1.0))
        throw precondition_error("run_session: control_fraction outside [0, 1)");
    if (message.empty()) throw precondition_error("run_session: empty message");
    for (int bit : message)
        if (bit != 0 && bit != 1)
            throw precondition_error("run_session: message bits must be 0 or 1");
    if (message.size() < config.n_qlv * static_cast<std::size_t>(config.intertwine_k))
        throw precondition_error("run_session: message too short for the token basis stream");

    SessionResult result;
    result.clock = clock;
    if (clock < scenario.t_d) {
        result.refusal = SessionRefusal::TimeLocked;
        return result;
    }

    // Token bases the stream will carry to the device.
    Rng basis_rng = rng.substream("token-bases");
    std::vector<int> bases(config.n_qlv);
    for (auto& b : bases) b = basis_rng.bernoulli(0.5) ? 1 : 0;
    const std::vector<int> stream =
        detail::build_plaintext_stream(message, bases, config.intertwine_k);

    // Control rounds consume extra pairs; provision mean + 8 sigma headroom.
    const double cf = config.control_fraction;
    const double expected_rounds = static_cast<double>(stream.size()) / (1.0 - cf);
    const std::size_t slack =
        16 + static_cast<std::size_t>(8.0 * std::sqrt(expected_rounds * cf + 1.0));
    const std::size_t n_pairs = static_cast<std::size_t>(expected_rounds) + slack;

    auto [view, ledger] =
        provision(n_pairs, n_pairs, config.n_qlv, config.n_decoy, rng.substream("provision"));

    // Instruction record in view order; token bases ride in the stream.
    std::vector<InstructionEntry> entries;
    entries.reserve(ledger.slots.size());
    for (const auto& slot : ledger.slots)
        entries.push_back({slot.slot_id, slot.role,
                           quantum::Unitary2(slot.obfuscation.adjoint()),
                           slot.role == SlotRole::QlvToken ? basis_in_stream
                                                           : basis_computational});
    const std::vector<std::uint8_t> record = build_instruction_record(entries);
    Rng share_rng = rng.substream("shares");
    std::vector<InstructionShare> shares = split_instructions(record, config.n_rs, share_rng);
    result.shares_emitted = true;

    if (device.kind == DeviceKind::ShareWithholding) {
        // One share short: the remainder is one-time-padded noise, so the
        // device cannot reconstruct anything.
        result.refusal = SessionRefusal::InstructionIncomplete;
        return result;
    }

    std::vector<InstructionEntry> device_entries =
        parse_instruction_record(reconstruct_instructions(shares));

    // Device memory, optionally tampered with before instructions arrive.
    std::vector<quantum::PureState> memory;
    memory.reserve(view.slots.size());
    for (const auto& slot : view.slots) memory.push_back(slot.state);
    if (device.kind == DeviceKind::Tamper) {
        Rng tamper_rng = rng.substream("tamper");
        for (auto& st : memory) st = quantum::measure_qubit(st, 1, tamper_rng).post;
    }
    for (std::size_t i = 0; i < memory.size(); ++i)
        memory[i] = quantum::apply_gate(memory[i], device_entries[i].unitary, 1);

    std::vector<std::size_t> message_slots, teleport_slots, token_slots;
    for (std::size_t i = 0; i < device_entries.size(); ++i) {
        switch (device_entries[i].role) {
            case SlotRole::QdcMessageHalf: message_slots.push_back(i); break;
            case SlotRole::QdcTeleportHalf: teleport_slots.push_back(i); break;
            case SlotRole::QlvToken: token_slots.push_back(i); break;
            case SlotRole::Decoy: break;
        }
    }

    // Transport the stream over memory-resident rounds.
    Rng qdc_rng = rng.substream("qdc");
    qdc::QdcTranscript transcript;
    transcript.sent_bits = stream;
    bool tampered = false;
    std::size_t mi = 0, sent = 0;
    try {
        while (sent < stream.size()) {
            if (mi >= message_slots.size() || mi >= teleport_slots.size())
                throw precondition_error("run_session: entangled memory exhausted");
            const bool control = qdc_rng.bernoulli(cf);
            const auto& mp = memory[message_slots[mi]];
            const auto& tp = memory[teleport_slots[mi]];
            ++mi;
            qdc::RoundResult r = control
                                     ? qdc::blind_control_round(mp, tp, qdc_rng)
                                     : qdc::blind_message_round(mp, tp, stream[sent], qdc_rng);
            transcript.teleport_corrections.push_back(r.correction_bits);
            if (control) {
                transcript.control_results.push_back(*r.control_pass);
            } else {
                transcript.decoded_bits.push_back(*r.decoded);
                ++sent;
            }
        }
    } catch (const tamper_error&) {
        tampered = true;
    }
    transcript.message_pairs_used = mi;
    transcript.teleport_pairs_used = mi;
    result.transcript = transcript;
    if (tampered || !transcript.all_controls_passed()) {
        result.refusal = SessionRefusal::TamperDetected;
        return result;
    }

    auto [decoded_message, decoded_bases] =
        detail::split_plaintext_stream(transcript.decoded_bits, config.intertwine_k,
                                       config.n_qlv);

    // Token challenges: the device measures its half in the basis it decoded
    // from the stream, the server measures the retained half in the basis it
    // actually embedded. An undisturbed shared pair anticorrelates
    // computationally and correlates in the Hadamard basis; a device that
    // decoded the wrong basis fails these checks like any other disturbance.
    Rng token_rng = rng.substream("tokens");
    bool tokens_match = true;
    for (std::size_t t = 0; t < token_slots.size(); ++t) {
        quantum::PureState st = memory[token_slots[t]];
        auto device_m = decoded_bases[t] == 0 ? quantum::measure_qubit(st, 1, token_rng)
                                              : quantum::measure_qubit_x(st, 1, token_rng);
        auto server_m = bases[t] == 0
                            ? quantum::measure_qubit(device_m.post, 0, token_rng)
                            : quantum::measure_qubit_x(device_m.post, 0, token_rng);
        const bool expect_equal = bases[t] == 1;
        if ((device_m.outcome == server_m.outcome) != expect_equal) tokens_match = false;
    }
    if (!tokens_match) {
        result.refusal = SessionRefusal::TamperDetected;
        return result;
    }

    // Location verdict from timings answered at the device's true position.
    const loc::Point2 true_pos =
        scenario.claim + (device.kind == DeviceKind::Relocated ? device.offset
                                                               : loc::Point2::Zero());
    Rng timing_rng = rng.substream("qlv-timing");
    const loc::TdoaObservation obs = loc::sample_tdoa(true_pos, scenario, timing_rng);
    result.qlv_verdict = qlv::verify(obs, scenario);
    if (!result.qlv_verdict.accepted) {
        result.refusal = SessionRefusal::QlvFailed;
        return result;
    }
    result.decrypted = decoded_message;
    return result;
}

// Role-blind relocation: the adversary picks n_moved slots uniformly and
// moves them distance_m along direction. Entangled halves survive the move
// untouched, so the payload would still decode; what cannot be avoided is
// that any move large enough to matter drags location tokens along, and the
// token challenges are then answered from the wrong place.
inline SessionResult relocation_attack(const ServerLedger& ledger,
                                       const loc::Scenario& scenario, std::size_t n_moved,
                                       double distance_m, const loc::Point2& direction,
                                       const Rng& rng) {
    scenario.validate();
    if (n_moved > ledger.slots.size())
        throw precondition_error("relocation_attack: cannot move more slots than exist");
    if (!(distance_m >= 0.0))
        throw precondition_error("relocation_attack: distance must be non-negative");
    if (std::abs(direction.norm() - 1.0) > 1e-9)
        throw precondition_error("relocation_attack: direction must be a unit vector");

    Rng pick_rng = rng.substream("relocation-pick");
    std::vector<std::size_t> order(ledger.slots.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[pick_rng.uniform_below(i)]);

    bool token_moved = false;
    for (std::size_t i = 0; i < n_moved; ++i)
        if (ledger.slots[order[i]].role == SlotRole::QlvToken) token_moved = true;

    SessionResult result;
    result.shares_emitted = true;
    const loc::Point2 answer_pos =
        token_moved ? loc::Point2(scenario.claim + distance_m * direction) : scenario.claim;
    Rng timing_rng = rng.substream("relocation-timing");
    const loc::TdoaObservation obs = loc::sample_tdoa(answer_pos, scenario, timing_rng);
    result.qlv_verdict = qlv::verify(obs, scenario);
    if (!result.qlv_verdict.accepted) {
        result.refusal = SessionRefusal::QlvFailed;
        return result;
    }
    result.decrypted = std::vector<int>{}; // no payload at stake in this probe
    return result;
}

} // namespace geoqrypt::orch
