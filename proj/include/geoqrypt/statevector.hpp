#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "geoqrypt/common.hpp"
#include "geoqrypt/rng.hpp"

namespace geoqrypt::quantum {

using Unitary2 = Eigen::Matrix2cd;
using cd = std::complex<double>;

// Dense statevector over n qubits. Qubit 0 is the least-significant bit of
// the amplitude index; kets are written |q1 q0> in two-qubit docs.
class PureState {
public:
    PureState(int n_qubits, Eigen::VectorXcd amps) : n_(n_qubits), a_(std::move(amps)) {
        if (n_ < 1 || n_ > 24)
            throw precondition_error("PureState: qubit count out of range");
        if (a_.size() != (Eigen::Index{1} << n_))
            throw precondition_error("PureState: amplitude count != 2^n");
        if (std::abs(a_.norm() - 1.0) > 1e-9)
            throw precondition_error("PureState: not normalized");
    }

    static PureState computational(int n_qubits, std::size_t basis_index) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits);
        a(static_cast<Eigen::Index>(basis_index)) = 1.0;
        return PureState(n_qubits, std::move(a));
    }

    int n_qubits() const { return n_; }
    std::size_t dim() const { return static_cast<std::size_t>(a_.size()); }
    const Eigen::VectorXcd& amplitudes() const { return a_; }
    cd amplitude(std::size_t i) const { return a_(static_cast<Eigen::Index>(i)); }

private:
    int n_;
    Eigen::VectorXcd a_;
};

enum class BellKind : std::uint8_t { PhiPlus = 0, PhiMinus = 1, PsiPlus = 2, PsiMinus = 3 };

namespace detail {

// Coefficient of |b1 b0> in each Bell state; b1 indexes the first ket slot.
inline cd bell_coeff(BellKind k, int b1, int b0) {
    constexpr double s = 0.70710678118654752440;
    switch (k) {
        case BellKind::PhiPlus: return (b1 == b0) ? cd{s} : cd{0};
        case BellKind::PhiMinus: return (b1 == b0) ? (b1 ? cd{-s} : cd{s}) : cd{0};
        case BellKind::PsiPlus: return (b1 != b0) ? cd{s} : cd{0};
        case BellKind::PsiMinus: return (b1 != b0) ? (b1 ? cd{-s} : cd{s}) : cd{0};
    }
    return {};
}

} // namespace detail

inline PureState make_bell_pair(BellKind kind) {
    Eigen::VectorXcd a(4);
    for (int i = 0; i < 4; ++i) a(i) = detail::bell_coeff(kind, (i >> 1) & 1, i & 1);
    return PureState(2, std::move(a));
}

// Tensor product; a's qubits keep their indices, b's shift up by a.n_qubits().
inline PureState tensor(const PureState& a, const PureState& b) {
    Eigen::VectorXcd out(a.dim() * b.dim());
    for (std::size_t ib = 0; ib < b.dim(); ++ib)
        for (std::size_t ia = 0; ia < a.dim(); ++ia)
            out(static_cast<Eigen::Index>((ib << a.n_qubits()) | ia)) =
                a.amplitude(ia) * b.amplitude(ib);
    return PureState(a.n_qubits() + b.n_qubits(), std::move(out));
}

inline bool is_unitary(const Unitary2& u, double tol = 1e-9) {
    return (u.adjoint() * u - Unitary2::Identity()).norm() <= tol;
}

inline Unitary2 identity_gate() { return Unitary2::Identity(); }

inline Unitary2 pauli_x() {
    Unitary2 u;
    u << 0, 1, 1, 0;
    return u;
}

inline Unitary2 pauli_z() {
    Unitary2 u;
    u << 1, 0, 0, -1;
    return u;
}

inline Unitary2 hadamard() {
    constexpr double s = 0.70710678118654752440;
    Unitary2 u;
    u << s, s, s, -s;
    return u;
}

inline PureState apply_gate(const PureState& st, const Unitary2& u, int target) {
    if (target < 0 || target >= st.n_qubits())
        throw precondition_error("apply_gate: target out of range");
    if (!is_unitary(u))
        throw precondition_error("apply_gate: matrix not unitary");
    Eigen::VectorXcd a = st.amplitudes();
    const std::size_t mask = std::size_t{1} << target;
    for (std::size_t i = 0; i < st.dim(); ++i) {
        if (i & mask) continue;
        const auto j = static_cast<Eigen::Index>(i | mask);
        const auto ii = static_cast<Eigen::Index>(i);
        cd lo = a(ii), hi = a(j);
        a(ii) = u(0, 0) * lo + u(0, 1) * hi;
        a(j) = u(1, 0) * lo + u(1, 1) * hi;
    }
    return PureState(st.n_qubits(), std::move(a));
}

struct MeasureResult {
    int outcome;
    PureState post;
};

// Computational-basis measurement of one qubit, Born-sampled.
inline MeasureResult measure_qubit(const PureState& st, int target, Rng& rng) {
    if (target < 0 || target >= st.n_qubits())
        throw precondition_error("measure_qubit: target out of range");
    const std::size_t mask = std::size_t{1} << target;
    double p1 = 0.0;
    for (std::size_t i = 0; i < st.dim(); ++i)
        if (i & mask) p1 += std::norm(st.amplitude(i));
    const int outcome = rng.uniform() < p1 ? 1 : 0;
    const double p = outcome ? p1 : 1.0 - p1;
    Eigen::VectorXcd a = st.amplitudes();
    const double scale = 1.0 / std::sqrt(p);
    for (std::size_t i = 0; i < st.dim(); ++i) {
        const bool bit = (i & mask) != 0;
        auto ii = static_cast<Eigen::Index>(i);
        a(ii) = (bit == (outcome == 1)) ? a(ii) * scale : cd{0};
    }
    return {outcome, PureState(st.n_qubits(), std::move(a))};
}

// Hadamard-basis measurement; outcome 0 = |+>, 1 = |->. Post state is left
// in the computational frame (|+> or |-> on the target).
inline MeasureResult measure_qubit_x(const PureState& st, int target, Rng& rng) {
    auto r = measure_qubit(apply_gate(st, hadamard(), target), target, rng);
    return {r.outcome, apply_gate(r.post, hadamard(), target)};
}

struct BellMeasureResult {
    BellKind outcome;
    PureState post;
};

// Projective measurement of qubits (qa, qb) in the Bell basis; qa fills the
// first ket slot. Post state factorizes as |bell_outcome> on (qa, qb).
inline BellMeasureResult bell_measure(const PureState& st, int qa, int qb, Rng& rng) {
    if (st.n_qubits() < 2 || qa == qb || qa < 0 || qb < 0 || qa >= st.n_qubits() ||
        qb >= st.n_qubits())
        throw precondition_error("bell_measure: bad qubit pair");
    const std::size_t ma = std::size_t{1} << qa;
    const std::size_t mb = std::size_t{1} << qb;
    // Projection amplitudes per rest-index, one vector per Bell outcome.
    std::array<Eigen::VectorXcd, 4> c;
    for (auto& v : c) v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(st.dim()));
    std::array<double, 4> p{};
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & (ma | mb)) continue;
        for (int k = 0; k < 4; ++k) {
            cd acc = 0;
            for (int ba = 0; ba < 2; ++ba)
                for (int bb = 0; bb < 2; ++bb) {
                    cd coeff = detail::bell_coeff(static_cast<BellKind>(k), ba, bb);
                    if (coeff == cd{0}) continue;
                    std::size_t idx = r | (ba ? ma : 0) | (bb ? mb : 0);
                    acc += std::conj(coeff) * st.amplitude(idx);
                }
            c[k](static_cast<Eigen::Index>(r)) = acc;
            p[k] += std::norm(acc);
        }
    }
    double u = rng.uniform();
    int k = 0;
    double cum = 0.0;
    for (; k < 4; ++k) {
        cum += p[k];
        if (u < cum) break;
    }
    if (k == 4) k = 3;
    if (p[k] <= 0.0)
        throw error("bell_measure: sampled zero-probability branch");
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(st.dim()));
    const double scale = 1.0 / std::sqrt(p[k]);
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & (ma | mb)) continue;
        for (int ba = 0; ba < 2; ++ba)
            for (int bb = 0; bb < 2; ++bb) {
                cd coeff = detail::bell_coeff(static_cast<BellKind>(k), ba, bb);
                if (coeff == cd{0}) continue;
                std::size_t idx = r | (ba ? ma : 0) | (bb ? mb : 0);
                a(static_cast<Eigen::Index>(idx)) =
                    coeff * c[k](static_cast<Eigen::Index>(r)) * scale;
            }
    }
    return {static_cast<BellKind>(k), PureState(st.n_qubits(), std::move(a))};
}

inline double fidelity(const PureState& a, const PureState& b) {
    if (a.n_qubits() != b.n_qubits())
        throw precondition_error("fidelity: qubit counts differ");
    return std::norm(a.amplitudes().dot(b.amplitudes()));
}

// Pulls out qubit q of a state that factorizes as (qubit q) x (rest).
inline PureState extract_qubit(const PureState& st, int q) {
    const std::size_t mq = std::size_t{1} << q;
    double best = -1.0;
    std::size_t best_r = 0;
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & mq) continue;
        double w = std::norm(st.amplitude(r)) + std::norm(st.amplitude(r | mq));
        if (w > best) {
            best = w;
            best_r = r;
        }
    }
    cd v0 = st.amplitude(best_r), v1 = st.amplitude(best_r | mq);
    double n = std::sqrt(std::norm(v0) + std::norm(v1));
    v0 /= n;
    v1 /= n;
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & mq) continue;
        if (std::abs(st.amplitude(r) * v1 - st.amplitude(r | mq) * v0) > 1e-8)
            throw precondition_error("extract_qubit: qubit entangled with the rest");
    }
    Eigen::Vector2cd out;
    out << v0, v1;
    return PureState(1, out);
}

// Pulls out the ordered pair (qa, qb) of a state that factorizes as
// (qa, qb) x (rest); qa becomes qubit 0 of the result.
inline PureState extract_pair(const PureState& st, int qa, int qb) {
    if (qa == qb || qa < 0 || qb < 0 || qa >= st.n_qubits() || qb >= st.n_qubits())
        throw precondition_error("extract_pair: bad qubit pair");
    const std::size_t ma = std::size_t{1} << qa;
    const std::size_t mb = std::size_t{1} << qb;
    auto sub_index = [&](std::size_t full) {
        return ((full & ma) ? 1u : 0u) | ((full & mb) ? 2u : 0u);
    };
    double best = -1.0;
    std::size_t best_r = 0;
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & (ma | mb)) continue;
        double w = 0.0;
        for (int ba = 0; ba < 2; ++ba)
            for (int bb = 0; bb < 2; ++bb)
                w += std::norm(st.amplitude(r | (ba ? ma : 0) | (bb ? mb : 0)));
        if (w > best) {
            best = w;
            best_r = r;
        }
    }
    Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
    for (int ba = 0; ba < 2; ++ba)
        for (int bb = 0; bb < 2; ++bb) {
            std::size_t idx = best_r | (ba ? ma : 0) | (bb ? mb : 0);
            v(sub_index(idx)) = st.amplitude(idx);
        }
    v.normalize();
    // Every rest-row must be proportional to the dominant one.
    for (std::size_t r = 0; r < st.dim(); ++r) {
        if (r & (ma | mb)) continue;
        cd dot = 0;
        double n2 = 0.0;
        for (int ba = 0; ba < 2; ++ba)
            for (int bb = 0; bb < 2; ++bb) {
                std::size_t idx = r | (ba ? ma : 0) | (bb ? mb : 0);
                dot += std::conj(v(sub_index(idx))) * st.amplitude(idx);
                n2 += std::norm(st.amplitude(idx));
            }
        if (std::abs(n2 - std::norm(dot)) > 1e-8)
            throw precondition_error("extract_pair: pair entangled with the rest");
    }
    return PureState(2, v);
}

// Haar-random U(2): QR of a complex Gaussian matrix with the R diagonal's
// phases folded back into Q.
inline Unitary2 sample_haar_unitary(Rng& rng) {
    while (true) {
        Unitary2 g;
        g << rng.complex_normal(), rng.complex_normal(), rng.complex_normal(),
            rng.complex_normal();
        Eigen::HouseholderQR<Unitary2> qr(g);
        Unitary2 q = qr.householderQ();
        Unitary2 r = qr.matrixQR().triangularView<Eigen::Upper>();
        if (std::abs(r(0, 0)) < 1e-12 || std::abs(r(1, 1)) < 1e-12) continue;
        Unitary2 lambda = Unitary2::Zero();
        lambda(0, 0) = r(0, 0) / std::abs(r(0, 0));
        lambda(1, 1) = r(1, 1) / std::abs(r(1, 1));
        return q * lambda;
    }
}

// Bell kind of a two-qubit state, or throws if it is not one.
inline BellKind identify_bell(const PureState& pair, double tol = 1e-9) {
    if (pair.n_qubits() != 2)
        throw precondition_error("identify_bell: need a two-qubit state");
    for (int k = 0; k < 4; ++k) {
        auto kind = static_cast<BellKind>(k);
        if (fidelity(pair, make_bell_pair(kind)) >= 1.0 - tol) return kind;
    }
    throw precondition_error("identify_bell: not maximally entangled");
}

// (x, z) such that (I x X^x Z^z)|Phi+> equals the given Bell state up to phase.
inline std::pair<int, int> bell_pauli_bits(BellKind k) {
    switch (k) {
        case BellKind::PhiPlus: return {0, 0};
        case BellKind::PhiMinus: return {0, 1};
        case BellKind::PsiPlus: return {1, 0};
        case BellKind::PsiMinus: return {1, 1};
    }
    return {0, 0};
}

struct TeleportResult {
    // bit 0 set -> an X correction was applied, bit 1 set -> a Z correction.
    std::uint8_t correction_bits;
    PureState received;
};

// Correction unitary a receiver applies for the given classical bits.
inline Unitary2 pauli_correction(std::uint8_t correction_bits) {
    Unitary2 u = Unitary2::Identity();
    if (correction_bits & 1) u = pauli_x() * u;
    if (correction_bits & 2) u = pauli_z() * u;
    return u;
}

// Teleports a one-qubit payload through a Bell-pair resource. The returned
// state already has the Pauli corrections applied; correction_bits is the
// two-bit classical message that selected them.
inline TeleportResult teleport(const PureState& payload, const PureState& resource, Rng& rng) {
    if (payload.n_qubits() != 1)
        throw precondition_error("teleport: payload must be one qubit");
    BellKind rk = identify_bell(resource);
    auto [xr, zr] = bell_pauli_bits(rk);
    // q0 payload, q1 sender half, q2 receiver half.
    PureState full = tensor(payload, resource);
    auto m = bell_measure(full, 0, 1, rng);
    auto [xk, zk] = bell_pauli_bits(m.outcome);
    const int x = xk ^ xr, z = zk ^ zr;
    PureState post = m.post;
    if (x) post = apply_gate(post, pauli_x(), 2);
    if (z) post = apply_gate(post, pauli_z(), 2);
    return {static_cast<std::uint8_t>(x | (z << 1)), extract_qubit(post, 2)};
}

} // namespace geoqrypt::quantum
