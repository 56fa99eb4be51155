// Sends a random qubit through a shared Bell pair and shows that only the
// two classical correction bits cross the wire.

#include <cstdio>

#include "geoqrypt/rng.hpp"
#include "geoqrypt/statevector.hpp"

int main() {
    using namespace geoqrypt;
    Rng rng(2026);
    const auto resource = quantum::make_bell_pair(quantum::BellKind::PsiPlus);

    for (int i = 0; i < 5; ++i) {
        const quantum::Unitary2 u = quantum::sample_haar_unitary(rng);
        const quantum::PureState payload =
            quantum::apply_gate(quantum::PureState::computational(1, 0), u, 0);
        const quantum::TeleportResult r = quantum::teleport(payload, resource, rng);
        std::printf("payload %d: corrections (x=%d, z=%d), fidelity %.15f\n", i,
                    r.correction_bits & 1, (r.correction_bits >> 1) & 1,
                    quantum::fidelity(r.received, payload));
    }
    return 0;
}
