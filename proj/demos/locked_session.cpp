// Runs the full decryption session three ways: honest device at the claimed
// position, the same device relocated 50 m away, and a device that read its
// quantum memory early. Only the first gets the message.

#include <cstdio>
#include <vector>

#include "geoqrypt/orchestrator.hpp"

namespace {

const char* describe(const geoqrypt::orch::SessionResult& r) {
    using geoqrypt::orch::SessionRefusal;
    if (r.decrypted) return "decrypted";
    switch (*r.refusal) {
        case SessionRefusal::TimeLocked: return "refused: time lock still closed";
        case SessionRefusal::QlvFailed: return "refused: location check failed";
        case SessionRefusal::TamperDetected: return "refused: tampering detected";
        case SessionRefusal::InstructionIncomplete:
            return "refused: instruction shares incomplete";
    }
    return "?";
}

} // namespace

int main() {
    using namespace geoqrypt;
    loc::Scenario sc;
    sc.rs_positions = {{1000.0, 1000.0}, {-1000.0, 1000.0}, {-1000.0, -1000.0},
                       {1000.0, -1000.0}};
    sc.claim = {0.0, 0.0};
    sc.sigma_t = 1.8 / speed_of_light;
    sc.p_c = 0.99;
    sc.t_d = 5.0;

    Rng msg_rng(1);
    std::vector<int> message(160);
    for (auto& b : message) b = msg_rng.bernoulli(0.5) ? 1 : 0;
    const double clock = 9.0;

    const auto honest =
        orch::run_session(sc, message, orch::DeviceModel::honest(), clock, Rng(7));
    const auto moved = orch::run_session(
        sc, message, orch::DeviceModel::relocated({50.0, 0.0}), clock, Rng(7));
    const auto nosy =
        orch::run_session(sc, message, orch::DeviceModel::tamper(), clock, Rng(7));

    std::printf("honest device:    %s (%zu bits, matches sent: %s)\n", describe(honest),
                honest.decrypted ? honest.decrypted->size() : 0,
                honest.decrypted && *honest.decrypted == message ? "yes" : "no");
    std::printf("relocated 50 m:   %s\n", describe(moved));
    std::printf("early measurement: %s\n", describe(nosy));
    return 0;
}
