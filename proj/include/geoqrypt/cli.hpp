#pragma once

#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "geoqrypt/config.hpp"
#include "geoqrypt/csv.hpp"
#include "geoqrypt/localization.hpp"
#include "geoqrypt/orchestrator.hpp"
#include "geoqrypt/qdc.hpp"
#include "geoqrypt/qlv.hpp"
#include "geoqrypt/rng.hpp"

namespace geoqrypt::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_runtime = 3;

struct CommandResult {
    int exit_code = exit_ok;
    std::string output;   // file body; written only on success
    std::string error;    // diagnostic for stderr, empty on success
    std::string out_path; // from [run] out; empty means stdout
};

namespace detail {

// GEOQRYPT_THREADS caps worker parallelism; 0 or unset picks the hardware
// count. Output bytes never depend on the value because every parallel loop
// in the library is schedule-independent.
inline unsigned resolve_threads() {
    const char* env = std::getenv("GEOQRYPT_THREADS");
    if (env == nullptr || *env == '\0')
        return std::max(1u, std::thread::hardware_concurrency());
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(env, &used);
    } catch (const std::exception&) {
        throw cfg::config_error("GEOQRYPT_THREADS is not a number");
    }
    if (used != std::string(env).size() || v < 0 || v > 4096)
        throw cfg::config_error("GEOQRYPT_THREADS out of range");
    if (v == 0) return std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(v);
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Hex chars map to bits most significant first: "a3" -> 1,0,1,0,0,0,1,1.
inline std::vector<int> bits_from_hex(const std::string& hex) {
    if (hex.empty()) throw cfg::config_error("message_hex is empty");
    std::vector<int> bits;
    bits.reserve(hex.size() * 4);
    for (char c : hex) {
        const int n = hex_nibble(c);
        if (n < 0)
            throw cfg::config_error(std::string("message_hex: bad character '") + c +
                                    "'");
        for (int b = 3; b >= 0; --b) bits.push_back((n >> b) & 1);
    }
    return bits;
}

inline std::string hex_from_bits(const std::vector<int>& bits) {
    if (bits.size() % 4 != 0)
        throw precondition_error("hex_from_bits: length not a multiple of 4");
    static const char digits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(bits.size() / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        const int n =
            (bits[i] << 3) | (bits[i + 1] << 2) | (bits[i + 2] << 1) | bits[i + 3];
        hex += digits[n];
    }
    return hex;
}

inline std::vector<std::string> with_run_keys(std::vector<std::string> keys) {
    keys.push_back("run.seed");
    keys.push_back("run.out");
    return keys;
}

inline std::vector<std::string> with_scenario_keys(std::vector<std::string> keys) {
    for (const auto& k : cfg::scenario_keys) keys.push_back(k);
    return with_run_keys(std::move(keys));
}

struct Prepared {
    cfg::Config config;
    std::uint64_t seed = 0;
    std::string out_path;
    unsigned threads = 1;
};

inline Prepared prepare(const std::string& config_text,
                        std::optional<std::uint64_t> seed_override) {
    Prepared p;
    p.config = cfg::Config::parse(config_text);
    p.seed = seed_override ? *seed_override : p.config.get_u64("run.seed");
    p.out_path = p.config.get_string("run.out", "");
    p.threads = resolve_threads();
    return p;
}

inline std::string cmd_crb_surface(const Prepared& p) {
    p.config.require_schema(with_scenario_keys({
        "grid.x_min", "grid.x_max", "grid.y_min", "grid.y_max", "grid.nx", "grid.ny",
    }));
    const loc::Scenario sc = cfg::scenario_from_config(p.config, p.seed);
    loc::GridRegion region;
    region.x_min = p.config.get_double("grid.x_min");
    region.x_max = p.config.get_double("grid.x_max");
    region.y_min = p.config.get_double("grid.y_min");
    region.y_max = p.config.get_double("grid.y_max");
    const std::int64_t nx = p.config.get_int("grid.nx");
    const std::int64_t ny = p.config.get_int("grid.ny");
    if (nx < 2 || ny < 2 || nx > 8192 || ny > 8192)
        throw cfg::config_error("config: grid.nx/ny must lie in [2, 8192]");
    region.nx = static_cast<int>(nx);
    region.ny = static_cast<int>(ny);
    try {
        region.validate();
    } catch (const precondition_error& e) {
        throw cfg::config_error(std::string("config: bad grid: ") + e.what());
    }

    const loc::CrbGrid grid = loc::crb_grid(region, sc, p.threads);
    csv::Writer w;
    w.row("x_m", "y_m", "drms_m", "sigma_x_m", "sigma_y_m", "rho");
    for (int iy = 0; iy < region.ny; ++iy)
        for (int ix = 0; ix < region.nx; ++ix) {
            const auto i = static_cast<std::size_t>(iy) *
                               static_cast<std::size_t>(region.nx) +
                           static_cast<std::size_t>(ix);
            w.row(grid.xs[static_cast<std::size_t>(ix)],
                  grid.ys[static_cast<std::size_t>(iy)], grid.drms[i], grid.sigma_x[i],
                  grid.sigma_y[i], grid.rho[i]);
        }
    return w.str();
}

inline std::string cmd_ellipse(const Prepared& p) {
    p.config.require_schema(with_scenario_keys({"ellipse.scales"}));
    const loc::Scenario sc = cfg::scenario_from_config(p.config, p.seed);
    const std::vector<double> scales = p.config.get_doubles("ellipse.scales");
    for (double s : scales)
        if (!(s > 0.0) || !std::isfinite(s))
            throw cfg::config_error("config: ellipse.scales must be positive and finite");

    const loc::PositionCovariance cov =
        loc::position_covariance(loc::fisher_matrix(sc.claim, sc));
    csv::Writer w;
    w.row("scale", "center_x_m", "center_y_m", "semi_major_m", "semi_minor_m",
          "orientation_rad", "coverage");
    for (double s : scales) {
        const loc::ErrorEllipse e = loc::error_ellipse(cov, s, sc.claim);
        w.row(s, e.center.x(), e.center.y(), e.semi_major, e.semi_minor,
              e.orientation_rad, loc::coverage_probability(s));
    }
    return w.str();
}

inline std::string cmd_spoof_sweep(const Prepared& p) {
    p.config.require_schema(with_scenario_keys({
        "sweep.offsets_m", "sweep.direction", "sweep.trials", "sweep.method",
    }));
    const loc::Scenario sc = cfg::scenario_from_config(p.config, p.seed);
    const std::vector<double> offsets = p.config.get_doubles("sweep.offsets_m");
    for (double o : offsets)
        if (!(o >= 0.0) || !std::isfinite(o))
            throw cfg::config_error("config: sweep.offsets_m must be >= 0 and finite");
    const std::int64_t trials = p.config.get_int("sweep.trials");
    if (trials < 100 || trials > 10000000)
        throw cfg::config_error("config: sweep.trials must lie in [100, 1e7]");
    loc::Point2 dir = p.config.has("sweep.direction")
                          ? p.config.get_point("sweep.direction")
                          : loc::Point2(1.0, 0.0);
    if (!(dir.norm() > 0.0) || !std::isfinite(dir.norm()))
        throw cfg::config_error("config: sweep.direction must be a nonzero vector");
    dir.normalize();
    const std::string method_name = p.config.get_string("sweep.method", "ellipse");
    qlv::VerifyMethod method;
    if (method_name == "ellipse")
        method = qlv::VerifyMethod::PositionEllipse;
    else if (method_name == "timing")
        method = qlv::VerifyMethod::TimingResidual;
    else
        throw cfg::config_error("config: sweep.method must be 'ellipse' or 'timing'");

    const qlv::SpoofCurve curve =
        qlv::spoof_sweep(sc, offsets, dir, static_cast<int>(trials),
                         Rng(p.seed).substream("qlv"), method, p.threads);
    csv::Writer w;
    w.row("offset_m", "pass_rate", "trials", "seed");
    for (std::size_t i = 0; i < curve.offsets.size(); ++i)
        w.row(curve.offsets[i], curve.pass_rate[i], curve.trials,
              static_cast<unsigned long long>(curve.seed));
    return w.str();
}

inline const char* refusal_name(std::optional<orch::SessionRefusal> r) {
    if (!r) return "";
    switch (*r) {
        case orch::SessionRefusal::QlvFailed: return "qlv_failed";
        case orch::SessionRefusal::TimeLocked: return "time_locked";
        case orch::SessionRefusal::TamperDetected: return "tamper_detected";
        case orch::SessionRefusal::InstructionIncomplete: return "instruction_incomplete";
    }
    return "";
}

inline std::string cmd_session(const Prepared& p) {
    p.config.require_schema(with_scenario_keys({
        "session.message_hex", "session.clock_s", "session.device", "session.offset_m",
        "session.n_rs", "session.control_fraction", "session.intertwine_k",
        "session.n_qlv", "session.n_decoy",
    }));
    const loc::Scenario sc = cfg::scenario_from_config(p.config, p.seed);
    const std::string hex = p.config.get_string("session.message_hex");
    const std::vector<int> message = bits_from_hex(hex);
    const double clock = p.config.get_double("session.clock_s");
    if (!std::isfinite(clock)) throw cfg::config_error("config: session.clock_s not finite");

    const std::string device_name = p.config.get_string("session.device", "honest");
    orch::DeviceModel device;
    if (device_name == "honest") {
        device = orch::DeviceModel::honest();
    } else if (device_name == "relocated") {
        device = orch::DeviceModel::relocated(p.config.get_point("session.offset_m"));
    } else if (device_name == "tamper") {
        device = orch::DeviceModel::tamper();
    } else if (device_name == "withhold") {
        device = orch::DeviceModel::share_withholding();
    } else {
        throw cfg::config_error(
            "config: session.device must be honest|relocated|tamper|withhold");
    }
    if (device_name != "relocated" && p.config.has("session.offset_m"))
        throw cfg::config_error("config: session.offset_m only applies to 'relocated'");

    orch::SessionConfig scfg;
    scfg.n_rs = static_cast<int>(p.config.get_int("session.n_rs", 3));
    scfg.control_fraction = p.config.get_double("session.control_fraction", 0.1);
    scfg.intertwine_k = static_cast<int>(p.config.get_int("session.intertwine_k", 16));
    scfg.n_qlv = static_cast<int>(p.config.get_int("session.n_qlv", 8));
    scfg.n_decoy = static_cast<int>(p.config.get_int("session.n_decoy", 4));
    if (scfg.n_rs < 2) throw cfg::config_error("config: session.n_rs must be >= 2");
    if (!(scfg.control_fraction >= 0.0 && scfg.control_fraction < 1.0))
        throw cfg::config_error("config: session.control_fraction outside [0, 1)");
    if (scfg.intertwine_k < 1)
        throw cfg::config_error("config: session.intertwine_k must be >= 1");
    if (scfg.n_qlv < 0 || scfg.n_decoy < 0)
        throw cfg::config_error("config: session.n_qlv/n_decoy must be >= 0");
    if (message.size() < static_cast<std::size_t>(scfg.n_qlv) *
                             static_cast<std::size_t>(scfg.intertwine_k))
        throw cfg::config_error(
            "config: message too short to intertwine the token bases; need at least "
            "n_qlv * intertwine_k bits");

    const orch::SessionResult r = orch::run_session(
        sc, message, device, clock, Rng(p.seed).substream("orchestrator"), scfg);

    std::string out;
    out += "geoqrypt session\n";
    out += "device: " + device_name + "\n";
    out += "clock_s: " + csv::num(clock) + " (t_d_s: " + csv::num(sc.t_d) + ")\n";
    out += "message_bits: " + std::to_string(message.size()) + "\n";
    out += std::string("shares_emitted: ") + (r.shares_emitted ? "yes" : "no") + "\n";
    if (!r.transcript.sent_bits.empty() || !r.transcript.control_results.empty()) {
        const std::size_t msg_rounds = r.transcript.decoded_bits.size();
        const std::size_t ctl_rounds = r.transcript.control_results.size();
        std::size_t ctl_failed = 0;
        for (bool ok : r.transcript.control_results)
            if (!ok) ++ctl_failed;
        out += "qdc_rounds: " + std::to_string(msg_rounds + ctl_rounds) + " (message " +
               std::to_string(msg_rounds) + ", control " + std::to_string(ctl_rounds) +
               ", control_failures " + std::to_string(ctl_failed) + ")\n";
    }
    if (!r.refusal || *r.refusal == orch::SessionRefusal::QlvFailed) {
        out += std::string("qlv: ") + (r.qlv_verdict.accepted ? "accept" : "reject") +
               " (mahalanobis " + csv::num(r.qlv_verdict.mahalanobis) + ", threshold " +
               csv::num(r.qlv_verdict.threshold) + ")\n";
    }
    if (r.decrypted) {
        out += "outcome: decrypted " + std::to_string(r.decrypted->size()) + " bits\n";
    } else {
        out += std::string("outcome: refused (") + refusal_name(r.refusal) + ")\n";
    }
    out += std::string(r.decrypted ? "accept" : "reject") + "," +
           refusal_name(r.refusal) + "," +
           (r.decrypted ? hex_from_bits(*r.decrypted) : "") + "," + csv::num(clock) +
           "\n";
    return out;
}

inline std::string cmd_pingpong_demo(const Prepared& p) {
    p.config.require_schema(with_run_keys({
        "pingpong.message_hex", "pingpong.control_fraction", "pingpong.attack",
        "pingpong.attack_basis",
    }));
    const std::string hex = p.config.get_string("pingpong.message_hex");
    const std::vector<int> message = bits_from_hex(hex);
    const double cf = p.config.get_double("pingpong.control_fraction", 0.1);
    if (!(cf >= 0.0 && cf < 1.0))
        throw cfg::config_error("config: pingpong.control_fraction outside [0, 1)");

    const std::string attack_name = p.config.get_string("pingpong.attack", "none");
    const std::string basis_name =
        p.config.get_string("pingpong.attack_basis", "computational");
    qdc::MeasureBasis basis;
    if (basis_name == "computational")
        basis = qdc::MeasureBasis::Computational;
    else if (basis_name == "hadamard")
        basis = qdc::MeasureBasis::Hadamard;
    else
        throw cfg::config_error(
            "config: pingpong.attack_basis must be computational|hadamard");
    qdc::AttackModel attack;
    if (attack_name == "none")
        attack = qdc::AttackModel::none();
    else if (attack_name == "intercept_resend")
        attack = qdc::AttackModel::intercept_resend(basis);
    else
        throw cfg::config_error("config: pingpong.attack must be none|intercept_resend");
    if (attack_name == "none" && p.config.has("pingpong.attack_basis"))
        throw cfg::config_error(
            "config: pingpong.attack_basis only applies to intercept_resend");

    // Control rounds consume pairs without sending bits, so provision the
    // expected overhead plus generous slack; exhaustion is astronomically
    // unlikely but still a clean runtime error.
    const double m = static_cast<double>(message.size());
    const auto n_pairs = static_cast<std::size_t>(
        std::ceil(m / (1.0 - cf)) + 16.0 + 8.0 * std::sqrt(m * cf / (1.0 - cf) + 1.0));
    const qdc::QdcResources res = qdc::make_resources(n_pairs, n_pairs, cf);

    Rng rng = Rng(p.seed).substream("qdc");
    std::string out;
    out += "geoqrypt pingpong-demo\n";
    out += "message_bits: " + std::to_string(message.size()) + "\n";
    out += "attack: " + attack_name +
           (attack_name == "none" ? std::string() : " (" + basis_name + ")") + "\n";
    try {
        const qdc::QdcTranscript t = qdc::pingpong_send(message, res, attack, rng);
        std::size_t ctl_failed = 0;
        for (bool ok : t.control_results)
            if (!ok) ++ctl_failed;
        out += "rounds: " + std::to_string(t.message_pairs_used) + " (message " +
               std::to_string(t.decoded_bits.size()) + ", control " +
               std::to_string(t.control_results.size()) + ", control_failures " +
               std::to_string(ctl_failed) + ")\n";
        out += "decoded_hex: " + hex_from_bits(t.decoded_bits) + "\n";
        out += std::string("status: ") +
               (ctl_failed == 0 ? "clean" : "tamper_detected (control failures)") + "\n";
    } catch (const tamper_error&) {
        out += "status: tamper_detected (message round decoded a Phi outcome)\n";
    }
    return out;
}

} // namespace detail

// Runs one command against raw config bytes and returns what the front end
// should do: exit code, output body, diagnostic. Output is built entirely in
// memory so a failing run never leaves a partial file behind.
inline CommandResult run_command(const std::string& command,
                                 const std::string& config_text,
                                 std::optional<std::uint64_t> seed_override) {
    CommandResult result;
    detail::Prepared prepared;
    try {
        prepared = detail::prepare(config_text, seed_override);
    } catch (const std::exception& e) {
        result.exit_code = exit_config;
        result.error = e.what();
        return result;
    }
    result.out_path = prepared.out_path;
    try {
        if (command == "crb-surface")
            result.output = detail::cmd_crb_surface(prepared);
        else if (command == "ellipse")
            result.output = detail::cmd_ellipse(prepared);
        else if (command == "spoof-sweep")
            result.output = detail::cmd_spoof_sweep(prepared);
        else if (command == "session")
            result.output = detail::cmd_session(prepared);
        else if (command == "pingpong-demo")
            result.output = detail::cmd_pingpong_demo(prepared);
        else {
            result.exit_code = exit_config;
            result.error = "unknown command '" + command + "'";
        }
    } catch (const cfg::config_error& e) {
        result.exit_code = exit_config;
        result.error = e.what();
    } catch (const error& e) {
        result.exit_code = exit_runtime;
        result.error = e.what();
    }
    return result;
}

} // namespace geoqrypt::cli
