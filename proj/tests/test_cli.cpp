#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "geoqrypt/cli.hpp"

using namespace geoqrypt;

namespace {

const std::string scenario_block =
    "[scenario]\n"
    "stations = 1000,1000; -1000,1000; -1000,-1000; 1000,-1000\n"
    "claim = 0,0\n"
    "range_noise_m = 1.8\n";

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        REQUIRE(nl != std::string::npos); // every line must end with \n
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

struct ProcResult {
    int exit_code = -1;
    std::string stdout_text;
};

ProcResult run_binary(const std::string& args) {
    const std::string cmd = std::string(GEOQRYPT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    ProcResult r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.stdout_text.append(buf, n);
    const int status = pclose(pipe);
    REQUIRE(WIFEXITED(status));
    r.exit_code = WEXITSTATUS(status);
    return r;
}

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("geoqrypt_cli_test_" + std::to_string(getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    REQUIRE(f.good());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("config parser handles sections comments and types") {
    const auto c = cfg::Config::parse(
        "# leading comment\n"
        "[alpha]\n"
        "x = 1.5   # trailing comment\n"
        "name = hello\n"
        "list = 1, 2.5 ,3\n"
        "\n"
        "[beta]\n"
        "point = 3,4\n"
        "points = 0,0; 1,1 ; 2,0\n"
        "n = 42\n");
    REQUIRE(c.get_double("alpha.x") == 1.5);
    REQUIRE(c.get_string("alpha.name") == "hello");
    REQUIRE(c.get_doubles("alpha.list") == std::vector<double>{1.0, 2.5, 3.0});
    REQUIRE(c.get_point("beta.point") == loc::Point2(3.0, 4.0));
    REQUIRE(c.get_points("beta.points").size() == 3);
    REQUIRE(c.get_points("beta.points")[2] == loc::Point2(2.0, 0.0));
    REQUIRE(c.get_int("beta.n") == 42);
    REQUIRE(c.get_u64("beta.n") == 42);
    REQUIRE(c.get_double("beta.absent", 9.0) == 9.0);
    REQUIRE(c.has("alpha.x"));
    REQUIRE_FALSE(c.has("alpha.y"));

    REQUIRE_THROWS_AS(c.get_double("alpha.missing"), cfg::config_error);
    REQUIRE_THROWS_AS(c.get_double("alpha.name"), cfg::config_error);
    REQUIRE_THROWS_AS(c.get_int("alpha.x"), cfg::config_error);
    REQUIRE_THROWS_AS(c.get_point("alpha.list"), cfg::config_error);

    REQUIRE_THROWS_AS(cfg::Config::parse("[a]\nx = 1\nx = 2\n"), cfg::config_error);
    REQUIRE_THROWS_AS(cfg::Config::parse("x = 1\n"), cfg::config_error);
    REQUIRE_THROWS_AS(cfg::Config::parse("[a]\nno equals sign\n"), cfg::config_error);
    REQUIRE_THROWS_AS(cfg::Config::parse("[unclosed\nx = 1\n"), cfg::config_error);
    REQUIRE_THROWS_AS(cfg::Config::parse("[bad name]\nx = 1\n"), cfg::config_error);

    REQUIRE_THROWS_AS(c.require_schema({"alpha.x"}), cfg::config_error);
}

TEST_CASE("csv formatting is 9 significant digits with nan passthrough") {
    REQUIRE(csv::num(2.0784609690826528) == "2.07846097");
    REQUIRE(csv::num(1000.0) == "1000");
    REQUIRE(csv::num(-0.5) == "-0.5");
    REQUIRE(csv::num(std::numeric_limits<double>::quiet_NaN()) == "nan");
    REQUIRE(csv::num(1.5e-9) == "1.5e-09");

    csv::Writer w;
    w.row("a", "b");
    w.row(1.0, 2.5, std::string("x"));
    REQUIRE(w.str() == "a,b\n1,2.5,x\n");
}

TEST_CASE("hex and bit vectors convert both ways") {
    const std::vector<int> bits = {1, 0, 1, 0, 0, 0, 1, 1};
    REQUIRE(cli::detail::bits_from_hex("a3") == bits);
    REQUIRE(cli::detail::bits_from_hex("A3") == bits);
    REQUIRE(cli::detail::hex_from_bits(bits) == "a3");
    REQUIRE(cli::detail::hex_from_bits(cli::detail::bits_from_hex("deadbeef0147")) ==
            "deadbeef0147");
    REQUIRE_THROWS_AS(cli::detail::bits_from_hex("xy"), cfg::config_error);
    REQUIRE_THROWS_AS(cli::detail::bits_from_hex(""), cfg::config_error);
    REQUIRE_THROWS_AS(cli::detail::hex_from_bits({1, 0, 1}), precondition_error);
}

TEST_CASE("crb-surface command emits the accuracy grid") {
    const std::string config = scenario_block +
                               "[grid]\n"
                               "x_min = -100\nx_max = 100\n"
                               "y_min = -100\ny_max = 100\n"
                               "nx = 3\nny = 3\n"
                               "[run]\nseed = 7\n";
    const auto r = cli::run_command("crb-surface", config, std::nullopt);
    REQUIRE(r.exit_code == cli::exit_ok);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 10);
    REQUIRE(rows[0] == "x_m,y_m,drms_m,sigma_x_m,sigma_y_m,rho");
    // Row-major: the center point sits in the middle row.
    REQUIRE(rows[5] == "0,0,2.07846097,1.46969385,1.46969385,-0.5");

    const auto again = cli::run_command("crb-surface", config, std::nullopt);
    REQUIRE(again.output == r.output);
}

TEST_CASE("crb-surface flags singular grid points as nan") {
    // The middle column of this grid lies exactly on a station.
    const std::string config = scenario_block +
                               "[grid]\n"
                               "x_min = 999\nx_max = 1001\n"
                               "y_min = 1000\ny_max = 1001\n"
                               "nx = 3\nny = 2\n"
                               "[run]\nseed = 7\n";
    const auto r = cli::run_command("crb-surface", config, std::nullopt);
    REQUIRE(r.exit_code == cli::exit_ok);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 7);
    REQUIRE(rows[2] == "1000,1000,nan,nan,nan,nan");
    REQUIRE(rows[1].substr(0, 4) == "999,");
    REQUIRE(rows[1].find("nan") == std::string::npos);
}

TEST_CASE("ellipse command reports coverage analytically") {
    const std::string config = scenario_block +
                               "[ellipse]\nscales = 1,3\n"
                               "[run]\nseed = 1\n";
    const auto r = cli::run_command("ellipse", config, std::nullopt);
    REQUIRE(r.exit_code == cli::exit_ok);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0] ==
            "scale,center_x_m,center_y_m,semi_major_m,semi_minor_m,orientation_rad,"
            "coverage");
    REQUIRE(rows[1] == "1,0,0,1.8,1.03923048,2.35619449,0.39346934");
    REQUIRE(rows[2].find("0.988891003") != std::string::npos);

    const std::string degenerate =
        "[scenario]\n"
        "stations = 0,0; 1000,0; 2000,0\n"
        "claim = 500,0\n"
        "range_noise_m = 1.8\n"
        "[ellipse]\nscales = 3\n"
        "[run]\nseed = 1\n";
    const auto bad = cli::run_command("ellipse", degenerate, std::nullopt);
    REQUIRE(bad.exit_code == cli::exit_runtime);
    REQUIRE_FALSE(bad.error.empty());
    REQUIRE(bad.output.empty());
}

TEST_CASE("spoof-sweep command matches the verification contract") {
    const std::string config = scenario_block +
                               "p_c = 0.99\n"
                               "[sweep]\n"
                               "offsets_m = 0,4,42\n"
                               "trials = 400\n"
                               "[run]\nseed = 11\n";
    const auto r = cli::run_command("spoof-sweep", config, std::nullopt);
    REQUIRE(r.exit_code == cli::exit_ok);
    const auto rows = lines_of(r.output);
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0] == "offset_m,pass_rate,trials,seed");
    const double at_zero = std::stod(rows[1].substr(rows[1].find(',') + 1));
    REQUIRE(std::abs(at_zero - 0.99) < 0.03);
    REQUIRE(rows[3].substr(0, 5) == "42,0,");

    REQUIRE(cli::run_command("spoof-sweep", config, std::nullopt).output == r.output);

    const auto foreign = cli::run_command(
        "spoof-sweep", config + "[grid]\nnx = 3\n", std::nullopt);
    REQUIRE(foreign.exit_code == cli::exit_config); // another command's key refused

    auto with_method = config;
    with_method.replace(with_method.find("trials"), 0, "method = timing\n");
    REQUIRE(cli::run_command("spoof-sweep", with_method, std::nullopt).exit_code ==
            cli::exit_ok);
    with_method.replace(with_method.find("timing"), 6, "letmein");
    REQUIRE(cli::run_command("spoof-sweep", with_method, std::nullopt).exit_code ==
            cli::exit_config);
}

TEST_CASE("session command emits transcript plus result line") {
    const std::string base = scenario_block +
                             "t_d_s = 5\n"
                             "[session]\n"
                             "message_hex = deadbeefdeadbeefdeadbeefdeadbeefdeadbeef\n";
    const std::string run = "[run]\nseed = 21\n";

    const auto honest =
        cli::run_command("session", base + "clock_s = 9.25\n" + run, std::nullopt);
    REQUIRE(honest.exit_code == cli::exit_ok);
    const auto rows = lines_of(honest.output);
    REQUIRE(rows.back() == "accept,,deadbeefdeadbeefdeadbeefdeadbeefdeadbeef,9.25");
    REQUIRE(rows[0] == "geoqrypt session");

    const auto locked =
        cli::run_command("session", base + "clock_s = 1\n" + run, std::nullopt);
    REQUIRE(locked.exit_code == cli::exit_ok);
    REQUIRE(lines_of(locked.output).back() == "reject,time_locked,,1");

    const auto relocated = cli::run_command(
        "session",
        base + "clock_s = 9.25\ndevice = relocated\noffset_m = 500,0\n" + run,
        std::nullopt);
    REQUIRE(relocated.exit_code == cli::exit_ok);
    REQUIRE(lines_of(relocated.output).back() == "reject,qlv_failed,,9.25");

    // Config errors: short message, unknown device, orphaned offset.
    const auto short_msg = cli::run_command(
        "session",
        scenario_block + "[session]\nmessage_hex = ab\nclock_s = 1\n" + run,
        std::nullopt);
    REQUIRE(short_msg.exit_code == cli::exit_config);
    const auto bad_dev = cli::run_command(
        "session", base + "clock_s = 1\ndevice = evil\n" + run, std::nullopt);
    REQUIRE(bad_dev.exit_code == cli::exit_config);
    const auto orphan = cli::run_command(
        "session", base + "clock_s = 1\noffset_m = 1,0\n" + run, std::nullopt);
    REQUIRE(orphan.exit_code == cli::exit_config);
}

TEST_CASE("pingpong-demo command round-trips and flags attacks") {
    const std::string clean_cfg =
        "[pingpong]\nmessage_hex = a3c1\ncontrol_fraction = 0.2\n[run]\nseed = 3\n";
    const auto clean = cli::run_command("pingpong-demo", clean_cfg, std::nullopt);
    REQUIRE(clean.exit_code == cli::exit_ok);
    REQUIRE(clean.output.find("decoded_hex: a3c1") != std::string::npos);
    REQUIRE(clean.output.find("status: clean") != std::string::npos);

    const std::string attacked_cfg =
        "[pingpong]\nmessage_hex = a3c1a3c1\ncontrol_fraction = 0.2\n"
        "attack = intercept_resend\nattack_basis = hadamard\n[run]\nseed = 3\n";
    const auto attacked = cli::run_command("pingpong-demo", attacked_cfg, std::nullopt);
    REQUIRE(attacked.exit_code == cli::exit_ok);
    REQUIRE(attacked.output.find("status: tamper_detected") != std::string::npos);

    const std::string orphan_basis =
        "[pingpong]\nmessage_hex = a3\nattack_basis = hadamard\n[run]\nseed = 3\n";
    REQUIRE(cli::run_command("pingpong-demo", orphan_basis, std::nullopt).exit_code ==
            cli::exit_config);
}

TEST_CASE("seed resolution prefers the override") {
    const std::string config = scenario_block +
                               "[sweep]\noffsets_m = 0,4\ntrials = 200\n"
                               "[run]\nseed = 11\n";
    const auto from_config = cli::run_command("spoof-sweep", config, std::nullopt);
    const auto same = cli::run_command("spoof-sweep", config, 11);
    const auto other = cli::run_command("spoof-sweep", config, 12);
    REQUIRE(from_config.output == same.output);
    REQUIRE(from_config.output != other.output);

    // Without run.seed the seed must come from the caller.
    const std::string seedless = scenario_block + "[sweep]\noffsets_m = 0\ntrials = 200\n";
    REQUIRE(cli::run_command("spoof-sweep", seedless, std::nullopt).exit_code ==
            cli::exit_config);
    REQUIRE(cli::run_command("spoof-sweep", seedless, 11).exit_code == cli::exit_ok);

    REQUIRE(cli::run_command("no-such-command", config, std::nullopt).exit_code ==
            cli::exit_config);
}

TEST_CASE("installed binary behaves like the library entry point") {
    const auto dir = scratch_dir();
    const auto cfg_path = dir / "crb.cfg";
    write_file(cfg_path, scenario_block +
                             "[grid]\n"
                             "x_min = -100\nx_max = 100\n"
                             "y_min = -100\ny_max = 100\n"
                             "nx = 4\nny = 4\n"
                             "[run]\nseed = 7\n");

    const auto out_a = dir / "a.csv";
    const auto out_b = dir / "b.csv";
    auto ra = run_binary("crb-surface --config " + cfg_path.string() + " --out " +
                         out_a.string());
    REQUIRE(ra.exit_code == 0);
    auto rb = run_binary("crb-surface --config " + cfg_path.string() + " --out " +
                         out_b.string());
    REQUIRE(rb.exit_code == 0);
    REQUIRE(read_file(out_a) == read_file(out_b));

    // stdout path matches the file path byte for byte.
    auto rc = run_binary("crb-surface --config " + cfg_path.string());
    REQUIRE(rc.exit_code == 0);
    REQUIRE(rc.stdout_text == read_file(out_a));

    // In-process output matches the process output.
    const auto inproc =
        cli::run_command("crb-surface", read_file(cfg_path), std::nullopt);
    REQUIRE(inproc.output == rc.stdout_text);

    auto missing = run_binary("crb-surface --config " + (dir / "nope.cfg").string());
    REQUIRE(missing.exit_code == 2);
    auto usage = run_binary("crb-surface");
    REQUIRE(usage.exit_code == 2);

    std::filesystem::remove_all(dir);
}
