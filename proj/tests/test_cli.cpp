#include "orbiflow/cli.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <sstream>

using namespace orbiflow;
namespace fs = std::filesystem;

namespace {

const std::string kData = ORBIFLOW_DATA_DIR;

// Fresh scratch directory removed when the test ends.
struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("orbiflow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out;
};

Run run_bin(const std::string& args, const TempDir& tmp, const std::string& env = "") {
    std::string log = tmp / "stdout.txt";
    std::string cmd = env + (env.empty() ? "" : " ") + "\"" + ORBIFLOW_BIN + "\" " + args + " > \"" + log + "\" 2>&1";
    int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), read_file(log)};
}

std::string slurp(const std::string& p) { return read_file(p); }

}  // namespace

TEST(Document, RoundTrips) {
    for (const char* s : {"S2(2,3,7)", "T2", "D2(3)", "D2//D4", "Sg2b1(3)"}) {
        auto d = parse_document(s);
        EXPECT_EQ(print_document(parse_document(print_document(d))), print_document(d)) << s;
    }
    auto g = read_file(kData + "/graphs/step5_case3.orb");
    EXPECT_EQ(print_document(parse_document(g)), g);
    auto o = read_file(kData + "/orb3/theta_225.orb");
    EXPECT_EQ(print_document(parse_document(o)), o);
    EXPECT_THROW(parse_document(""), ParseError);
    EXPECT_THROW(parse_document("# only a comment\n"), ParseError);
    EXPECT_THROW(read_file(kData + "/no_such_file.orb"), IoError);
}

TEST(State, RoundTripAndChecks) {
    StateDoc d;
    d.command = "flow2";
    d.put("x", hexd(0.1));
    d.put("v", hex_vec({1.0 / 3, -2.5e-300, 7}));
    auto text = write_state(d);
    auto back = read_state(text, "flow2");
    EXPECT_EQ(unhexd(back.get("x")), 0.1);
    EXPECT_EQ(unhex_vec(back.get("v")), (std::vector<double>{1.0 / 3, -2.5e-300, 7}));
    EXPECT_THROW(back.get("missing"), IoError);

    EXPECT_THROW(read_state(text, "flow3"), IoError);

    auto corrupt = text;
    corrupt[corrupt.find("x ") + 3] ^= 1;
    try {
        read_state(corrupt, "flow2");
        FAIL() << "corrupted state accepted";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
    }

    // a well-formed file from another format version
    std::string body = "orbiflow-state 99\ncommand flow2\nx 0x1p+0\n";
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    EXPECT_THROW(read_state(body + "checksum " + sum + "\n", "flow2"), IoError);
    EXPECT_THROW(read_state("orbiflow-state 1\ncommand flow2\n", "flow2"), IoError);
    EXPECT_THROW(unhexd("0x1p+0junk"), IoError);
}

TEST(State, Flow3StateRoundTrip) {
    FlowState s;
    s.components = {round_s3(64, 1.0, parse_sig("S2(3,3)")), round_s3(48, 0.5)};
    s.t = 0.125;
    s.steps = 17;
    s.events.push_back({0.1, 0, 2.5, 0.08, 2, 1, "cap scale 0.05"});
    sigma_track(s);
    s.components[1] = cylinder(1.0, 2.0, 32);
    StateDoc d;
    d.command = "flow3";
    put_flow3(d, s);
    auto back = get_flow3(read_state(write_state(d), "flow3"));
    ASSERT_EQ(back.components.size(), 2u);
    EXPECT_EQ(back.components[0].psi, s.components[0].psi);
    EXPECT_EQ(print_sig(back.components[0].cross_section), "S2(3,3)");
    EXPECT_EQ(back.components[1].end0, EndKind::Boundary);
    EXPECT_EQ(back.events[0].note, "cap scale 0.05");
    EXPECT_EQ(back.events[0].kept, 2);
    EXPECT_EQ(back.sigma_samples[0].sigma, s.sigma_samples[0].sigma);
    EXPECT_EQ(back.t, 0.125);
}

TEST(Drivers, Classify2) {
    std::ostringstream out;
    EXPECT_EQ(cli::run_classify2("S2(2,3,7)", out), cli::kOk);
    EXPECT_EQ(out.str(), "Hyperbolic, chi_orb = -1/42\n");
    EXPECT_THROW(cli::run_classify2("S2(2,3", out), ParseError);
}

TEST(Drivers, Decompose) {
    std::ostringstream out;
    EXPECT_EQ(cli::run_decompose(kData + "/graphs/step5_case3.orb", out), cli::kOk);
    EXPECT_NE(out.str().find("S3//(Z2×Z3)"), std::string::npos);
    EXPECT_NE(out.str().find("strong check: pass"), std::string::npos);
    EXPECT_NE(out.str().find("gluing count: reconciled"), std::string::npos);
    EXPECT_THROW(cli::run_decompose(kData + "/orb3/theta_225.orb", out), ParseError);
}

TEST(Drivers, Flow2SaveRestoreIsByteIdentical) {
    for (bool football : {false, true}) {
        TempDir a, b;
        cli::Flow2Config cfg;
        if (football) cfg.football = 3;
        else cfg.cone = 2;
        cfg.grid = 64;
        cfg.t_end = 0.3;
        cfg.snapshot_every = 0.05;
        std::ostringstream sink;
        cfg.out_dir = a.path.string();
        ASSERT_EQ(cli::run_flow2(cfg, sink), cli::kOk);

        cfg.out_dir = b.path.string();
        cfg.save_at = 0.12;
        cfg.state_path = b / "state.txt";
        ASSERT_EQ(cli::run_flow2(cfg, sink), cli::kOk);
        cli::Flow2Config resume;
        resume.out_dir = b.path.string();
        resume.t_end = 0.3;
        resume.restore_path = b / "state.txt";
        ASSERT_EQ(cli::run_flow2(resume, sink), cli::kOk);
        for (const char* f : {"flow2.csv", "flow2_summary.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f << football;
    }
}

TEST(Drivers, Flow3SaveRestoreIsByteIdentical) {
    TempDir a;
    cli::Flow3Config cfg;
    cfg.stop_time = 0.16;
    cfg.snapshot_every = 0.04;
    cfg.out_dir = a.path.string();
    std::ostringstream sink;
    ASSERT_EQ(cli::run_flow3(cfg, sink), cli::kOk);
    EXPECT_NE(slurp(a / "events.txt").find("surgery"), std::string::npos);
    // one save before the surgery, one after it
    for (double save : {0.06, 0.14}) {
        TempDir b;
        cli::Flow3Config part = cfg;
        part.out_dir = b.path.string();
        part.save_at = save;
        part.state_path = b / "state.txt";
        ASSERT_EQ(cli::run_flow3(part, sink), cli::kOk);
        cli::Flow3Config resume;
        resume.out_dir = b.path.string();
        resume.stop_time = cfg.stop_time;
        resume.restore_path = b / "state.txt";
        ASSERT_EQ(cli::run_flow3(resume, sink), cli::kOk);
        for (const char* f : {"flow3.csv", "sigma.csv", "events.txt"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f << save;
    }
}

TEST(Drivers, Flow3RoundSeedSigma) {
    TempDir a;
    cli::Flow3Config cfg;
    cfg.seed = "round";
    cfg.grid = 200;
    cfg.stop_time = 0.2;
    cfg.out_dir = a.path.string();
    std::ostringstream sink;
    ASSERT_EQ(cli::run_flow3(cfg, sink), cli::kOk);
    std::istringstream in(slurp(a / "sigma.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,r_min,volume,sigma");
    double first = 0;
    int rows = 0;
    while (std::getline(in, line)) {
        double sigma = std::stod(line.substr(line.rfind(',') + 1));
        if (rows++ == 0) first = sigma;
        EXPECT_NEAR(sigma / first, 1.0, 1e-4) << line;
    }
    EXPECT_GE(rows, 4);
}

TEST(Drivers, Lvolume) {
    TempDir a;
    cli::LvolumeConfig cfg;
    cfg.n = 2;
    cfg.group_order = 3;
    cfg.tau_grid = "0.01:1:4";
    cfg.out_path = a / "v.csv";
    std::ostringstream out;
    EXPECT_EQ(cli::run_lvolume(cfg, out), cli::kOk);
    EXPECT_NE(out.str().find("verdict monotone: pass"), std::string::npos);
    EXPECT_NE(out.str().find("verdict gaussian value: pass"), std::string::npos);
    auto csv = slurp(cfg.out_path);
    EXPECT_EQ(csv.substr(0, 6), "tau,V\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    cfg.tau_grid = "0.01:1";
    EXPECT_THROW(cli::run_lvolume(cfg, out), ParseError);
}

TEST(Binary, ExitCodes) {
    TempDir t;
    auto c = run_bin("classify2 'S2(2,3,7)'", t);
    EXPECT_EQ(c.code, 0);
    EXPECT_EQ(c.out, "Hyperbolic, chi_orb = -1/42\n");
    EXPECT_EQ(run_bin("classify2 'S2(2,3'", t).code, cli::kParse);
    EXPECT_EQ(run_bin("classify2 'S2(1,3)'", t).code, cli::kParse);
    EXPECT_EQ(run_bin("frobnicate", t).code, cli::kParse);
    EXPECT_EQ(run_bin("", t).code, cli::kParse);

    auto d = run_bin("decompose \"" + kData + "/graphs/step5_case3.orb\"", t);
    EXPECT_EQ(d.code, 0);
    EXPECT_NE(d.out.find("S3//(Z2×Z3)"), std::string::npos);
    EXPECT_EQ(run_bin("decompose \"" + kData + "/missing.orb\"", t).code, cli::kIo);

    write_file(t / "bad_glue.orb",
               "piece P1 base S1xI fibers\nbdry P1.0 T2 slope 1/0\nbdry P1.1 T2 slope 1/0\n"
               "piece P2 base S1xI fibers\nbdry P2.0 T2 slope 1/0\nbdry P2.1 T2 slope 1/0\n"
               "glue P1.0 P2.1 isotopic=true u=3\n");
    EXPECT_EQ(run_bin("decompose \"" + (t / "bad_glue.orb") + "\"", t).code, cli::kParse);

    EXPECT_EQ(run_bin("validate3 \"" + kData + "/orb3/theta_225.orb\"", t).code, 0);
    EXPECT_EQ(run_bin("validate3 \"" + kData + "/orb3/bad_vertex_237.orb\"", t).code, cli::kInvariant);
    EXPECT_EQ(run_bin("validate3 \"" + kData + "/graphs/step5_case3.orb\"", t).code, cli::kParse);

    EXPECT_EQ(run_bin("flow2 --cone 2 --football 3", t).code, cli::kParse);
    EXPECT_EQ(run_bin("flow2 --out \"" + t.path.string() + "\"", t).code, cli::kInvariant);
    EXPECT_EQ(run_bin("flow3 --seed blob", t).code, cli::kParse);
    EXPECT_EQ(run_bin("flow3 --cross-section 'S2(2,3,7)' --out \"" + t.path.string() + "\"", t).code, cli::kInvariant);
    EXPECT_EQ(run_bin("lvolume --n 5", t).code, cli::kParse);
}

TEST(Binary, RestoreRejectsCorruptOrForeignState) {
    TempDir t;
    std::string out = " --out \"" + t.path.string() + "\"";
    ASSERT_EQ(run_bin("flow2 --cone 2 --grid 32 --t-end 0.1 --save-at 0.02 --state \"" + (t / "s.txt") + "\"" + out, t).code, 0);
    EXPECT_EQ(run_bin("flow3 --restore \"" + (t / "s.txt") + "\"" + out, t).code, cli::kIo);
    auto text = slurp(t / "s.txt");
    text[text.find("phi ") + 6] ^= 1;
    write_file(t / "bad.txt", text);
    auto r = run_bin("flow2 --restore \"" + (t / "bad.txt") + "\"" + out, t);
    EXPECT_EQ(r.code, cli::kIo);
    EXPECT_NE(r.out.find("checksum"), std::string::npos);
    EXPECT_EQ(run_bin("flow2 --restore \"" + (t / "absent.txt") + "\"" + out, t).code, cli::kIo);
    EXPECT_EQ(run_bin("flow2 --restore \"" + (t / "s.txt") + "\"" + out, t).code, 0);
}

TEST(Binary, OutputDirectoryFromEnvironment) {
    TempDir t;
    auto r = run_bin("flow2 --football 2 --grid 32 --t-end 0.05", t, "ORBIFLOW_OUT=\"" + (t / "envout") + "\"");
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(fs::exists(t / "envout/flow2.csv"));
    EXPECT_TRUE(fs::exists(t / "envout/flow2_summary.csv"));
}

TEST(Binary, Flow2ToSoliton) {
    TempDir t;
    auto r = run_bin("flow2 --cone 2 --to-soliton --out \"" + t.path.string() + "\"", t);
    EXPECT_EQ(r.code, 0) << r.out;
    auto at = r.out.find("soliton residual ");
    ASSERT_NE(at, std::string::npos) << r.out;
    EXPECT_LT(std::stod(r.out.substr(at + 17)), 1e-3);
    EXPECT_NE(r.out.find("oracle distance"), std::string::npos);
}

TEST(Binary, DeterministicReports) {
    TempDir t;
    std::string file = "\"" + kData + "/graphs/step1_two_mirrors.orb\"";
    auto a = run_bin("decompose " + file, t);
    auto b = run_bin("decompose " + file, t);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    auto l1 = run_bin("lvolume --model cylinder --tau-grid 0.01:1:3", t);
    auto l2 = run_bin("lvolume --model cylinder --tau-grid 0.01:1:3", t);
    EXPECT_EQ(l1.code, 0);
    EXPECT_EQ(l1.out, l2.out);
}
