#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "app.hpp"
#include "table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Scratch {
public:
    Scratch()
    {
        static std::atomic<int> counter{0};
        dir_ = fs::temp_directory_path() /
               ("trace_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Scratch() { fs::remove_all(dir_); }

    const fs::path& dir() const { return dir_; }
    fs::path file(const std::string& name, const std::string& text) const
    {
        const auto p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

private:
    fs::path dir_;
};

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = tracecli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kExponential = R"(ensemble:
  optical_depth: 500
grid:
  nz: 101
  nt: 3001
  t_begin: -15
  t_end: 0
pulse:
  kind: rising_exponential
  rate: 1.0
control:
  mode: constant
  omega: 1.7888543819998317
)";

const char* kRecallMemory = R"(ensemble:
  optical_depth: 100
  delta_plus: 10
grid:
  nz: 41
  nt: 1201
  t_begin: -12
  t_end: 0
pulse:
  kind: rising_exponential
  rate: 1.0
control:
  mode: constant
  omega: 1.0
  recall:
    duration: 8.0
)";

}  // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(run({}).code == tracecli::kExitConfig);
    CHECK(run({"simulate"}).code == tracecli::kExitConfig);
    CHECK(run({"bogus"}).code == tracecli::kExitConfig);
    CHECK(run({"fit", "--model", "nonsense", "--data", "x.csv"}).code == tracecli::kExitConfig);
    CHECK(run({"simulate", "--config", "/nonexistent/run.yaml"}).code == tracecli::kExitConfig);
    CHECK(run({"--help"}).code == tracecli::kExitOk);
}

TEST_CASE("unknown keys are reported with their line")
{
    Scratch s;
    const auto cfg = s.file("bad.yaml", std::string(kExponential) + "  omgea: 2\n");
    const auto r = run({"simulate", "--config", cfg.string(), "--out", s.dir().string()});
    CHECK(r.code == tracecli::kExitConfig);
    CHECK(r.err.find("line 14") != std::string::npos);
    CHECK(r.err.find("control.omgea") != std::string::npos);
}

TEST_CASE("invalid physics is a configuration error")
{
    Scratch s;
    std::string text = kExponential;
    text.replace(text.find("500"), 3, "-5");
    const auto r = run({"simulate", "--config", s.file("neg.yaml", text).string(), "--out", s.dir().string()});
    CHECK(r.code == tracecli::kExitConfig);
}

TEST_CASE("matched storage through the command line")
{
    Scratch s;
    const auto r = run({"simulate", "--config", s.file("run.yaml", kExponential).string(), "--out", s.dir().string()});
    REQUIRE(r.code == tracecli::kExitOk);
    const auto summary = read_json(s.dir() / "summary.json");
    CHECK(summary["command"] == "simulate");
    CHECK(summary["model"] == "adiabatic");
    CHECK(summary["efficiency"].get<double>() >= 0.0);
    CHECK(summary["efficiency"].get<double>() <= 1.0);
    CHECK(summary["transmission"].get<double>() < 1e-3);
    CHECK(fs::exists(s.dir() / "envelopes.csv"));
    const auto env = tracecli::CsvData::read(s.dir() / "envelopes.csv");
    CHECK(env.has("e_out_plus_re"));
    CHECK(env.rows() == 3001);
    const auto sw = tracecli::CsvData::read(s.dir() / "spinwave.csv");
    CHECK(sw.rows() == 101);
}

TEST_CASE("no control transmits everything")
{
    Scratch s;
    std::string text = kExponential;
    text.replace(text.find("mode: constant"), 14, "mode: \"off\"");
    text.erase(text.find("  omega:"));
    const auto r = run({"simulate", "--config", s.file("off.yaml", text).string(), "--out", s.dir().string()});
    REQUIRE(r.code == tracecli::kExitOk);
    const auto summary = read_json(s.dir() / "summary.json");
    CHECK(summary["efficiency"].get<double>() == 0.0);
    CHECK(summary["transmission"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("incomplete three-level retrieval is a solver failure")
{
    Scratch s;
    const auto cfg = s.file("tl.yaml", R"(model: three_level
ensemble:
  optical_depth: 10
three_level:
  omega: 0.5
  nz: 41
  max_time: 5
)");
    const auto r = run({"simulate", "--config", cfg.string(), "--out", s.dir().string()});
    CHECK(r.code == tracecli::kExitSolver);
}

TEST_CASE("fig1b table follows the closed forms")
{
    Scratch s;
    const auto r = run({"fig1b", "--out", s.dir().string()});
    REQUIRE(r.code == tracecli::kExitOk);
    const auto t = tracecli::CsvData::read(s.dir() / "fig1b.csv");
    const auto x = t.numbers("x"), trace = t.numbers("trace");
    REQUIRE(x.size() == 61);
    CHECK(x.front() == 1.0);
    CHECK(x.back() == doctest::Approx(1000.0));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(trace[i] == doctest::Approx(std::pow(x[i] / (x[i] + 2.0), 2)));

    Scratch j;
    REQUIRE(run({"fig1b", "--out", j.dir().string(), "--format", "json"}).code == tracecli::kExitOk);
    const auto rows = read_json(j.dir() / "fig1b.json");
    REQUIRE(rows.is_array());
    CHECK(rows.size() == 61);
    CHECK(rows[60]["trace"].get<double>() == doctest::Approx(trace[60]));
}

TEST_CASE("empty sweep range is rejected")
{
    Scratch s;
    const auto cfg = s.file("empty.yaml", "sweep:\n  kind: fig1b\n  x:\n    values: []\n");
    CHECK(run({"sweep", "--config", cfg.string(), "--out", s.dir().string()}).code == tracecli::kExitConfig);
}

TEST_CASE("malformed CSV input is rejected")
{
    Scratch s;
    const auto data = s.file("bad.csv", "hold_time,efficiency\n0,0.5\n1e-4\n");
    const auto r = run({"fit", "--model", "decay", "--data", data.string(), "--out", s.dir().string()});
    CHECK(r.code == tracecli::kExitConfig);
    const auto words = s.file("words.csv", "hold_time,efficiency\n0,high\n");
    CHECK(run({"fit", "--model", "decay", "--data", words.string(), "--out", s.dir().string()}).code ==
          tracecli::kExitConfig);
}

TEST_CASE("degenerate decay data is a fit failure with a report")
{
    Scratch s;
    const auto data = s.file("few.csv", "hold_time,efficiency\n0,0.5\n1e-4,0.4\n");
    const auto r = run({"fit", "--model", "decay", "--data", data.string(), "--out", s.dir().string()});
    CHECK(r.code == tracecli::kExitFit);
    CHECK(read_json(s.dir() / "fit_decay.json")["status"] == "failed");
}

TEST_CASE("decay sweep round-trips through the fit")
{
    Scratch s;
    const auto cfg = s.file("decay.yaml", std::string(kRecallMemory) + R"(sweep:
  kind: decay
  hold_time:
    start: 0
    stop: 400.0e-6
    points: 17
  spinwave_lifetime: 250.0e-6
  gaussian_time: 180.0e-6
  noise: 0.005
)");
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", s.dir().string(), "--seed", "3"}).code ==
            tracecli::kExitOk);
    const auto truth = read_json(s.dir() / "decay_truth.json");
    CHECK(truth["seed"] == 3);
    REQUIRE(run({"fit", "--model", "decay", "--data", (s.dir() / "decay.csv").string(), "--out",
                 s.dir().string()})
                .code == tracecli::kExitOk);
    const auto fit = read_json(s.dir() / "fit_decay.json");
    CHECK(fit["status"] == "ok");
    for (const char* key : {"eta0", "tau_e", "tau_g"}) {
        CAPTURE(key);
        CHECK(fit["parameters"][key].get<double>() == doctest::Approx(truth[key].get<double>()).epsilon(0.05));
    }
}

TEST_CASE("fringe simulation round-trips through the fit")
{
    Scratch s;
    const auto cfg = s.file("fringe.yaml", std::string(kRecallMemory) + R"(mismatch:
  delta_k: 1.0
train:
  runs: 3
  pulses: 17
  noise: 0.01
)");
    REQUIRE(run({"fringe-sim", "--config", cfg.string(), "--out", s.dir().string(), "--seed", "5"}).code ==
            tracecli::kExitOk);
    const auto truth = read_json(s.dir() / "fringe_truth.json");
    REQUIRE(run({"fit", "--model", "fringe", "--data", (s.dir() / "fringe.csv").string(), "--out",
                 s.dir().string()})
                .code == tracecli::kExitOk);
    const auto fit = read_json(s.dir() / "fit_fringe.json");
    for (const char* key : {"transmitted_offset", "recalled_offset"}) {
        CAPTURE(key);
        const double diff = fit[key].get<double>() - truth[key].get<double>();
        CHECK(std::abs(std::remainder(diff, 2.0 * M_PI)) < 0.02);
    }
}

TEST_CASE("runs are deterministic and independent of the job count")
{
    Scratch a, b;
    const auto cfg = a.file("sweep.yaml", std::string(kRecallMemory) + R"(sweep:
  kind: mismatch
  delta_k:
    values: [-1.0, 0.0, 1.0]
  phase_points: 6
)");
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (a.dir() / "o").string()}).code == tracecli::kExitOk);
    REQUIRE(run({"sweep", "--config", cfg.string(), "--out", (b.dir() / "o").string(), "--jobs", "3"}).code ==
            tracecli::kExitOk);
    const auto one = slurp(a.dir() / "o" / "mismatch.csv");
    CHECK(!one.empty());
    CHECK(one == slurp(b.dir() / "o" / "mismatch.csv"));
}

TEST_CASE("number formatting round-trips")
{
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) {
        CHECK(std::stod(tracecli::format_number(v)) == v);
    }
    CHECK(tracecli::format_number(std::nan("")) == "nan");
}
