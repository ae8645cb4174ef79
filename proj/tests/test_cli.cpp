#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "si/csv_io.hpp"
#include "si/feat_io.hpp"
#include "si/wav_io.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

const fs::path kWork = fs::temp_directory_path() / "si_cli_tests";
const bool kFreshWork = [] {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  return true;
}();

RunResult run_cli(const std::string& args) {
  const fs::path cap = kWork / "capture.txt";
  const std::string cmd =
      std::string(SI_CLI_PATH) + " " + args + " > " + cap.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(cap);
  r.output.assign(std::istreambuf_iterator<char>(f), {});
  return r;
}

std::string q(const fs::path& p) { return p.string(); }

void write_tone(const fs::path& path, double hz, double amp, double seconds,
                double rate = 16000.0) {
  si::Waveform w;
  w.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
  si::write_wav(path.string(), w);
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  return nlohmann::json::parse(f);
}

// Shared tiny corpus + checkpoint, built once for the pipeline tests.
struct Pipeline {
  fs::path corpus = kWork / "corpus";
  fs::path ckpt = kWork / "mtl.sinv";

  Pipeline() {
    fs::create_directories(kWork);
    REQUIRE(run_cli("synth-corpus --speakers 4 --utts 2 --train-speakers 2"
                    " --dev-speakers 1 --test-speakers 1 --seed 3 -o " +
                    q(corpus))
                .code == 0);
    REQUIRE(run_cli("train --arch mtl-si --manifest " + q(corpus / "manifest.json") +
                    " --scale 0.125 --epochs 2 --batch 4 --quiet -o " + q(ckpt))
                .code == 0);
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("usage errors and help") {
  fs::create_directories(kWork);
  const RunResult none = run_cli("");
  CHECK(none.code == 2);
  CHECK_FALSE(none.output.empty());

  const RunResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(help.output.find("nasalance") != std::string::npos);
  CHECK(help.output.find("gradcheck") != std::string::npos);

  CHECK(run_cli("nasalance --oral only.wav").code == 2);  // missing required options
}

TEST_CASE("identical microphones give an exactly neutral velum trace") {
  fs::create_directories(kWork);
  const fs::path oral = kWork / "oral.wav", nasal = kWork / "nasal.wav";
  write_tone(oral, 400.0, 0.3, 1.2);
  write_tone(nasal, 400.0, 0.3, 1.2);
  const fs::path out = kWork / "vp.csv";

  const RunResult r =
      run_cli("nasalance --oral " + q(oral) + " --nasal " + q(nasal) + " -o " + q(out));
  CHECK(r.code == 0);

  const si::TrajectoryTable t = si::read_trajectory_csv(out.string());
  REQUIRE(t.names == std::vector<std::string>{"VP"});
  CHECK(t.rate_hz == 100.0);
  double worst = 0.0;
  for (double v : t.columns[0]) worst = std::max(worst, std::abs(v));
  CHECK(worst <= 1e-9);  // equal energies in every window

  const nlohmann::json rec = read_json(fs::path(out.string() + ".run.json"));
  CHECK(rec.at("command") == "nasalance");
  CHECK(rec.at("config").at("window_ms") == 25);
  CHECK(rec.at("toolkit_version").is_string());
  CHECK(rec.at("design_flags").is_object());
}

TEST_CASE("eggenv produces a bounded envelope trace") {
  fs::create_directories(kWork);
  const fs::path egg = kWork / "egg.wav";
  si::Waveform w;
  w.sample_rate_hz = 16000.0;
  w.samples.resize(16000 * 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double tt = static_cast<double>(i) / 16000.0;
    w.samples[i] = (0.5 + 0.4 * std::sin(2.0 * M_PI * 1.5 * tt)) *
                   std::sin(2.0 * M_PI * 120.0 * tt);
  }
  si::write_wav(egg.string(), w);
  const fs::path out = kWork / "egg.csv";
  CHECK(run_cli("eggenv --egg " + q(egg) + " -o " + q(out)).code == 0);
  const si::TrajectoryTable t = si::read_trajectory_csv(out.string());
  REQUIRE(t.names == std::vector<std::string>{"EGGenv"});
  for (double v : t.columns[0]) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("error reporting maps categories onto exit codes") {
  fs::create_directories(kWork);
  const RunResult io = run_cli("featurize --wav " + q(kWork / "no_such.wav") + " -o " +
                               q(kWork / "x.feat"));
  CHECK(io.code == 3);
  CHECK(io.output.find("error: [io]") != std::string::npos);

  const fs::path junk = kWork / "junk.feat";
  std::ofstream(junk) << "this is not a feature file";
  const RunResult fmt = run_cli("infer --ckpt " + q(junk) + " --input " + q(junk) + " -o " +
                                q(kWork / "y.csv"));
  CHECK(fmt.code == 4);
  CHECK(fmt.output.find("error: [format]") != std::string::npos);
}

TEST_CASE("featurize emits half-rate mel frames") {
  fs::create_directories(kWork);
  const fs::path wav = kWork / "speechish.wav";
  write_tone(wav, 300.0, 0.4, 1.2);
  const fs::path out = kWork / "speechish.feat";
  CHECK(run_cli("featurize --wav " + q(wav) + " -o " + q(out)).code == 0);
  const si::FeatureSequence f = si::read_feat(out.string());
  CHECK(f.layers == 1);
  CHECK(f.dim == 40);
  CHECK(f.frame_rate_hz == 50.0f);
  CHECK(f.frames == 60);  // 1.2 s at 50 Hz
}

TEST_CASE("corpus generation is reproducible run to run") {
  fs::create_directories(kWork);
  const fs::path a = kWork / "det_a", b = kWork / "det_b";
  const std::string flags =
      "synth-corpus --speakers 3 --utts 1 --train-speakers 1 --dev-speakers 1"
      " --test-speakers 1 --seed 11 -o ";
  REQUIRE(run_cli(flags + q(a)).code == 0);
  REQUIRE(run_cli(flags + q(b)).code == 0);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const nlohmann::json ma = read_json(a / "manifest.json");
  const std::string feat0 = ma.at("utterances").at(0).at("features");
  const std::string targ0 = ma.at("utterances").at(0).at("targets");
  CHECK(slurp(a / feat0) == slurp(b / feat0));
  CHECK(slurp(a / targ0) == slurp(b / targ0));
  CHECK(read_json(a / "run.json").at("command") == "synth-corpus");
}

TEST_CASE("training writes a checkpoint plus its run record") {
  Pipeline& p = pipeline();
  CHECK(fs::exists(p.ckpt));
  const nlohmann::json rec = read_json(fs::path(p.ckpt.string() + ".run.json"));
  CHECK(rec.at("command") == "train");
  CHECK(rec.at("config").at("arch") == "mtl-si");

  const RunResult bad =
      run_cli("train --arch resnet --manifest " + q(p.corpus / "manifest.json") +
              " -o " + q(kWork / "no.sinv"));
  CHECK(bad.code == 5);
  CHECK(bad.output.find("error: [config]") != std::string::npos);
}

TEST_CASE("eval requires an explicit protocol and reports both correctly") {
  Pipeline& p = pipeline();
  const std::string base = "eval --ckpt " + q(p.ckpt) + " --manifest " +
                           q(p.corpus / "manifest.json") + " --split test -o ";

  const RunResult missing = run_cli(base + q(kWork / "r0.json"));
  CHECK(missing.code == 5);
  CHECK(missing.output.find("error: [config]") != std::string::npos);

  CHECK(run_cli(base + q(kWork / "r1.json") + " --unsegmented").code == 0);
  const nlohmann::json unseg = read_json(kWork / "r1.json");
  CHECK(unseg.at("protocol") == "unsegmented");
  CHECK(unseg.at("utterance_count") == 2);
  CHECK(unseg.at("ppmc").contains("VP"));
  const double mean_oral = unseg.at("mean_oral").get<double>();
  CHECK(mean_oral <= 1.0);
  CHECK(mean_oral >= -1.0);

  CHECK(run_cli(base + q(kWork / "r2.json") + " --segment-seconds 2").code == 0);
  const nlohmann::json seg = read_json(kWork / "r2.json");
  CHECK(seg.at("protocol") == "segmented-2s");
  CHECK(seg.at("segment_rule").at("segment_frames") == 200);
  CHECK(seg.at("segment_count").get<int>() >= 2);

  CHECK(run_cli(base + q(kWork / "r3.json") + " --unsegmented --segment-seconds 2").code == 2);
}

TEST_CASE("inference round-trips through files and guards geometry") {
  Pipeline& p = pipeline();
  const nlohmann::json mf = read_json(p.corpus / "manifest.json");
  std::string feat_rel;
  for (const auto& u : mf.at("utterances"))
    if (u.at("split") == "test") feat_rel = u.at("features");
  REQUIRE_FALSE(feat_rel.empty());
  const fs::path feat = p.corpus / feat_rel;

  const fs::path out = kWork / "inferred.csv";
  CHECK(run_cli("infer --ckpt " + q(p.ckpt) + " --input " + q(feat) + " -o " + q(out)).code ==
        0);
  const si::FeatureSequence f = si::read_feat(feat.string());
  const si::TrajectoryTable t = si::read_trajectory_csv(out.string());
  CHECK(t.names.size() == 10);
  CHECK(t.names[0] == "LA");
  CHECK(t.frames() == static_cast<std::size_t>(2 * f.frames));

  // A mel feature file cannot feed an embed-frontend model.
  const fs::path wav = kWork / "mism.wav";
  write_tone(wav, 250.0, 0.4, 1.0);
  const fs::path mel = kWork / "mism.feat";
  REQUIRE(run_cli("featurize --wav " + q(wav) + " -o " + q(mel)).code == 0);
  const RunResult bad =
      run_cli("infer --ckpt " + q(p.ckpt) + " --input " + q(mel) + " -o " + q(kWork / "no.csv"));
  CHECK(bad.code == 5);
  CHECK(bad.output.find("error: [config]") != std::string::npos);
}

TEST_CASE("plots are written as svg") {
  Pipeline& p = pipeline();
  const fs::path csv = kWork / "inferred.csv";
  if (!fs::exists(csv)) return;  // depends on the inference case having run
  const fs::path svg = kWork / "traj.svg";
  CHECK(run_cli("plot --csv " + q(csv) + " -o " + q(svg)).code == 0);
  const std::vector<char> head = slurp(svg);
  REQUIRE(head.size() > 64);
  const std::string start(head.begin(), head.begin() + 5);
  CHECK((start == "<?xml" || start == "<svg "));
}

TEST_CASE("the ablation driver can train a single excluded variant") {
  Pipeline& p = pipeline();
  const fs::path out = kWork / "ablation";
  const RunResult r = run_cli("ablate --manifest " + q(p.corpus / "manifest.json") +
                              " --scale 0.0625 --epochs 1 --batch 4 --quiet"
                              " --exclude VP --exclude 3SF -o " +
                              q(out));
  CHECK(r.code == 0);
  const nlohmann::json j = read_json(out / "ablation.json");
  REQUIRE(j.at("variants").size() == 1);
  CHECK(j.at("variants").at(0).at("label") == "oral");
  CHECK(fs::exists(out / "ablation.txt"));

  CHECK(run_cli("ablate --manifest " + q(p.corpus / "manifest.json") +
                " --exclude TTCD -o " + q(kWork / "abl_bad"))
            .code == 5);
}

TEST_CASE("the gradient self-check passes for a small model") {
  fs::create_directories(kWork);
  const fs::path rep = kWork / "gc.json";
  const RunResult r = run_cli(
      "gradcheck --arch nasal-si --scale 0.125 --frames 6 --seqs 2 --feat-layers 1"
      " --feat-dim 6 -o " +
      q(rep));
  CHECK(r.code == 0);
  const nlohmann::json j = read_json(rep);
  CHECK(j.at("max_rel_err").get<double>() <= 1e-4);
}
