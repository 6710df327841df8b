#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "boxenergy/commands.hpp"
#include "boxenergy/dataset_io.hpp"
#include "boxenergy/synthetic.hpp"

using namespace boxenergy;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("boxenergy_cmd_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// Two small synthetic images with two objects each, written once per process.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("dataset");
    synthetic::write_dataset(d, 3, 2, 2);
    return d;
  }();
  return dir;
}

SegmentOptions quick_segment(const fs::path& out, int threads) {
  SegmentOptions o;
  o.annotations = dataset() / "annotations.json";
  o.images = dataset() / "images";
  o.out = out;
  o.optimizer.steps = 60;
  o.threads = threads;
  return o;
}

}  // namespace

TEST_CASE("parallel_for visits every index once and propagates errors") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(50, 4,
                               [](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("should not run"); });
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) >= 1);
  ::setenv("BOXENERGY_THREADS", "2", 1);
  CHECK(resolve_threads(16) == 2);
  CHECK(resolve_threads(1) == 1);
  ::unsetenv("BOXENERGY_THREADS");
  CHECK(resolve_threads(5) == 5);
}

TEST_CASE("segment writes one mask and one report line per instance") {
  const fs::path out = fresh_dir("segment");
  SegmentOptions o = quick_segment(out, 2);
  o.traces = true;
  o.overlays = true;
  const SegmentSummary s = run_segment(o);
  CHECK(s.instances == 4);
  CHECK(s.diagnostics.empty());

  const auto report = lines_of(slurp(out / "report.jsonl"));
  REQUIRE(report.size() == 4);
  for (const std::string& line : report) {
    const json r = json::parse(line);
    CHECK(fs::exists(out / r["mask_file"].get<std::string>()));
    CHECK(fs::exists(out / "overlays" / r["mask_file"].get<std::string>()));
    CHECK(r["l_mask"].get<double>() ==
          doctest::Approx(r["l_proj"].get<double>() + r["l_pairwise"].get<double>()));
    CHECK(r["iterations"].get<int>() > 0);
  }
  CHECK(json::parse(report[0])["image_id"] == 1);
  CHECK(json::parse(report[1])["instance"] == 1);

  const auto trace = lines_of(slurp(out / "traces" / "1_0.jsonl"));
  CHECK(trace.size() > 2);
  CHECK(json::parse(trace.front())["level"] == 1);
  CHECK(json::parse(trace.back())["level"] == 0);

  const json meta = json::parse(slurp(out / "run_metadata.json"));
  CHECK(meta["command"] == "segment");
  CHECK(meta["config"]["optimizer"]["steps"] == 60);
  CHECK(meta["pairwise_weight_nondefault"] == false);
  CHECK(meta["config_fingerprint"] == json::parse(report[0])["config_fingerprint"]);
  CHECK_FALSE(meta["config"].contains("threads"));
}

TEST_CASE("nondefault pairwise weight is flagged in the metadata") {
  const fs::path out = fresh_dir("weight");
  SegmentOptions o = quick_segment(out, 4);
  o.energy.pairwise_weight = 0.5;
  o.optimizer.steps = 5;
  run_segment(o);
  CHECK(json::parse(slurp(out / "run_metadata.json"))["pairwise_weight_nondefault"] == true);
}

TEST_CASE("segment output does not depend on the thread count") {
  const fs::path a = fresh_dir("threads1");
  const fs::path b = fresh_dir("threads8");
  run_segment(quick_segment(a, 1));
  run_segment(quick_segment(b, 8));
  CHECK(slurp(a / "report.jsonl") == slurp(b / "report.jsonl"));
  CHECK(slurp(a / "run_metadata.json") == slurp(b / "run_metadata.json"));
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() == ".png") {
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
  }
}

TEST_CASE("a missing image becomes a diagnostic, not a crash") {
  const fs::path dir = fresh_dir("missing_image");
  fs::copy(dataset() / "annotations.json", dir / "annotations.json");
  fs::create_directories(dir / "images");
  fs::copy(dataset() / "images" / "000001.png", dir / "images" / "000001.png");
  SegmentOptions o = quick_segment(dir / "out", 2);
  o.annotations = dir / "annotations.json";
  o.images = dir / "images";
  o.optimizer.steps = 5;
  const SegmentSummary s = run_segment(o);
  CHECK(s.instances == 4);
  CHECK(s.diagnostics.size() == 2);
  CHECK_FALSE(s.ok());
  CHECK(lines_of(slurp(dir / "out" / "report.jsonl")).size() == 2);
}

TEST_CASE("stats aggregates every instance and requires gt") {
  StatsOptions o;
  o.annotations = dataset() / "annotations.json";
  o.images = dataset() / "images";
  o.taus = {0.2, 0.0, 0.1};
  o.threads = 3;
  const StatsResult r = run_stats(o);
  CHECK(r.instances == 4);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].tau == 0.0);
  CHECK(r.rows[0].n_confident >= r.rows[1].n_confident);
  CHECK(r.rows[1].n_confident >= r.rows[2].n_confident);
  CHECK(*r.rows[0].recall_positive == 1.0);

  o.threads = 1;
  const StatsResult serial = run_stats(o);
  CHECK(serial.rows[1].n_confident == r.rows[1].n_confident);

  o.universe = EdgeUniverse::All;
  CHECK(run_stats(o).rows[0].n_confident > r.rows[0].n_confident);

  const fs::path dir = fresh_dir("no_gt");
  json doc = json::parse(slurp(dataset() / "annotations.json"));
  doc["annotations"][1].erase("segmentation");
  std::ofstream(dir / "annotations.json") << doc.dump();
  o.annotations = dir / "annotations.json";
  try {
    run_stats(o);
    FAIL("expected DatasetError");
  } catch (const DatasetError& e) {
    CHECK(std::string(e.what()).find("1/2") != std::string::npos);
  }
}

TEST_CASE("edge universe names") {
  CHECK(parse_edge_universe("all") == EdgeUniverse::All);
  CHECK(std::string(to_string(EdgeUniverse::InBox)) == "in_box");
  CHECK_THROWS(parse_edge_universe("everything"));
}

#ifdef BOXENERGY_CLI_PATH
TEST_CASE("the command line echoes explicit overrides") {
  const fs::path out = fresh_dir("cli");
  const std::string cmd = std::string("\"") + BOXENERGY_CLI_PATH + "\" segment --annotations \"" +
                          (dataset() / "annotations.json").string() + "\" --images \"" +
                          (dataset() / "images").string() + "\" --out \"" + out.string() +
                          "\" --steps 3 --tau 0.2 --threads 2 > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  CHECK(rc != -1);
  const json meta = json::parse(slurp(out / "run_metadata.json"));
  CHECK(meta["overrides"] == json({{"steps", "3"}, {"tau", "0.2"}}));
  CHECK(meta["config"]["energy"]["tau"] == 0.2);

  const std::string bad = std::string("\"") + BOXENERGY_CLI_PATH +
                          "\" segment --annotations x --images y --out z --tua 0.2 > /dev/null 2>&1";
  CHECK(std::system(bad.c_str()) != 0);
}
#endif
