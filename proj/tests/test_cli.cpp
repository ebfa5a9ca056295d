#include <doctest.h>

#include <sys/wait.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "partprompt/cli.hpp"
#include "partprompt/io.hpp"
#include "support.hpp"

using namespace partprompt;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

struct SceneFiles {
  support::TempDir dir;
  SceneFiles() {
    REQUIRE(run({"gen-scene", "--out-dir", dir.path().string(), "--seed", "5", "--height", "16", "--width", "16",
                 "--dim", "8", "--parts", "3"})
                .code == 0);
  }
  std::string operator()(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"prompt", "--pos", "3"}).code == 2);
    CHECK(run({"--help"}).code == 0);
  }

  TEST_CASE("gen-scene writes every artifact") {
    SceneFiles f;
    for (const char* name : {"reference.npy", "reference_mask.pgm", "target.npy", "target_truth.pgm",
                             "reference_parts.pgm", "target_parts.pgm"}) {
      CHECK(std::filesystem::exists(f(name)));
    }
  }

  TEST_CASE("prompt emits the requested cardinalities") {
    SceneFiles f;
    const auto r = run({"prompt", "--ref-feat", f("reference.npy"), "--ref-mask", f("reference_mask.pgm"), "--target",
                        f("target.npy"), "--pos", "3", "--mode", "natural", "--seed", "7"});
    REQUIRE(r.code == 0);
    CHECK(r.out.back() == '\n');
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["positives"].size() == 3);
    CHECK(j["negatives"].size() == 1);
    CHECK(run({"prompt", "--ref-feat", f("reference.npy"), "--ref-mask", f("reference_mask.pgm"), "--target",
               f("target.npy"), "--pos", "3", "--seed", "7"})
              .out == r.out);

    const auto bad = run({"prompt", "--ref-feat", f("reference.npy"), "--ref-mask", f("reference_mask.pgm"),
                          "--target", f("target.npy"), "--neg", "2"});
    CHECK(bad.code == 2);
    const auto missing = run({"prompt", "--ref-feat", f("nope.npy"), "--ref-mask", f("reference_mask.pgm"),
                              "--target", f("target.npy")});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("IoError") != std::string::npos);
  }

  TEST_CASE("image size flags scale prompt pixels") {
    SceneFiles f;
    const auto r = run({"prompt", "--ref-feat", f("reference.npy"), "--ref-mask", f("reference_mask.pgm"), "--target",
                        f("target.npy"), "--image-height", "256", "--image-width", "256"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["positives"][0]["x"].get<int>() % 16 == 8);
  }

  TEST_CASE("distance of identical inputs is zero") {
    SceneFiles f;
    for (const char* measure : {"wasserstein", "sinkhorn", "js", "hungarian"}) {
      // The entropic plan only approaches the diagonal as epsilon shrinks.
      const auto r = run({"distance", "--measure", measure, "--sinkhorn-epsilon", "0.0002", "--a", f("reference.npy"),
                          "--a-mask", f("reference_mask.pgm"), "--b", f("reference.npy"), "--b-mask",
                          f("reference_mask.pgm")});
      REQUIRE(r.code == 0);
      const auto j = nlohmann::json::parse(r.out);
      CHECK(j["value"].get<double>() <= (std::string(measure) == "sinkhorn" ? 1e-6 : 1e-9));
    }
    CHECK(run({"distance", "--measure", "emd", "--a", f("reference.npy"), "--a-mask", f("reference_mask.pgm"), "--b",
               f("reference.npy"), "--b-mask", f("reference_mask.pgm")})
              .code == 2);
  }

  TEST_CASE("retrieve, then segment-mock reproduces the winner mask") {
    SceneFiles f;
    const auto r = run({"retrieve", "--ref-feat", f("reference.npy"), "--ref-mask", f("reference_mask.pgm"),
                        "--target", f("target.npy"), "--mask-out", f("winner.pgm"), "--out", f("outcome.json"),
                        "--jobs", "2"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(io::read_file(f("outcome.json")));
    CHECK(j["trials"].size() == 5);
    io::write_file(f("prompts.json"), j["prompts"].dump());
    REQUIRE(run({"segment-mock", "--target", f("target.npy"), "--prompts", f("prompts.json"), "--out", f("again.pgm")})
                .code == 0);
    CHECK(io::read_file(f("again.pgm")) == io::read_file(f("winner.pgm")));
  }

  TEST_CASE("bench writes JSON and CSV") {
    SceneFiles f;
    io::write_file(f("b.toml"), "[[scenes]]\ncount = 2\nheight = 12\nwidth = 12\ndim = 6\nparts = 2\n[[methods]]\npos = 2\n");
    const auto r = run({"bench", "--config", f("b.toml"), "--csv", f("b.csv"), "--seed", "4"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["seed"] == 4);
    CHECK(j["rows"].size() == 2);
    CHECK(std::filesystem::exists(f("b.csv")));

    io::write_file(f("bad.toml"), "seed = 1\nbogus = 2\n");
    const auto bad = run({"bench", "--config", f("bad.toml")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("bad.toml:2") != std::string::npos);
  }

  TEST_CASE("the installed binary maps usage errors to exit 2") {
    const int status = std::system((std::string(PARTPROMPT_CLI_PATH) + " bogus >/dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
  }
}
