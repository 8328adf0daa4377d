#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "run_config.hpp"

namespace fs = std::filesystem;
using llm3dti::cli::ConfigError;
using llm3dti::cli::RunConfig;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "llm3dti-cli-test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + LLM3DTI_CLI_PATH + "\" " + args +
                          " > \"" + (scratch() / "stdout.txt").string() + "\" 2> \"" +
                          (scratch() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small synthetic world, written once.
const fs::path& world() {
  static const fs::path dir = [] {
    const fs::path d = scratch() / "world";
    const int code = run("synth --synth.out " + d.string() +
                         " --synth.drugs 24 --synth.proteins 30 --synth.structure_groups 2"
                         " --synth.text_groups 2 --synth.text_dim 8 --output.dir " +
                         (scratch() / "synth-run").string());
    REQUIRE(code == 0);
    return d;
  }();
  return dir;
}

std::string base_args() {
  return "-c " + (world() / "synthetic.conf").string() +
         " --dca.dim.drug 8 --dca.dim.protein 8 --train.hidden 8 --train.epochs 2 --seeds 0";
}

}  // namespace

TEST_CASE("config defaults, parsing and precedence") {
  RunConfig cfg;
  CHECK(cfg.count("train.epochs") == 100);
  CHECK(cfg.u64s("seeds") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(cfg.real("rwr.restart") == 0.5);
  CHECK_FALSE(cfg.flag("evaluate.dump"));

  cfg.load_text("# comment\n\ntrain.epochs = 7\ntrain.lr=0.01\n", "inline");
  CHECK(cfg.count("train.epochs") == 7);
  CHECK(cfg.real("train.lr") == 0.01);
  cfg.set("train.epochs", "3");
  CHECK(cfg.count("train.epochs") == 3);
  CHECK(cfg.dump().find("train.epochs = 3\n") != std::string::npos);

  CHECK_THROWS_AS(cfg.set("train.nope", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.load_text("train.epochs\n", "inline"), ConfigError);
  cfg.set("train.lr", "fast");
  CHECK_THROWS_AS(cfg.real("train.lr"), ConfigError);
  cfg.set("evaluate.dump", "maybe");
  CHECK_THROWS_AS(cfg.flag("evaluate.dump"), ConfigError);
  CHECK_THROWS_AS(cfg.load_file(scratch() / "absent.conf"), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("train --dataset " + (scratch() / "missing.tsv").string()) == 3);
  CHECK(run("train " + base_args() + " --train.variant bogus --output.dir " +
            (scratch() / "bad-variant").string()) == 2);
  CHECK(run("train " + base_args() + " --train.epochs many --output.dir " +
            (scratch() / "bad-number").string()) == 2);
  const fs::path bad_conf = scratch() / "bad.conf";
  std::ofstream(bad_conf) << "train.unknown = 1\n";
  CHECK(run("train -c " + bad_conf.string()) == 2);
  CHECK(run("features " + base_args() + " --rwr.max_iter 1 --output.dir " +
            (scratch() / "no-converge").string()) == 4);
  CHECK(run("train " + base_args() + " --dataset " + (world() / "text" / "drug.tsv").string() +
            " --output.dir " + (scratch() / "bad-dataset").string()) == 3);
}

TEST_CASE("flags override the config file") {
  const fs::path conf = scratch() / "override.conf";
  std::ofstream(conf) << read_file(world() / "synthetic.conf") << "train.epochs = 5\n";
  const fs::path out = scratch() / "override";
  REQUIRE(run("train -c " + conf.string() +
              " --dca.dim.drug 8 --dca.dim.protein 8 --train.hidden 8 --seeds 0"
              " --train.epochs 1 --output.dir " + out.string()) == 0);
  CHECK(read_file(out / "config.txt").find("train.epochs = 1\n") != std::string::npos);
  const std::string history = read_file(out / "seed-0" / "history.jsonl");
  CHECK(history.find("\"epoch\":1") != std::string::npos);
  CHECK(history.find("\"epoch\":2") == std::string::npos);
}

TEST_CASE("output root from the environment names run directories") {
  const fs::path root = scratch() / "env-root";
  REQUIRE(run("train " + base_args(), "LLM3DTI_OUTPUT_ROOT=" + root.string()) == 0);
  std::size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(root)) {
    ++dirs;
    CHECK(e.path().filename().string().starts_with("train-"));
    CHECK(e.path().filename().string().ends_with("-s0"));
    CHECK(fs::exists(e.path() / "run_info.json"));
    CHECK(fs::exists(e.path() / "aggregate.json"));
  }
  CHECK(dirs == 1);
}

TEST_CASE("reruns are bit-identical") {
  const fs::path a = scratch() / "rerun-a", b = scratch() / "rerun-b";
  REQUIRE(run("train " + base_args() + " --output.dir " + a.string()) == 0);
  REQUIRE(run("train " + base_args() + " --output.dir " + b.string()) == 0);
  CHECK(read_file(a / "seed-0" / "metrics.json") == read_file(b / "seed-0" / "metrics.json"));
  CHECK(read_file(a / "seed-0" / "best.ckpt") == read_file(b / "seed-0" / "best.ckpt"));
  CHECK(read_file(a / "aggregate.json") == read_file(b / "aggregate.json"));

  const fs::path fa = scratch() / "features-a", fb = scratch() / "features-b";
  REQUIRE(run("features " + base_args() + " --output.dir " + fa.string()) == 0);
  REQUIRE(run("features " + base_args() + " --output.dir " + fb.string()) == 0);
  CHECK(read_file(fa / "drug_topology.emb1") == read_file(fb / "drug_topology.emb1"));
  CHECK(read_file(fa / "protein_topology.emb1") == read_file(fb / "protein_topology.emb1"));
  CHECK(fs::exists(fa / "provenance.json"));
}

TEST_CASE("precomputed topology, evaluate and representation dump") {
  const fs::path feat = scratch() / "features-eval";
  REQUIRE(run("features " + base_args() + " --output.dir " + feat.string()) == 0);
  const fs::path trained = scratch() / "train-topo";
  const std::string topo = " --topology.drug " + (feat / "drug_topology.emb1").string() +
                           " --topology.protein " + (feat / "protein_topology.emb1").string();
  REQUIRE(run("train " + base_args() + topo + " --output.dir " + trained.string()) == 0);
  const fs::path eval = scratch() / "evaluate";
  REQUIRE(run("evaluate " + base_args() + topo + " --evaluate.checkpoint " +
              (trained / "seed-0" / "best.ckpt").string() + " --evaluate.dump true --output.dir " +
              eval.string()) == 0);
  CHECK(read_file(eval / "metrics.json").find("\"auroc\"") != std::string::npos);
  CHECK(fs::exists(eval / "representations.emb1"));
  CHECK(fs::exists(eval / "representations.emb1.labels.tsv"));
  CHECK(fs::exists(eval / "predictions.tsv"));
}

TEST_CASE("protocol commands write their reports") {
  const fs::path sweep = scratch() / "sweep";
  REQUIRE(run("sweep " + base_args() +
              " --sweep.param ratio --sweep.values 1,2 --sweep.losses bce,focal --output.dir " +
              sweep.string()) == 0);
  for (const char* label : {"ratio1-bce", "ratio1-focal", "ratio2-bce", "ratio2-focal"})
    CHECK(fs::exists(sweep / label / "seed-0" / "metrics.json"));
  CHECK(fs::exists(sweep / "welch.json"));

  const fs::path cold = scratch() / "cold";
  REQUIRE(run("coldstart " + base_args() + " --coldstart.fractions 0.3,0.5 --output.dir " +
              cold.string()) == 0);
  CHECK(read_file(cold / "coldstart.tsv").starts_with("fraction\tauroc_mean"));

  const fs::path ablate = scratch() / "ablate";
  REQUIRE(run("ablate " + base_args() + " --ablate.variants full,wo_cra --output.dir " +
              ablate.string()) == 0);
  CHECK(fs::exists(ablate / "wo_cra" / "seed-0" / "history.jsonl"));

  const fs::path cs = scratch() / "casestudy";
  REQUIRE(run("casestudy " + base_args() + " --casestudy.holdout D0000 --output.dir " +
              cs.string()) == 0);
  CHECK(read_file(cs / "seed-0" / "case_study.tsv").find("D0000") != std::string::npos);
}
