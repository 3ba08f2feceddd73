#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "support.hpp"
#include "toxigan/commands.hpp"
#include "toxigan/errors.hpp"
#include "toxigan/evaluation.hpp"

using namespace toxigan;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json small_config(const fs::path& out) {
  return {{"output_dir", out.string()},
          {"data", {{"source", "synthetic"}, {"n_per_class", 150}}},
          {"generator", {{"pretrain_epochs", 2}, {"batch", 16}}},
          {"ballast", {{"target_size", 10}}},
          {"train", {{"max_epoch", 3}}},
          {"evaluation", {{"seeds", {1, 2}}, {"downstream", {{"epochs", 5}}}}}};
}

fs::path write_config(const testing::TempDir& dir, const json& j, const std::string& name = "cfg.json") {
  testing::write_file(dir / name, j.dump(2));
  return dir / name;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t rows_for(const std::string& csv, const std::string& method) {
  std::size_t n = 0;
  for (const auto& line : lines_of(csv)) n += line.rfind(method + ",", 0) == 0;
  return n;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(TOXIGAN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// One trained run shared by the generate/evaluate/export cases.
struct TrainedRun {
  testing::TempDir dir;
  fs::path out = dir / "run";
  int status = -1;

  TrainedRun() {
    std::ostringstream o, e;
    status = cmd_train({write_config(dir, small_config(out)), {}, false}, o, e);
  }
};

const TrainedRun& trained() {
  static TrainedRun run;
  return run;
}

}  // namespace

TEST_CASE("train writes logs, checkpoints and the effective config") {
  const auto& run = trained();
  REQUIRE(run.status == kExitOk);
  CHECK(fs::exists(run.out / "trainlog.csv"));
  CHECK(fs::exists(run.out / "convergence.csv"));
  CHECK(fs::exists(run.out / "effective_config.json"));
  CHECK(fs::exists(run.out / "checkpoints" / "epoch_0003" / "state.json"));
  CHECK(fs::exists(run.out / "final" / "generator_2.ckpt"));
  CHECK(fs::exists(run.out / "data" / "test.jsonl"));
  CHECK(lines_of(testing::read_file(run.out / "trainlog.csv")).size() == 1 + 3 * 2);
}

TEST_CASE("training is reproducible from the same or the effective config") {
  const auto& run = trained();
  testing::TempDir dir;
  std::ostringstream o, e;
  REQUIRE(cmd_train({write_config(dir, small_config(run.out.parent_path() / "unused")), {"output_dir=" + (dir / "again").string()}, false}, o, e) == kExitOk);
  CHECK(testing::read_file(dir / "again" / "trainlog.csv") ==
        testing::read_file(run.out / "trainlog.csv"));

  json eff = json::parse(testing::read_file(run.out / "effective_config.json"));
  eff["output_dir"] = (dir / "from_effective").string();
  REQUIRE(cmd_train({write_config(dir, eff, "eff.json"), {}, false}, o, e) == kExitOk);
  CHECK(testing::read_file(dir / "from_effective" / "trainlog.csv") ==
        testing::read_file(run.out / "trainlog.csv"));
}

TEST_CASE("train reports invalid configs with exit 2 and the field name") {
  testing::TempDir dir;
  std::ostringstream o, e;
  json j = small_config(dir / "x");
  j.erase("output_dir");
  CHECK(cmd_train({write_config(dir, j), {}, false}, o, e) == kExitConfig);
  CHECK(e.str().find("output_dir") != std::string::npos);

  std::ostringstream o2, e2;
  CHECK(cmd_train({write_config(dir, small_config(dir / "x")), {"train.max_epoch=-2"}, false}, o2, e2) ==
        kExitConfig);
  CHECK(e2.str().find("train.max_epoch") != std::string::npos);

  std::ostringstream o3, e3;
  CHECK(cmd_train({dir / "absent.json", {}, false}, o3, e3) == kExitConfig);
  testing::write_file(dir / "broken.json", "{ not json");
  CHECK(cmd_train({dir / "broken.json", {}, false}, o3, e3) == kExitConfig);
}

TEST_CASE("generate honours the budget and is byte-identical per seed") {
  const auto& run = trained();
  testing::TempDir dir;
  std::ostringstream o, e;
  const fs::path ckpt = run.out / "final";
  REQUIRE(cmd_generate({ckpt, "1:3", 5, dir / "a.jsonl"}, o, e) == kExitOk);
  const auto text = testing::read_file(dir / "a.jsonl");
  const auto lines = lines_of(text);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0].rfind("# toxigan generate checkpoint=", 0) == 0);
  CHECK(lines[0].find("seed=5") != std::string::npos);
  for (std::size_t i = 1; i < 4; ++i) {
    const json row = json::parse(lines[i]);
    CHECK(row["label"] == "toxic1");
    CHECK(row["source"] == "generated");
  }
  REQUIRE(cmd_generate({ckpt, "1:3", 5, dir / "b.jsonl"}, o, e) == kExitOk);
  CHECK(testing::read_file(dir / "b.jsonl") == text);

  REQUIRE(cmd_generate({ckpt, "", 5, dir / "empty.jsonl"}, o, e) == kExitOk);
  const auto empty = lines_of(testing::read_file(dir / "empty.jsonl"));
  REQUIRE(empty.size() == 1);
  CHECK(empty[0][0] == '#');

  CHECK(cmd_generate({ckpt, "0:3", 5, dir / "c.jsonl"}, o, e) == kExitConfig);
  CHECK(cmd_generate({ckpt, "9:3", 5, dir / "c.jsonl"}, o, e) == kExitConfig);
  CHECK(cmd_generate({dir / "nowhere", "1:1", 5, dir / "c.jsonl"}, o, e) == kExitLoad);

  // A checkpoint whose vocabulary no longer matches its generators.
  fs::copy(ckpt, dir / "tampered", fs::copy_options::recursive);
  testing::write_file(dir / "tampered" / "vocab.txt",
                      testing::read_file(ckpt / "vocab.txt") + "intruder\n");
  CHECK(cmd_generate({dir / "tampered", "1:1", 5, dir / "c.jsonl"}, o, e) == kExitLoad);
}

TEST_CASE("budget parsing") {
  const LabelSet labels("neither", {"racism", "sexism"});
  CHECK(parse_budget("1:3,2:0", labels) == std::map<int, int>{{1, 3}, {2, 0}});
  CHECK(parse_budget("sexism=4", labels) == std::map<int, int>{{2, 4}});
  CHECK(parse_budget("", labels).empty());
  CHECK_THROWS_AS(parse_budget("neither=2", labels), ConfigError);
  CHECK_THROWS_AS(parse_budget("spam=2", labels), ConfigError);
  CHECK_THROWS_AS(parse_budget("1:x", labels), ConfigError);
}

TEST_CASE("evaluate writes per-seed and mean rows per method") {
  const auto& run = trained();
  testing::TempDir dir;
  std::ostringstream o, e;
  REQUIRE(cmd_generate({run.out / "final", "1:20,2:20", 1, dir / "gen.jsonl"}, o, e) == kExitOk);
  EvaluateArgs args;
  args.train = run.out / "data" / "train.jsonl";
  args.test = run.out / "data" / "test.jsonl";
  args.augmentations = {{"toxigan", dir / "gen.jsonl"}};
  args.labels = {"neutral", "toxic1", "toxic2"};
  args.toxic_lexicon = run.out / "data" / "toxic_lexicon.txt";
  args.downstream.epochs = 5;
  args.output = dir / "five.csv";
  REQUIRE(cmd_evaluate(args, o, e) == kExitOk);
  const auto five = testing::read_file(dir / "five.csv");
  CHECK(rows_for(five, "base") == 6);
  CHECK(rows_for(five, "oversample") == 6);
  CHECK(rows_for(five, "toxigan") == 6);
  const auto header = fields(lines_of(five)[0]);
  CHECK(header == std::vector<std::string>{"method", "seed", "macro_f1", "hate_f1", "avg_toxicity",
                                           "macro_f1_std", "hate_f1_std", "avg_toxicity_std"});
  for (const auto& line : lines_of(five)) {
    if (line.rfind("toxigan,", 0) == 0) {
      const double tox = std::stod(fields(line)[4]);
      CHECK(tox > 0.0);
      CHECK(tox <= 1.0);
    }
  }

  args.seeds = {3};
  args.output = dir / "one.csv";
  REQUIRE(cmd_evaluate(args, o, e) == kExitOk);
  CHECK(rows_for(testing::read_file(dir / "one.csv"), "toxigan") == 2);

  args.labels = {"neutral", "toxic1"};
  CHECK(cmd_evaluate(args, o, e) == kExitConfig);
}

TEST_CASE("augmenting with the oversampler's own duplicates reproduces its row") {
  const auto& run = trained();
  testing::TempDir dir;
  const LabelSet labels("neutral", {"toxic1", "toxic2"});
  const Corpus train = load_jsonl(run.out / "data" / "train.jsonl", labels);
  const std::uint64_t seed = 4;
  const Corpus os = oversample_baseline(train, {{1, 7}, {2, 5}}, seed);
  Corpus dup = train.empty_like();
  for (std::size_t i = train.size(); i < os.size(); ++i) dup.add(os[i]);
  write_jsonl(dir / "dup.jsonl", dup);

  EvaluateArgs args;
  args.train = run.out / "data" / "train.jsonl";
  args.test = run.out / "data" / "test.jsonl";
  args.augmentations = {{"dup", dir / "dup.jsonl"}};
  args.labels = {"neutral", "toxic1", "toxic2"};
  args.seeds = {seed};
  args.include_base = false;
  args.downstream.epochs = 5;
  args.output = dir / "r.csv";
  std::ostringstream o, e;
  REQUIRE(cmd_evaluate(args, o, e) == kExitOk);
  std::vector<std::string> os_row, dup_row;
  for (const auto& line : lines_of(testing::read_file(dir / "r.csv"))) {
    if (line.rfind("oversample," + std::to_string(seed), 0) == 0) os_row = fields(line);
    if (line.rfind("dup," + std::to_string(seed), 0) == 0) dup_row = fields(line);
  }
  REQUIRE(os_row.size() > 4);
  REQUIRE(dup_row.size() > 4);
  CHECK(os_row[2] == dup_row[2]);
  CHECK(os_row[3] == dup_row[3]);
}

TEST_CASE("ablate runs every mode per seed on one shared split") {
  testing::TempDir dir;
  std::ostringstream o, e;
  AblateArgs args{write_config(dir, small_config(dir / "ab")), {"train.max_epoch=2"}, std::nullopt};
  REQUIRE(cmd_ablate(args, o, e) == kExitOk);
  std::size_t logs = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "ab" / "ablation")) {
    logs += entry.path().filename().string().rfind("seed_", 0) == 0;
  }
  CHECK(logs == 6);
  const auto csv = testing::read_file(dir / "ab" / "ablation" / "ablation.csv");
  const auto header = fields(lines_of(csv)[0]);
  REQUIRE(header.size() == 12);
  CHECK(header[5] == "provider_calls");
  CHECK(header[8] == "split_hash");
  std::set<std::string> split_hashes;
  for (const auto& line : lines_of(csv)) {
    const auto f = fields(line);
    if (f[1] == "mean" || f[0] == "method") continue;
    split_hashes.insert(f[8]);
    if (f[0] == "no_ballast") {
      CHECK(f[5] == "0");
      CHECK(f[6] == "0");
    }
    if (f[0] == "full") CHECK(std::stoi(f[5]) > 0);
    if (f[0] != "oversample") CHECK(f[7] == "0");
  }
  CHECK(split_hashes.size() == 1);
  for (const char* m : {"oversample", "full", "no_ballast", "no_toxicity_step"}) {
    CHECK(rows_for(csv, m) == 3);
  }
}

TEST_CASE("export writes one row per example with backend-width vectors") {
  const auto& run = trained();
  testing::TempDir dir;
  std::ostringstream o, e;
  REQUIRE(cmd_generate({run.out / "final", "1:4,2:3", 2, dir / "gen.jsonl"}, o, e) == kExitOk);
  const fs::path real = run.out / "data" / "val.jsonl";
  const std::size_t n_real = lines_of(testing::read_file(real)).size();
  ExportArgs args{run.out / "final", {real, dir / "gen.jsonl"}, std::nullopt, std::nullopt, dir / "e.csv"};
  REQUIRE(cmd_export_embeddings(args, o, e) == kExitOk);
  const auto rows = lines_of(testing::read_file(dir / "e.csv"));
  REQUIRE(rows.size() == 1 + n_real + 7);
  CHECK(fields(rows[0]).size() == 2 + 64);
  std::set<std::string> sources;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    CHECK(f.size() == 2 + 64);
    sources.insert(f[0]);
  }
  CHECK(sources == std::set<std::string>{"real", "generated"});

  args.embed_dim = 8;
  args.output = dir / "narrow.csv";
  REQUIRE(cmd_export_embeddings(args, o, e) == kExitOk);
  CHECK(fields(lines_of(testing::read_file(dir / "narrow.csv"))[1]).size() == 2 + 8);
}

TEST_CASE("the executable maps failures to exit codes") {
  testing::TempDir dir;
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train") == kExitConfig);
  CHECK(run_cli("frobnicate") == kExitConfig);
  json j = small_config(dir / "x");
  j.erase("output_dir");
  CHECK(run_cli("train " + write_config(dir, j).string()) == kExitConfig);
  CHECK(run_cli("generate " + (dir / "missing").string() + " -o " + (dir / "o.jsonl").string()) ==
        kExitLoad);
  CHECK(run_cli("--kernels scalar train " + write_config(dir, small_config(dir / "ok"), "ok.json").string() +
                " --set train.max_epoch=1") == kExitOk);
  CHECK(fs::exists(dir / "ok" / "trainlog.csv"));
}
