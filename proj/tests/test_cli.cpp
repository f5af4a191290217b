#include <doctest.h>

#include <functional>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "oracles.hpp"
#include "tscal/cli.hpp"
#include "tscal/interchange.hpp"

using namespace tscal;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string s(const fs::path& p) { return p.string(); }

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

// Logits whose argmax reproduces TP=490, FN=13, FP=3, TN=415.
LabeledLogits reference_counts_logits() {
  std::vector<int> labels;
  std::vector<double> z;
  auto add = [&](int label, int pred, int count) {
    for (int i = 0; i < count; ++i) {
      labels.push_back(label);
      z.push_back(pred == 0 ? 2.0 : 0.0);
      z.push_back(pred == 1 ? 2.0 : 0.0);
    }
  };
  add(1, 1, 490);
  add(1, 0, 13);
  add(0, 1, 3);
  add(0, 0, 415);
  return LabeledLogits(2, labels, z);
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(read_text_file(p)); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors and help") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"--help"}).code == kExitOk);
    CHECK(run({"calibrate"}).code == kExitUsage);
    CHECK(run({"--ece-bins", "0", "evaluate", "--logits", "x", "--report", "y"}).code == kExitUsage);
  }

  TEST_CASE("gen-data writes images and a manifest deterministically") {
    const auto dir = oracle::scratch_dir("gen");
    const auto r = run({"--seed", "17", "gen-data", "--out-dir", s(dir / "a"), "--n-per-class", "5", "--side", "32"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("10") != std::string::npos);
    CHECK(count_files(dir / "a", ".pgm") == 10);
    const auto manifest = read_manifest(dir / "a" / "manifest.csv");
    CHECK(manifest.entries.size() == 10);
    REQUIRE(run({"--seed", "17", "gen-data", "--out-dir", s(dir / "b"), "--n-per-class", "5", "--side", "32"}).code ==
            kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      CHECK(read_text_file(e.path()) == read_text_file(dir / "b" / e.path().filename()));
    }
    write_text_file(dir / "file", "x");
    const auto bad = run({"gen-data", "--out-dir", s(dir / "file" / "sub"), "--n-per-class", "1"});
    CHECK(bad.code == kExitUsage);
    CHECK_FALSE(bad.err.empty());
    fs::remove_all(dir);
  }

  TEST_CASE("inject-noise") {
    const auto dir = oracle::scratch_dir("inject");
    REQUIRE(run({"gen-data", "--out-dir", s(dir / "clean"), "--n-per-class", "5", "--side", "32"}).code == kExitOk);
    const auto manifest = s(dir / "clean" / "manifest.csv");

    REQUIRE(run({"inject-noise", "--manifest", manifest, "--out-dir", s(dir / "g"), "--noise", "gaussian", "--mu", "0.0",
                 "--sigma", "0.02"})
                .code == kExitOk);
    CHECK(count_files(dir / "g", ".pgm") == 10);
    CHECK(read_manifest(dir / "g" / "manifest.csv").entries.size() == 10);

    REQUIRE(run({"inject-noise", "--manifest", manifest, "--out-dir", s(dir / "u"), "--noise", "uniform", "--scale", "0"})
                .code == kExitOk);
    for (const auto& e : read_manifest(dir / "clean" / "manifest.csv").entries) {
      CHECK(read_text_file(dir / "u" / e.path) == read_text_file(dir / "clean" / e.path));
    }

    const auto base = std::vector<std::string>{"inject-noise", "--manifest", manifest, "--out-dir", s(dir / "x")};
    auto with = [&](std::vector<std::string> extra) {
      auto args = base;
      args.insert(args.end(), extra.begin(), extra.end());
      return run(args).code;
    };
    CHECK(with({"--noise", "poisson", "--scale", "-1"}) == kExitUsage);
    CHECK(with({"--noise", "rician", "--scale", "1"}) == kExitUsage);
    CHECK(with({"--noise", "gaussian"}) == kExitUsage);
    CHECK(with({"--noise", "uniform", "--scale", "0.1", "--sigma", "0.2"}) == kExitUsage);
    CHECK(with({"--noise", "salt-pepper", "--salt-prob", "0.7", "--pepper-prob", "0.7"}) == kExitUsage);
    CHECK(with({"--noise", "salt-pepper", "--salt-prob", "0.1", "--pepper-prob", "0.1"}) == kExitOk);
    fs::remove_all(dir);
  }

  TEST_CASE("train, predict, calibrate and evaluate") {
    const auto dir = oracle::scratch_dir("pipeline");
    REQUIRE(run({"--seed", "1", "gen-data", "--out-dir", s(dir / "train"), "--n-per-class", "20"}).code == kExitOk);
    REQUIRE(run({"--seed", "2", "gen-data", "--out-dir", s(dir / "val"), "--n-per-class", "10"}).code == kExitOk);
    REQUIRE(run({"--seed", "3", "train", "--manifest", s(dir / "train" / "manifest.csv"), "--model-out",
                 s(dir / "model.json"), "--epochs", "20"})
                .code == kExitOk);
    REQUIRE(run({"predict", "--model", s(dir / "model.json"), "--manifest", s(dir / "val" / "manifest.csv"), "--out",
                 s(dir / "val.csv")})
                .code == kExitOk);
    const auto logits = read_logits_csv(dir / "val.csv");
    CHECK(logits.size() == 20);
    CHECK(logits.num_classes() == 2);

    const auto cal = run({"calibrate", "--logits", s(dir / "val.csv"), "--out", s(dir / "cal.json")});
    REQUIRE(cal.code == kExitOk);
    const auto j = load_json(dir / "cal.json");
    for (const char* key : {"temperature", "nll_before", "nll_after", "converged", "evaluations"}) CHECK(j.contains(key));
    REQUIRE(run({"evaluate", "--logits", s(dir / "val.csv"), "--calibration", s(dir / "cal.json"), "--report",
                 s(dir / "report.json")})
                .code == kExitOk);
    // Reports carry 6 decimals.
    CHECK(load_json(dir / "report.json")["temperature"].get<double>() ==
          doctest::Approx(j["temperature"].get<double>()).epsilon(1e-6));
    fs::remove_all(dir);
  }

  TEST_CASE("calibrate fixtures") {
    const auto dir = oracle::scratch_dir("calibrate");
    write_logits_csv(LabeledLogits(2, {1, 0}, {5.0, 0.0, 0.0, 5.0}), dir / "wrong.csv");
    const auto r = run({"calibrate", "--logits", s(dir / "wrong.csv"), "--out", s(dir / "wrong.json")});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out == "20.000\n");
    CHECK(r.err.find("bound") != std::string::npos);
    CHECK(load_json(dir / "wrong.json")["at_boundary"] == true);

    oracle::Rng rng(71);
    std::vector<int> labels(10000);
    std::vector<double> z(20000);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double q = oracle::uniform(rng, 0.02, 0.98);
      z[2 * i] = std::log(1 - q);
      z[2 * i + 1] = std::log(q);
      labels[i] = oracle::uniform(rng, 0, 1) < q;
    }
    write_logits_csv(LabeledLogits(2, labels, z), dir / "calibrated.csv");
    const auto c = run({"calibrate", "--logits", s(dir / "calibrated.csv"), "--out", s(dir / "c.json")});
    REQUIRE(c.code == kExitOk);
    CHECK(std::fabs(std::stod(c.out) - 1.0) <= 0.05);

    write_text_file(dir / "empty.csv", "");
    CHECK(run({"calibrate", "--logits", s(dir / "empty.csv"), "--out", s(dir / "e.json")}).code == kExitUsage);
    CHECK(run({"calibrate", "--logits", s(dir / "missing.csv"), "--out", s(dir / "e.json")}).code == kExitUsage);
    fs::remove_all(dir);
  }

  TEST_CASE("evaluate reports, temperatures and the reliability diagram") {
    const auto dir = oracle::scratch_dir("evaluate");
    write_logits_csv(reference_counts_logits(), dir / "test.csv");
    REQUIRE(run({"evaluate", "--logits", s(dir / "test.csv"), "--report", s(dir / "t1.json"), "--svg", s(dir / "r.svg")})
                .code == kExitOk);
    REQUIRE(run({"--ece-bins", "10", "evaluate", "--logits", s(dir / "test.csv"), "--temperature", "2", "--report",
                 s(dir / "t2.json")})
                .code == kExitOk);
    const auto a = load_json(dir / "t1.json");
    const auto b = load_json(dir / "t2.json");
    CHECK(a["accuracy"].get<double>() == doctest::Approx(0.982627).epsilon(1e-6));
    CHECK(a["macro_precision"].get<double>() == doctest::Approx(0.981770).epsilon(1e-6));
    CHECK(a["confusion"]["tp"] == 490);
    CHECK(a["confusion"]["fn"] == 13);
    CHECK(a["confusion"]["fp"] == 3);
    CHECK(a["confusion"]["tn"] == 415);
    CHECK(a["confusion"] == b["confusion"]);
    CHECK(a["macro_f1"] == b["macro_f1"]);
    CHECK(a["nll"] != b["nll"]);
    CHECK(a["ece"] != b["ece"]);
    CHECK(a["ece_bins"] == 15);
    CHECK(b["ece_bins"] == 10);
    CHECK(b["bin_stats"].size() == 10);

    boost::property_tree::ptree tree;
    boost::property_tree::read_xml((dir / "r.svg").string(), tree);
    std::size_t bars = 0;
    std::function<void(const boost::property_tree::ptree&)> walk = [&](const boost::property_tree::ptree& node) {
      for (const auto& child : node) {
        if (child.first == "rect" && child.second.get<std::string>("<xmlattr>.class", "") == "bar") ++bars;
        walk(child.second);
      }
    };
    walk(tree.get_child("svg"));
    CHECK(bars == 15);

    CHECK(run({"evaluate", "--logits", s(dir / "test.csv"), "--temperature", "25", "--report", s(dir / "x.json")}).code ==
          kExitUsage);
    write_text_file(dir / "bad.csv", "label,logit_0,logit_1\n0,1,oops\n");
    CHECK(run({"evaluate", "--logits", s(dir / "bad.csv"), "--report", s(dir / "x.json")}).code == kExitUsage);
    fs::remove_all(dir);
  }

  TEST_CASE("sweep subcommand") {
    const auto dir = oracle::scratch_dir("sweep");
    const std::vector<std::string> args{"sweep", "--n-per-class", "20", "--epochs", "5"};
    auto with_out = [&](const std::string& name) {
      auto a = args;
      a.insert(a.end(), {"--out-csv", s(dir / (name + ".csv")), "--out-md", s(dir / (name + ".md"))});
      return run(a).code;
    };
    REQUIRE(with_out("a") == kExitOk);
    REQUIRE(with_out("b") == kExitOk);
    const auto csv = read_text_file(dir / "a.csv");
    CHECK(csv == read_text_file(dir / "b.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 39);
    const auto md = read_text_file(dir / "a.md");
    CHECK(std::count(md.begin(), md.end(), '\n') == 40);
    CHECK(run({"sweep", "--n-per-class", "0", "--out-csv", s(dir / "c.csv")}).code == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "c.csv"));
    fs::remove_all(dir);
  }
}
