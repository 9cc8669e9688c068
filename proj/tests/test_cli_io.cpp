#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "groklens/fetch.hpp"
#include "groklens/groklens.hpp"

using namespace groklens;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("groklens_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const fs::path& path) { return read_all(path); }

int count(const std::string& haystack, const std::string& needle) {
  int n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

/// Runs the CLI binary; returns its exit status.
int cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = std::string(GROKLENS_CLI) + " " + args;
  cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string idx_bytes(std::uint32_t magic, std::uint32_t count, std::size_t payload) {
  std::ostringstream os;
  detail::write_be32(os, magic);
  detail::write_be32(os, count);
  if (magic == kIdxImageMagic) {
    detail::write_be32(os, 2);
    detail::write_be32(os, 2);
  }
  for (std::size_t i = 0; i < payload; ++i) os.put(static_cast<char>(i % 10));
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// config

TEST(ConfigParse, EmptySynthConfigGetsFamilyDefaults) {
  const auto c = parse_config_text(R"({"family": "synth1d"})");
  EXPECT_EQ(c, default_config(Family::synth1d));
  EXPECT_EQ(c.hidden_widths, (std::vector<int>{200, 200, 200, 100}));
  EXPECT_EQ(c.lr, 2e-6);
  EXPECT_EQ(c.activation, Activation::sin);
  EXPECT_EQ(c.optimizer, OptimizerKind::adam);
}

TEST(ConfigParse, ActivationSelectsItsSchedule) {
  const auto c = parse_config_text(R"({"family": "synth1d", "activation": "relu"})");
  EXPECT_EQ(c.lr, 2e-5);
  EXPECT_EQ(c.epochs, 19900);
  const auto m = parse_config_text(R"({"family": "mnist", "alpha": 1})");
  EXPECT_EQ(m.optimizer, OptimizerKind::sgd);
}

TEST(ConfigParse, ErrorsNameTheKey) {
  auto message = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"family": "synth1d", "epochs": "abc"})").find("'epochs'"), std::string::npos);
  EXPECT_NE(message(R"({"family": "synth1d", "epochz": 3})").find("'epochz'"), std::string::npos);
  EXPECT_NE(message(R"({"epochs": 3})").find("'family'"), std::string::npos);
  EXPECT_NE(message(R"({"family": "synth1d", "lr": {"x": 1}})").find("'lr'"), std::string::npos);
  EXPECT_NE(message(R"({"family": "synth1d", "n": 2.5})").find("'n'"), std::string::npos);
  EXPECT_NE(message(R"({"family": "synth1d", "hidden_widths": [1, "a"]})").find("'hidden_widths'"),
            std::string::npos);
  EXPECT_NE(message(R"({"family": "synth1d", "activation": "gelu"})").find("'activation'"), std::string::npos);
  EXPECT_NE(message(R"({"family": "cifar"})").find("cifar"), std::string::npos);
  EXPECT_NE(message("{not json").find("malformed"), std::string::npos);
  EXPECT_NE(message(R"({"family": "parity", "proportion": 1.5})").find("proportion"), std::string::npos);
}

TEST(ConfigParse, RoundTripIsIdempotent) {
  for (const auto& text : {std::string(R"({"family": "synth1d", "n": 1000, "nonuniform": true})"),
                           std::string(R"({"family": "parity", "proportion": 0.2, "parity_indices": [1, 3]})"),
                           std::string(R"({"family": "mnist", "alpha": 1, "test_size": 500, "mnist_dir": "/x"})")}) {
    const auto a = parse_config_text(text);
    const auto text2 = serialize_config(a);
    const auto b = parse_config_text(text2);
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_config(b), text2);
  }
}

TEST(ConfigParse, FileErrors) {
  EXPECT_THROW(parse_config_file("/nonexistent/config.json"), ConfigError);
}

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, NumbersRoundTripExactly) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(200)) - 100);
    std::istringstream in("x\n" + format_number(v) + "\n");
    EXPECT_EQ(parse_csv(in).rows[0][0], v);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, ParseErrors) {
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(parse_csv(ragged), DataError);
  std::istringstream text("a\nhello\n");
  EXPECT_THROW(parse_csv(text), DataError);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), DataError);
  std::istringstream ok("a, b\n1, 2\n");
  const auto t = parse_csv(ok);
  EXPECT_EQ(t.column("b")[0], 2.0);
  EXPECT_THROW(t.column("c"), DataError);
}

// ---------------------------------------------------------------------------
// plots

TEST(Plot, TwoSeriesTwoPolylines) {
  const auto dir = scratch_dir("plot");
  write_text(dir / "loss.csv", "epoch,train_loss,test_loss\n0,1,1\n1,0.5,1.2\n2,0.1,0.9\n");
  PlotSpec spec;
  spec.panels.push_back({"loss", {{"train", dir / "loss.csv", "epoch", "train_loss"},
                                  {"test", dir / "loss.csv", "epoch", "test_loss"}}});
  spec.y_scale = AxisScale::log;
  const auto svg = render_svg(spec);
  EXPECT_EQ(count(svg, "<polyline class=\"series\""), 2);
  EXPECT_EQ(count(svg, "<g class=\"panel\">"), 1);
  EXPECT_EQ(svg, render_svg(spec));
  EXPECT_EQ(svg.find("id="), std::string::npos);
  fs::remove_all(dir);
}

TEST(Plot, ThreeSnapshotPanels) {
  const auto dir = scratch_dir("plot3");
  PlotSpec spec;
  for (int e : {0, 2000, 35000}) {
    const auto f = dir / ("s" + std::to_string(e) + ".csv");
    write_text(f, "k,amplitude\n0,0.1\n1,0.3\n2,0.2\n");
    spec.panels.push_back({"epoch " + std::to_string(e), {{"output", f, "k", "amplitude"}, {"target", f, "k", "amplitude"}}});
  }
  const auto svg = render_svg(spec);
  EXPECT_EQ(count(svg, "<g class=\"panel\">"), 3);
  EXPECT_EQ(count(svg, "<polyline class=\"series\""), 6);
  fs::remove_all(dir);
}

TEST(Plot, Errors) {
  const auto dir = scratch_dir("plote");
  write_text(dir / "a.csv", "x,y\n0,1\n");
  PlotSpec spec;
  EXPECT_THROW(render_svg(spec), ConfigError);
  spec.panels.push_back({"p", {}});
  EXPECT_THROW(render_svg(spec), ConfigError);
  spec.panels[0].series.push_back({"s", dir / "a.csv", "x", "z"});
  EXPECT_THROW(render_svg(spec), DataError);
  spec.panels[0].series[0].csv = dir / "missing.csv";
  EXPECT_THROW(render_svg(spec), DataError);
  fs::remove_all(dir);
}

TEST(Plot, SpecFromJson) {
  const auto j = nlohmann::json::parse(R"({"title": "t", "y_scale": "log", "output": "o.svg",
      "panels": [{"title": "p", "series": [{"name": "a", "csv": "a.csv", "x": "epoch", "y": "loss"}]}]})");
  const auto spec = plot_spec_from_json(j, "/base");
  EXPECT_EQ(spec.y_scale, AxisScale::log);
  EXPECT_EQ(spec.panels[0].series[0].csv, fs::path("/base/a.csv"));
  EXPECT_EQ(spec.output, fs::path("/base/o.svg"));
  EXPECT_THROW(plot_spec_from_json(nlohmann::json::parse(R"({"x_scale": "cubic"})")), ConfigError);
}

// ---------------------------------------------------------------------------
// manifests

TEST(Manifest, HashesVerifyAndDetectTampering) {
  const auto dir = scratch_dir("manifest");
  fs::create_directories(dir / "sub");
  write_text(dir / "a.csv", "x\n1\n");
  write_text(dir / "sub" / "b.csv", "y\n2\n");
  RunManifest m;
  m.config = default_config(Family::parity);
  m.files = inventory(dir);
  write_manifest(dir, m);
  ASSERT_EQ(m.files.size(), 2u);
  EXPECT_EQ(m.files[0].path, "a.csv");
  EXPECT_EQ(m.files[1].path, "sub/b.csv");
  EXPECT_TRUE(verify_manifest(dir).empty());
  write_text(dir / "sub" / "b.csv", "y\n3\n");
  EXPECT_EQ(verify_manifest(dir), (std::vector<std::string>{"sub/b.csv"}));
  fs::remove(dir / "a.csv");
  EXPECT_EQ(verify_manifest(dir).size(), 2u);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// fetching

TEST(Fetch, CanonicalSizesFollowHeaderArithmetic) {
  const auto files = mnist_files();
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(files[0].bytes, 47040016u);
  EXPECT_EQ(files[0].bytes, 16u + 60000u * 784u);
  EXPECT_EQ(files[1].bytes, 8u + 60000u);
  EXPECT_EQ(files[2].bytes, 16u + 10000u * 784u);
  EXPECT_EQ(files[3].bytes, 8u + 10000u);
}

TEST(Fetch, GzipRoundTrip) {
  const std::string raw = idx_bytes(kIdxImageMagic, 5, 20);
  EXPECT_EQ(gunzip(gzip(raw)), raw);
  auto gz = gzip(raw);
  gz.resize(gz.size() / 2);
  EXPECT_THROW(gunzip(gz), DataError);
  EXPECT_THROW(gunzip("definitely not gzip"), DataError);
}

TEST(Fetch, LocalServerDownloadsSkipsAndRepairs) {
  std::map<std::string, std::string> served;
  std::vector<RemoteFile> table;
  for (const auto& [name, magic, n] : {std::tuple{"train-images-idx3-ubyte", kIdxImageMagic, 6u},
                                       std::tuple{"train-labels-idx1-ubyte", kIdxLabelMagic, 6u},
                                       std::tuple{"t10k-images-idx3-ubyte", kIdxImageMagic, 3u},
                                       std::tuple{"t10k-labels-idx1-ubyte", kIdxLabelMagic, 3u}}) {
    const auto raw = idx_bytes(magic, n, magic == kIdxImageMagic ? n * 4 : n);
    served[std::string("/mnist/") + name + ".gz"] = gzip(raw);
    table.push_back({name, gzip(raw).size(), raw.size()});
  }
  std::atomic<int> hits{0};
  httplib::Server server;
  server.Get(R"(/mnist/(.*))", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    const auto it = served.find(req.path);
    if (it == served.end()) {
      res.status = 404;
      return;
    }
    res.set_content(it->second, "application/gzip");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto dir = scratch_dir("fetch");
  FetchOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/mnist/";
  opts.files = table;
  opts.timeout_seconds = 5;

  auto r = fetch_mnist(dir, opts);
  EXPECT_EQ(r.downloaded.size(), 4u);
  for (const auto& f : table) EXPECT_EQ(fs::file_size(dir / f.name), f.bytes);
  EXPECT_NO_THROW(load_mnist_idx(dir / table[0].name, dir / table[1].name));
  EXPECT_EQ(hits.load(), 4);

  r = fetch_mnist(dir, opts);
  EXPECT_EQ(r.skipped.size(), 4u);
  EXPECT_EQ(hits.load(), 4);

  write_text(dir / table[2].name, "corrupted");
  r = fetch_mnist(dir, opts);
  EXPECT_EQ(r.downloaded, (std::vector<std::string>{table[2].name}));
  EXPECT_EQ(fs::file_size(dir / table[2].name), table[2].bytes);

  // Wrong advertised length: fails, leaves neither the file nor a partial.
  const auto bad_dir = scratch_dir("fetchbad");
  auto wrong = opts;
  wrong.files[0].gz_bytes = *wrong.files[0].gz_bytes + 1;
  EXPECT_THROW(fetch_mnist(bad_dir, wrong), DataError);
  EXPECT_TRUE(fs::is_empty(bad_dir));

  auto missing = opts;
  missing.files = {{"nothing-here", std::nullopt, 10}};
  EXPECT_THROW(fetch_mnist(bad_dir, missing), DataError);
  EXPECT_TRUE(fs::is_empty(bad_dir));

  server.stop();
  thread.join();
  fs::remove_all(dir);
  fs::remove_all(bad_dir);
}

TEST(Fetch, UnreachableHostIsDataError) {
  const auto dir = scratch_dir("fetchnet");
  FetchOptions opts;
  opts.base_url = "http://127.0.0.1:1/mnist";
  opts.timeout_seconds = 2;
  EXPECT_THROW(fetch_mnist(dir, opts), DataError);
  EXPECT_TRUE(fs::is_empty(dir));
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// runs

TEST(Runner, SmokeRunWritesFullInventory) {
  const auto out = scratch_dir("run");
  auto c = apply_smoke_profile(default_config(Family::synth1d));
  c.hidden_widths = {32, 32};
  c.grid_points = 100;
  const auto outcome = run_experiment(c, {out, 1});
  const auto dir = outcome.dir;
  EXPECT_EQ(dir.parent_path(), out / "synth1d");
  for (const char* f : {"config.json", "aggregate.csv", "report.json", "manifest.json", "trial_00/log.csv",
                        "trial_00/report.json", "trial_00/spectra/epoch_000000_train_target.csv",
                        "trial_00/spectra/epoch_000000_train_output.csv", "trial_00/spectra/epoch_000200_test_output.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(verify_manifest(dir).empty());
  EXPECT_EQ(parse_config_file(dir / "config.json"), c);

  const auto log = read_csv(dir / "trial_00" / "log.csv");
  EXPECT_EQ(log.header, (std::vector<std::string>{"epoch", "train_loss", "test_loss"}));
  EXPECT_EQ(log.rows.size(), 201u);
  const auto spec = read_csv(dir / "trial_00" / "spectra" / "epoch_000000_train_target.csv");
  EXPECT_EQ(spec.header, (std::vector<std::string>{"k", "re", "im", "amplitude", "channels"}));
  EXPECT_EQ(spec.rows.size(), 100u);

  // Same config and seeds: byte-identical CSVs.
  const auto again = run_experiment(c, {out, 1});
  ASSERT_NE(again.dir, dir);
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), dir);
    EXPECT_EQ(slurp(e.path()), slurp(again.dir / rel)) << rel;
  }
  fs::remove_all(out);
}

TEST(Runner, ParityReportHasGeneralizationEpoch) {
  const auto out = scratch_dir("runp");
  auto c = default_config(Family::parity);
  c.trials = 1;
  c.parity_indices = {1, 2};
  c.hidden_widths = {256};
  c.grid_points = 50;
  c.eval_every = 10;
  const auto outcome = run_experiment(c, {out, 1});
  const auto report = Json::parse(slurp(outcome.dir / "trial_00" / "report.json"));
  EXPECT_TRUE(report.contains("memorization_epoch"));
  EXPECT_TRUE(report.contains("generalization_epoch")) << report.dump();
  const auto log = read_csv(outcome.dir / "trial_00" / "log.csv");
  EXPECT_EQ(log.header.back(), "test_sign_error");
  fs::remove_all(out);
}

TEST(Runner, MissingMnistLeavesNoOutput) {
  const auto out = scratch_dir("runm");
  auto c = default_config(Family::mnist);
  c.mnist_dir = (out / "nowhere").string();
  EXPECT_THROW(run_experiment(c, {out, 1}), DataError);
  EXPECT_TRUE(fs::is_empty(out));
  fs::remove_all(out);
}

// ---------------------------------------------------------------------------
// command line

TEST(Cli, RunAndExitCodes) {
  const auto out = scratch_dir("cli");
  EXPECT_EQ(cli("run --family parity --profile smoke --set hidden_widths=[64] --set grid_points=20 --out " +
                out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "parity"));
  EXPECT_EQ(cli("run --family synth1d --set epochs='\"abc\"' --out " + out.string(), out / "err.txt"), 3);
  EXPECT_NE(slurp(out / "err.txt").find("epochs"), std::string::npos);
  EXPECT_EQ(cli("run --family synth1d --set bogus=1 --out " + out.string()), 3);
  EXPECT_EQ(cli("run --family mnist --set mnist_dir='\"" + (out / "none").string() + "\"' --out " +
                (out / "m").string()),
            4);
  EXPECT_FALSE(fs::exists(out / "m"));
  EXPECT_EQ(cli("run --bogus-flag"), 2);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("grad-check --widths 2,8,8,1 --activation tanh"), 0);
  fs::remove_all(out);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  const auto out = scratch_dir("clicfg");
  write_text(out / "c.json", R"({"family": "synth1d", "hidden_widths": [16], "grid_points": 10})");
  EXPECT_EQ(cli("run --config " + (out / "c.json").string() + " --epochs 7 --seed 5 --trials 2 --out " + out.string()), 0);
  const auto run = fs::directory_iterator(out / "synth1d")->path();
  const auto c = parse_config_file(run / "config.json");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.trials, 2);
  EXPECT_EQ(c.seed_data, 5u);
  EXPECT_EQ(c.snapshot_epochs, (std::vector<long>{0, 7}));
  EXPECT_TRUE(fs::exists(run / "trial_01" / "log.csv"));
  fs::remove_all(out);
}

TEST(Cli, SpectrumFromCsv) {
  const auto out = scratch_dir("clispec");
  write_text(out / "zero.csv", "x,y\n-1,0\n0.5,0\n2,0\n");
  ASSERT_EQ(cli("spectrum --input " + (out / "zero.csv").string() + " --points 20 --out " + (out / "s.csv").string()),
            0);
  const auto s = read_csv(out / "s.csv");
  EXPECT_EQ(s.rows.size(), 20u);
  for (double a : s.column("amplitude")) EXPECT_EQ(a, 0.0);

  write_text(out / "bad.csv", "x,y\n1,abc\n");
  EXPECT_EQ(cli("spectrum --input " + (out / "bad.csv").string()), 4);
  EXPECT_EQ(cli("spectrum"), 3);
  fs::remove_all(out);
}

TEST(Cli, SpectrumOfSyntheticDataPeaksNearSix) {
  const auto out = scratch_dir("clispec6");
  ASSERT_EQ(cli("spectrum --family synth1d --role train --out " + (out / "s.csv").string()), 0);
  const auto s = read_csv(out / "s.csv");
  const auto k = s.column("k"), a = s.column("amplitude");
  const auto peak = std::max_element(a.begin(), a.end()) - a.begin();
  EXPECT_NEAR(k[static_cast<std::size_t>(peak)], 6.0, 0.3);
  fs::remove_all(out);
}

TEST(Cli, ParitySpectrumShowsSpuriousLowFrequencies) {
  const auto out = scratch_dir("clispecp");
  ASSERT_EQ(cli("spectrum --family parity --set proportion=0.2 --role train --out " + (out / "t.csv").string()), 0);
  ASSERT_EQ(cli("spectrum --family parity --set proportion=0.2 --role full --out " + (out / "f.csv").string()), 0);
  const auto train = read_csv(out / "t.csv"), full = read_csv(out / "f.csv");
  const auto k = train.column("k"), at = train.column("amplitude"), af = full.column("amplitude");
  double low_train = 0, low_full = 0;
  for (std::size_t i = 0; i < k.size(); ++i)
    if (k[i] <= 0.3) {
      low_train += at[i];
      low_full += af[i];
    }
  EXPECT_GT(low_train, low_full);
  fs::remove_all(out);
}

TEST(Cli, PlotCommand) {
  const auto out = scratch_dir("cliplot");
  write_text(out / "loss.csv", "epoch,train_loss,test_loss\n0,1,1\n1,0.5,1.2\n");
  ASSERT_EQ(cli("plot --csv " + (out / "loss.csv").string() + " --y train_loss,test_loss --log-y --out " +
                (out / "p.svg").string()),
            0);
  EXPECT_EQ(count(slurp(out / "p.svg"), "<polyline"), 2);
  EXPECT_EQ(cli("plot --csv " + (out / "loss.csv").string() + " --out " + (out / "q.svg").string()), 2);
  write_text(out / "spec.json", R"({"panels": [{"title": "p", "series": [{"csv": "loss.csv", "x": "epoch", "y": "test_loss"}]}]})");
  ASSERT_EQ(cli("plot --spec " + (out / "spec.json").string()), 0);
  EXPECT_EQ(count(slurp(out / "plot.svg"), "<polyline"), 1);
  ASSERT_EQ(cli("plot --spec " + (out / "spec.json").string() + " --out " + (out / "s.svg").string()), 0);
  EXPECT_TRUE(fs::exists(out / "s.svg"));
  write_text(out / "empty.json", R"({"panels": []})");
  EXPECT_EQ(cli("plot --spec " + (out / "empty.json").string()), 2);
  EXPECT_EQ(cli("plot --csv " + (out / "loss.csv").string() + " --y nope --out " + (out / "r.svg").string()), 4);
  fs::remove_all(out);
}
