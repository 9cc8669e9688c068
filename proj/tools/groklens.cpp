// groklens command-line front end.
//
//   groklens run --family synth1d --profile smoke --out runs
//   groklens spectrum --family parity --set proportion=0.2 --role train
//   groklens plot --csv runs/.../aggregate.csv --x epoch --y train_loss_mean,test_loss_mean --log-y
//   groklens fetch-mnist --dir data/mnist
//   groklens grad-check --widths 1,8,8,1 --activation tanh

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "groklens/fetch.hpp"
#include "groklens/groklens.hpp"

namespace gl = groklens;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string family;
  std::string activation;
  std::optional<double> alpha;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<long> epochs;
  std::string profile = "paper";

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat JSON config file")->check(CLI::ExistingFile);
    app->add_option("--family", family, "synth1d | parity | mnist (when no --config)");
    app->add_option("--activation", activation, "sin | relu | tanh");
    app->add_option("--alpha", alpha, "initialization scale");
    app->add_option("--set", sets, "override a config key, KEY=VALUE (VALUE parsed as JSON)");
    app->add_option("--seed", seed, "master seed for data, init and shuffle streams");
    app->add_option("--trials", trials, "number of trials");
    app->add_option("--epochs", epochs, "run length; later snapshots are dropped");
    app->add_option("--profile", profile, "paper | smoke")->check(CLI::IsMember({"paper", "smoke"}));
  }

  gl::ExperimentConfig resolve() const {
    gl::Json j = gl::Json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        j = gl::Json::parse(in);
      } catch (const gl::Json::parse_error& e) {
        throw gl::ConfigError(std::string("malformed JSON: ") + e.what());
      }
    }
    if (!family.empty()) j["family"] = family;
    if (!activation.empty()) j["activation"] = activation;
    if (alpha) j["alpha"] = *alpha;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw gl::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      const auto key = kv.substr(0, eq);
      const auto text = kv.substr(eq + 1);
      j[key] = gl::Json::accept(text) ? gl::Json::parse(text) : gl::Json(text);
    }
    auto c = gl::config_from_json(j);
    if (profile == "smoke") c = gl::apply_smoke_profile(c);
    if (seed) {
      c.seed_data = *seed;
      c.seed_init = *seed + 1;
      c.seed_shuffle = *seed + 2;
    }
    if (trials) c.trials = *trials;
    if (epochs) c = gl::with_epochs(c, *epochs);
    c.validate();
    return c;
  }
};

int cmd_run(const ConfigFlags& flags, const std::string& out, unsigned threads) {
  const auto c = flags.resolve();
  std::cerr << "running " << gl::to_string(c.family) << ": " << c.trials << " trial(s), " << c.epochs << " epochs\n";
  const auto outcome = gl::run_experiment(c, {out, threads});
  std::cout << outcome.dir.string() << '\n';
  if (outcome.aborted) {
    std::cerr << "one or more trials aborted on a non-finite loss; see report.json\n";
    return static_cast<int>(gl::ExitCode::numerical);
  }
  return 0;
}

struct SpectrumFlags {
  std::string input;
  std::string role = "train";
  int trial = 0;
  std::optional<double> k_min, k_max;
  std::optional<int> points;
  std::vector<double> direction;
  bool diagonal = false;
  std::string out;
};

gl::Spectrum input_spectrum(const SpectrumFlags& s) {
  const auto table = gl::read_csv(s.input);
  const auto cols = table.header.size();
  if (cols < 2) throw gl::DataError(s.input + ": need at least one x column and a y column");
  if (table.rows.empty()) throw gl::DataError(s.input + ": no data rows");
  const auto m = static_cast<Eigen::Index>(cols - 1);
  gl::Matrix xs(static_cast<Eigen::Index>(table.rows.size()), m);
  gl::Vector ys(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) xs(i, j) = table.rows[i][j];
    ys(i) = table.rows[i][cols - 1];
  }
  gl::Vector d;
  if (!s.direction.empty()) {
    d = Eigen::Map<const gl::Vector>(s.direction.data(), static_cast<Eigen::Index>(s.direction.size()));
  } else if (s.diagonal) {
    d = gl::Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  } else if (m == 1) {
    d = gl::Vector::Ones(1);
  } else {
    d = gl::pca_direction(xs);
  }
  const auto ks = gl::linspace(s.k_min.value_or(0.0), s.k_max.value_or(10.0), s.points.value_or(gl::kDefaultGridPoints));
  const auto grid = gl::make_grid(ks, d, "input",
                                  s.diagonal ? gl::Projection::diagonal : gl::Projection::unit_direction);
  return gl::nudft(xs, ys, grid);
}

gl::Spectrum family_spectrum(const ConfigFlags& flags, const SpectrumFlags& s) {
  const auto c = flags.resolve();
  const auto data = gl::build_data(c, gl::trial_seeds(c, s.trial));
  gl::FrequencyGrid grid = data.grid;
  if (s.k_min || s.k_max || s.points) {
    const double lo = s.k_min.value_or(grid.ks.front());
    const double hi = s.k_max.value_or(grid.ks.back());
    grid = gl::make_grid(gl::linspace(lo, hi, s.points.value_or(static_cast<int>(grid.ks.size()))), grid.direction,
                         grid.name, grid.projection);
  }
  const gl::LabeledSet* set = nullptr;
  if (s.role == "train") set = &data.train;
  else if (s.role == "test") set = &data.test;
  else set = &data.spectral;
  return gl::nudft_vector(set->inputs, set->targets, grid);
}

int cmd_spectrum(const ConfigFlags& flags, const SpectrumFlags& s) {
  const bool from_family = !flags.family.empty() || !flags.config_path.empty();
  if (from_family == !s.input.empty())
    throw gl::ConfigError("spectrum: give exactly one of --input or a dataset (--family/--config)");
  const auto spectrum = from_family ? family_spectrum(flags, s) : input_spectrum(s);
  if (s.out.empty()) {
    std::cout << "k,re,im,amplitude,channels\n";
    for (std::size_t i = 0; i < spectrum.values.size(); ++i)
      std::cout << gl::format_number(spectrum.grid.ks[i]) << ',' << gl::format_number(spectrum.values[i].real()) << ','
                << gl::format_number(spectrum.values[i].imag()) << ',' << gl::format_number(std::abs(spectrum.values[i]))
                << ',' << spectrum.channels << '\n';
  } else {
    gl::write_spectrum_csv(s.out, spectrum);
  }
  return 0;
}

struct PlotFlags {
  std::string spec;
  std::vector<std::string> csvs;
  std::string x = "epoch";
  std::vector<std::string> ys;
  bool log_x = false, log_y = false;
  std::string title;
  std::string out;  // empty: the spec's output, else plot.svg
};

int cmd_plot(const PlotFlags& f) {
  gl::PlotSpec spec;
  if (!f.spec.empty()) {
    std::ifstream in(f.spec);
    if (!in) throw gl::ConfigError("cannot read plot spec " + f.spec);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw gl::ConfigError(std::string("plot spec: ") + e.what());
    }
    spec = gl::plot_spec_from_json(j, std::filesystem::path(f.spec).parent_path());
    if (!f.out.empty()) spec.output = f.out;
  } else {
    // One panel per CSV, one series per y column.
    for (const auto& csv : f.csvs) {
      gl::PlotPanel panel{std::filesystem::path(csv).filename().string(), {}};
      for (const auto& y : f.ys) panel.series.push_back({y, csv, f.x, y});
      spec.panels.push_back(std::move(panel));
    }
    spec.title = f.title;
    spec.output = f.out;
    if (f.log_x) spec.x_scale = gl::AxisScale::log;
    if (f.log_y) spec.y_scale = gl::AxisScale::log;
  }
  if (spec.output.empty()) spec.output = "plot.svg";
  std::size_t series = 0;
  for (const auto& p : spec.panels) series += p.series.size();
  if (series == 0) {
    std::cerr << "plot: no series to draw\n";
    return static_cast<int>(gl::ExitCode::usage);
  }
  gl::write_svg(spec);
  std::cout << spec.output.string() << '\n';
  return 0;
}

int cmd_fetch(const std::string& dir, const std::string& base_url, int timeout) {
  gl::FetchOptions opts;
  opts.base_url = base_url;
  opts.timeout_seconds = timeout;
  const auto r = gl::fetch_mnist(dir, opts);
  for (const auto& f : r.downloaded) std::cout << "fetched " << f << '\n';
  for (const auto& f : r.skipped) std::cout << "present " << f << '\n';
  return 0;
}

struct GradFlags {
  std::vector<int> widths = {1, 16, 16, 1};
  std::string activation = "sin";
  std::uint64_t seed = 1;
  double alpha = 1.0;
  int batch = 8;
  double h = 1e-5;
  double tol = 1e-4;
};

int cmd_grad_check(const GradFlags& f) {
  const auto mlp = gl::init_mlp(f.widths, gl::parse_activation(f.activation), f.seed, f.alpha);
  gl::Rng rng(gl::derive_seed(f.seed, 1));
  gl::Matrix x(f.batch, f.widths.front()), y(f.batch, f.widths.back());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2.0, 2.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(-1.0, 1.0);
  const auto r = gl::check_gradients(mlp, x, y, f.h, f.tol);
  std::cout << "parameters checked: " << r.checked << "\nmax relative error: " << r.max_relative_error
            << " (parameter " << r.worst_index << ")\n"
            << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed ? 0 : static_cast<int>(gl::ExitCode::numerical);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groklens: frequency-domain instruments for grokking experiments"};
  app.require_subcommand(1);

  ConfigFlags run_cfg;
  std::string out = "runs";
  unsigned threads = 1;
  auto* run = app.add_subcommand("run", "train a configured experiment and write its artifacts");
  run_cfg.attach(run);
  run->add_option("--out", out, "output root");
  run->add_option("--threads", threads, "trials run concurrently")->check(CLI::PositiveNumber);

  ConfigFlags spec_cfg;
  SpectrumFlags sf;
  auto* spectrum = app.add_subcommand("spectrum", "NUDFT of a dataset, without training");
  spec_cfg.attach(spectrum);
  spectrum->add_option("--input", sf.input, "CSV with header; x columns then y last")->check(CLI::ExistingFile);
  spectrum->add_option("--role", sf.role, "train | test | full")->check(CLI::IsMember({"train", "test", "full"}));
  spectrum->add_option("--trial", sf.trial, "trial whose data seeds are used");
  spectrum->add_option("--k-min", sf.k_min);
  spectrum->add_option("--k-max", sf.k_max);
  spectrum->add_option("--points", sf.points)->check(CLI::Range(2, 1 << 24));
  spectrum->add_option("--direction", sf.direction, "projection direction (unit vector)")->delimiter(',');
  spectrum->add_flag("--diagonal", sf.diagonal, "phase k*sum(x), as for the parity spectrum");
  spectrum->add_option("--out", sf.out, "output CSV (default: stdout)");

  PlotFlags pf;
  auto* plot = app.add_subcommand("plot", "render CSV columns as a static SVG");
  plot->add_option("--spec", pf.spec, "plot spec JSON")->check(CLI::ExistingFile);
  plot->add_option("--csv", pf.csvs, "CSV file; one panel per file");
  plot->add_option("--x", pf.x, "x column");
  plot->add_option("--y", pf.ys, "y columns")->delimiter(',');
  plot->add_flag("--log-x", pf.log_x);
  plot->add_flag("--log-y", pf.log_y);
  plot->add_option("--title", pf.title);
  plot->add_option("--out", pf.out, "output SVG (default: the spec's output, else plot.svg)");

  std::string fetch_dir;
  std::string base_url = gl::kMnistBaseUrl;
  int timeout = 60;
  auto* fetch = app.add_subcommand("fetch-mnist", "download and verify the MNIST IDX files");
  fetch->add_option("--dir", fetch_dir, "target directory (default: $GROKLENS_DATA or data/mnist)");
  fetch->add_option("--base-url", base_url);
  fetch->add_option("--timeout", timeout, "seconds")->check(CLI::PositiveNumber);

  GradFlags gf;
  auto* grad = app.add_subcommand("grad-check", "compare backprop with central differences");
  grad->add_option("--widths", gf.widths, "layer widths")->delimiter(',');
  grad->add_option("--activation", gf.activation)->check(CLI::IsMember({"sin", "relu", "tanh"}));
  grad->add_option("--seed", gf.seed);
  grad->add_option("--alpha", gf.alpha);
  grad->add_option("--batch", gf.batch)->check(CLI::PositiveNumber);
  grad->add_option("--step", gf.h, "finite-difference step")->check(CLI::PositiveNumber);
  grad->add_option("--tol", gf.tol)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(gl::ExitCode::usage);
  }

  try {
    if (*run) return cmd_run(run_cfg, out, threads);
    if (*spectrum) return cmd_spectrum(spec_cfg, sf);
    if (*plot) {
      if (pf.spec.empty() && (pf.csvs.empty() || pf.ys.empty())) {
        std::cerr << "plot: give --spec, or --csv with --y\n";
        return static_cast<int>(gl::ExitCode::usage);
      }
      return cmd_plot(pf);
    }
    if (*fetch) {
      if (fetch_dir.empty()) fetch_dir = gl::ExperimentConfig{}.resolved_mnist_dir().string();
      return cmd_fetch(fetch_dir, base_url, timeout);
    }
    if (*grad) return cmd_grad_check(gf);
  } catch (const gl::Error& e) {
    std::cerr << "groklens: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "groklens: io error: " << e.what() << '\n';
    return static_cast<int>(gl::ExitCode::io);
  }
  return 0;
}
