#include "ugan/experiment.hpp"
#include "ugan/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace ugan;
namespace fs = std::filesystem;

namespace {

struct Common
{
  std::string config;
  std::vector<std::string> sets;
  std::string out;

  void attach(CLI::App *cmd)
  {
    cmd->add_option("-c,--config", config, "key = value config file");
    cmd->add_option("-s,--set", sets, "override one key (key=value), repeatable");
    cmd->add_option("-o,--out", out, "output directory");
  }

  ExperimentConfig load() const
  {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : ExperimentConfig::Load(config);
    for (auto const &s : sets) {
      auto const eq = s.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '{}'", s);
      }
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }

  fs::path dir(ExperimentConfig const &cfg, std::string const &sub) const
  {
    return out.empty() ? cfg.output_root() / sub : fs::path(out);
  }
};

// A dataset directory written by gen-data resolves to its file for `split`
fs::path DataFile(std::string const &arg, std::string const &split)
{
  fs::path p(arg);
  if (fs::is_directory(p)) {
    p /= split + ".ugd";
  }
  if (!fs::exists(p)) {
    throw ConfigError("dataset {} does not exist", p.string());
  }
  return p;
}

void CheckGeometry(Dataset const &d, ExperimentConfig const &cfg)
{
  if (d.h != cfg.data.h || d.w != cfg.data.w) {
    throw ConfigError("dataset is {}x{} but the config describes {}x{} images", d.h, d.w, cfg.data.h, cfg.data.w);
  }
}

void Log(std::string const &s) { fmt::print(stderr, "{}\n", s); }

int GenData(Common const &c)
{
  auto const cfg = c.load();
  auto const dir = c.dir(cfg, "data");
  auto const sum = BuildDataset(cfg.data, dir);
  WriteResolved(cfg, dir);
  fmt::print("wrote {} (manifest checksum {})\n", dir.string(), sum);
  return 0;
}

int TrainCmd(Common const &c, std::string const &mode_name, std::string const &data, std::string const &resume)
{
  auto const cfg = c.load();
  auto const mode = [&] {
    try {
      return ParseMode(mode_name);
    } catch (Error const &e) {
      throw ConfigError("{}", e.what());
    }
  }();
  auto const file = DataFile(data, mode == TrainMode::Unsupervised ? "train" : "train_gt");
  auto const d = LoadDataset(file);
  CheckGeometry(d, cfg);
  auto const dir = c.dir(cfg, "train_" + mode_name);
  WriteResolved(cfg, dir);
  Trainer tr = resume.empty() ? Trainer(cfg.train_for(mode), cfg.gen, cfg.disc, cfg.fresh_masks(cfg.data)) : Trainer::Load(resume);
  if (tr.config().mode != mode) {
    throw ConfigError("checkpoint {} was trained in {} mode", resume, ModeName(tr.config().mode));
  }
  Log(fmt::format("training {} on {} ({} records) for {} steps", mode_name, file.string(), d.records.size(), tr.config().steps));
  Train(tr, d, dir);
  fmt::print("wrote {}\n", (dir / "checkpoint.ugc").string());
  return 0;
}

int ReconstructCmd(Common const &c, std::string const &checkpoint, std::string const &method_arg, std::string const &data)
{
  auto const cfg = c.load();
  if (checkpoint.empty() == method_arg.empty()) {
    throw ConfigError("reconstruct needs exactly one of --checkpoint and --method");
  }
  auto const d = LoadDataset(DataFile(data, "test"));
  std::string method = method_arg;
  Reconstructor f;
  std::optional<Trainer> tr;
  std::vector<std::vector<double>> traces;
  if (!checkpoint.empty()) {
    tr.emplace(Trainer::Load(checkpoint));
    method = ModeName(tr->config().mode);
    f = GeneratorMethod(tr->generator());
  } else if (method == "zf") {
    f = ZeroFilledMethod();
  } else if (method == "cs") {
    traces.resize(d.records.size());
    f = [cs = ResolveCS(cfg), &traces, &d](Record const &r) {
      auto res = IstaL1Wavelet(r.kspace(), r.model(), cs);
      traces[static_cast<std::size_t>(&r - d.records.data())] = std::move(res.objective);
      return std::move(res.image);
    };
  } else if (method == "truth") {
    if (!d.has_truth) {
      throw ConfigError("--method truth needs a split with ground truth, '{}' has none", d.split);
    }
    f = [](Record const &r) { return r.truth(); };
  } else {
    throw ConfigError("unknown method '{}' (zf, cs, truth)", method);
  }
  auto const dir = c.dir(cfg, "recon_" + method);
  WriteResolved(cfg, dir);
  auto const n = static_cast<Index>(d.records.size());
  std::vector<CTensor> images(d.records.size());
  std::vector<double> secs(d.records.size());
  std::vector<std::string> errors(d.records.size());
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; i++) {
    try {
      auto const t0 = std::chrono::steady_clock::now();
      images[i] = f(d.records[i]);
      secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      WritePgm16(dir / fmt::format("slice_{:03d}.pgm", i), images[i]);
      WriteRaw(dir / fmt::format("slice_{:03d}.cx", i), images[i]);
    } catch (std::exception const &e) {
      errors[i] = e.what();
    }
  }
  for (Index i = 0; i < n; i++) {
    if (!errors[i].empty()) {
      throw Error("slice {}: {}", i, errors[i]);
    }
  }
  std::ofstream csv(dir / "slices.csv");
  csv << "slice,record,seconds,nrmse,psnr,ssim\n";
  for (Index i = 0; i < n; i++) {
    auto const &r = d.records[i];
    if (r.has_truth()) {
      csv << fmt::format("{},{},{:.6f},{:.9g},{:.9g},{:.9g}\n", i, r.index(), secs[i], Nrmse(images[i], r.truth()),
        Psnr(images[i], r.truth()), Ssim(images[i], r.truth()));
    } else {
      csv << fmt::format("{},{},{:.6f},,,\n", i, r.index(), secs[i]);
    }
  }
  if (!traces.empty()) {
    std::ofstream obj(dir / "objective.csv");
    obj << "slice,iteration,objective\n";
    for (std::size_t i = 0; i < traces.size(); i++) {
      for (std::size_t k = 0; k < traces[i].size(); k++) {
        obj << fmt::format("{},{},{:.17g}\n", i, k, traces[i][k]);
      }
    }
  }
  std::ofstream info(dir / "recon.txt");
  info << "method " << method << "\nh " << d.h << "\nw " << d.w << "\nslices " << n << "\n";
  if (!csv || !info) {
    throw Error("failed writing into {}", dir.string());
  }
  fmt::print("wrote {} slices to {}\n", n, dir.string());
  return 0;
}

struct ReconDir
{
  std::string method;
  Index h = 0, w = 0, slices = 0;
};

ReconDir ReadReconDir(fs::path const &dir)
{
  std::istringstream is(ReadText(dir / "recon.txt"));
  ReconDir r;
  std::string key;
  while (is >> key) {
    if (key == "method") {
      is >> r.method;
    } else if (key == "h") {
      is >> r.h;
    } else if (key == "w") {
      is >> r.w;
    } else if (key == "slices") {
      is >> r.slices;
    } else {
      throw Error("{}: unexpected field '{}'", (dir / "recon.txt").string(), key);
    }
  }
  if (r.method.empty() || r.h < 1 || r.w < 1) {
    throw Error("{} is incomplete", (dir / "recon.txt").string());
  }
  return r;
}

int EvaluateCmd(Common const &c, std::string const &data, std::vector<std::string> const &dirs)
{
  auto const cfg = c.load();
  auto const d = LoadDataset(DataFile(data, "test"));
  if (!d.has_truth) {
    throw ConfigError("evaluation needs ground truth, split '{}' has none", d.split);
  }
  std::vector<MetricReport> reports;
  for (auto const &s : dirs) {
    auto const info = ReadReconDir(s);
    if (info.slices != static_cast<Index>(d.records.size()) || info.h != d.h || info.w != d.w) {
      throw ConfigError("{} holds {} slices of {}x{}, the dataset {} of {}x{}", s, info.slices, info.h, info.w,
        d.records.size(), d.h, d.w);
    }
    std::vector<CTensor> recon;
    for (Index i = 0; i < info.slices; i++) {
      recon.push_back(ReadRaw(fs::path(s) / fmt::format("slice_{:03d}.cx", i), {d.h, d.w}));
    }
    reports.push_back(Score(info.method, d, recon));
  }
  auto const dir = c.dir(cfg, "evaluate");
  WriteResolved(cfg, dir);
  std::ofstream os(dir / "report.csv");
  WriteReportCsv(os, reports);
  WriteReportCsv(std::cout, reports);
  return 0;
}

int SweepCmd(Common const &c, std::vector<double> const &rs)
{
  auto const cfg = c.load();
  auto const dir = c.dir(cfg, "sweep");
  WriteResolved(cfg, dir);
  auto const rows = SweepAccel(cfg, rs, dir, Log);
  std::ofstream os(dir / "sweep.csv");
  WriteSweepCsv(os, rows);
  WriteSweepCsv(std::cout, rows);
  return 0;
}

int BenchCmd(Common const &c, std::string const &checkpoint, std::string const &data, Index cs_iters)
{
  auto cfg = c.load();
  if (cs_iters > 0) {
    cfg.cs.iterations = cs_iters;
  }
  auto const d = LoadDataset(DataFile(data, "test"));
  auto const tr = Trainer::Load(checkpoint);
  auto const cs = ResolveCS(cfg);
  auto const b = Bench(tr.generator(), d, cs, cfg.bench_repeats);
  auto const dir = c.dir(cfg, "bench");
  WriteResolved(cfg, dir);
  std::ofstream os(dir / "bench.csv");
  WriteBenchCsv(os, b, tr.generator().config().iterations, cs.iterations);
  std::ofstream ps(dir / "bench_slices.csv");
  ps << "slice,gan_s,cs_s\n";
  for (std::size_t i = 0; i < b.gan.size(); i++) {
    ps << fmt::format("{},{:.9g},{:.9g}\n", i, b.gan[i], b.cs[i]);
  }
  WriteBenchCsv(std::cout, b, tr.generator().config().iterations, cs.iterations);
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Unsupervised GAN reconstruction of undersampled multicoil MRI: data, training, baselines, metrics"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common gen_c, train_c, recon_c, eval_c, sweep_c, bench_c;
  std::string mode, train_data, resume, checkpoint, method, recon_data, eval_data, bench_ckpt, bench_data;
  std::vector<std::string> dirs;
  std::vector<double> rs;
  Index cs_iters = 0;

  auto *gen = app.add_subcommand("gen-data", "generate train, train_gt and test splits with a manifest");
  gen_c.attach(gen);

  auto *train = app.add_subcommand("train", "train a generator");
  train_c.attach(train);
  train->add_option("--mode", mode, "unsupervised or supervised")->required();
  train->add_option("--data", train_data, "dataset directory or .ugd file")->required();
  train->add_option("--resume", resume, "continue from a checkpoint");

  auto *recon = app.add_subcommand("reconstruct", "reconstruct every slice of a split");
  recon_c.attach(recon);
  recon->add_option("--checkpoint", checkpoint, "trained generator");
  recon->add_option("--method", method, "zf, cs or truth");
  recon->add_option("--data", recon_data, "dataset directory (test split) or .ugd file")->required();

  auto *eval = app.add_subcommand("evaluate", "metric report over reconstruction directories");
  eval_c.attach(eval);
  eval->add_option("--data", eval_data, "dataset with ground truth")->required();
  eval->add_option("dirs", dirs, "reconstruction directories")->required();

  auto *sweep = app.add_subcommand("sweep-accel", "unsupervised training across acceleration factors");
  sweep_c.attach(sweep);
  sweep->add_option("--train-R", rs, "training accelerations")->required()->delimiter(',');

  auto *bench = app.add_subcommand("bench", "time the generator against CS per slice");
  bench_c.attach(bench);
  bench->add_option("--checkpoint", bench_ckpt, "trained generator")->required();
  bench->add_option("--data", bench_data, "dataset directory (test split) or .ugd file")->required();
  bench->add_option("--cs-iters", cs_iters, "CS iterations (default: cs.iterations)");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForVersion const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      return GenData(gen_c);
    }
    if (*train) {
      return TrainCmd(train_c, mode, train_data, resume);
    }
    if (*recon) {
      return ReconstructCmd(recon_c, checkpoint, method, recon_data);
    }
    if (*eval) {
      return EvaluateCmd(eval_c, eval_data, dirs);
    }
    if (*sweep) {
      return SweepCmd(sweep_c, rs);
    }
    if (*bench) {
      return BenchCmd(bench_c, bench_ckpt, bench_data, cs_iters);
    }
  } catch (ConfigError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (std::exception const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}
