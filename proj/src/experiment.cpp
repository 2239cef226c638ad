#include "ugan/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ugan {

char const *const kVersion = UGAN_VERSION;

namespace {

template <typename T>
T ParseAs(std::string const &key, std::string const &v)
{
  if constexpr (std::is_same_v<T, bool>) {
    if (v == "1" || v == "true" || v == "on") {
      return true;
    }
    if (v == "0" || v == "false" || v == "off") {
      return false;
    }
    throw ConfigError("config key '{}': expected a boolean, got '{}'", key, v);
  } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
    return T(v);
  } else {
    T out{};
    auto const [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) {
      throw ConfigError("config key '{}': cannot parse '{}'", key, v);
    }
    return out;
  }
}

template <typename T>
std::string Show(T const &v)
{
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "1" : "0";
  } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
    return v.string();
  } else {
    return fmt::format("{}", v);
  }
}

struct Key
{
  std::string name;
  std::function<void(ExperimentConfig &, std::string const &)> set;
  std::function<std::string(ExperimentConfig const &)> get;
};

template <typename F>
Key Make(std::string name, F ref)
{
  using T = std::remove_reference_t<decltype(ref(std::declval<ExperimentConfig &>()))>;
  return Key{name, [name, ref](ExperimentConfig &c, std::string const &v) { ref(c) = ParseAs<T>(name, v); },
    [ref](ExperimentConfig const &c) { return Show(ref(const_cast<ExperimentConfig &>(c))); }};
}

#define UGAN_KEY(name, field) Make(name, [](ExperimentConfig &c) -> auto & { return c.field; })

std::vector<Key> const &Table()
{
  static std::vector<Key> const table = {
    UGAN_KEY("out", out),
    UGAN_KEY("data.h", data.h),
    UGAN_KEY("data.w", data.w),
    UGAN_KEY("data.coils", data.coils),
    UGAN_KEY("data.min_ellipses", data.min_ellipses),
    UGAN_KEY("data.max_ellipses", data.max_ellipses),
    UGAN_KEY("data.phase_order", data.phase_order),
    UGAN_KEY("data.sigma", data.noise_sigma),
    UGAN_KEY("data.r_min", data.r_min),
    UGAN_KEY("data.r_max", data.r_max),
    UGAN_KEY("data.calib_h", data.calib_h),
    UGAN_KEY("data.calib_w", data.calib_w),
    UGAN_KEY("data.wavelet_levels", data.wavelet_levels),
    UGAN_KEY("data.n_train", data.n_train),
    UGAN_KEY("data.n_test", data.n_test),
    UGAN_KEY("data.seed", data.seed),
    UGAN_KEY("gen.iterations", gen.iterations),
    UGAN_KEY("gen.resblocks", gen.resblocks),
    UGAN_KEY("gen.features", gen.features),
    UGAN_KEY("gen.kernel", gen.kernel),
    UGAN_KEY("gen.learn_step", gen.learn_step),
    UGAN_KEY("gen.slope", gen.slope),
    UGAN_KEY("disc.features", disc.features),
    UGAN_KEY("disc.resblocks", disc.resblocks),
    UGAN_KEY("disc.downsample", disc.downsample),
    UGAN_KEY("disc.kernel", disc.kernel),
    UGAN_KEY("disc.slope", disc.slope),
    UGAN_KEY("disc.dense_gain", disc.dense_gain),
    Key{"train.mode", [](ExperimentConfig &c, std::string const &v) {
          try {
            c.train.mode = ParseMode(v);
          } catch (Error const &e) {
            throw ConfigError("config key 'train.mode': {}", e.what());
          }
        },
      [](ExperimentConfig const &c) { return ModeName(c.train.mode); }},
    UGAN_KEY("train.lr", train.lr),
    UGAN_KEY("train.d_lr", train.d_lr),
    UGAN_KEY("train.beta1", train.beta1),
    UGAN_KEY("train.beta2", train.beta2),
    UGAN_KEY("train.d_beta1", train.d_beta1),
    UGAN_KEY("train.d_beta2", train.d_beta2),
    UGAN_KEY("train.batch", train.batch),
    UGAN_KEY("train.lambda_gp", train.lambda_gp),
    UGAN_KEY("train.lambda_img", train.lambda_img),
    UGAN_KEY("train.d_steps", train.d_steps),
    UGAN_KEY("train.g_steps", train.g_steps),
    UGAN_KEY("train.steps", train.steps),
    UGAN_KEY("train.seed", train.seed),
    UGAN_KEY("train.simulate_noise", train.simulate_noise),
    UGAN_KEY("train.log_every", train.log_every),
    UGAN_KEY("train.checkpoint_every", train.checkpoint_every),
    UGAN_KEY("supervised.lr", sup_lr),
    UGAN_KEY("supervised.lambda_img", sup_lambda_img),
    UGAN_KEY("fresh.r_min", fresh_r_min),
    UGAN_KEY("fresh.r_max", fresh_r_max),
    UGAN_KEY("cs.lambda", cs.lambda),
    UGAN_KEY("cs.iterations", cs.iterations),
    UGAN_KEY("cs.step", cs.step),
    UGAN_KEY("cs.levels", cs.levels),
    UGAN_KEY("cs.tune", cs_tune),
    UGAN_KEY("cs.tune_lo", cs_tune_lo),
    UGAN_KEY("cs.tune_hi", cs_tune_hi),
    UGAN_KEY("cs.tune_n", cs_tune_n),
    UGAN_KEY("val.seed", val_seed),
    UGAN_KEY("val.n", val_n),
    UGAN_KEY("bench.repeats", bench_repeats),
  };
  return table;
}

#undef UGAN_KEY

Key const &Find(std::string const &key)
{
  for (auto const &k : Table()) {
    if (k.name == key) {
      return k;
    }
  }
  throw ConfigError("unknown config key '{}'", key);
}

std::string Trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double Seconds(std::function<void()> const &f)
{
  auto const t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double Median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  auto const n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

void ExperimentConfig::set(std::string const &key, std::string const &value) { Find(key).set(*this, value); }

std::string ExperimentConfig::get(std::string const &key) const { return Find(key).get(*this); }

std::vector<std::string> ExperimentConfig::Keys()
{
  std::vector<std::string> out;
  for (auto const &k : Table()) {
    out.push_back(k.name);
  }
  return out;
}

ExperimentConfig ExperimentConfig::Parse(std::string const &text, std::string const &source)
{
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::set<std::string> seen;
  for (Index n = 1; std::getline(is, line); n++) {
    line = Trim(line.substr(0, line.find('#')));
    if (line.empty()) {
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("{}:{}: expected key = value, got '{}'", source, n, line);
    }
    auto const key = Trim(line.substr(0, eq)), value = Trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("{}:{}: key '{}' given twice", source, n, key);
    }
    try {
      cfg.set(key, value);
    } catch (ConfigError const &e) {
      throw ConfigError("{}:{}: {}", source, n, e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::Load(std::filesystem::path const &file)
{
  std::ifstream is(file);
  if (!is) {
    throw ConfigError("cannot open config {}", file.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return Parse(ss.str(), file.string());
}

std::string ExperimentConfig::resolved() const
{
  std::string out = fmt::format("# ugan {}\n", kVersion);
  for (auto const &k : Table()) {
    out += fmt::format("{} = {}\n", k.name, k.get(*this));
  }
  return out;
}

void ExperimentConfig::validate() const
{
  try {
    data.validate();
    gen.validate();
    disc.validate();
    train.validate();
    cs.validate();
    train_for(TrainMode::Supervised).validate();
    fresh_masks(data).validate();
  } catch (ConfigError const &) {
    throw;
  } catch (Error const &e) {
    throw ConfigError("invalid config: {}", e.what());
  }
  if (data.h % (Index{1} << cs.levels) || data.w % (Index{1} << cs.levels)) {
    throw ConfigError("invalid config: {}x{} images are not divisible by 2^cs.levels = {}", data.h, data.w, Index{1} << cs.levels);
  }
  if (fresh_r_min < 0 || fresh_r_max < 0) {
    throw ConfigError("invalid config: fresh.r_min and fresh.r_max must be >= 0");
  }
  if (!(cs_tune_lo > 0 && cs_tune_hi >= cs_tune_lo) || cs_tune_n < 1 || val_n < 1 || bench_repeats < 1) {
    throw ConfigError("invalid config: need 0 < cs.tune_lo <= cs.tune_hi and cs.tune_n, val.n, bench.repeats >= 1");
  }
}

TrainConfig ExperimentConfig::train_for(TrainMode mode) const
{
  TrainConfig t = train;
  t.mode = mode;
  if (mode == TrainMode::Supervised) {
    if (sup_lr > 0) {
      t.lr = sup_lr;
    }
    if (sup_lambda_img >= 0) {
      t.lambda_img = sup_lambda_img;
    }
  }
  return t;
}

MaskDistribution ExperimentConfig::fresh_masks(PhantomSpec const &acquisition) const
{
  MaskDistribution d = acquisition.masks();
  if (fresh_r_min > 0) {
    d.r_min = fresh_r_min;
  }
  if (fresh_r_max > 0) {
    d.r_max = fresh_r_max;
  }
  return d;
}

std::filesystem::path ExperimentConfig::output_root() const
{
  char const *env = std::getenv("UGAN_OUTPUT_ROOT");
  if (env && *env && out.is_relative()) {
    return std::filesystem::path(env) / out;
  }
  return out;
}

void WriteResolved(ExperimentConfig const &cfg, std::filesystem::path const &dir)
{
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "config.txt");
  os << cfg.resolved();
  if (!os) {
    throw Error("cannot write {}", (dir / "config.txt").string());
  }
}

std::vector<CSProblem> ValidationProblems(PhantomSpec spec, std::uint64_t seed, Index n)
{
  spec.seed = seed;
  spec.n_test = n;
  auto const d = MakeSplit(spec, "test");
  std::vector<CSProblem> out;
  for (auto const &r : d.records) {
    out.push_back({r.kspace(), r.model(), r.truth()});
  }
  return out;
}

CSConfig ResolveCS(ExperimentConfig const &cfg)
{
  CSConfig cs = cfg.cs;
  if (cfg.cs_tune) {
    cs.lambda = TuneLambda(ValidationProblems(cfg.data, cfg.val_seed, cfg.val_n),
      LogGrid(cfg.cs_tune_lo, cfg.cs_tune_hi, cfg.cs_tune_n), cs)
                  .first;
  }
  return cs;
}

Reconstructor ZeroFilledMethod()
{
  return [](Record const &r) { return ZeroFilled(r.kspace(), r.model()); };
}

Reconstructor CSMethod(CSConfig cfg)
{
  return [cfg](Record const &r) { return IstaL1Wavelet(r.kspace(), r.model(), cfg).image; };
}

Reconstructor GeneratorMethod(Generator const &g)
{
  return [&g](Record const &r) { return g.reconstruct(r.kspace(), r.model()); };
}

std::vector<CTensor> ReconstructAll(Dataset const &d, Reconstructor const &f)
{
  auto const n = static_cast<Index>(d.records.size());
  std::vector<CTensor> out(d.records.size());
  std::vector<std::string> errors(d.records.size());
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; i++) {
    try {
      out[i] = f(d.records[i]);
    } catch (std::exception const &e) {
      errors[i] = e.what();
    }
  }
  for (Index i = 0; i < n; i++) {
    if (!errors[i].empty()) {
      throw Error("reconstructing record {}: {}", d.records[i].index(), errors[i]);
    }
  }
  return out;
}

MetricReport Score(std::string method, Dataset const &test, std::vector<CTensor> const &recon)
{
  if (recon.size() != test.records.size()) {
    throw Error("{} reconstructions for {} records", recon.size(), test.records.size());
  }
  MetricReport r;
  r.method = std::move(method);
  for (std::size_t i = 0; i < recon.size(); i++) {
    r.add(recon[i], test.records[i].truth());
  }
  r.finish();
  return r;
}

MetricReport Evaluate(std::string method, Dataset const &test, Reconstructor const &f)
{
  return Score(std::move(method), test, ReconstructAll(test, f));
}

Trainer TrainModel(ExperimentConfig const &cfg, TrainMode mode, PhantomSpec const &acquisition, Dataset const &data,
  std::filesystem::path const &out)
{
  Trainer tr(cfg.train_for(mode), cfg.gen, cfg.disc, cfg.fresh_masks(acquisition));
  Train(tr, data, out);
  return tr;
}

std::vector<SweepRow> SweepAccel(ExperimentConfig const &cfg, std::vector<double> const &train_r,
  std::filesystem::path const &out, std::function<void(std::string const &)> const &log)
{
  auto const say = [&](std::string const &s) {
    if (log) {
      log(s);
    }
  };
  if (train_r.empty()) {
    throw ConfigError("sweep needs at least one training acceleration");
  }
  auto const test = MakeSplit(cfg.data, "test");
  ExperimentConfig at_r = cfg;
  at_r.fresh_r_min = at_r.fresh_r_max = 0;
  std::vector<MetricReport> unsup;
  for (double const r : train_r) {
    PhantomSpec spec = cfg.data;
    spec.r_min = spec.r_max = r;
    spec.validate();
    say(fmt::format("unsupervised training at R={:g}", r));
    auto const train = MakeSplit(spec, "train");
    auto const tr = TrainModel(at_r, TrainMode::Unsupervised, spec, train, out / fmt::format("unsupervised_R{:g}", r));
    unsup.push_back(Evaluate("unsupervised", test, GeneratorMethod(tr.generator())));
    say(fmt::format("  test PSNR {:.2f} dB", unsup.back().psnr.mean));
  }
  say("supervised reference");
  auto const sup_tr = TrainModel(cfg, TrainMode::Supervised, cfg.data, MakeSplit(cfg.data, "train_gt"), out / "supervised");
  auto const sup = Evaluate("supervised", test, GeneratorMethod(sup_tr.generator()));
  say("CS reference");
  auto const cs = Evaluate("cs", test, CSMethod(ResolveCS(cfg)));
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < train_r.size(); i++) {
    rows.push_back({"unsupervised", train_r[i], unsup[i]});
    rows.push_back({"supervised", train_r[i], sup});
    rows.push_back({"cs", train_r[i], cs});
  }
  return rows;
}

void WriteSweepCsv(std::ostream &os, std::vector<SweepRow> const &rows)
{
  os << "method,train_r,nrmse_mean,nrmse_std,psnr_mean,psnr_std,ssim_mean,ssim_std\n";
  for (auto const &r : rows) {
    auto const &m = r.report;
    os << fmt::format("{},{:g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.method, r.train_r, m.nrmse.mean, m.nrmse.std,
      m.psnr.mean, m.psnr.std, m.ssim.mean, m.ssim.std);
  }
}

BenchResult Bench(Generator const &g, Dataset const &test, CSConfig const &cs, Index repeats)
{
  if (repeats < 1) {
    throw ConfigError("bench needs at least one timed repeat");
  }
  BenchResult b;
  for (auto const &r : test.records) {
    auto const y = r.kspace();
    auto const m = r.model();
    std::vector<double> tg, tc;
    g.reconstruct(y, m);
    for (Index k = 0; k < repeats; k++) {
      tg.push_back(Seconds([&] { g.reconstruct(y, m); }));
    }
    IstaL1Wavelet(y, m, cs);
    for (Index k = 0; k < repeats; k++) {
      tc.push_back(Seconds([&] { IstaL1Wavelet(y, m, cs); }));
    }
    b.gan.push_back(Median(tg));
    b.cs.push_back(Median(tc));
  }
  b.gan_stat = Stat::Of(b.gan);
  b.cs_stat = Stat::Of(b.cs);
  b.ratio = b.cs_stat.mean / b.gan_stat.mean;
  return b;
}

void WriteBenchCsv(std::ostream &os, BenchResult const &b, Index gan_iterations, Index cs_iterations)
{
  os << "method,iterations,mean_s,std_s,ratio\n";
  os << fmt::format("gan,{},{:.9g},{:.9g},{:.6g}\n", gan_iterations, b.gan_stat.mean, b.gan_stat.std, b.ratio);
  os << fmt::format("cs,{},{:.9g},{:.9g},{:.6g}\n", cs_iterations, b.cs_stat.mean, b.cs_stat.std, b.ratio);
}

} // namespace ugan
