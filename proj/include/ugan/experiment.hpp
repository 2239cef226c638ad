#pragma once

#include "cs/ista.hpp"
#include "metrics.hpp"
#include "train/trainer.hpp"

#include <iosfwd>

// Experiment protocol shared by the command-line tool and the acceptance suite: configuration,
// method runners, evaluation, the acceleration sweep and the timing benchmark.
namespace ugan {

extern char const *const kVersion;

// Bad usage or configuration, as opposed to a failure while running
struct ConfigError : Error
{
  using Error::Error;
};

struct ExperimentConfig
{
  std::filesystem::path out = "runs";
  PhantomSpec data;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  TrainConfig train;
  double sup_lr = 0;                       // supervised learning rate; 0 means train.lr
  double sup_lambda_img = -1;              // supervised L1 weight; negative means train.lambda_img
  double fresh_r_min = 0, fresh_r_max = 0; // acceleration range of A'; 0 means the data's range
  CSConfig cs;
  bool cs_tune = true; // choose cs.lambda on validation phantoms
  double cs_tune_lo = 1e-4, cs_tune_hi = 1e-1;
  Index cs_tune_n = 10;
  std::uint64_t val_seed = 999; // master seed of the validation phantoms
  Index val_n = 5;
  Index bench_repeats = 5;

  void set(std::string const &key, std::string const &value);
  std::string get(std::string const &key) const;
  static std::vector<std::string> Keys();

  // key = value per line, '#' starts a comment. Unknown keys, repeated keys and malformed lines
  // throw ConfigError naming the line.
  static ExperimentConfig Parse(std::string const &text, std::string const &source = "config");
  static ExperimentConfig Load(std::filesystem::path const &file);
  // Every key with its current value, after a version comment
  std::string resolved() const;
  void validate() const;

  TrainConfig train_for(TrainMode mode) const;
  MaskDistribution fresh_masks(PhantomSpec const &acquisition) const;
  // `out`, placed under $UGAN_OUTPUT_ROOT when that is set and `out` is relative
  std::filesystem::path output_root() const;
};

// Writes config.txt (resolved config) into dir, creating it
void WriteResolved(ExperimentConfig const &cfg, std::filesystem::path const &dir);

// Test-style problems under their own master seed, so tuning never sees the test split
std::vector<CSProblem> ValidationProblems(PhantomSpec spec, std::uint64_t seed, Index n);
// cfg.cs, with lambda chosen on validation problems when cfg.cs_tune is set
CSConfig ResolveCS(ExperimentConfig const &cfg);

using Reconstructor = std::function<CTensor(Record const &)>;
Reconstructor ZeroFilledMethod();
Reconstructor CSMethod(CSConfig cfg);
Reconstructor GeneratorMethod(Generator const &g); // g must outlive the result

std::vector<CTensor> ReconstructAll(Dataset const &d, Reconstructor const &f);
MetricReport Score(std::string method, Dataset const &test, std::vector<CTensor> const &recon);
MetricReport Evaluate(std::string method, Dataset const &test, Reconstructor const &f);

// Builds a trainer from cfg for `mode` (fresh operators follow `acquisition`), trains it on data
// into out and returns it
Trainer TrainModel(ExperimentConfig const &cfg, TrainMode mode, PhantomSpec const &acquisition, Dataset const &data,
  std::filesystem::path const &out);

struct SweepRow
{
  std::string method;
  double train_r = 0;
  MetricReport report;
};
// Unsupervised training at each R in train_r (train split and fresh operators at R), evaluated on
// the fixed test split of cfg.data. Every R also gets a supervised and a CS row; those are
// computed once (supervised training on cfg.data) and repeated, since neither depends on R.
std::vector<SweepRow> SweepAccel(ExperimentConfig const &cfg, std::vector<double> const &train_r,
  std::filesystem::path const &out, std::function<void(std::string const &)> const &log = {});
// method,train_r,nrmse_mean,nrmse_std,psnr_mean,psnr_std,ssim_mean,ssim_std
void WriteSweepCsv(std::ostream &os, std::vector<SweepRow> const &rows);

struct BenchResult
{
  std::vector<double> gan, cs; // seconds per slice
  Stat gan_stat, cs_stat;
  double ratio = 0; // cs mean over gan mean
};
// Per slice: one warm-up run, then the median wall-clock time of `repeats` runs
BenchResult Bench(Generator const &g, Dataset const &test, CSConfig const &cs, Index repeats);
// method,iterations,mean_s,std_s,ratio with rows gan (unrolled iterations) and cs
void WriteBenchCsv(std::ostream &os, BenchResult const &b, Index gan_iterations, Index cs_iterations);

} // namespace ugan
