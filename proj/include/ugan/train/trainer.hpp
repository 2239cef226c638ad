#pragma once

#include "../data/dataset.hpp"
#include "../models/discriminator.hpp"
#include "../models/generator.hpp"
#include "mask_dist.hpp"

#include <chrono>
#include <deque>
#include <filesystem>

namespace ugan {

enum class TrainMode
{
  Unsupervised,
  Supervised
};
TrainMode ParseMode(std::string const &s);
std::string ModeName(TrainMode m);

struct TrainConfig
{
  TrainMode mode = TrainMode::Unsupervised;
  double lr = 1e-4;
  double d_lr = 0; // 0 means use lr
  double beta1 = 0.9, beta2 = 0.999;
  double d_beta1 = -1, d_beta2 = -1; // negative means use beta1 / beta2
  Index batch = 1;
  double lambda_gp = 10;
  double lambda_img = 1; // supervised L1 weight
  Index d_steps = 1, g_steps = 1; // d_steps 0 freezes the critic
  Index steps = 1000;
  std::uint64_t seed = 1;
  bool simulate_noise = true;
  Index log_every = 1;
  Index checkpoint_every = 0; // 0: only at the end

  void validate() const;
  // lr 1e-8 with the default betas; far too slow to make progress at desk scale
  static TrainConfig ReferencePreset();
};

struct StepLog
{
  Index step = 0;
  double d_loss = 0, g_loss = 0, gp = 0, seconds = 0;
};

// What the unsupervised step drew for A', for independence statistics
struct FreshDraw
{
  Index record = 0;
  SamplingMask input, fresh;
};

class Trainer
{
public:
  Trainer(TrainConfig cfg, GeneratorConfig gcfg, DiscriminatorConfig dcfg, MaskDistribution dist);

  TrainConfig const &config() const { return cfg_; }
  MaskDistribution const &masks() const { return dist_; }
  Generator &generator() { return gen_; }
  Generator const &generator() const { return gen_; }
  Discriminator &discriminator() { return disc_; }
  Discriminator const &discriminator() const { return disc_; }
  Index step_count() const { return step_; }
  std::deque<StepLog> const &history() const { return history_; }

  // One training step on the next batch of `data` in the configured mode
  StepLog step(Dataset const &data);
  StepLog step_unsupervised(std::vector<Record const *> const &batch);
  StepLog step_supervised(std::vector<Record const *> const &batch);

  // Called for every fresh operator drawn in the unsupervised step
  std::function<void(FreshDraw const &)> on_fresh;

  void save(std::filesystem::path const &file) const;
  static Trainer Load(std::filesystem::path const &file);

  bool operator==(Trainer const &o) const;

private:
  std::vector<Record const *> next_batch(Dataset const &data);
  void record(StepLog const &l);

  TrainConfig cfg_;
  MaskDistribution dist_;
  Generator gen_;
  Discriminator disc_;
  AdamState g_adam_, d_adam_;
  Index step_ = 0;
  Rng data_rng_, mask_rng_, gp_rng_, noise_rng_;
  std::vector<Index> order_;
  std::size_t cursor_ = 0;
  std::deque<StepLog> history_;
  static constexpr std::size_t kHistory = 256;
};

// Runs cfg.steps steps from the trainer's current state. Writes loss.csv (step,d_loss,g_loss,gp,seconds;
// one row every log_every steps), periodic checkpoints and checkpoint.ugc at the end into out.
// Aborts if |d_loss| exceeds 1e6.
void Train(Trainer &trainer, Dataset const &data, std::filesystem::path const &out);

inline constexpr double kDivergence = 1e6;

} // namespace ugan
