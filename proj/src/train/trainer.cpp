#include "ugan/train/trainer.hpp"

#include "ugan/train/losses.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ugan {

using namespace ad;

TrainMode ParseMode(std::string const &s)
{
  if (s == "unsupervised") {
    return TrainMode::Unsupervised;
  }
  if (s == "supervised") {
    return TrainMode::Supervised;
  }
  throw Error("unknown training mode '{}' (unsupervised, supervised)", s);
}

std::string ModeName(TrainMode m) { return m == TrainMode::Unsupervised ? "unsupervised" : "supervised"; }

void TrainConfig::validate() const
{
  if (!(lr > 0) || !(d_lr >= 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(d_beta1 < 1) ||
      !(d_beta2 < 1)) {
    throw Error("train config: need lr > 0, d_lr >= 0 and betas in [0,1), got lr={} d_lr={} betas={},{}", lr, d_lr, beta1, beta2);
  }
  if (batch < 1 || d_steps < 0 || g_steps < 1 || steps < 0 || log_every < 1 || checkpoint_every < 0) {
    throw Error("train config: batch, g_steps and log_every must be >= 1 and d_steps >= 0 (got {}, {}, {}, {})", batch,
      g_steps, log_every, d_steps);
  }
  if (!(lambda_gp >= 0) || !(lambda_img >= 0)) {
    throw Error("train config: lambda_gp and lambda_img must be >= 0");
  }
}

TrainConfig TrainConfig::ReferencePreset()
{
  TrainConfig c;
  c.lr = 1e-8;
  return c;
}

namespace {

Rng Stream(std::uint64_t seed, std::uint32_t tag)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return Rng(seq);
}

enum : std::uint32_t
{
  kInit = 0,
  kData,
  kMask,
  kGp,
  kNoise
};

AdamConfig DOpt(TrainConfig const &c)
{
  return AdamConfig{c.d_lr > 0 ? c.d_lr : c.lr, c.d_beta1 >= 0 ? c.d_beta1 : c.beta1, c.d_beta2 >= 0 ? c.d_beta2 : c.beta2, 1e-8};
}

Tensor EncodeValue(CTensor const &y, ImagingModel const &m)
{
  NoGradGuard guard;
  return Encode(Var::Constant(ToReal(y)), m).value();
}

std::vector<Tensor> Values(std::vector<Var> const &v)
{
  std::vector<Tensor> out;
  out.reserve(v.size());
  for (auto const &x : v) {
    out.push_back(x.value());
  }
  return out;
}

} // namespace

Trainer::Trainer(TrainConfig cfg, GeneratorConfig gcfg, DiscriminatorConfig dcfg, MaskDistribution dist)
  : cfg_(cfg)
  , dist_(dist)
  , data_rng_(Stream(cfg.seed, kData))
  , mask_rng_(Stream(cfg.seed, kMask))
  , gp_rng_(Stream(cfg.seed, kGp))
  , noise_rng_(Stream(cfg.seed, kNoise))
{
  cfg_.validate();
  dist_.validate();
  Rng init = Stream(cfg.seed, kInit);
  gen_ = Generator(gcfg, init);
  disc_ = Discriminator(dcfg, init);
  g_adam_ = AdamState::For(gen_.params());
  d_adam_ = AdamState::For(disc_.params());
}

std::vector<Record const *> Trainer::next_batch(Dataset const &data)
{
  if (data.records.empty()) {
    throw Error("training split '{}' is empty", data.split);
  }
  std::vector<Record const *> batch;
  for (Index b = 0; b < cfg_.batch; b++) {
    if (cursor_ >= order_.size() || order_.size() != data.records.size()) {
      order_ = data.order(data_rng_());
      cursor_ = 0;
    }
    batch.push_back(&data.records[order_[cursor_++]]);
  }
  return batch;
}

StepLog Trainer::step(Dataset const &data)
{
  auto const batch = next_batch(data);
  return cfg_.mode == TrainMode::Unsupervised ? step_unsupervised(batch) : step_supervised(batch);
}

void Trainer::record(StepLog const &l)
{
  history_.push_back(l);
  if (history_.size() > kHistory) {
    history_.pop_front();
  }
}

StepLog Trainer::step_unsupervised(std::vector<Record const *> const &batch)
{
  for (auto const *r : batch) {
    if (r->has_truth()) {
      throw Error("unsupervised training refuses record {} of split '{}': it carries a ground-truth image", r->index(), r->split());
    }
  }
  std::size_t const B = batch.size();
  AdamConfig const g_opt{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8};
  AdamConfig const d_opt = DOpt(cfg_);

  std::vector<ImagingModel> in, fresh;
  std::vector<Tensor> ys, noise, real, fake;
  std::vector<Var> pg = gen_.params().leaves();
  std::vector<Var> x(B);
  for (std::size_t b = 0; b < B; b++) {
    auto const *r = batch[b];
    in.push_back(r->model());
    ys.push_back(ToReal(r->kspace()));
    x[b] = gen_.forward(Var::Constant(ys[b]), in[b], pg);
    fresh.push_back(SampleFreshModel(dist_, r->maps(), r->noise_sigma(), mask_rng_));
    if (on_fresh) {
      on_fresh(FreshDraw{r->index(), r->mask(), fresh[b].mask()});
    }
    CTensor n(r->kspace().shape(), Cx(0));
    if (cfg_.simulate_noise && r->noise_sigma() > 0) {
      n = AddNoise(n, fresh[b].mask(), r->noise_sigma(), noise_rng_);
    }
    noise.push_back(ToReal(n));
    CTensor y_sim = ForwardOp(ToComplex(x[b].value()), fresh[b]);
    for (Index i = 0; i < y_sim.size(); i++) {
      y_sim[i] += n[i];
    }
    real.push_back(EncodeValue(r->kspace(), in[b]));
    fake.push_back(EncodeValue(y_sim, fresh[b]));
  }

  StepLog log;
  for (Index d = 0; d < cfg_.d_steps; d++) {
    auto const res = DLoss(disc_, real, fake, cfg_.lambda_gp, gp_rng_);
    AdamStep(disc_.params(), res.grads, d_adam_, d_opt);
    log.d_loss = res.loss;
    log.gp = res.penalty;
  }
  for (Index g = 0; g < cfg_.g_steps; g++) {
    if (g > 0) {
      pg = gen_.params().leaves();
      for (std::size_t b = 0; b < B; b++) {
        x[b] = gen_.forward(Var::Constant(ys[b]), in[b], pg);
      }
    }
    std::vector<Var> enc;
    for (std::size_t b = 0; b < B; b++) {
      Var const y_sim = Add(Forward(x[b], fresh[b]), Var::Constant(noise[b]));
      enc.push_back(Encode(y_sim, fresh[b]));
    }
    Var const loss = GLoss(disc_, enc);
    AdamStep(gen_.params(), Values(Grad(loss, pg)), g_adam_, g_opt, gen_.frozen());
    log.g_loss = loss.item();
  }
  log.step = ++step_;
  record(log);
  return log;
}

StepLog Trainer::step_supervised(std::vector<Record const *> const &batch)
{
  for (auto const *r : batch) {
    if (!r->has_truth()) {
      throw Error("supervised training needs ground truth, but record {} of split '{}' has none", r->index(), r->split());
    }
  }
  std::size_t const B = batch.size();
  AdamConfig const g_opt{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8};
  AdamConfig const d_opt = DOpt(cfg_);

  std::vector<ImagingModel> in;
  std::vector<Tensor> ys, truth, real, fake;
  std::vector<Var> pg = gen_.params().leaves();
  std::vector<Var> x(B);
  for (std::size_t b = 0; b < B; b++) {
    auto const *r = batch[b];
    in.push_back(r->model());
    ys.push_back(ToReal(r->kspace()));
    truth.push_back(ToReal(r->truth()));
    x[b] = gen_.forward(Var::Constant(ys[b]), in[b], pg);
    {
      NoGradGuard guard;
      real.push_back(EncodeImage(Var::Constant(truth[b])).value());
      fake.push_back(EncodeImage(Var::Constant(x[b].value())).value());
    }
  }

  StepLog log;
  for (Index d = 0; d < cfg_.d_steps; d++) {
    auto const res = DLoss(disc_, real, fake, cfg_.lambda_gp, gp_rng_);
    AdamStep(disc_.params(), res.grads, d_adam_, d_opt);
    log.d_loss = res.loss;
    log.gp = res.penalty;
  }
  for (Index g = 0; g < cfg_.g_steps; g++) {
    if (g > 0) {
      pg = gen_.params().leaves();
      for (std::size_t b = 0; b < B; b++) {
        x[b] = gen_.forward(Var::Constant(ys[b]), in[b], pg);
      }
    }
    std::vector<Var> enc;
    Var l1;
    for (std::size_t b = 0; b < B; b++) {
      enc.push_back(EncodeImage(x[b]));
      if (cfg_.lambda_img > 0) {
        double const n = static_cast<double>(x[b].value().size() / 2);
        Var const t = Scale(Sum(Magnitude(Sub(x[b], Var::Constant(truth[b])))), cfg_.lambda_img / (n * static_cast<double>(B)));
        l1 = l1.defined() ? Add(l1, t) : t;
      }
    }
    Var loss = GLoss(disc_, enc);
    if (l1.defined()) {
      loss = Add(loss, l1);
    }
    AdamStep(gen_.params(), Values(Grad(loss, pg)), g_adam_, g_opt, gen_.frozen());
    log.g_loss = loss.item();
  }
  log.step = ++step_;
  record(log);
  return log;
}

void Trainer::save(std::filesystem::path const &file) const
{
  std::ofstream os(file, std::ios::binary);
  if (!os) {
    throw Error("cannot write checkpoint {}", file.string());
  }
  auto const &g = gen_.config();
  auto const &d = disc_.config();
  os << "ugan-checkpoint 1\n";
  os << fmt::format("train mode={} lr={:.17g} d_lr={:.17g} beta1={:.17g} beta2={:.17g} d_beta1={:.17g} d_beta2={:.17g} batch={} lambda_gp={:.17g} "
                    "lambda_img={:.17g} d_steps={} g_steps={} steps={} seed={} simulate_noise={} log_every={} "
                    "checkpoint_every={}\n",
    ModeName(cfg_.mode), cfg_.lr, cfg_.d_lr, cfg_.beta1, cfg_.beta2, cfg_.d_beta1, cfg_.d_beta2, cfg_.batch, cfg_.lambda_gp, cfg_.lambda_img,
    cfg_.d_steps, cfg_.g_steps, cfg_.steps, cfg_.seed, cfg_.simulate_noise ? 1 : 0, cfg_.log_every, cfg_.checkpoint_every);
  os << fmt::format("generator iterations={} resblocks={} features={} kernel={} learn_step={} slope={:.17g}\n",
    g.iterations, g.resblocks, g.features, g.kernel, g.learn_step ? 1 : 0, g.slope);
  os << fmt::format("discriminator features={} resblocks={} downsample={} kernel={} slope={:.17g} dense_gain={:.17g}\n",
    d.features, d.resblocks, d.downsample, d.kernel, d.slope, d.dense_gain);
  os << fmt::format("masks h={} w={} r_min={:.17g} r_max={:.17g} calib_h={} calib_w={}\n", dist_.h, dist_.w, dist_.r_min,
    dist_.r_max, dist_.calib_h, dist_.calib_w);
  os << "state step=" << step_ << " g_adam=" << g_adam_.step << " d_adam=" << d_adam_.step << " cursor=" << cursor_ << "\n";
  os << "order " << order_.size();
  for (auto i : order_) {
    os << ' ' << i;
  }
  os << "\nrng_data " << data_rng_ << "\nrng_mask " << mask_rng_ << "\nrng_gp " << gp_rng_ << "\nrng_noise " << noise_rng_
     << "\nend\n";
  gen_.params().save(os);
  disc_.params().save(os);
  g_adam_.m.save(os);
  g_adam_.v.save(os);
  d_adam_.m.save(os);
  d_adam_.v.save(os);
  if (!os) {
    throw Error("failed writing checkpoint {}", file.string());
  }
}

namespace {

std::map<std::string, std::string> Fields(std::string const &line, std::string const &tag)
{
  std::istringstream ls(line);
  std::string head;
  ls >> head;
  if (head != tag) {
    throw Error("checkpoint: expected '{}' line, got '{}'", tag, line);
  }
  std::map<std::string, std::string> out;
  std::string kv;
  while (ls >> kv) {
    auto const eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error("checkpoint: malformed field '{}' in '{}' line", kv, tag);
    }
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

template <typename T>
T Get(std::map<std::string, std::string> const &f, std::string const &k)
{
  auto it = f.find(k);
  if (it == f.end()) {
    throw Error("checkpoint: missing field '{}'", k);
  }
  std::istringstream is(it->second);
  T v{};
  if (!(is >> v)) {
    throw Error("checkpoint: bad value '{}' for '{}'", it->second, k);
  }
  return v;
}

std::string Line(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line)) {
    throw Error("checkpoint: header truncated");
  }
  return line;
}

void ReadRng(std::istream &is, std::string const &tag, Rng &rng)
{
  std::istringstream ls(Line(is));
  std::string head;
  if (!(ls >> head) || head != tag || !(ls >> rng)) {
    throw Error("checkpoint: bad {} line", tag);
  }
}

void Restore(ParamStore &dst, ParamStore src, std::string const &what)
{
  if (dst.names() != src.names()) {
    throw Error("checkpoint: {} parameters do not match the recorded architecture", what);
  }
  for (std::size_t i = 0; i < dst.size(); i++) {
    if (dst.at(i).shape() != src.at(i).shape()) {
      throw Error("checkpoint: {} parameter '{}' has shape {}, expected {}", what, dst.names()[i], ShapeStr(src.at(i).shape()),
        ShapeStr(dst.at(i).shape()));
    }
  }
  dst = std::move(src);
}

} // namespace

Trainer Trainer::Load(std::filesystem::path const &file)
{
  std::ifstream is(file, std::ios::binary);
  if (!is) {
    throw Error("cannot open checkpoint {}", file.string());
  }
  if (Line(is) != "ugan-checkpoint 1") {
    throw Error("{} is not a checkpoint", file.string());
  }
  auto const t = Fields(Line(is), "train");
  TrainConfig cfg;
  cfg.mode = ParseMode(Get<std::string>(t, "mode"));
  cfg.lr = Get<double>(t, "lr");
  cfg.d_lr = Get<double>(t, "d_lr");
  cfg.beta1 = Get<double>(t, "beta1");
  cfg.beta2 = Get<double>(t, "beta2");
  cfg.d_beta1 = Get<double>(t, "d_beta1");
  cfg.d_beta2 = Get<double>(t, "d_beta2");
  cfg.batch = Get<Index>(t, "batch");
  cfg.lambda_gp = Get<double>(t, "lambda_gp");
  cfg.lambda_img = Get<double>(t, "lambda_img");
  cfg.d_steps = Get<Index>(t, "d_steps");
  cfg.g_steps = Get<Index>(t, "g_steps");
  cfg.steps = Get<Index>(t, "steps");
  cfg.seed = Get<std::uint64_t>(t, "seed");
  cfg.simulate_noise = Get<int>(t, "simulate_noise") != 0;
  cfg.log_every = Get<Index>(t, "log_every");
  cfg.checkpoint_every = Get<Index>(t, "checkpoint_every");
  auto const g = Fields(Line(is), "generator");
  GeneratorConfig gc{.iterations = Get<Index>(g, "iterations"),
    .resblocks = Get<Index>(g, "resblocks"),
    .features = Get<Index>(g, "features"),
    .kernel = Get<Index>(g, "kernel"),
    .learn_step = Get<int>(g, "learn_step") != 0,
    .slope = Get<double>(g, "slope")};
  auto const d = Fields(Line(is), "discriminator");
  DiscriminatorConfig dc{.features = Get<Index>(d, "features"),
    .resblocks = Get<Index>(d, "resblocks"),
    .downsample = Get<Index>(d, "downsample"),
    .kernel = Get<Index>(d, "kernel"),
    .slope = Get<double>(d, "slope"),
    .dense_gain = Get<double>(d, "dense_gain")};
  auto const m = Fields(Line(is), "masks");
  MaskDistribution md{.h = Get<Index>(m, "h"),
    .w = Get<Index>(m, "w"),
    .r_min = Get<double>(m, "r_min"),
    .r_max = Get<double>(m, "r_max"),
    .calib_h = Get<Index>(m, "calib_h"),
    .calib_w = Get<Index>(m, "calib_w")};
  Trainer tr(cfg, gc, dc, md);
  auto const s = Fields(Line(is), "state");
  tr.step_ = Get<Index>(s, "step");
  tr.g_adam_.step = Get<Index>(s, "g_adam");
  tr.d_adam_.step = Get<Index>(s, "d_adam");
  tr.cursor_ = Get<std::size_t>(s, "cursor");
  {
    std::istringstream ls(Line(is));
    std::string head;
    std::size_t n = 0;
    if (!(ls >> head >> n) || head != "order") {
      throw Error("checkpoint: bad order line");
    }
    tr.order_.resize(n);
    for (auto &i : tr.order_) {
      if (!(ls >> i)) {
        throw Error("checkpoint: order line truncated");
      }
    }
  }
  ReadRng(is, "rng_data", tr.data_rng_);
  ReadRng(is, "rng_mask", tr.mask_rng_);
  ReadRng(is, "rng_gp", tr.gp_rng_);
  ReadRng(is, "rng_noise", tr.noise_rng_);
  if (Line(is) != "end") {
    throw Error("checkpoint: header not terminated");
  }
  Restore(tr.gen_.params(), ParamStore::Load(is), "generator");
  Restore(tr.disc_.params(), ParamStore::Load(is), "discriminator");
  Restore(tr.g_adam_.m, ParamStore::Load(is), "generator adam m");
  Restore(tr.g_adam_.v, ParamStore::Load(is), "generator adam v");
  Restore(tr.d_adam_.m, ParamStore::Load(is), "discriminator adam m");
  Restore(tr.d_adam_.v, ParamStore::Load(is), "discriminator adam v");
  return tr;
}

bool Trainer::operator==(Trainer const &o) const
{
  return step_ == o.step_ && gen_.params() == o.gen_.params() && disc_.params() == o.disc_.params() &&
         g_adam_.m == o.g_adam_.m && g_adam_.v == o.g_adam_.v && g_adam_.step == o.g_adam_.step && d_adam_.m == o.d_adam_.m &&
         d_adam_.v == o.d_adam_.v && d_adam_.step == o.d_adam_.step && data_rng_ == o.data_rng_ && mask_rng_ == o.mask_rng_ &&
         gp_rng_ == o.gp_rng_ && noise_rng_ == o.noise_rng_ && order_ == o.order_ && cursor_ == o.cursor_;
}

void Train(Trainer &trainer, Dataset const &data, std::filesystem::path const &out)
{
  auto const &cfg = trainer.config();
  if (cfg.mode == TrainMode::Unsupervised && data.has_truth) {
    throw Error("unsupervised training refuses split '{}': it carries ground-truth images", data.split);
  }
  if (cfg.mode == TrainMode::Supervised && !data.has_truth) {
    throw Error("supervised training needs ground truth, but split '{}' has none", data.split);
  }
  std::filesystem::create_directories(out);
  bool const fresh = trainer.step_count() == 0;
  std::ofstream log(out / "loss.csv", fresh ? std::ios::trunc : std::ios::app);
  if (!log) {
    throw Error("cannot write {}", (out / "loss.csv").string());
  }
  if (fresh) {
    log << "step,d_loss,g_loss,gp,seconds\n";
  }
  auto const t0 = std::chrono::steady_clock::now();
  while (trainer.step_count() < cfg.steps) {
    auto l = trainer.step(data);
    l.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(l.d_loss) || std::abs(l.d_loss) > kDivergence) {
      throw Error("training diverged at step {}: d_loss {}", l.step, l.d_loss);
    }
    if (l.step % cfg.log_every == 0) {
      log << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.6f}\n", l.step, l.d_loss, l.g_loss, l.gp, l.seconds);
      log.flush();
    }
    if (cfg.checkpoint_every > 0 && l.step % cfg.checkpoint_every == 0) {
      trainer.save(out / fmt::format("checkpoint_{:06d}.ugc", l.step));
    }
  }
  trainer.save(out / "checkpoint.ugc");
}

} // namespace ugan
