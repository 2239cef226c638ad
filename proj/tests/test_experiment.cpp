#include "common.hpp"

#include "ugan/experiment.hpp"
#include "ugan/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ugan;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path Scratch(std::string const &name)
{
  auto const p = std::filesystem::temp_directory_path() / fmt::format("ugan_exp_{}_{}", name, ::getpid());
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::vector<std::string> Lines(std::string const &s)
{
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) {
    out.push_back(l);
  }
  return out;
}

ExperimentConfig Tiny()
{
  auto cfg = ExperimentConfig::Parse(R"(
data.h = 16
data.w = 16
data.coils = 2
data.calib_h = 4
data.calib_w = 4
data.wavelet_levels = 2
data.n_train = 4
data.n_test = 2
data.r_min = 2
data.r_max = 4
gen.iterations = 2
gen.resblocks = 1
gen.features = 2
disc.features = 2
disc.resblocks = 0
disc.downsample = 1
train.steps = 2
train.batch = 1
train.log_every = 1
cs.iterations = 5
cs.levels = 2
cs.tune_n = 2
val.n = 1
bench.repeats = 1
)",
    "tiny");
  cfg.validate();
  return cfg;
}

} // namespace

TEST_CASE("config parsing")
{
  auto const cfg = ExperimentConfig::Parse("# comment\n\ntrain.lr = 2e-4   # trailing\n  gen.features=7\ntrain.mode = supervised\n");
  CHECK(cfg.train.lr == 2e-4);
  CHECK(cfg.gen.features == 7);
  CHECK(cfg.train.mode == TrainMode::Supervised);
  CHECK(cfg.get("train.lr") == "0.0002");

  CHECK_THROWS_WITH(ExperimentConfig::Parse("train.lr = 1\ntrain.lrr = 2\n", "a.cfg"),
    ContainsSubstring("a.cfg:2") && ContainsSubstring("train.lrr"));
  CHECK_THROWS_WITH(ExperimentConfig::Parse("gen.features = 4\n\ngen.features = 5\n", "b.cfg"),
    ContainsSubstring("b.cfg:3") && ContainsSubstring("twice"));
  CHECK_THROWS_WITH(ExperimentConfig::Parse("gen.features 4\n", "c.cfg"), ContainsSubstring("c.cfg:1"));
  CHECK_THROWS_WITH(ExperimentConfig::Parse("gen.features = four\n", "d.cfg"),
    ContainsSubstring("d.cfg:1") && ContainsSubstring("four"));
  CHECK_THROWS_WITH(ExperimentConfig::Parse("gen.features = 4.5\n"), ContainsSubstring("4.5"));
  CHECK_THROWS_AS(ExperimentConfig::Parse("train.mode = semi\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::Parse("cs.tune = maybe\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::Load("/nonexistent/x.cfg"), ConfigError);

  ExperimentConfig c;
  CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
  CHECK_THROWS_AS(c.get("nope"), ConfigError);
}

TEST_CASE("resolved config round trips")
{
  auto cfg = Tiny();
  cfg.train.lr = 1.0 / 3;
  cfg.cs.lambda = 4.64e-3;
  cfg.train.simulate_noise = false;
  auto const text = cfg.resolved();
  CHECK(text.starts_with(fmt::format("# ugan {}\n", kVersion)));
  auto const back = ExperimentConfig::Parse(text);
  CHECK(back.resolved() == text);
  CHECK(back.train.lr == cfg.train.lr);
  CHECK(Lines(text).size() == ExperimentConfig::Keys().size() + 1);
  for (auto const &k : ExperimentConfig::Keys()) {
    CHECK(back.get(k) == cfg.get(k));
  }

  auto const dir = Scratch("resolved");
  WriteResolved(cfg, dir / "sub");
  CHECK(ReadText(dir / "sub" / "config.txt") == text);
}

TEST_CASE("config validation and derived settings")
{
  auto cfg = Tiny();
  cfg.cs.levels = 5;
  CHECK_THROWS_WITH(cfg.validate(), ContainsSubstring("cs.levels"));
  cfg = Tiny();
  cfg.train.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = Tiny();
  cfg.data.h = 18;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = Tiny();
  cfg.cs_tune_lo = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = Tiny();
  cfg.train.lr = 1e-5;
  cfg.train.lambda_img = 0;
  cfg.sup_lr = 1e-4;
  cfg.sup_lambda_img = 100;
  auto const u = cfg.train_for(TrainMode::Unsupervised), s = cfg.train_for(TrainMode::Supervised);
  CHECK(u.lr == 1e-5);
  CHECK(u.lambda_img == 0);
  CHECK(s.lr == 1e-4);
  CHECK(s.lambda_img == 100);
  CHECK(s.mode == TrainMode::Supervised);

  cfg.fresh_r_max = 8;
  auto const m = cfg.fresh_masks(cfg.data);
  CHECK(m.r_min == cfg.data.r_min);
  CHECK(m.r_max == 8);
}

TEST_CASE("output root")
{
  ExperimentConfig cfg;
  cfg.out = "runs/a";
  ::unsetenv("UGAN_OUTPUT_ROOT");
  CHECK(cfg.output_root() == "runs/a");
  ::setenv("UGAN_OUTPUT_ROOT", "/scratch", 1);
  CHECK(cfg.output_root() == std::filesystem::path("/scratch/runs/a"));
  cfg.out = "/abs/b";
  CHECK(cfg.output_root() == "/abs/b");
  ::unsetenv("UGAN_OUTPUT_ROOT");
}

TEST_CASE("image dumps")
{
  Rng rng(1);
  auto const dir = Scratch("io");
  auto const x = test::RandCTensor({5, 7}, rng);

  WriteRaw(dir / "x.cx", x);
  CHECK(std::filesystem::file_size(dir / "x.cx") == 5 * 7 * 16u);
  CHECK(ReadRaw(dir / "x.cx", {5, 7}) == x);
  CHECK_THROWS_WITH(ReadRaw(dir / "x.cx", {5, 8}), ContainsSubstring("expected"));

  WritePgm16(dir / "x.pgm", x);
  auto const p = ReadPgm16(dir / "x.pgm");
  REQUIRE(p.shape() == Shape{5, 7});
  double peak = 0;
  for (auto v : x.vec()) {
    peak = std::max(peak, std::abs(v));
  }
  double top = 0;
  for (Index i = 0; i < x.size(); i++) {
    CHECK(std::abs(p[i] - std::abs(x[i]) / peak * 65535) <= 0.5);
    top = std::max(top, p[i]);
  }
  CHECK(top == 65535);
  auto const head = ReadText(dir / "x.pgm").substr(0, 15);
  CHECK(head == "P5\n7 5\n65535\n" + head.substr(13));

  WritePgm16(dir / "z.pgm", CTensor({3, 3}));
  auto const z = ReadPgm16(dir / "z.pgm");
  for (auto v : z.vec()) {
    CHECK(v == 0);
  }
  CHECK_THROWS_AS(WritePgm16(dir / "bad.pgm", CTensor({2, 3, 3})), Error);
  {
    std::ofstream os(dir / "short.pgm", std::ios::binary);
    os << "P5\n4 4\n65535\n" << std::string(10, 'x');
  }
  CHECK_THROWS_WITH(ReadPgm16(dir / "short.pgm"), ContainsSubstring("truncated"));
  CHECK_THROWS_AS(ReadPgm16(dir / "x.cx"), Error);
  CHECK_THROWS_AS(ReadText(dir / "missing.txt"), Error);
}

TEST_CASE("methods and evaluation")
{
  auto const cfg = Tiny();
  auto const test = MakeSplit(cfg.data, "test");

  auto const zf = ReconstructAll(test, ZeroFilledMethod());
  for (std::size_t i = 0; i < zf.size(); i++) {
    CHECK(zf[i] == AdjointOp(test.records[i].kspace(), test.records[i].model()));
  }
  auto const truth = Evaluate("truth", test, [](Record const &r) { return r.truth(); });
  CHECK(truth.nrmse.mean == 0);
  CHECK(truth.ssim.mean == Catch::Approx(1).epsilon(1e-12));
  CHECK_THROWS_AS(Score("x", test, {}), Error);
  CHECK_THROWS_WITH(ReconstructAll(test, [](Record const &) -> CTensor { throw Error("boom"); }),
    ContainsSubstring("record 0") && ContainsSubstring("boom"));

  // validation phantoms never coincide with the test split
  auto const val = ValidationProblems(cfg.data, cfg.val_seed, 2);
  REQUIRE(val.size() == 2u);
  for (auto const &v : val) {
    for (auto const &r : test.records) {
      CHECK_FALSE(v.truth == r.truth());
    }
  }
  auto const cs = ResolveCS(cfg);
  auto const grid = LogGrid(cfg.cs_tune_lo, cfg.cs_tune_hi, cfg.cs_tune_n);
  CHECK(std::find(grid.begin(), grid.end(), cs.lambda) != grid.end());
  auto off = cfg;
  off.cs_tune = false;
  off.cs.lambda = 0.123;
  CHECK(ResolveCS(off).lambda == 0.123);
}

TEST_CASE("sweep and bench outputs")
{
  auto const cfg = Tiny();
  auto const dir = Scratch("sweep");
  std::vector<std::string> log;
  auto const rows = SweepAccel(cfg, {2, 4}, dir, [&](std::string const &s) { log.push_back(s); });
  REQUIRE(rows.size() == 6u);
  CHECK(rows[0].method == "unsupervised");
  CHECK(rows[0].train_r == 2);
  CHECK(rows[3].train_r == 4);
  // the references do not depend on R
  CHECK(rows[1].report.psnr.mean == rows[4].report.psnr.mean);
  CHECK(rows[2].report.nrmse.mean == rows[5].report.nrmse.mean);
  CHECK(std::filesystem::exists(dir / "unsupervised_R2" / "loss.csv"));
  CHECK(std::filesystem::exists(dir / "supervised" / "loss.csv"));
  CHECK_FALSE(log.empty());
  CHECK_THROWS_AS(SweepAccel(cfg, {}, dir), ConfigError);

  std::ostringstream os;
  WriteSweepCsv(os, rows);
  auto const lines = Lines(os.str());
  REQUIRE(lines.size() == 7u);
  CHECK(lines[0] == "method,train_r,nrmse_mean,nrmse_std,psnr_mean,psnr_std,ssim_mean,ssim_std");
  CHECK(lines[1].starts_with("unsupervised,2,"));
  CHECK(lines[6].starts_with("cs,4,"));

  Rng rng(1);
  Generator const g(cfg.gen, rng);
  auto const b = Bench(g, MakeSplit(cfg.data, "test"), cfg.cs, 1);
  REQUIRE(b.gan.size() == 2u);
  CHECK(b.ratio == Catch::Approx(b.cs_stat.mean / b.gan_stat.mean).epsilon(1e-15));
  CHECK(b.gan_stat.mean > 0);
  CHECK_THROWS_AS(Bench(g, MakeSplit(cfg.data, "test"), cfg.cs, 0), ConfigError);
  std::ostringstream bs;
  WriteBenchCsv(bs, b, 2, 5);
  auto const bl = Lines(bs.str());
  REQUIRE(bl.size() == 3u);
  CHECK(bl[0] == "method,iterations,mean_s,std_s,ratio");
  CHECK(bl[1].starts_with("gan,2,"));
  CHECK(bl[2].starts_with("cs,5,"));
}
