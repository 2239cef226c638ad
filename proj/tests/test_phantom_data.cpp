#include "common.hpp"

#include "ugan/data/dataset.hpp"
#include "ugan/io.hpp"

#include <fstream>

using namespace ugan;

namespace {

PhantomSpec Small()
{
  return PhantomSpec{.h = 32, .w = 32, .coils = 3, .r_min = 2, .r_max = 5, .calib_h = 8, .calib_w = 8, .n_train = 6, .n_test = 3, .seed = 11};
}

std::filesystem::path Scratch(std::string const &name)
{
  auto const p = std::filesystem::temp_directory_path() / fmt::format("ugan_data_{}_{}", name, ::getpid());
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string Bytes(std::filesystem::path const &f)
{
  std::ifstream is(f, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void WriteBytes(std::filesystem::path const &f, std::string const &s)
{
  std::ofstream os(f, std::ios::binary);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

} // namespace

TEST_CASE("phantoms")
{
  auto const spec = Small();
  for (std::uint64_t seed = 0; seed < 10; seed++) {
    Rng a(seed), b(seed);
    auto const img = MakePhantom(a, spec);
    CHECK(img == MakePhantom(b, spec));
    double mean = 0, mean2 = 0, n = 0, peak = 0;
    for (auto v : img.vec()) {
      REQUIRE(std::abs(v) <= 1 + 1e-15);
      peak = std::max(peak, std::abs(v));
      if (std::abs(v) > 0) {
        mean += std::arg(v), mean2 += std::arg(v) * std::arg(v), n++;
      }
    }
    CHECK(peak >= 0.2);
    CHECK(mean2 / n - (mean / n) * (mean / n) > 0);
  }
  PhantomSpec real = spec;
  real.phase_order = 0;
  Rng rng(3);
  auto const flat = MakePhantom(rng, real);
  for (auto v : flat.vec()) {
    REQUIRE(v.imag() == 0);
  }
  CHECK_THROWS_WITH(MakePhantom(rng, PhantomSpec{.h = 36, .w = 32}), Catch::Matchers::ContainsSubstring("divisible"));
}

TEST_CASE("coil maps")
{
  Rng rng(1);
  auto const m = MakeCoilmaps(rng, 6, 32, 32);
  CHECK(m.partition_error() < 1e-10);
  Index const n = 32 * 32;
  for (Index a = 0; a < 6; a++) {
    for (Index b = a + 1; b < 6; b++) {
      auto const sa = std::span<Cx const>(m.s.data() + a * n, n), sb = std::span<Cx const>(m.s.data() + b * n, n);
      CHECK(std::abs(Dot(sa, sb)) / (Norm(sa) * Norm(sb)) < 0.99);
    }
  }
  auto const one = MakeCoilmaps(rng, 1, 16, 16);
  for (auto v : one.s.vec()) {
    CHECK(std::abs(std::abs(v) - 1) < 1e-12);
  }
  CHECK_THROWS_AS(MakeCoilmaps(rng, 0, 16, 16), Error);
}

TEST_CASE("records satisfy the data invariants")
{
  auto const spec = Small();
  for (auto const *split : {"train", "test"}) {
    auto const d = MakeSplit(spec, split);
    CHECK(static_cast<Index>(d.records.size()) == (std::string(split) == "test" ? spec.n_test : spec.n_train));
    for (auto const &r : d.records) {
      CHECK(r.mask().calibration_full());
      CHECK(r.mask().acceleration() >= 0.9 * spec.r_min);
      CHECK(r.mask().acceleration() <= 1.1 * spec.r_max);
      CHECK(r.maps().partition_error() < 1e-10);
      Index const n = spec.h * spec.w;
      for (Index i = 0; i < r.kspace().size(); i++) {
        bool const sampled = r.mask().bits[i % n] > 0.5;
        REQUIRE((r.kspace()[i] != Cx(0)) == sampled);
      }
      CHECK(r.has_truth() == (std::string(split) == "test"));
    }
  }
  CHECK_THROWS_AS(MakeSplit(spec, "validation"), Error);
}

TEST_CASE("generation is reproducible from the master seed")
{
  auto const spec = Small();
  CHECK(MakeSplit(spec, "train").records == MakeSplit(spec, "train").records);
  auto other = spec;
  other.seed = 12;
  CHECK_FALSE(MakeSplit(spec, "train").records == MakeSplit(other, "train").records);

  // the supervised split is the training acquisitions plus their ground truth
  auto const a = MakeSplit(spec, "train"), b = MakeSplit(spec, "train_gt");
  for (std::size_t i = 0; i < a.records.size(); i++) {
    CHECK(a.records[i].kspace() == b.records[i].kspace());
    CHECK(a.records[i].mask().bits == b.records[i].mask().bits);
  }

  auto const d1 = Scratch("build1"), d2 = Scratch("build2");
  auto const s1 = BuildDataset(spec, d1), s2 = BuildDataset(spec, d2);
  CHECK(s1 == s2);
  for (auto const *f : {"train.ugd", "train_gt.ugd", "test.ugd", "manifest.txt"}) {
    CHECK(Bytes(d1 / f) == Bytes(d2 / f));
  }
  auto const manifest = ReadText(d1 / "manifest.txt");
  CHECK(manifest.find("checksum " + s1) != std::string::npos);
  CHECK(manifest.find("split test file test.ugd records 3 truth 1") != std::string::npos);
}

TEST_CASE("container round trip and corruption")
{
  auto const spec = Small();
  auto const dir = Scratch("io");
  auto const d = MakeSplit(spec, "test");
  SaveDataset(d, dir / "t.ugd");

  SECTION("round trip is exact")
  {
    auto const back = LoadDataset(dir / "t.ugd");
    CHECK(back.split == "test");
    CHECK(back.has_truth);
    CHECK(back.h == 32);
    CHECK(back.coils == 3);
    CHECK(back.noise_sigma == spec.noise_sigma);
    CHECK(back.master_seed == spec.seed);
    CHECK(back.records == d.records);
    SaveDataset(back, dir / "t2.ugd");
    CHECK(Bytes(dir / "t.ugd") == Bytes(dir / "t2.ugd"));
  }
  SECTION("streaming reader")
  {
    DatasetReader r(dir / "t.ugd");
    CHECK(r.size() == 3);
    CHECK(r.header().records.empty());
    Index n = 0;
    while (auto rec = r.next()) {
      CHECK(rec->index() == n++);
    }
    CHECK(n == 3);
  }
  SECTION("truncation names the record")
  {
    auto const bytes = Bytes(dir / "t.ugd");
    WriteBytes(dir / "cut.ugd", bytes.substr(0, bytes.size() - 100));
    CHECK_THROWS_WITH(LoadDataset(dir / "cut.ugd"), Catch::Matchers::ContainsSubstring("record 2"));
    auto const first = bytes.find("record 1 seed");
    REQUIRE(first != std::string::npos);
    WriteBytes(dir / "cut2.ugd", bytes.substr(0, first));
    CHECK_THROWS_WITH(LoadDataset(dir / "cut2.ugd"), Catch::Matchers::ContainsSubstring("record 1 missing"));
  }
  SECTION("flipped payload byte fails the checksum")
  {
    auto bytes = Bytes(dir / "t.ugd");
    auto const at = bytes.find("record 1 seed");
    REQUIRE(at != std::string::npos);
    bytes[at - 7] ^= 0x40;
    WriteBytes(dir / "flip.ugd", bytes);
    CHECK_THROWS_WITH(LoadDataset(dir / "flip.ugd"), Catch::Matchers::ContainsSubstring("record 0 fails its checksum"));
  }
  SECTION("corrupt headers")
  {
    auto bytes = Bytes(dir / "t.ugd");
    auto b1 = bytes;
    b1.replace(b1.find("coils 3"), 7, "coilz 3");
    WriteBytes(dir / "h1.ugd", b1);
    CHECK_THROWS_WITH(LoadDataset(dir / "h1.ugd"), Catch::Matchers::ContainsSubstring("coilz"));
    WriteBytes(dir / "h2.ugd", "not a dataset\n");
    CHECK_THROWS_AS(LoadDataset(dir / "h2.ugd"), Error);
    auto b3 = bytes;
    b3.replace(b3.find("record 0 seed"), 13, "record 0 sead");
    WriteBytes(dir / "h3.ugd", b3);
    CHECK_THROWS_WITH(LoadDataset(dir / "h3.ugd"), Catch::Matchers::ContainsSubstring("record 0"));
    CHECK_THROWS_AS(LoadDataset(dir / "missing.ugd"), Error);
  }
  SECTION("ground-truth presence must match the split")
  {
    auto mixed = MakeSplit(spec, "train");
    mixed.records[0] = d.records[0];
    CHECK_THROWS_AS(SaveDataset(mixed, dir / "mixed.ugd"), Error);
  }
}

TEST_CASE("epoch order")
{
  auto const d = MakeSplit(Small(), "train");
  auto const a = d.order(5), b = d.order(5), c = d.order(6);
  CHECK(a == b);
  CHECK(a != c);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < static_cast<Index>(sorted.size()); i++) {
    CHECK(sorted[i] == i);
  }
}

TEST_CASE("presets")
{
  CHECK(PhantomPreset("desk").h == 64);
  CHECK(PhantomPreset("knee").h == 320);
  CHECK(PhantomPreset("dce").w == 180);
  CHECK_THROWS_AS(PhantomPreset("brain"), Error);
  for (auto const *n : {"desk", "knee", "dce"}) {
    CHECK_NOTHROW(PhantomPreset(n).validate());
  }
}
