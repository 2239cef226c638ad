#include "common.hpp"

#include "ugan/data/phantom.hpp"
#include "ugan/fft.hpp"
#include "ugan/mri/calib.hpp"

#include <sstream>

using namespace ugan;
using test::MaxAbsDiff;
using test::RandCTensor;

namespace {

double RelAdjointError(ImagingModel const &m, Rng &rng)
{
  auto const x = RandCTensor({m.h(), m.w()}, rng);
  auto const y = RandCTensor({m.coils(), m.h(), m.w()}, rng);
  auto const lhs = Dot(ForwardOp(x, m).span(), y.span());
  auto const rhs = Dot(x.span(), AdjointOp(y, m).span());
  return std::abs(lhs - rhs) / std::abs(lhs);
}

} // namespace

TEST_CASE("forward operator examples")
{
  Rng rng(1);
  SECTION("single unit coil with full mask is the DFT")
  {
    CoilMaps maps{CTensor({1, 8, 8}, Cx(1)), {}};
    ImagingModel const m(FullMask(8, 8), maps);
    auto const x = RandCTensor({8, 8}, rng);
    CHECK(MaxAbsDiff(ForwardOp(x, m), fft2c(x).reshaped({1, 8, 8})) < 1e-14);
  }
  SECTION("zero in, zero out")
  {
    auto const m = test::RandomModel(3, 8, 8, rng);
    CHECK(Norm(ForwardOp(CTensor({8, 8}), m).span()) == 0);
    CHECK(Norm(AdjointOp(CTensor({3, 8, 8}), m).span()) == 0);
  }
  SECTION("adjoint dot test, 2 coils 8x8")
  {
    CHECK(RelAdjointError(test::RandomModel(2, 8, 8, rng), rng) < 1e-10);
  }
  SECTION("shape mismatch")
  {
    auto const m = test::RandomModel(2, 8, 8, rng);
    CHECK_THROWS_AS(ForwardOp(CTensor({8, 6}), m), Error);
    CHECK_THROWS_AS(AdjointOp(CTensor({3, 8, 8}), m), Error);
    CHECK_THROWS_AS(ImagingModel(FullMask(8, 6), m.maps()), Error);
  }
}

TEST_CASE("adjoint identity over random models")
{
  Rng rng(2);
  std::uniform_int_distribution<Index> coils(1, 4), size(3, 16);
  for (int trial = 0; trial < 100; trial++) {
    auto const m = test::RandomModel(coils(rng), size(rng), size(rng), rng, 0.2 + 0.6 * (trial % 4) / 3.0);
    CHECK(RelAdjointError(m, rng) < 1e-10);
  }
}

TEST_CASE("normal operator")
{
  Rng rng(3);
  SECTION("full mask with normalised maps is the identity")
  {
    auto const maps = MakeCoilmaps(rng, 4, 16, 16);
    ImagingModel const m(FullMask(16, 16), maps);
    auto const x = RandCTensor({16, 16}, rng);
    CHECK(MaxAbsDiff(AdjointOp(ForwardOp(x, m), m), x) < 1e-10);
  }
  SECTION("undersampled single coil is a projection")
  {
    auto m0 = test::RandomModel(1, 12, 12, rng);
    auto maps = m0.maps();
    for (auto &v : maps.s.vec()) {
      v = std::polar(1.0, std::arg(v));
    }
    ImagingModel const m(m0.mask(), maps);
    auto const x = RandCTensor({12, 12}, rng);
    auto const p1 = AdjointOp(ForwardOp(x, m), m);
    auto const p2 = AdjointOp(ForwardOp(p1, m), m);
    CHECK(MaxAbsDiff(p1, p2) < 1e-10);
  }
  SECTION("operator norm is at most one for normalised maps")
  {
    for (int trial = 0; trial < 5; trial++) {
      auto const m = test::RandomModel(1 + trial % 4, 16, 16, rng, 0.3 + 0.15 * trial);
      double const n = OperatorNorm(m, 60, rng);
      CHECK(n <= 1 + 1e-6);
      CHECK(n > 0.5);
    }
  }
}

TEST_CASE("noise")
{
  Rng rng(4);
  auto const mask = PoissonDiscMask(32, 32, 4, 8, 8, 3);
  CTensor y({2, 32, 32});
  CHECK(AddNoise(y, mask, 0, rng) == y);
  CHECK_THROWS_AS(AddNoise(y, mask, -1, rng), Error);

  double const sigma = 0.3;
  double sum2 = 0;
  Index n = 0;
  while (n < 100000) {
    auto const noisy = AddNoise(y, mask, sigma, rng);
    for (Index i = 0; i < noisy.size(); i++) {
      if (mask.bits[i % (32 * 32)] > 0.5) {
        sum2 += std::norm(noisy[i]);
        n++;
      } else {
        REQUIRE(noisy[i] == Cx(0));
      }
    }
  }
  CHECK(std::sqrt(sum2 / static_cast<double>(n)) == Catch::Approx(sigma).epsilon(0.02));
}

TEST_CASE("poisson-disc masks")
{
  SECTION("R = 1 samples everything")
  {
    auto const m = PoissonDiscMask(16, 16, 1, 4, 4, 1);
    CHECK(m.sampled() == 256);
  }
  SECTION("64x64 R=4 calib 12")
  {
    auto const m = PoissonDiscMask(64, 64, 4, 12, 12, 7);
    CHECK(m.acceleration() >= 3.6);
    CHECK(m.acceleration() <= 4.4);
    for (Index y = 26; y < 38; y++) {
      for (Index x = 26; x < 38; x++) {
        REQUIRE(m.bits(y, x) == 1);
      }
    }
    CHECK(m.calibration_full());
  }
  SECTION("acceleration within 10% for a range of targets and seeds")
  {
    for (double r : {2.0, 4.0, 6.0, 8.0, 10.0, 12.0}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto const m = PoissonDiscMask(64, 64, r, 12, 12, seed);
        INFO("R " << r << " seed " << seed);
        CHECK(std::abs(m.acceleration() - r) <= 0.1 * r);
        CHECK(m.calibration_full());
      }
    }
  }
  SECTION("determinism")
  {
    CHECK(PoissonDiscMask(64, 64, 6, 12, 12, 5).bits == PoissonDiscMask(64, 64, 6, 12, 12, 5).bits);
    CHECK(PoissonDiscMask(64, 64, 6, 12, 12, 5).bits != PoissonDiscMask(64, 64, 6, 12, 12, 6).bits);
  }
  SECTION("density falls off away from the centre")
  {
    auto const bits = PoissonDiscAtBeta(64, 64, 4, 0, 0, 9);
    double inner = 0, outer = 0, ni = 0, no = 0;
    for (Index y = 0; y < 64; y++) {
      for (Index x = 0; x < 64; x++) {
        double const r = std::hypot(y - 32.0, x - 32.0);
        if (r < 12) {
          inner += bits(y, x), ni++;
        } else if (r > 24) {
          outer += bits(y, x), no++;
        }
      }
    }
    CHECK(inner / ni > 1.5 * outer / no);
  }
  SECTION("errors")
  {
    CHECK_THROWS_AS(PoissonDiscMask(16, 16, 0.5, 4, 4, 1), Error);
    CHECK_THROWS_AS(PoissonDiscMask(16, 16, 2, 20, 4, 1), Error);
    CHECK_THROWS_WITH(PoissonDiscMask(16, 16, 12, 12, 12, 1), Catch::Matchers::ContainsSubstring("infeasible"));
  }
  SECTION("bitmap dump")
  {
    auto const m = PoissonDiscMask(8, 6, 2, 2, 2, 1);
    std::ostringstream os;
    WritePbm(os, m);
    std::istringstream is(os.str());
    std::string magic, comment;
    Index w = 0, h = 0;
    is >> magic >> std::ws;
    if (is.peek() == '#') {
      std::getline(is, comment);
    }
    is >> w >> h;
    CHECK(comment.find("seed 1") != std::string::npos);
    CHECK(magic == "P1");
    CHECK(w == 6);
    CHECK(h == 8);
    std::string row;
    Index ones = 0;
    for (Index y = 0; y < h; y++) {
      is >> row;
      REQUIRE(row.size() == 6u);
      ones += std::count(row.begin(), row.end(), '1');
    }
    CHECK(ones == m.sampled());
  }
}

TEST_CASE("low-resolution coil maps")
{
  Rng rng(5);
  SECTION("single flat coil gives unit maps on support")
  {
    auto const img = MakePhantom(rng, PhantomSpec{.h = 32, .w = 32});
    auto const k = fft2c(img).reshaped({1, 32, 32});
    auto const maps = LowresMaps(ExtractCalib(k, 12, 12), 32, 32);
    Index on = 0;
    for (Index p = 0; p < 32 * 32; p++) {
      if (maps.support[p] > 0.5) {
        on++;
        CHECK(std::abs(std::abs(maps.s[p]) - 1) < 1e-12);
      } else {
        CHECK(maps.s[p] == Cx(0));
      }
    }
    CHECK(on > 0);
  }
  SECTION("partition of unity on support, 4 random coils")
  {
    auto const k = RandCTensor({4, 32, 32}, rng);
    auto const maps = LowresMaps(ExtractCalib(k, 10, 10), 32, 32);
    CHECK(maps.partition_error() < 1e-10);
  }
  SECTION("recovers known smooth sensitivities")
  {
    PhantomSpec const spec{.h = 64, .w = 64, .phase_order = 0};
    auto const img = MakePhantom(rng, spec);
    auto const truth = MakeCoilmaps(rng, 4, spec.h, spec.w);
    CTensor k({4, 64, 64});
    for (Index c = 0; c < 4; c++) {
      CTensor sc({64, 64});
      for (Index p = 0; p < 64 * 64; p++) {
        sc[p] = truth.s[c * 64 * 64 + p] * img[p];
      }
      sc = fft2c(sc);
      std::copy(sc.vec().begin(), sc.vec().end(), k.vec().begin() + c * 64 * 64);
    }
    auto const est = LowresMaps(ExtractCalib(k, 24, 24), 64, 64);
    double err = 0;
    Index n = 0;
    for (Index c = 0; c < 4; c++) {
      for (Index p = 0; p < 64 * 64; p++) {
        if (est.support[p] > 0.5) {
          err += std::abs(est.s[c * 64 * 64 + p] - truth.s[c * 64 * 64 + p]);
          n++;
        }
      }
    }
    CHECK(err / static_cast<double>(n) < 0.05);
  }
  SECTION("all-zero calibration is an error")
  {
    CHECK_THROWS_WITH(LowresMaps(CTensor({2, 8, 8}), 16, 16), Catch::Matchers::ContainsSubstring("all zero"));
  }
}

TEST_CASE("coil compression")
{
  Rng rng(6);
  SECTION("full basis is a unitary rotation")
  {
    auto const k = RandCTensor({5, 8, 8}, rng);
    auto const c = CoilCompress(k, 5);
    CHECK(c.retained == Catch::Approx(1).epsilon(1e-12));
    CHECK(MaxAbsDiff(CoilExpand(c.data, c.basis), k) < 1e-10);
    CHECK(Norm(c.data.span()) == Catch::Approx(Norm(k.span())).epsilon(1e-12));
  }
  SECTION("rank-3 data in 8 coils")
  {
    auto const profiles = RandCTensor({3, 8}, rng);
    auto const src = RandCTensor({3, 16, 16}, rng);
    CTensor k({8, 16, 16});
    for (Index c = 0; c < 8; c++) {
      for (Index p = 0; p < 256; p++) {
        for (Index j = 0; j < 3; j++) {
          k[c * 256 + p] += profiles[j * 8 + c] * src[j * 256 + p];
        }
      }
    }
    auto const c3 = CoilCompress(k, 3);
    CHECK(c3.retained > 0.999);
    CHECK(MaxAbsDiff(CoilExpand(c3.data, c3.basis), k) < 1e-9);
    CHECK(CoilCompress(k, 1).retained < 1);
  }
  SECTION("V = 1 on rank-2 data")
  {
    auto const a = RandCTensor({1, 64}, rng), b = RandCTensor({1, 64}, rng);
    CTensor k({2, 64});
    for (Index p = 0; p < 64; p++) {
      k[p] = a[p] + b[p];
      k[64 + p] = a[p] - Cx(0, 2) * b[p];
    }
    CHECK(CoilCompress(k, 1).retained < 1);
  }
  SECTION("V > C")
  {
    CHECK_THROWS_AS(CoilCompress(RandCTensor({2, 4, 4}, rng), 3), Error);
    CHECK_THROWS_AS(CoilCompress(RandCTensor({2, 4, 4}, rng), 0), Error);
  }
}
