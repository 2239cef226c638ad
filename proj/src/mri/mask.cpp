#include "ugan/mri/mask.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace ugan {

Index SamplingMask::sampled() const
{
  Index n = 0;
  for (auto v : bits.vec()) {
    n += v > 0.5 ? 1 : 0;
  }
  return n;
}

double SamplingMask::acceleration() const
{
  auto const s = sampled();
  return s == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(bits.size()) / static_cast<double>(s);
}

namespace {

struct CalibBlock
{
  Index y0, x0, h, w;
  bool contains(Index y, Index x) const { return y >= y0 && y < y0 + h && x >= x0 && x < x0 + w; }
};

CalibBlock Calib(Index h, Index w, Index ch, Index cw)
{
  return CalibBlock{h / 2 - ch / 2, w / 2 - cw / 2, ch, cw};
}

// Accepted samples bucketed on a coarse grid so a neighbourhood query only touches nearby cells
class Buckets
{
public:
  Buckets(Index h, Index w)
    : nh_((h + kCell - 1) / kCell)
    , nw_((w + kCell - 1) / kCell)
    , cells_(static_cast<std::size_t>(nh_ * nw_))
  {
  }

  void insert(Index y, Index x) { cells_[(y / kCell) * nw_ + x / kCell].push_back({y, x}); }

  bool near(Index y, Index x, double r) const
  {
    Index const reach = static_cast<Index>(std::ceil(r));
    Index const cy0 = std::max<Index>(0, (y - reach) / kCell), cy1 = std::min(nh_ - 1, (y + reach) / kCell);
    Index const cx0 = std::max<Index>(0, (x - reach) / kCell), cx1 = std::min(nw_ - 1, (x + reach) / kCell);
    double const r2 = r * r;
    for (Index cy = cy0; cy <= cy1; cy++) {
      for (Index cx = cx0; cx <= cx1; cx++) {
        for (auto const &[py, px] : cells_[cy * nw_ + cx]) {
          double const dy = static_cast<double>(py - y), dx = static_cast<double>(px - x);
          if (dy * dy + dx * dx < r2) {
            return true;
          }
        }
      }
    }
    return false;
  }

private:
  static constexpr Index kCell = 4;
  Index nh_, nw_;
  std::vector<std::vector<std::pair<Index, Index>>> cells_;
};

std::vector<Index> CandidateOrder(Index h, Index w, std::uint64_t seed)
{
  std::vector<Index> order(static_cast<std::size_t>(h * w));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; i--) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  return order;
}

Tensor Throw(Index h, Index w, double beta, CalibBlock const &cb, std::vector<Index> const &order)
{
  Tensor bits(Shape{h, w}, 0.0);
  Buckets buckets(h, w);
  double const cy = static_cast<double>(h / 2), cx = static_cast<double>(w / 2);
  double const rmax = std::hypot(std::max(cy, static_cast<double>(h - 1) - cy), std::max(cx, static_cast<double>(w - 1) - cx));
  for (Index y = cb.y0; y < cb.y0 + cb.h; y++) {
    for (Index x = cb.x0; x < cb.x0 + cb.w; x++) {
      bits(y, x) = 1;
      buckets.insert(y, x);
    }
  }
  for (Index p : order) {
    Index const y = p / w, x = p % w;
    if (cb.contains(y, x)) {
      continue;
    }
    double const rho = rmax > 0 ? std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx) / rmax : 0;
    double const radius = 1.0 + beta * rho;
    if (!buckets.near(y, x, radius)) {
      bits(y, x) = 1;
      buckets.insert(y, x);
    }
  }
  return bits;
}

double Accel(Tensor const &bits)
{
  Index n = 0;
  for (auto v : bits.vec()) {
    n += v > 0.5;
  }
  return static_cast<double>(bits.size()) / static_cast<double>(std::max<Index>(n, 1));
}

} // namespace

bool SamplingMask::calibration_full() const
{
  auto const cb = Calib(h(), w(), calib_h, calib_w);
  for (Index y = cb.y0; y < cb.y0 + cb.h; y++) {
    for (Index x = cb.x0; x < cb.x0 + cb.w; x++) {
      if (bits(y, x) < 0.5) {
        return false;
      }
    }
  }
  return true;
}

Tensor PoissonDiscAtBeta(Index h, Index w, double beta, Index calib_h, Index calib_w, std::uint64_t seed)
{
  return Throw(h, w, beta, Calib(h, w, calib_h, calib_w), CandidateOrder(h, w, seed));
}

SamplingMask PoissonDiscMask(Index h, Index w, double target_r, Index calib_h, Index calib_w, std::uint64_t seed)
{
  if (h < 1 || w < 1) {
    throw Error("mask grid must be at least 1x1, got {}x{}", h, w);
  }
  if (!(target_r >= 1)) {
    throw Error("target acceleration must be >= 1, got {}", target_r);
  }
  if (calib_h < 0 || calib_w < 0 || calib_h > h || calib_w > w) {
    throw Error("calibration region {}x{} does not fit in {}x{}", calib_h, calib_w, h, w);
  }
  SamplingMask m{.bits = Tensor(Shape{h, w}, 1.0), .target_r = target_r, .calib_h = calib_h, .calib_w = calib_w, .seed = seed};
  if (target_r == 1) {
    return m;
  }
  double const total = static_cast<double>(h * w);
  // at least one sample outside the calibration block is always accepted
  double const achievable = total / static_cast<double>(calib_h * calib_w + (calib_h * calib_w < h * w ? 1 : 0));
  if (target_r > achievable) {
    throw Error("target acceleration {} is infeasible: a {}x{} calibration region on {}x{} allows at most {:.2f}",
      target_r, calib_h, calib_w, h, w, achievable);
  }

  auto const cb = Calib(h, w, calib_h, calib_w);
  auto const order = CandidateOrder(h, w, seed);

  double lo = 0, hi = 1;
  Tensor best = Throw(h, w, 0, cb, order);
  double best_beta = 0;
  auto consider = [&](double beta, Tensor bits) {
    if (std::abs(Accel(bits) - target_r) < std::abs(Accel(best) - target_r)) {
      best = std::move(bits);
      best_beta = beta;
    }
  };
  while (true) {
    auto bits = Throw(h, w, hi, cb, order);
    double const r = Accel(bits);
    consider(hi, std::move(bits));
    if (r >= target_r) {
      break;
    }
    lo = hi;
    hi *= 2;
    if (hi > 1e6) {
      throw Error("could not reach acceleration {} on {}x{}", target_r, h, w);
    }
  }
  for (int it = 0; it < 60 && std::abs(Accel(best) - target_r) > 0.005 * target_r; it++) {
    double const mid = 0.5 * (lo + hi);
    auto bits = Throw(h, w, mid, cb, order);
    double const r = Accel(bits);
    consider(mid, std::move(bits));
    (r < target_r ? lo : hi) = mid;
  }
  double const got = Accel(best);
  if (std::abs(got - target_r) > 0.1 * target_r) {
    throw Error("mask calibration reached R={:.3f}, outside 10% of target {}", got, target_r);
  }
  m.bits = std::move(best);
  m.beta = best_beta;
  return m;
}

std::string MaskRows(SamplingMask const &m)
{
  std::string s;
  s.reserve(static_cast<std::size_t>(m.h() * (m.w() + 1)));
  for (Index y = 0; y < m.h(); y++) {
    for (Index x = 0; x < m.w(); x++) {
      s.push_back(m.bits(y, x) > 0.5 ? '1' : '0');
    }
    s.push_back('\n');
  }
  return s;
}

void WritePbm(std::ostream &os, SamplingMask const &m)
{
  os << "P1\n# target_r " << m.target_r << " seed " << m.seed << "\n" << m.w() << ' ' << m.h() << '\n' << MaskRows(m);
}

} // namespace ugan
