#include "ugan/train/losses.hpp"

#include <cmath>

namespace ugan {

using namespace ad;

DLossTerms DLossGraph(Critic const &critic, std::vector<Var> const &p, std::vector<Tensor> const &real,
  std::vector<Tensor> const &fake, std::vector<double> const &u, double lambda_gp)
{
  if (real.empty() || real.size() != fake.size() || u.size() != real.size()) {
    throw Error("d_loss: {} real, {} fake encodings and {} interpolation weights", real.size(), fake.size(), u.size());
  }
  if (!(lambda_gp >= 0)) {
    throw Error("d_loss: lambda_gp must be >= 0, got {}", lambda_gp);
  }
  double const inv_n = 1.0 / static_cast<double>(real.size());
  Var wass, pen;
  std::vector<double> norms, scores_real, scores_fake;
  for (std::size_t b = 0; b < real.size(); b++) {
    if (real[b].shape() != fake[b].shape()) {
      throw Error("d_loss: real {} and fake {} encodings differ in shape", ShapeStr(real[b].shape()), ShapeStr(fake[b].shape()));
    }
    Var const sr = critic.score(Var::Constant(real[b]), p);
    Var const sf = critic.score(Var::Constant(fake[b]), p);
    scores_real.push_back(sr.item());
    scores_fake.push_back(sf.item());
    Var const w = Scale(Sub(sf, sr), inv_n);
    wass = wass.defined() ? Add(wass, w) : w;

    if (lambda_gp > 0) {
      Tensor mix(real[b].shape());
      for (Index i = 0; i < mix.size(); i++) {
        mix[i] = u[b] * real[b][i] + (1 - u[b]) * fake[b][i];
      }
      Var const m_hat = Var::Leaf(std::move(mix));
      Var const s_hat = critic.score(m_hat, p);
      Var const g = Grad(s_hat, {m_hat}, true)[0];
      Var const norm = Sqrt(Sum(Square(g)));
      norms.push_back(norm.item());
      Var const term = Scale(Square(AddConst(norm, -1.0)), lambda_gp * inv_n);
      pen = pen.defined() ? Add(pen, term) : term;
    }
  }
  DLossTerms out;
  out.wasserstein = wass.item();
  out.penalty = pen.defined() ? pen.item() : 0.0;
  if (!std::isfinite(out.penalty) || !std::isfinite(out.wasserstein)) {
    throw Error("d_loss is not finite: wasserstein {} penalty {}; D(real) {} D(fake) {} |grad D(m_hat)| {}", out.wasserstein,
      out.penalty, scores_real, scores_fake, norms);
  }
  out.loss = pen.defined() ? Add(wass, pen) : wass;
  return out;
}

DLossResult DLoss(Critic const &critic, std::vector<Tensor> const &real, std::vector<Tensor> const &fake,
  double lambda_gp, Rng &rng)
{
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> u(real.size());
  for (auto &v : u) {
    v = U(rng);
  }
  auto const p = critic.params().leaves();
  auto const terms = DLossGraph(critic, p, real, fake, u, lambda_gp);
  DLossResult r{.loss = terms.loss.item(), .wasserstein = terms.wasserstein, .penalty = terms.penalty, .grads = {}};
  for (auto const &g : Grad(terms.loss, p)) {
    r.grads.push_back(g.value());
  }
  return r;
}

Var GLoss(Critic const &critic, std::vector<Var> const &fake)
{
  if (fake.empty()) {
    throw Error("g_loss: empty batch");
  }
  std::vector<Var> p;
  for (std::size_t i = 0; i < critic.params().size(); i++) {
    p.push_back(Var::Constant(critic.params().at(i)));
  }
  Var total;
  for (auto const &f : fake) {
    Var const s = critic.score(f, p);
    total = total.defined() ? Add(total, s) : s;
  }
  return Scale(total, -1.0 / static_cast<double>(fake.size()));
}

} // namespace ugan
