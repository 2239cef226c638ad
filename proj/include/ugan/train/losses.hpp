#pragma once

#include "../models/critic.hpp"
#include "../mri/model.hpp"

namespace ugan {

struct DLossTerms
{
  ad::Var loss;     // wasserstein + penalty
  double wasserstein = 0; // mean D(fake) - mean D(real)
  double penalty = 0;     // lambda_gp * mean (||grad_m D(m_hat)|| - 1)^2
};

// WGAN-GP critic loss on a batch of encodings with explicit interpolation weights u (one per
// sample): m_hat = u real + (1 - u) fake. The input gradient is taken with create_graph, so the
// returned loss differentiates through it into the critic parameters `p`. A non-finite penalty
// throws with the critic scores and gradient norms.
DLossTerms DLossGraph(Critic const &critic, std::vector<ad::Var> const &p, std::vector<Tensor> const &real,
  std::vector<Tensor> const &fake, std::vector<double> const &u, double lambda_gp);

struct DLossResult
{
  double loss = 0, wasserstein = 0, penalty = 0;
  std::vector<Tensor> grads; // one per critic parameter
};

// Draws u ~ U(0,1) per sample from rng and returns the loss value with parameter gradients
DLossResult DLoss(Critic const &critic, std::vector<Tensor> const &real, std::vector<Tensor> const &fake,
  double lambda_gp, Rng &rng);

// -mean D(fake), critic parameters held constant; gradients reach whatever built `fake`
ad::Var GLoss(Critic const &critic, std::vector<ad::Var> const &fake);

} // namespace ugan
