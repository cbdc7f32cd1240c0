#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rso/transformer.hpp"

namespace rso {

/// Central finite-difference gradient of a scalar function with respect to
/// `theta`, perturbing entries in place. Step h0 is scaled per entry by
/// max(1, |theta_ij|).
Mat fd_gradient(const std::function<double()>& eval, Mat& theta, double h0 = 1e-5);

/// Relative Frobenius gap between two gradients.
double grad_rel_err(const Mat& analytic, const Mat& fd);

struct GradCheckEntry {
  std::string name;
  double rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};

/// Finite-difference check of every B-gradient of one block in the low-rank
/// parameterization, against a fixed linear readout loss <C, Z2> on a random
/// instance. Also usable as the CLI gradcheck backend.
GradCheckReport block_gradcheck_rso(std::size_t s, std::size_t n, std::size_t r,
                                    std::uint64_t seed, bool causal = false);

/// Max relative Frobenius deviation of dB_l from P_l^T dW_l|_{W+PB} across
/// the six block matrices (the subspace chain rule), on a random instance.
double block_chain_rule_dev(std::size_t s, std::size_t n, std::size_t r, std::uint64_t seed,
                            bool causal = false);

/// Finite-difference check of one block's query-projection subspace gradient
/// through the full language-model loss.
GradCheckReport tiny_lm_gradcheck(std::size_t s, std::size_t n, std::size_t r,
                                  std::uint64_t seed);

}  // namespace rso
