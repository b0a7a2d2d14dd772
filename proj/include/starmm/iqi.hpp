#pragma once

#include <vector>

#include "starmm/channel.hpp"
#include "starmm/common.hpp"

namespace starmm {

/// Amplitude/phase mismatch between the I and Q branches of one transceiver,
/// stored as the diagonals of A and phi (radians). ideal() means no IQI.
struct IqiProfile {
  VecR amplitude;  // diagonal of A, positive entries
  VecR phase;      // diagonal of phi, radians

  static IqiProfile ideal(int n) { return {VecR::Ones(n), VecR::Zero(n)}; }
  /// Scaled-identity profile A = a*I, phi = phase_rad*I.
  static IqiProfile scaled(int n, double a, double phase_rad) {
    return {VecR::Constant(n, a), VecR::Constant(n, phase_rad)};
  }
  int size() const { return static_cast<int>(amplitude.size()); }
  bool is_ideal() const;
};

/// Diagonals of the widely-linear pair: out = g1 .* x + g2 .* conj(x).
struct GammaPair {
  VecC g1;
  VecC g2;
};

/// Gamma1 = (I + A e^{j phi}) / 2, Gamma2 = I - conj(Gamma1).
GammaPair gamma_matrices(const VecR& amplitude, const VecR& phase);
/// Overload on diagonal matrices; throws DimensionError on off-diagonal input.
GammaPair gamma_matrices(const MatR& amplitude, const MatR& phase);

VecC widely_linear_apply(const VecC& g1, const VecC& g2, const VecC& x);

/// Real 2x2-block composite of the widely-linear map y = B1 x + B2 conj(x):
/// [Re y; Im y] = composite * [Re x; Im x].
MatR real_composite(const MatC& b1, const MatC& b2);

/// Effective real-domain channel and noise covariance for one user.
struct RealChannel {
  MatR h_real;   // 2N_u x 2N_BS
  MatR c_noise;  // 2N_u x 2N_u, symmetric positive definite
};

/// Real composite of the end-to-end widely-linear channel (TX WLT, complex
/// channel, RX WLT), without the noise term. Linear in `channel` for fixed
/// profiles.
MatR wlt_channel_composite(const MatC& channel, const IqiProfile& tx, const IqiProfile& rx);

/// Real decomposition of the full chain TX-WLT -> complex channel -> noise ->
/// RX-WLT. With proper noise CN(0, sigma2 I), the effective noise covariance
/// is (sigma2/2) * Mr * Mr^T with Mr the composite of the receive WLT.
RealChannel real_decompose(const MatC& channel, const IqiProfile& tx, const IqiProfile& rx, double sigma2);

/// Spec-shaped convenience overload: composes the effective channel first.
RealChannel real_decompose(const ComplexScenario& s, const StarRisState& ris, int user,
                           const IqiProfile& tx, const IqiProfile& rx, double sigma2);

/// IQI profiles of every transceiver in the downlink: BS transmit side plus
/// one receive profile per user.
struct IqiModel {
  IqiProfile bs_tx;
  std::vector<IqiProfile> user_rx;

  static IqiModel ideal(int n_bs, int n_u, int n_users);
  /// Same scaled-identity profile at the BS and every user (A_T = A_R).
  static IqiModel uniform(int n_bs, int n_u, int n_users, double a, double phase_rad);
};

/// Effective real channels of all users for a fixed surface state.
std::vector<RealChannel> build_links(const ComplexScenario& s, const StarRisState& ris,
                                     const IqiModel& iqi, double sigma2);

}  // namespace starmm
