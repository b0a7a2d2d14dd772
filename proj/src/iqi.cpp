#include "starmm/iqi.hpp"

#include <cmath>

namespace starmm {

bool IqiProfile::is_ideal() const {
  return (amplitude.array() == 1.0).all() && (phase.array() == 0.0).all();
}

GammaPair gamma_matrices(const VecR& amplitude, const VecR& phase) {
  if (amplitude.size() != phase.size())
    throw DimensionError("gamma_matrices: amplitude/phase length mismatch");
  if ((amplitude.array() <= 0.0).any())
    throw DimensionError("gamma_matrices: amplitudes must be positive");
  const Eigen::Index n = amplitude.size();
  GammaPair g{VecC(n), VecC(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    Cplx rot = std::polar(amplitude[i], phase[i]);
    g.g1[i] = (1.0 + rot) / 2.0;
    g.g2[i] = 1.0 - std::conj(g.g1[i]);
  }
  return g;
}

GammaPair gamma_matrices(const MatR& amplitude, const MatR& phase) {
  auto check_diag = [](const MatR& m, const char* name) {
    if (m.rows() != m.cols()) throw DimensionError(std::string("gamma_matrices: ") + name + " not square");
    MatR off = m - MatR(m.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() != 0.0)
      throw DimensionError(std::string("gamma_matrices: ") + name + " is not diagonal");
  };
  check_diag(amplitude, "A");
  check_diag(phase, "phi");
  return gamma_matrices(VecR(amplitude.diagonal()), VecR(phase.diagonal()));
}

VecC widely_linear_apply(const VecC& g1, const VecC& g2, const VecC& x) {
  if (g1.size() != x.size() || g2.size() != x.size())
    throw DimensionError("widely_linear_apply: vector length mismatch");
  return g1.cwiseProduct(x) + g2.cwiseProduct(x.conjugate());
}

MatR real_composite(const MatC& b1, const MatC& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw DimensionError("real_composite: B1/B2 shape mismatch");
  const Eigen::Index r = b1.rows(), c = b1.cols();
  MatR m(2 * r, 2 * c);
  m.topLeftCorner(r, c) = b1.real() + b2.real();
  m.topRightCorner(r, c) = -b1.imag() + b2.imag();
  m.bottomLeftCorner(r, c) = b1.imag() + b2.imag();
  m.bottomRightCorner(r, c) = b1.real() - b2.real();
  return m;
}

MatR wlt_channel_composite(const MatC& channel, const IqiProfile& tx, const IqiProfile& rx) {
  if (tx.size() != channel.cols())
    throw DimensionError("wlt_channel_composite: TX profile size does not match channel columns");
  if (rx.size() != channel.rows())
    throw DimensionError("wlt_channel_composite: RX profile size does not match channel rows");
  if (tx.is_ideal() && rx.is_ideal())
    return real_composite(channel, MatC::Zero(channel.rows(), channel.cols()));

  GammaPair gt = gamma_matrices(tx.amplitude, tx.phase);
  GammaPair gr = gamma_matrices(rx.amplitude, rx.phase);

  // y = G1r (H (G1t x + G2t x*) + n) + G2r (.)*  =  B1 x + B2 x* + noise
  const MatC hc = channel.conjugate();
  MatC b1 = gr.g1.asDiagonal() * channel * gt.g1.asDiagonal() +
            gr.g2.asDiagonal() * hc * gt.g2.conjugate().asDiagonal();
  MatC b2 = gr.g1.asDiagonal() * channel * gt.g2.asDiagonal() +
            gr.g2.asDiagonal() * hc * gt.g1.conjugate().asDiagonal();
  return real_composite(b1, b2);
}

RealChannel real_decompose(const MatC& channel, const IqiProfile& tx, const IqiProfile& rx, double sigma2) {
  if (sigma2 <= 0.0) throw ConfigError("real_decompose: sigma2 must be positive");
  RealChannel out;
  out.h_real = wlt_channel_composite(channel, tx, rx);
  GammaPair gr = gamma_matrices(rx.amplitude, rx.phase);
  MatR mr = real_composite(MatC(gr.g1.asDiagonal()), MatC(gr.g2.asDiagonal()));
  out.c_noise = 0.5 * sigma2 * mr * mr.transpose();
  return out;
}

RealChannel real_decompose(const ComplexScenario& s, const StarRisState& ris, int user,
                           const IqiProfile& tx, const IqiProfile& rx, double sigma2) {
  return real_decompose(compose_effective_channel(s, ris, user), tx, rx, sigma2);
}

IqiModel IqiModel::ideal(int n_bs, int n_u, int n_users) {
  return {IqiProfile::ideal(n_bs), std::vector<IqiProfile>(n_users, IqiProfile::ideal(n_u))};
}

IqiModel IqiModel::uniform(int n_bs, int n_u, int n_users, double a, double phase_rad) {
  return {IqiProfile::scaled(n_bs, a, phase_rad),
          std::vector<IqiProfile>(n_users, IqiProfile::scaled(n_u, a, phase_rad))};
}

std::vector<RealChannel> build_links(const ComplexScenario& s, const StarRisState& ris,
                                     const IqiModel& iqi, double sigma2) {
  if (static_cast<int>(iqi.user_rx.size()) != s.n_users())
    throw DimensionError("build_links: one RX profile per user required");
  std::vector<RealChannel> links;
  links.reserve(s.n_users());
  for (int k = 0; k < s.n_users(); ++k)
    links.push_back(real_decompose(s, ris, k, iqi.bs_tx, iqi.user_rx[k], sigma2));
  return links;
}

}  // namespace starmm
