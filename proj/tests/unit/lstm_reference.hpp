#pragma once

#include <cmath>
#include <vector>

#include "levelseq/lstm.hpp"

namespace oracle {

using levelseq::DropoutMask;
using levelseq::LstmModel;

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line forward pass over the documented parameter layout. Returns
// the mean next-token NLL of `window` from a zero state, with an optional
// fixed dropout mask per step.
inline double reference_loss(const LstmModel& m, const std::vector<int>& window,
                             const std::vector<DropoutMask>* masks = nullptr) {
  const auto& p = m.params();
  const int L = m.num_layers();
  std::vector<std::vector<double>> h(static_cast<std::size_t>(L)), c(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    h[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(m.hidden_size(l)), 0.0);
    c[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(m.hidden_size(l)), 0.0);
  }
  double nll = 0.0;
  for (std::size_t t = 0; t + 1 < window.size(); ++t) {
    std::vector<double> x(static_cast<std::size_t>(m.vocab_size()), 0.0);
    x[static_cast<std::size_t>(window[t])] = 1.0;
    for (int l = 0; l < L; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      const int H = m.hidden_size(l);
      const int in = m.input_size(l);
      std::vector<double> xh = x;
      xh.insert(xh.end(), h[lu].begin(), h[lu].end());
      std::vector<double> hn(static_cast<std::size_t>(H));
      for (int k = 0; k < H; ++k) {
        double z[4];
        for (int gate = 0; gate < 4; ++gate) {
          const int col = gate * H + k;
          double s = p[m.bias_offset(l) + static_cast<std::size_t>(col)];
          for (int r = 0; r < in + H; ++r) {
            s += xh[static_cast<std::size_t>(r)] *
                 p[m.weight_offset(l) + static_cast<std::size_t>(r * 4 * H + col)];
          }
          z[gate] = s;
        }
        const auto ku = static_cast<std::size_t>(k);
        const double cn = sigm(z[1]) * c[lu][ku] + sigm(z[0]) * std::tanh(z[3]);
        c[lu][ku] = cn;
        hn[ku] = sigm(z[2]) * std::tanh(cn);
      }
      h[lu] = hn;
      x = hn;
      if (masks) {
        for (std::size_t k = 0; k < x.size(); ++k) x[k] *= (*masks)[t][lu][k];
      }
    }
    const int V = m.vocab_size();
    std::vector<double> logits(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) {
      double s = p[m.proj_bias_offset() + static_cast<std::size_t>(v)];
      for (std::size_t k = 0; k < x.size(); ++k) {
        s += x[k] * p[m.proj_weight_offset() + k * static_cast<std::size_t>(V) + static_cast<std::size_t>(v)];
      }
      logits[static_cast<std::size_t>(v)] = s;
    }
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    nll -= logits[static_cast<std::size_t>(window[t + 1])] - mx - std::log(z);
  }
  return nll / static_cast<double>(window.size() - 1);
}

}  // namespace oracle
