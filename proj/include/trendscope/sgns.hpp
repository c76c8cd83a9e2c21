#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace trendscope::graph {

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  T acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// -log(sigmoid(x)), stable for large |x|.
template <class T>
T neg_log_sigmoid(T x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

template <class T>
T sigmoid(T x) {
  return x >= 0 ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

// Loss for one (center, context, negatives) triple:
//   -log s(v.u_o) - sum_k log s(-v.u_k)
template <class T>
T sgns_loss(std::span<const T> center, std::span<const T> context,
            const std::vector<std::span<const T>>& negatives) {
  T loss = neg_log_sigmoid(dot(center, context));
  for (const auto& neg : negatives) loss += neg_log_sigmoid(-dot(center, neg));
  return loss;
}

// Analytical gradient of sgns_loss. Outputs must be sized like the inputs.
template <class T>
void sgns_gradient(std::span<const T> center, std::span<const T> context,
                   const std::vector<std::span<const T>>& negatives, std::span<T> g_center,
                   std::span<T> g_context, const std::vector<std::span<T>>& g_negatives) {
  const std::size_t dim = center.size();
  const T c_pos = sigmoid(dot(center, context)) - T(1);
  for (std::size_t i = 0; i < dim; ++i) {
    g_center[i] = c_pos * context[i];
    g_context[i] = c_pos * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const T c_neg = sigmoid(dot(center, negatives[k]));
    for (std::size_t i = 0; i < dim; ++i) {
      g_center[i] += c_neg * negatives[k][i];
      g_negatives[k][i] = c_neg * center[i];
    }
  }
}

}  // namespace trendscope::graph
