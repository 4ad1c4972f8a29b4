#include "caah/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "caah/errors.hpp"

namespace caah::nn {

namespace {

template <typename T>
void require_same_shape(const Expr<T>& a, const Expr<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

template <typename T>
T softplus(T z) {
  return std::max(z, T{0}) + std::log1p(std::exp(-std::abs(z)));
}

constexpr double kGeluCubic = 0.044715;

}  // namespace

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
T gelu_value(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T inner = k * (x + static_cast<T>(kGeluCubic) * x * x * x);
  return static_cast<T>(0.5) * x * (T{1} + std::tanh(inner));
}

template <typename T>
T bce_with_logits_value(T logit, T target, T pos_weight) {
  return pos_weight * target * softplus(-logit) + (T{1} - target) * softplus(logit);
}

template <typename T>
Expr<T> linear(Expr<T> x, Expr<T> weight, Expr<T> bias) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  const Tensor<T>& bv = bias.value();
  if (wv.rank() != 2 || bv.rank() != 1 || bv.dim(0) != wv.dim(1) || xv.rank() == 0 ||
      xv.last_dim() != wv.dim(0)) {
    throw std::invalid_argument("linear: incompatible shapes x=" + shape_string(xv.shape()) +
                                " w=" + shape_string(wv.shape()) + " b=" + shape_string(bv.shape()));
  }
  const std::size_t in = wv.dim(0), out = wv.dim(1), rows = xv.rows();
  Shape yshape = xv.shape();
  yshape.back() = out;
  Tensor<T> y(yshape);
  const T* xp = xv.data();
  const T* wp = wv.data();
  for (std::size_t r = 0; r < rows; ++r) {
    T* yr = y.data() + r * out;
    std::copy(bv.data(), bv.data() + out, yr);
    for (std::size_t k = 0; k < in; ++k) {
      const T xk = xp[r * in + k];
      if (xk == T{0}) continue;
      const T* wk = wp + k * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xk * wk[o];
    }
  }
  auto& g = x.graph();
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return g.emit(std::move(y), {xi, wi, bi}, [xi, wi, bi, rows, in, out](Graph<T>& g, std::size_t self) {
    const T* gy = g.grad(self).data();
    const T* xp = g.value(xi).data();
    const T* wp = g.value(wi).data();
    if (g.requires_grad(wi)) {
      T* gw = g.grad(wi).data();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gyr = gy + r * out;
        for (std::size_t k = 0; k < in; ++k) {
          const T xk = xp[r * in + k];
          if (xk == T{0}) continue;
          T* gwk = gw + k * out;
          for (std::size_t o = 0; o < out; ++o) gwk[o] += xk * gyr[o];
        }
      }
    }
    if (g.requires_grad(bi)) {
      T* gb = g.grad(bi).data();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) gb[o] += gy[r * out + o];
    }
    if (g.requires_grad(xi)) {
      T* gx = g.grad(xi).data();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gyr = gy + r * out;
        for (std::size_t k = 0; k < in; ++k) {
          const T* wk = wp + k * out;
          T acc{0};
          for (std::size_t o = 0; o < out; ++o) acc += gyr[o] * wk[o];
          gx[r * in + k] += acc;
        }
      }
    }
  });
}

template <typename T>
Expr<T> gelu(Expr<T> x) {
  Tensor<T> y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = gelu_value(xv[i]);
  const std::size_t xi = x.id();
  return x.graph().emit(std::move(y), {xi}, [xi](Graph<T>& g, std::size_t self) {
    const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
    const T c = static_cast<T>(kGeluCubic);
    const auto& xv = g.value(xi);
    const auto& gy = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const T v = xv[i];
      const T th = std::tanh(k * (v + c * v * v * v));
      const T d = static_cast<T>(0.5) * (T{1} + th) +
                  static_cast<T>(0.5) * v * (T{1} - th * th) * k * (T{1} + 3 * c * v * v);
      gx[i] += gy[i] * d;
    }
  });
}

template <typename T>
Expr<T> dropout(Expr<T> x, T p, Rng& rng) {
  if (p < T{0} || p >= T{1}) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (p == T{0}) return x;
  auto& g = x.graph();
  g.mark_stochastic();
  const T keep_scale = T{1} / (T{1} - p);
  std::vector<T> mask(x.value().size());
  for (auto& m : mask) m = rng.bernoulli(static_cast<double>(p)) ? T{0} : keep_scale;
  Tensor<T> y(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mask[i];
  const std::size_t xi = x.id();
  return g.emit(std::move(y), {xi}, [xi, mask = std::move(mask)](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += gy[i] * mask[i];
  });
}

template <typename T>
Expr<T> layer_norm(Expr<T> x, Expr<T> gain, Expr<T> bias, T eps) {
  const auto& xv = x.value();
  const std::size_t n = xv.last_dim();
  if (xv.rank() == 0 || n == 0) throw std::invalid_argument("layer_norm: empty last dimension");
  if (gain.value().size() != n || bias.value().size() != n) {
    throw std::invalid_argument("layer_norm: gain/bias length must equal last dimension " +
                                std::to_string(n));
  }
  const std::size_t rows = xv.rows();
  Tensor<T> y(xv.shape());
  std::vector<T> xhat(xv.size());
  std::vector<T> inv_std(rows);
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * n;
    T mean{0};
    for (std::size_t i = 0; i < n; ++i) mean += xr[i];
    mean /= static_cast<T>(n);
    T var{0};
    for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<T>(n);
    const T is = T{1} / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t i = 0; i < n; ++i) {
      const T h = (xr[i] - mean) * is;
      xhat[r * n + i] = h;
      y[r * n + i] = h * gv[i] + bv[i];
    }
  }
  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return x.graph().emit(
      std::move(y), {xi, gi, bi},
      [xi, gi, bi, rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph<T>& g,
                                                                                    std::size_t self) {
        const auto& gy = g.grad(self);
        const auto& gv = g.value(gi);
        if (g.requires_grad(gi)) {
          auto& gg = g.grad(gi);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t i = 0; i < n; ++i) gg[i] += gy[r * n + i] * xhat[r * n + i];
        }
        if (g.requires_grad(bi)) {
          auto& gb = g.grad(bi);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t i = 0; i < n; ++i) gb[i] += gy[r * n + i];
        }
        if (g.requires_grad(xi)) {
          auto& gx = g.grad(xi);
          std::vector<T> dh(n);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_dh{0}, mean_dh_h{0};
            for (std::size_t i = 0; i < n; ++i) {
              dh[i] = gy[r * n + i] * gv[i];
              mean_dh += dh[i];
              mean_dh_h += dh[i] * xhat[r * n + i];
            }
            mean_dh /= static_cast<T>(n);
            mean_dh_h /= static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
              gx[r * n + i] += inv_std[r] * (dh[i] - mean_dh - xhat[r * n + i] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Expr<T> masked_softmax(Expr<T> logits, std::span<const std::uint8_t> mask) {
  const auto& lv = logits.value();
  if (mask.size() != lv.size()) {
    throw std::invalid_argument("masked_softmax: mask has " + std::to_string(mask.size()) +
                                " entries for " + std::to_string(lv.size()) + " logits");
  }
  const std::size_t n = lv.last_dim(), rows = lv.rows();
  Tensor<T> y(lv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* lr = lv.data() + r * n;
    const std::uint8_t* mr = mask.data() + r * n;
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (mr[i]) {
        mx = std::max(mx, lr[i]);
        any = true;
      }
    }
    if (!any) throw DataError("masked_softmax: row " + std::to_string(r) + " has no valid position");
    T total{0};
    T* yr = y.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      yr[i] = mr[i] ? std::exp(lr[i] - mx) : T{0};
      total += yr[i];
    }
    for (std::size_t i = 0; i < n; ++i) yr[i] /= total;
  }
  const std::size_t li = logits.id();
  return logits.graph().emit(std::move(y), {li}, [li, rows, n](Graph<T>& g, std::size_t self) {
    const auto& yv = g.value(self);
    const auto& gy = g.grad(self);
    auto& gl = g.grad(li);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t i = 0; i < n; ++i) dot += yv[r * n + i] * gy[r * n + i];
      for (std::size_t i = 0; i < n; ++i) gl[r * n + i] += yv[r * n + i] * (gy[r * n + i] - dot);
    }
  });
}

template <typename T>
Expr<T> attention_scores(Expr<T> seq, Expr<T> query) {
  const auto& sv = seq.value();
  const auto& qv = query.value();
  if (sv.rank() != 3 || qv.rank() != 1 || qv.dim(0) != sv.dim(2)) {
    throw std::invalid_argument("attention_scores: expected seq[B,L,D] and query[D], got " +
                                shape_string(sv.shape()) + " and " + shape_string(qv.shape()));
  }
  const std::size_t b = sv.dim(0), l = sv.dim(1), d = sv.dim(2);
  Tensor<T> y({b, l});
  for (std::size_t r = 0; r < b * l; ++r) {
    T acc{0};
    const T* sr = sv.data() + r * d;
    for (std::size_t k = 0; k < d; ++k) acc += sr[k] * qv[k];
    y[r] = acc;
  }
  const std::size_t si = seq.id(), qi = query.id();
  return seq.graph().emit(std::move(y), {si, qi}, [si, qi, b, l, d](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (g.requires_grad(si)) {
      const auto& qv = g.value(qi);
      auto& gs = g.grad(si);
      for (std::size_t r = 0; r < b * l; ++r)
        for (std::size_t k = 0; k < d; ++k) gs[r * d + k] += gy[r] * qv[k];
    }
    if (g.requires_grad(qi)) {
      const auto& sv = g.value(si);
      auto& gq = g.grad(qi);
      for (std::size_t r = 0; r < b * l; ++r)
        for (std::size_t k = 0; k < d; ++k) gq[k] += gy[r] * sv[r * d + k];
    }
  });
}

template <typename T>
Expr<T> weighted_sum(Expr<T> weights, Expr<T> seq) {
  const auto& wv = weights.value();
  const auto& sv = seq.value();
  if (sv.rank() != 3 || wv.rank() != 2 || wv.dim(0) != sv.dim(0) || wv.dim(1) != sv.dim(1)) {
    throw std::invalid_argument("weighted_sum: expected weights[B,L] and seq[B,L,D], got " +
                                shape_string(wv.shape()) + " and " + shape_string(sv.shape()));
  }
  const std::size_t b = sv.dim(0), l = sv.dim(1), d = sv.dim(2);
  Tensor<T> y({b, d});
  for (std::size_t s = 0; s < b; ++s) {
    T* yr = y.data() + s * d;
    for (std::size_t i = 0; i < l; ++i) {
      const T a = wv[s * l + i];
      if (a == T{0}) continue;
      const T* sr = sv.data() + (s * l + i) * d;
      for (std::size_t k = 0; k < d; ++k) yr[k] += a * sr[k];
    }
  }
  const std::size_t wi = weights.id(), si = seq.id();
  return seq.graph().emit(std::move(y), {wi, si}, [wi, si, b, l, d](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (g.requires_grad(wi)) {
      const auto& sv = g.value(si);
      auto& gw = g.grad(wi);
      for (std::size_t s = 0; s < b; ++s)
        for (std::size_t i = 0; i < l; ++i) {
          T acc{0};
          for (std::size_t k = 0; k < d; ++k) acc += gy[s * d + k] * sv[(s * l + i) * d + k];
          gw[s * l + i] += acc;
        }
    }
    if (g.requires_grad(si)) {
      const auto& wv = g.value(wi);
      auto& gs = g.grad(si);
      for (std::size_t s = 0; s < b; ++s)
        for (std::size_t i = 0; i < l; ++i) {
          const T a = wv[s * l + i];
          if (a == T{0}) continue;
          for (std::size_t k = 0; k < d; ++k) gs[(s * l + i) * d + k] += a * gy[s * d + k];
        }
    }
  });
}

template <typename T>
Expr<T> add(Expr<T> a, Expr<T> b) {
  require_same_shape(a, b, "add");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().emit(std::move(y), {ai, bi}, [ai, bi](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    for (auto id : {ai, bi}) {
      if (!g.requires_grad(id)) continue;
      auto& gx = g.grad(id);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    }
  });
}

template <typename T>
Expr<T> sub(Expr<T> a, Expr<T> b) {
  require_same_shape(a, b, "sub");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().emit(std::move(y), {ai, bi}, [ai, bi](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (g.requires_grad(ai)) {
      auto& ga = g.grad(ai);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (g.requires_grad(bi)) {
      auto& gb = g.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
    }
  });
}

template <typename T>
Expr<T> mul(Expr<T> a, Expr<T> b) {
  require_same_shape(a, b, "mul");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.graph().emit(std::move(y), {ai, bi}, [ai, bi](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    if (g.requires_grad(ai)) {
      const auto& bv = g.value(bi);
      auto& ga = g.grad(ai);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    }
    if (g.requires_grad(bi)) {
      const auto& av = g.value(ai);
      auto& gb = g.grad(bi);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
    }
  });
}

template <typename T>
Expr<T> scale(Expr<T> x, T factor) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.value()[i] * factor;
  const std::size_t xi = x.id();
  return x.graph().emit(std::move(y), {xi}, [xi, factor](Graph<T>& g, std::size_t self) {
    const auto& gy = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
  });
}

template <typename T>
Expr<T> abs(Expr<T> x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(x.value()[i]);
  const std::size_t xi = x.id();
  return x.graph().emit(std::move(y), {xi}, [xi](Graph<T>& g, std::size_t self) {
    const auto& xv = g.value(xi);
    const auto& gy = g.grad(self);
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (xv[i] > T{0}) gx[i] += gy[i];
      else if (xv[i] < T{0}) gx[i] -= gy[i];
    }
  });
}

template <typename T>
Expr<T> concat(const std::vector<Expr<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (first.empty()) throw std::invalid_argument("concat: scalar input");
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin())) {
      throw std::invalid_argument("concat: leading axes differ: " + shape_string(s) + " vs " +
                                  shape_string(first));
    }
    widths.push_back(s.back());
    ids.push_back(p.id());
    total += s.back();
  }
  Shape yshape = first;
  yshape.back() = total;
  Tensor<T> y(yshape);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const auto& pv = parts[j].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * widths[j], widths[j], y.data() + r * total + offset);
    offset += widths[j];
  }
  return parts.front().graph().emit(
      std::move(y), ids, [ids, widths, rows, total](Graph<T>& g, std::size_t self) {
        const auto& gy = g.grad(self);
        std::size_t offset = 0;
        for (std::size_t j = 0; j < ids.size(); ++j) {
          if (g.requires_grad(ids[j])) {
            auto& gx = g.grad(ids[j]);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t k = 0; k < widths[j]; ++k)
                gx[r * widths[j] + k] += gy[r * total + offset + k];
          }
          offset += widths[j];
        }
      });
}

template <typename T>
Expr<T> sum(Expr<T> x) {
  T acc{0};
  for (T v : x.value().values()) acc += v;
  const std::size_t xi = x.id();
  return x.graph().emit(Tensor<T>::scalar(acc), {xi}, [xi](Graph<T>& g, std::size_t self) {
    const T gy = g.grad(self)[0];
    auto& gx = g.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy;
  });
}

template <typename T>
Expr<T> bce_with_logits(Expr<T> logits, std::span<const T> targets, T pos_weight) {
  const auto& lv = logits.value();
  if (targets.size() != lv.size() || lv.size() == 0) {
    throw std::invalid_argument("bce_with_logits: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(lv.size()) + " logits");
  }
  const std::size_t n = lv.size();
  T acc{0};
  for (std::size_t i = 0; i < n; ++i) acc += bce_with_logits_value(lv[i], targets[i], pos_weight);
  std::vector<T> tg(targets.begin(), targets.end());
  const std::size_t li = logits.id();
  return logits.graph().emit(
      Tensor<T>::scalar(acc / static_cast<T>(n)), {li},
      [li, n, pos_weight, tg = std::move(tg)](Graph<T>& g, std::size_t self) {
        const T gy = g.grad(self)[0] / static_cast<T>(n);
        const auto& lv = g.value(li);
        auto& gl = g.grad(li);
        for (std::size_t i = 0; i < n; ++i) {
          const T s = sigmoid(lv[i]);
          gl[i] += gy * (-pos_weight * tg[i] * (T{1} - s) + (T{1} - tg[i]) * s);
        }
      });
}

#define CAAH_INSTANTIATE_OPS(T)                                                        \
  template T sigmoid<T>(T);                                                            \
  template T gelu_value<T>(T);                                                         \
  template T bce_with_logits_value<T>(T, T, T);                                        \
  template Expr<T> linear<T>(Expr<T>, Expr<T>, Expr<T>);                               \
  template Expr<T> gelu<T>(Expr<T>);                                                   \
  template Expr<T> dropout<T>(Expr<T>, T, Rng&);                                       \
  template Expr<T> layer_norm<T>(Expr<T>, Expr<T>, Expr<T>, T);                        \
  template Expr<T> masked_softmax<T>(Expr<T>, std::span<const std::uint8_t>);          \
  template Expr<T> attention_scores<T>(Expr<T>, Expr<T>);                              \
  template Expr<T> weighted_sum<T>(Expr<T>, Expr<T>);                                  \
  template Expr<T> add<T>(Expr<T>, Expr<T>);                                           \
  template Expr<T> sub<T>(Expr<T>, Expr<T>);                                           \
  template Expr<T> mul<T>(Expr<T>, Expr<T>);                                           \
  template Expr<T> scale<T>(Expr<T>, T);                                               \
  template Expr<T> abs<T>(Expr<T>);                                                    \
  template Expr<T> concat<T>(const std::vector<Expr<T>>&);                             \
  template Expr<T> sum<T>(Expr<T>);                                                    \
  template Expr<T> bce_with_logits<T>(Expr<T>, std::span<const T>, T);

CAAH_INSTANTIATE_OPS(float)
CAAH_INSTANTIATE_OPS(double)

#undef CAAH_INSTANTIATE_OPS

}  // namespace caah::nn
