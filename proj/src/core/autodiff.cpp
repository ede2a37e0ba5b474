#include "acm/core/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acm/core/error.hpp"
#include "acm/core/kernels.hpp"

namespace acm::core {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kMatMulNT: return "matmul_nt";
    case OpKind::kAdd: return "add";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddConst: return "add_const";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kCausalSoftmax: return "causal_softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kCrossEntropy: return "cross_entropy";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kGelu: return "gelu";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kSegmentMean: return "segment_mean";
    case OpKind::kCumulativeMean: return "cumulative_mean";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kSum: return "sum";
    case OpKind::kSquare: return "square";
  }
  return "unknown";
}

// ---- Var / Tape -------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }

std::span<const double> Var::grad() const { return tape_->grad_if_any(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value in constant");
  Node& n = nodes_.emplace_back();
  n.op = OpKind::kConstant;
  n.value = std::move(value);
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::parameter(Tensor& param) {
  if (!param.all_finite()) throw NumericError("non-finite value in parameter");
  param.ensure_grad();
  Node& n = nodes_.emplace_back();
  n.op = OpKind::kParameter;
  n.param = &param;
  n.requires_grad = true;
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(OpKind op, Tensor value, bool requires_grad, Backward backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op_name(op));
  }
  Node& n = nodes_.emplace_back();
  n.op = op;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.param ? *n.param : n.value;
}

std::span<double> Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad();
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad_if_any(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.param) return n.param->grad();
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.value().size() != 1) {
    throw DimensionError("backward() needs a scalar root, got shape " +
                         shape_string(root.value().shape()));
  }
  if (!requires_grad(root.id())) return;
  grad(root.id())[0] += 1.0;
  for (std::uint32_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    for (double g : n.grad) {
      if (!std::isfinite(g)) {
        throw NumericError(std::string("non-finite gradient at ") + op_name(n.op));
      }
    }
    n.backward(*this, id);
  }
}

void Tape::clear() { nodes_.clear(); }

// ---- helpers ----------------------------------------------------------------

namespace {

Tape& tape_of(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
  return a.tape();
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got shape " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

}  // namespace

// ---- linear algebra -----------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  if (bv.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions differ " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()));
  }
  Tensor out({m, n});
  kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  const std::uint32_t ia = a.id(), ib = b.id();
  return t.record(OpKind::kMatMul, std::move(out),
                  t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib, m, k, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    if (tp.requires_grad(ia)) {
                      kernels::gemm_nt(g, tp.value(ib).data(), tp.grad(ia), m, n, k);
                    }
                    if (tp.requires_grad(ib)) {
                      kernels::gemm_tn(tp.value(ia).data(), g, tp.grad(ib), m, k, n);
                    }
                  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul_nt");
  require_rank2(bv, "matmul_nt");
  const std::size_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[0];
  if (bv.shape()[1] != k) {
    throw DimensionError("matmul_nt: inner dimensions differ " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()) + "^T");
  }
  Tensor out({m, n});
  kernels::gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
  const std::uint32_t ia = a.id(), ib = b.id();
  return t.record(OpKind::kMatMulNT, std::move(out),
                  t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib, m, k, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    if (tp.requires_grad(ia)) {
                      kernels::gemm_nn(g, tp.value(ib).data(), tp.grad(ia), m, n, k);
                    }
                    if (tp.requires_grad(ib)) {
                      kernels::gemm_tn(g, tp.value(ia).data(), tp.grad(ib), m, n, k);
                    }
                  });
}

// ---- elementwise --------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out = av;
  out.drop_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return t.record(OpKind::kAdd, std::move(out), t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    for (std::uint32_t in : {ia, ib}) {
                      if (!tp.requires_grad(in)) continue;
                      auto gi = tp.grad(in);
                      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
                    }
                  });
}

Var add_bias(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t n = xv.cols();
  if (bv.size() != n) {
    throw DimensionError("add_bias: bias of size " + std::to_string(bv.size()) +
                         " for rows of width " + std::to_string(n));
  }
  Tensor out = xv;
  out.drop_grad();
  const std::size_t m = xv.rows();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] += bv[j];
  }
  const std::uint32_t ix = x.id(), ib = bias.id();
  return t.record(OpKind::kAddBias, std::move(out),
                  t.requires_grad(ix) || t.requires_grad(ib),
                  [ix, ib, m, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    if (tp.requires_grad(ix)) {
                      auto gx = tp.grad(ix);
                      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    }
                    if (tp.requires_grad(ib)) {
                      auto gb = tp.grad(ib);
                      for (std::size_t r = 0; r < m; ++r) {
                        for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
                      }
                    }
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::uint32_t ia = a.id(), ib = b.id();
  return t.record(OpKind::kMul, std::move(out), t.requires_grad(ia) || t.requires_grad(ib),
                  [ia, ib](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    if (tp.requires_grad(ia)) {
                      auto ga = tp.grad(ia);
                      const Tensor& bv2 = tp.value(ib);
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
                    }
                    if (tp.requires_grad(ib)) {
                      auto gb = tp.grad(ib);
                      const Tensor& av2 = tp.value(ia);
                      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
                    }
                  });
}

Var scale(Var x, double factor) {
  Tape& t = x.tape();
  Tensor out = x.value();
  out.drop_grad();
  for (double& v : out.data()) v *= factor;
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kScale, std::move(out), t.requires_grad(ix),
                  [ix, factor](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
                  });
}

Var add_const(Var x, const Tensor& c) {
  Tape& t = x.tape();
  require_same_shape(x.value(), c, "add_const");
  Tensor out = x.value();
  out.drop_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kAddConst, std::move(out), t.requires_grad(ix),
                  [ix](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                  });
}

Var square(Var x) {
  Tape& t = x.tape();
  Tensor out = x.value();
  out.drop_grad();
  for (double& v : out.data()) v *= v;
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kSquare, std::move(out), t.requires_grad(ix),
                  [ix](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    const Tensor& xv = tp.value(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * xv[i] * g[i];
                  });
}

Var gelu(Var x) {
  Tape& t = x.tape();
  Tensor out = x.value();
  out.drop_grad();
  for (double& v : out.data()) v = kernels::gelu(v);
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kGelu, std::move(out), t.requires_grad(ix),
                  [ix](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    const Tensor& xv = tp.value(ix);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      gx[i] += g[i] * kernels::gelu_grad(xv[i]);
                    }
                  });
}

// ---- normalizations -------------------------------------------------------------

Var softmax(Var x, int axis) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  const Shape& shape = xv.shape();
  const int rank = static_cast<int>(shape.size());
  if (rank == 0) throw DimensionError("softmax of a scalar");
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) throw DimensionError("softmax: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < ax; ++d) outer *= shape[d];
  for (int d = ax + 1; d < rank; ++d) inner *= shape[d];
  const std::size_t len = shape[ax];
  if (len == 0) throw DimensionError("softmax over an empty axis");

  Tensor out(shape);
  std::vector<double> buf(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      for (std::size_t i = 0; i < len; ++i) buf[i] = xv[base + i * inner];
      kernels::softmax_row(buf);
      for (std::size_t i = 0; i < len; ++i) out[base + i * inner] = buf[i];
    }
  }
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kSoftmax, std::move(out), t.requires_grad(ix),
                  [ix, outer, inner, len](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    const Tensor& y = tp.value(self);
                    for (std::size_t o = 0; o < outer; ++o) {
                      for (std::size_t in = 0; in < inner; ++in) {
                        const std::size_t base = o * len * inner + in;
                        double dotp = 0.0;
                        for (std::size_t i = 0; i < len; ++i) {
                          dotp += g[base + i * inner] * y[base + i * inner];
                        }
                        for (std::size_t i = 0; i < len; ++i) {
                          const std::size_t k = base + i * inner;
                          gx[k] += y[k] * (g[k] - dotp);
                        }
                      }
                    }
                  });
}

Var causal_softmax(Var x) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  require_rank2(xv, "causal_softmax");
  const std::size_t n = xv.shape()[0];
  if (xv.shape()[1] != n) throw DimensionError("causal_softmax needs a square matrix");
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> row = out.row(i).subspan(0, i + 1);
    std::copy_n(xv.row(i).begin(), i + 1, row.begin());
    kernels::softmax_row(row);
  }
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kCausalSoftmax, std::move(out), t.requires_grad(ix),
                  [ix, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    const Tensor& y = tp.value(self);
                    for (std::size_t i = 0; i < n; ++i) {
                      double dotp = 0.0;
                      for (std::size_t j = 0; j <= i; ++j) dotp += g[i * n + j] * y[i * n + j];
                      for (std::size_t j = 0; j <= i; ++j) {
                        gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dotp);
                      }
                    }
                  });
}

Var log_softmax(Var x) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  if (xv.rank() == 0 || xv.cols() == 0) throw DimensionError("log_softmax over an empty axis");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < m; ++r) {
    const double lse = kernels::log_sum_exp(xv.row(r));
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = xv[r * n + j] - lse;
  }
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kLogSoftmax, std::move(out), t.requires_grad(ix),
                  [ix, m, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    const Tensor& y = tp.value(self);
                    for (std::size_t r = 0; r < m; ++r) {
                      double gsum = 0.0;
                      for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
                      for (std::size_t j = 0; j < n; ++j) {
                        gx[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
                      }
                    }
                  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
  Tape& t = logits.tape();
  const Tensor& xv = logits.value();
  if (xv.rank() == 0 || xv.rank() > 2) {
    throw DimensionError("cross_entropy expects a vector or matrix of logits");
  }
  const std::size_t m = xv.rows(), n = xv.cols();
  if (targets.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(m) + " rows");
  }
  if (n == 0) throw DimensionError("cross_entropy over zero classes");
  std::vector<double> lse(m);
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] >= n) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[r]) +
                       " out of range for " + std::to_string(n) + " classes");
    }
    lse[r] = kernels::log_sum_exp(xv.row(r));
    loss += lse[r] - xv[r * n + targets[r]];
  }
  loss /= static_cast<double>(m);
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  const std::uint32_t ix = logits.id();
  return t.record(OpKind::kCrossEntropy, Tensor::scalar(loss), t.requires_grad(ix),
                  [ix, m, n, tg = std::move(tg), lse = std::move(lse)](Tape& tp,
                                                                       std::uint32_t self) {
                    const double g = tp.grad(self)[0] / static_cast<double>(m);
                    auto gx = tp.grad(ix);
                    const Tensor& x = tp.value(ix);
                    for (std::size_t r = 0; r < m; ++r) {
                      for (std::size_t j = 0; j < n; ++j) {
                        gx[r * n + j] += g * std::exp(x[r * n + j] - lse[r]);
                      }
                      gx[r * n + tg[r]] -= g;
                    }
                  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x, gain);
  tape_of(x, bias);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gain.value().size() != n || bias.value().size() != n) {
    throw DimensionError("layer_norm: gain/bias width does not match rows");
  }
  if (n == 0) throw DimensionError("layer_norm over empty rows");
  Tensor out(xv.shape());
  std::vector<kernels::NormStats> stats(m);
  std::vector<bool> clamped(m);
  for (std::size_t r = 0; r < m; ++r) {
    stats[r] = kernels::norm_stats(xv.row(r), eps);
    clamped[r] = stats[r].inv_std * stats[r].inv_std * eps >= 1.0;
    kernels::layer_norm_row(xv.row(r), gain.value().data(), bias.value().data(), out.row(r),
                            eps);
  }
  const std::uint32_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return t.record(
      OpKind::kLayerNorm, std::move(out),
      t.requires_grad(ix) || t.requires_grad(ig) || t.requires_grad(ib),
      [ix, ig, ib, m, n, stats = std::move(stats), clamped = std::move(clamped)](
          Tape& tp, std::uint32_t self) {
        auto g = tp.grad(self);
        const Tensor& xv2 = tp.value(ix);
        const Tensor& gv = tp.value(ig);
        std::vector<double> xhat(n), dxhat(n);
        for (std::size_t r = 0; r < m; ++r) {
          const auto [mean, inv] = stats[r];
          for (std::size_t j = 0; j < n; ++j) {
            xhat[j] = (xv2[r * n + j] - mean) * inv;
            dxhat[j] = g[r * n + j] * gv[j];
          }
          if (tp.requires_grad(ig)) {
            auto gg = tp.grad(ig);
            for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * xhat[j];
          }
          if (tp.requires_grad(ib)) {
            auto gb = tp.grad(ib);
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
          }
          if (tp.requires_grad(ix)) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              mean_d += dxhat[j];
              mean_dx += dxhat[j] * xhat[j];
            }
            mean_d /= static_cast<double>(n);
            mean_dx /= static_cast<double>(n);
            if (clamped[r]) mean_dx = 0.0;  // denominator is constant here
            auto gx = tp.grad(ix);
            for (std::size_t j = 0; j < n; ++j) {
              gx[r * n + j] += inv * (dxhat[j] - mean_d - xhat[j] * mean_dx);
            }
          }
        }
      });
}

// ---- gathers and reductions -------------------------------------------------------

Var embedding(Var table, std::span<const std::size_t> ids) {
  Tape& t = table.tape();
  const Tensor& tv = table.value();
  require_rank2(tv, "embedding");
  const std::size_t vocab = tv.shape()[0], d = tv.shape()[1];
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw IndexError("embedding: id " + std::to_string(ids[i]) + " >= table size " +
                       std::to_string(vocab));
    }
    std::copy_n(tv.row(ids[i]).begin(), d, out.row(i).begin());
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  const std::uint32_t it = table.id();
  return t.record(OpKind::kEmbedding, std::move(out), t.requires_grad(it),
                  [it, d, idv = std::move(idv)](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gt = tp.grad(it);
                    for (std::size_t i = 0; i < idv.size(); ++i) {
                      for (std::size_t j = 0; j < d; ++j) gt[idv[i] * d + j] += g[i * d + j];
                    }
                  });
}

Var segment_mean(Var table, std::span<const std::size_t> ids,
                 std::span<const std::pair<std::size_t, std::size_t>> spans) {
  Tape& t = table.tape();
  const Tensor& tv = table.value();
  require_rank2(tv, "segment_mean");
  const std::size_t vocab = tv.shape()[0], d = tv.shape()[1];
  Tensor out({spans.size(), d});
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto [b, e] = spans[s];
    if (b >= e || e > ids.size()) throw DimensionError("segment_mean: empty or invalid span");
    auto row = out.row(s);
    for (std::size_t k = b; k < e; ++k) {
      if (ids[k] >= vocab) throw IndexError("segment_mean: id out of range");
      auto src = tv.row(ids[k]);
      for (std::size_t j = 0; j < d; ++j) row[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(e - b);
    for (double& v : row) v *= inv;
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  std::vector<std::pair<std::size_t, std::size_t>> sp(spans.begin(), spans.end());
  const std::uint32_t it = table.id();
  return t.record(OpKind::kSegmentMean, std::move(out), t.requires_grad(it),
                  [it, d, idv = std::move(idv), sp = std::move(sp)](Tape& tp,
                                                                     std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gt = tp.grad(it);
                    for (std::size_t s = 0; s < sp.size(); ++s) {
                      const auto [b, e] = sp[s];
                      const double inv = 1.0 / static_cast<double>(e - b);
                      for (std::size_t k = b; k < e; ++k) {
                        for (std::size_t j = 0; j < d; ++j) {
                          gt[idv[k] * d + j] += g[s * d + j] * inv;
                        }
                      }
                    }
                  });
}

Var cumulative_mean(Var x) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  require_rank2(xv, "cumulative_mean");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  Tensor out({m, n});
  std::vector<double> run(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double inv = 1.0 / static_cast<double>(r + 1);
    for (std::size_t j = 0; j < n; ++j) {
      run[j] += xv[r * n + j];
      out[r * n + j] = run[j] * inv;
    }
  }
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kCumulativeMean, std::move(out), t.requires_grad(ix),
                  [ix, m, n](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    std::vector<double> acc(n, 0.0);
                    for (std::size_t r = m; r-- > 0;) {
                      const double inv = 1.0 / static_cast<double>(r + 1);
                      for (std::size_t j = 0; j < n; ++j) {
                        acc[j] += g[r * n + j] * inv;
                        gx[r * n + j] += acc[j];
                      }
                    }
                  });
}

Var mean_rows(Var x) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  require_rank2(xv, "mean_rows");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  if (m == 0) throw DimensionError("mean_rows of zero rows");
  Tensor out({1, n});
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[r * n + j];
  }
  const double inv = 1.0 / static_cast<double>(m);
  for (double& v : out.data()) v *= inv;
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kMeanRows, std::move(out), t.requires_grad(ix),
                  [ix, m, n, inv](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    for (std::size_t r = 0; r < m; ++r) {
                      for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += g[j] * inv;
                    }
                  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  Tape& t = x.tape();
  const Tensor& xv = x.value();
  require_rank2(xv, "slice_cols");
  const std::size_t m = xv.shape()[0], n = xv.shape()[1];
  if (begin + count > n) throw DimensionError("slice_cols: range exceeds width");
  Tensor out({m, count});
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(xv.row(r).begin() + static_cast<std::ptrdiff_t>(begin), count,
                out.row(r).begin());
  }
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kSliceCols, std::move(out), t.requires_grad(ix),
                  [ix, m, n, begin, count](Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    auto gx = tp.grad(ix);
                    for (std::size_t r = 0; r < m; ++r) {
                      for (std::size_t j = 0; j < count; ++j) {
                        gx[r * n + begin + j] += g[r * count + j];
                      }
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Tape& t = parts[0].tape();
  const std::size_t m = parts[0].value().shape().at(0);
  std::size_t total = 0;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  bool needs = false;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    require_rank2(p.value(), "concat_cols");
    if (p.value().shape()[0] != m) throw DimensionError("concat_cols: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.value().shape()[1]);
    total += widths.back();
    needs = needs || t.requires_grad(p.id());
  }
  Tensor out({m, total});
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& pv = parts[p].value();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(pv.row(r).begin(), widths[p],
                  out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    }
    off += widths[p];
  }
  return t.record(OpKind::kConcatCols, std::move(out), needs,
                  [ids = std::move(ids), widths = std::move(widths), m, total](
                      Tape& tp, std::uint32_t self) {
                    auto g = tp.grad(self);
                    std::size_t o = 0;
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      if (tp.requires_grad(ids[p])) {
                        auto gp = tp.grad(ids[p]);
                        for (std::size_t r = 0; r < m; ++r) {
                          for (std::size_t j = 0; j < widths[p]; ++j) {
                            gp[r * widths[p] + j] += g[r * total + o + j];
                          }
                        }
                      }
                      o += widths[p];
                    }
                  });
}

Var sum(Var x) {
  Tape& t = x.tape();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::uint32_t ix = x.id();
  return t.record(OpKind::kSum, Tensor::scalar(s), t.requires_grad(ix),
                  [ix](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad(self)[0];
                    for (double& v : tp.grad(ix)) v += g;
                  });
}

}  // namespace acm::core
